#include "isac/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "isac/errors.hpp"
#include "isac/rng.hpp"
#include "isac/sparse_recovery.hpp"
#include "isac/waveform.hpp"

#ifndef ISAC_GIT_REVISION
#define ISAC_GIT_REVISION "unknown"
#endif

namespace isac {

std::string_view git_revision() { return ISAC_GIT_REVISION; }

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kCsAssisted:
      return "cs_assisted";
    case Strategy::kFullSubcarrier:
      return "full_subcarrier";
    case Strategy::kCommOnly:
      return "comm_only";
  }
  return "?";
}

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kGamma0Db:
      return "gamma_0_db";
    case SweepAxis::kP0:
      return "p_0";
    case SweepAxis::kNt:
      return "n_t";
    case SweepAxis::kK:
      return "k";
    case SweepAxis::kNsel:
      return "n_sel";
  }
  return "?";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

Strategy parse_strategy(std::string_view name) {
  const std::string n = lower(name);
  if (n == "cs_assisted") return Strategy::kCsAssisted;
  if (n == "full_subcarrier") return Strategy::kFullSubcarrier;
  if (n == "comm_only") return Strategy::kCommOnly;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

SweepAxis parse_axis(std::string_view name) {
  const std::string n = lower(name);
  if (n == "gamma_0_db") return SweepAxis::kGamma0Db;
  if (n == "p_0") return SweepAxis::kP0;
  if (n == "n_t") return SweepAxis::kNt;
  if (n == "k") return SweepAxis::kK;
  if (n == "n_sel") return SweepAxis::kNsel;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

SystemConfig apply_sweep(const SystemConfig& cfg, SweepAxis axis, double value) {
  SystemConfig out = cfg;
  auto as_int = [&](const char* what) {
    const double r = std::round(value);
    if (std::abs(r - value) > 1e-9 || r < 1) throw ConfigError(std::string(what) + " sweep values must be positive integers");
    return static_cast<int>(r);
  };
  switch (axis) {
    case SweepAxis::kGamma0Db:
      out.gamma_0 = db_to_linear(value);
      break;
    case SweepAxis::kP0:
      out.p_0 = value;
      break;
    case SweepAxis::kNt:
      out.n_t = as_int("N_t");
      out.n_r = out.n_t;
      out.n_a = cfg.n_a == cfg.n_r ? out.n_r : std::max(cfg.n_a, out.n_r);
      break;
    case SweepAxis::kK:
      out.k = as_int("K");
      break;
    case SweepAxis::kNsel:
      out.n_sel = as_int("N_sel");
      break;
  }
  return out;
}

TargetScene random_scene(const SystemConfig& cfg, std::uint64_t seed) {
  Rng rng(stream_seed(seed, Stream::kScene));
  TargetScene scene;
  for (int q = 0; q < cfg.scene.num_targets; ++q) {
    Target t;
    t.theta = uniform(rng, cfg.theta_a, cfg.theta_b);
    t.d = uniform(rng, cfg.d_ref, cfg.d_0);
    t.v = uniform(rng, -cfg.scene.max_speed_mps, cfg.scene.max_speed_mps);
    t.beta = complex_normal(rng, {0.0, 0.0}, cfg.sigma_beta_sq);
    scene.targets.push_back(t);
  }
  return scene;
}

MetricRecord run_trial(const SystemConfig& cfg, Strategy strategy, std::uint64_t seed, const TrialOptions& opt) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  MetricRecord rec;
  rec.strategy = strategy;
  rec.seed = seed;

  const ChannelSet h = generate_channel(cfg, seed);
  SelectionMask mask;
  if (strategy == Strategy::kCsAssisted) mask = make_selection_mask(cfg, seed);
  if (strategy == Strategy::kFullSubcarrier) mask = full_selection(cfg.n_s, cfg.n_d);
  const bool sensing = strategy != Strategy::kCommOnly;
  const SensingSpec spec = sensing ? make_sensing_spec(cfg, mask.n_sel()) : SensingSpec{};

  const SolveResult sol = solve(cfg, h, spec, sensing ? &mask : nullptr, stop_rule(cfg), {false, false});
  rec.sum_rate_bits = sum_rate(h, sol.w, cfg.sigma_c_sq);
  rec.converged = sol.converged;
  rec.feasible = sol.feasible;
  rec.iterations = sol.iterations;

  if (sensing) {
    const TargetScene scene = opt.scene ? *opt.scene : random_scene(cfg, seed);
    const SymbolTensor s = generate_symbols(cfg, seed);
    const auto x = transmit_blocks(sol.w, s);
    const EchoCube y = generate_echo(scene, x, cfg, seed, opt.noiseless);
    const ProcessedCube cube =
        strategy == Strategy::kCsAssisted ? cs_process(y, x, mask, cfg).cube : dft_process(y, x, cfg);
    const auto est = detect_and_invert(cube, cfg, std::max<int>(1, static_cast<int>(scene.targets.size())),
                                       cfg.detection.min_rel_peak);
    if (!scene.targets.empty()) {
      const RmseResult err = rmse(est.estimates, scene.targets, default_rmse_scales(cfg), opt.miss_penalty);
      rec.misses = err.misses;
      if (err.matched > 0) {
        rec.rmse_theta_rad = err.theta;
        rec.rmse_d_m = err.d;
        rec.rmse_v_mps = err.v;
      }
    }
  }
  rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::uint64_t trial_seed(std::uint64_t master, int trial) {
  return derive_seed(master, {0x7472ULL, static_cast<std::uint64_t>(trial)});
}

std::vector<AggregateRow> aggregate(const std::vector<MetricRecord>& rows) {
  std::vector<AggregateRow> out;
  auto find = [&](Strategy s, double v) -> AggregateRow& {
    for (auto& a : out)
      if (a.strategy == s && a.sweep_value == v) return a;
    AggregateRow a;
    a.strategy = s;
    a.sweep_value = v;
    out.push_back(a);
    return out.back();
  };
  struct Acc {
    double sum = 0.0;
    int n = 0;
  };
  std::vector<std::array<Acc, 3>> rmse_acc;
  for (const auto& r : rows) find(r.strategy, r.sweep_value);
  rmse_acc.resize(out.size());
  for (const auto& r : rows) {
    AggregateRow& a = find(r.strategy, r.sweep_value);
    const auto idx = static_cast<std::size_t>(&a - out.data());
    if (!r.error.empty()) {
      ++a.failures;
      continue;
    }
    ++a.trials;
    a.sum_rate_bits += r.sum_rate_bits;
    a.misses += r.misses;
    a.converged += r.converged ? 1.0 : 0.0;
    a.feasible += r.feasible ? 1.0 : 0.0;
    a.iterations += r.iterations;
    const std::optional<double>* vals[3] = {&r.rmse_theta_rad, &r.rmse_d_m, &r.rmse_v_mps};
    for (int d = 0; d < 3; ++d)
      if (*vals[d]) {
        rmse_acc[idx][static_cast<std::size_t>(d)].sum += **vals[d];
        ++rmse_acc[idx][static_cast<std::size_t>(d)].n;
      }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    AggregateRow& a = out[i];
    if (a.trials > 0) {
      const double n = a.trials;
      a.sum_rate_bits /= n;
      a.misses /= n;
      a.converged /= n;
      a.feasible /= n;
      a.iterations /= n;
    }
    std::optional<double>* dst[3] = {&a.rmse_theta_rad, &a.rmse_d_m, &a.rmse_v_mps};
    for (int d = 0; d < 3; ++d) {
      const Acc& acc = rmse_acc[i][static_cast<std::size_t>(d)];
      if (acc.n > 0) *dst[d] = acc.sum / acc.n;
    }
  }
  return out;
}

namespace {

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw FormatError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string metrics_csv(const SweepResult& result, SweepAxis axis) {
  std::ostringstream out;
  out << "row_type,strategy,axis,value,trial,seed,sum_rate_bits,rmse_theta_rad,rmse_d_m,rmse_v_mps,misses,converged,"
         "feasible,iterations,error\n";
  const std::string ax(to_string(axis));
  for (const auto& r : result.rows) {
    out << "trial," << to_string(r.strategy) << ',' << ax << ',' << format_double(r.sweep_value) << ',' << r.trial
        << ',' << r.seed << ',';
    if (r.error.empty()) {
      out << format_double(r.sum_rate_bits) << ',' << opt_field(r.rmse_theta_rad) << ',' << opt_field(r.rmse_d_m) << ','
          << opt_field(r.rmse_v_mps) << ',' << r.misses << ',' << (r.converged ? 1 : 0) << ',' << (r.feasible ? 1 : 0)
          << ',' << r.iterations << ",\n";
    } else {
      out << ",,,,,,,," << csv_escape(r.error) << '\n';
    }
  }
  for (const auto& a : result.means) {
    out << "mean," << to_string(a.strategy) << ',' << ax << ',' << format_double(a.sweep_value) << ',' << a.trials
        << ",," << format_double(a.sum_rate_bits) << ',' << opt_field(a.rmse_theta_rad) << ',' << opt_field(a.rmse_d_m)
        << ',' << opt_field(a.rmse_v_mps) << ',' << format_double(a.misses) << ',' << format_double(a.converged) << ','
        << format_double(a.feasible) << ',' << format_double(a.iterations) << ',';
    if (a.failures > 0) out << a.failures << " failed";
    out << '\n';
  }
  return out.str();
}

std::string timings_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "strategy,value,trial,runtime_ms\n";
  for (const auto& r : result.rows)
    out << to_string(r.strategy) << ',' << format_double(r.sweep_value) << ',' << r.trial << ','
        << format_double(r.runtime_ms) << '\n';
  return out.str();
}

std::string manifest_json(const ExperimentPlan& plan) {
  nlohmann::ordered_json j;
  j["config_hash"] = hash_hex(config_hash(plan.base));
  j["git_revision"] = std::string(git_revision());
  j["master_seed"] = plan.master_seed;
  j["axis"] = std::string(to_string(plan.axis));
  j["values"] = plan.values;
  j["trials"] = plan.trials;
  std::vector<std::string> strategies;
  for (auto s : plan.strategies) strategies.emplace_back(to_string(s));
  j["strategies"] = strategies;
  std::vector<std::uint64_t> seeds;
  for (int t = 0; t < plan.trials; ++t) seeds.push_back(trial_seed(plan.master_seed, t));
  j["trial_seeds"] = seeds;
  j["config"] = nlohmann::ordered_json::parse(to_json(plan.base));
  return j.dump(2) + "\n";
}

SweepResult run_sweep(const ExperimentPlan& plan, const ProgressFn& progress) {
  if (plan.values.empty()) throw ConfigError("run_sweep: empty value list");
  if (plan.trials < 1) throw ConfigError("run_sweep: trials must be >= 1");
  if (plan.strategies.empty()) throw ConfigError("run_sweep: no strategies");
  validate(plan.base);
  // Reject bad sweep points before any work starts.
  for (double v : plan.values) validate(apply_sweep(plan.base, plan.axis, v));

  struct Job {
    Strategy strategy;
    double value;
    int trial;
  };
  std::vector<Job> jobs;
  for (auto s : plan.strategies)
    for (double v : plan.values)
      for (int t = 0; t < plan.trials; ++t) jobs.push_back({s, v, t});

  SweepResult result;
  result.rows.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mu;

  auto worker = [&]() {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      const std::uint64_t seed = trial_seed(plan.master_seed, job.trial);
      MetricRecord rec;
      try {
        rec = run_trial(apply_sweep(plan.base, plan.axis, job.value), job.strategy, seed);
      } catch (const std::exception& e) {
        rec = MetricRecord{};
        rec.strategy = job.strategy;
        rec.seed = seed;
        rec.error = e.what();
      }
      rec.sweep_value = job.value;
      rec.trial = job.trial;
      result.rows[j] = std::move(rec);
      const std::size_t n = ++done;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mu);
        progress(n, jobs.size());
      }
    }
  };
  const int n_workers = std::clamp(plan.workers, 1, static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& r : result.rows)
    if (!r.error.empty() || !r.converged) result.all_converged = false;
  result.means = aggregate(result.rows);

  if (!plan.out_dir.empty()) {
    std::filesystem::create_directories(plan.out_dir);
    result.csv_path = plan.out_dir / "metrics.csv";
    write_atomic(result.csv_path, metrics_csv(result, plan.axis));
    write_atomic(plan.out_dir / "manifest.json", manifest_json(plan));
    write_atomic(plan.out_dir / "timings.csv", timings_csv(result));
  }
  return result;
}

}  // namespace isac
