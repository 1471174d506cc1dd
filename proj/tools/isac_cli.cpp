#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isac/beamforming.hpp"
#include "isac/config.hpp"
#include "isac/errors.hpp"
#include "isac/harness.hpp"
#include "isac/sparse_recovery.hpp"
#include "isac/waveform.hpp"

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kNonConverged = 2, kFailure = 3 };

isac::SystemConfig load(const std::string& config_path, const std::string& profile) {
  const auto base = isac::profile_by_name(profile);
  if (config_path.empty()) return base;
  return isac::load_config(config_path, base);
}

struct RunArgs {
  std::string config;
  std::string profile = "desk";
  std::string sweep = "gamma_0_db";
  std::vector<double> values;
  int trials = 20;
  std::vector<std::string> strategies{"cs_assisted", "full_subcarrier", "comm_only"};
  std::string out = "results";
  std::uint64_t seed = 1;
  int workers = 1;
  bool allow_nonconverged = false;
  bool quiet = false;
};

int cmd_run(const RunArgs& a) {
  isac::ExperimentPlan plan;
  plan.base = load(a.config, a.profile);
  plan.axis = isac::parse_axis(a.sweep);
  plan.values = a.values;
  plan.trials = a.trials;
  plan.strategies.clear();
  for (const auto& s : a.strategies) plan.strategies.push_back(isac::parse_strategy(s));
  plan.out_dir = a.out;
  plan.master_seed = a.seed;
  plan.workers = a.workers;

  isac::ProgressFn progress;
  if (!a.quiet) {
    progress = [](std::size_t done, std::size_t total) {
      std::fprintf(stderr, "\r%zu/%zu trials", done, total);
      if (done == total) std::fputc('\n', stderr);
    };
  }
  const auto result = isac::run_sweep(plan, progress);

  int failures = 0;
  for (const auto& m : result.means) {
    failures += m.failures;
    std::printf("%-16s %s=%-8s rate=%.4f", std::string(isac::to_string(m.strategy)).c_str(),
                std::string(isac::to_string(plan.axis)).c_str(), isac::format_double(m.sweep_value).c_str(),
                m.sum_rate_bits);
    if (m.rmse_theta_rad)
      std::printf(" rmse(theta,d,v)=(%.4g, %.4g, %.4g)", *m.rmse_theta_rad, m.rmse_d_m.value_or(0.0),
                  m.rmse_v_mps.value_or(0.0));
    std::printf(" converged=%.2f\n", m.converged);
  }
  std::printf("wrote %s\n", result.csv_path.string().c_str());

  if (failures > 0) {
    std::fprintf(stderr, "%d trial(s) failed; see the error column\n", failures);
    return kFailure;
  }
  if (!result.all_converged && !a.allow_nonconverged) {
    std::fprintf(stderr, "some trials did not converge (pass --allow-nonconverged to accept)\n");
    return kNonConverged;
  }
  return kOk;
}

int cmd_validate(const std::string& config, const std::string& profile) {
  const auto cfg = load(config, profile);
  const auto problems = isac::check_invariants(cfg);
  if (problems.empty()) {
    std::printf("ok (config hash %s)\n", isac::hash_hex(isac::config_hash(cfg)).c_str());
    return kOk;
  }
  for (const auto& p : problems) std::fprintf(stderr, "invalid: %s\n", p.c_str());
  return kUsage;
}

int cmd_show(const std::string& config, const std::string& profile) {
  std::printf("%s\n", isac::to_json(load(config, profile)).c_str());
  return kOk;
}

struct SolveArgs {
  std::string config;
  std::string profile = "desk";
  std::string strategy = "cs_assisted";
  std::uint64_t seed = 1;
  std::optional<int> max_iter;
  std::string trace;
};

int cmd_solve(const SolveArgs& a) {
  auto cfg = load(a.config, a.profile);
  isac::validate(cfg);
  const auto strategy = isac::parse_strategy(a.strategy);
  const auto h = isac::generate_channel(cfg, a.seed);

  std::optional<isac::SelectionMask> mask;
  int n_sel = 0;
  if (strategy == isac::Strategy::kCsAssisted) {
    mask = isac::make_selection_mask(cfg, a.seed);
    n_sel = cfg.n_sel;
  } else if (strategy == isac::Strategy::kFullSubcarrier) {
    mask = isac::full_selection(cfg.n_s, cfg.n_d);
    n_sel = cfg.n_s;
  }
  const auto spec = isac::make_sensing_spec(cfg, n_sel);
  auto stop = isac::stop_rule(cfg);
  if (a.max_iter) stop.max_iter = *a.max_iter;

  const auto res = isac::solve(cfg, h, spec, mask ? &*mask : nullptr, stop);
  std::printf("iterations=%d converged=%d feasible=%d sum_rate=%.6f r=%.3g s=%.3g", res.iterations,
              res.converged ? 1 : 0, res.feasible ? 1 : 0, isac::sum_rate(h, res.w, cfg.sigma_c_sq),
              res.final_residuals.r_primal, res.final_residuals.s_dual);
  if (mask) std::printf(" min_sensing_ratio=%.4f", res.min_sensing_ratio);
  std::printf("\n");

  if (!a.trace.empty()) {
    std::ofstream f(a.trace, std::ios::binary);
    if (!f) throw isac::FormatError("cannot write " + a.trace);
    f << isac::trace_to_csv(res.trace);
  }
  return res.converged ? kOk : kNonConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIMO-OFDM sensing and beamforming experiments"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Monte-Carlo sweep of one parameter");
  run_cmd->add_option("--config", run.config, "JSON config file (applied on top of the profile)")->check(CLI::ExistingFile);
  run_cmd->add_option("--profile", run.profile, "Base profile")->check(CLI::IsMember({"desk", "full", "paper"}));
  run_cmd->add_option("--sweep", run.sweep, "gamma_0_db | p_0 | n_t | k | n_sel");
  run_cmd->add_option("--values", run.values, "Comma-separated sweep values")->delimiter(',')->required();
  run_cmd->add_option("--trials", run.trials, "Trials per point")->check(CLI::PositiveNumber);
  run_cmd->add_option("--strategies", run.strategies, "Comma-separated: cs_assisted,full_subcarrier,comm_only")
      ->delimiter(',');
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--seed", run.seed, "Master seed");
  run_cmd->add_option("--workers", run.workers, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--allow-nonconverged", run.allow_nonconverged, "Exit 0 even if some solves hit max_iter");
  run_cmd->add_flag("--quiet", run.quiet, "No progress output");

  std::string v_config, v_profile = "desk";
  auto* val_cmd = app.add_subcommand("validate", "Check every configuration invariant");
  val_cmd->add_option("--config", v_config, "JSON config file")->check(CLI::ExistingFile);
  val_cmd->add_option("--profile", v_profile, "Base profile")->check(CLI::IsMember({"desk", "full", "paper"}));

  std::string s_config, s_profile = "desk";
  auto* show_cmd = app.add_subcommand("show-config", "Print the resolved configuration as JSON");
  show_cmd->add_option("--config", s_config, "JSON config file")->check(CLI::ExistingFile);
  show_cmd->add_option("--profile", s_profile, "Base profile")->check(CLI::IsMember({"desk", "full", "paper"}));

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "One beamforming design with a per-iteration trace");
  solve_cmd->add_option("--config", solve.config, "JSON config file")->check(CLI::ExistingFile);
  solve_cmd->add_option("--profile", solve.profile, "Base profile")->check(CLI::IsMember({"desk", "full", "paper"}));
  solve_cmd->add_option("--strategy", solve.strategy, "cs_assisted | full_subcarrier | comm_only");
  solve_cmd->add_option("--seed", solve.seed, "Channel and mask seed");
  solve_cmd->add_option("--max-iter", solve.max_iter, "Override the iteration cap");
  solve_cmd->add_option("--trace", solve.trace, "Write the iteration trace CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*val_cmd) return cmd_validate(v_config, v_profile);
    if (*show_cmd) return cmd_show(s_config, s_profile);
    if (*solve_cmd) return cmd_solve(solve);
  } catch (const isac::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kUsage;
}
