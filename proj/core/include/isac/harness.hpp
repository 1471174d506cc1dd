#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isac/beamforming.hpp"
#include "isac/config.hpp"
#include "isac/sensing_dft.hpp"

namespace isac {

enum class Strategy { kCsAssisted, kFullSubcarrier, kCommOnly };
enum class SweepAxis { kGamma0Db, kP0, kNt, kK, kNsel };

std::string_view to_string(Strategy s);
std::string_view to_string(SweepAxis a);
Strategy parse_strategy(std::string_view name);
SweepAxis parse_axis(std::string_view name);

/// Copy of `cfg` with the swept quantity set. The antenna sweep moves N_t,
/// N_r and N_a together.
SystemConfig apply_sweep(const SystemConfig& cfg, SweepAxis axis, double value);

struct TrialOptions {
  bool noiseless = false;
  /// Use this scene instead of drawing one.
  std::optional<TargetScene> scene;
  double miss_penalty = 1.0;
};

struct MetricRecord {
  Strategy strategy = Strategy::kCommOnly;
  double sweep_value = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double sum_rate_bits = 0.0;
  std::optional<double> rmse_theta_rad;
  std::optional<double> rmse_d_m;
  std::optional<double> rmse_v_mps;
  int misses = 0;
  bool converged = false;
  bool feasible = false;
  int iterations = 0;
  double runtime_ms = 0.0;  // kept out of the metrics table
  std::string error;        // non-empty when the trial threw
};

/// Targets uniform in [theta_a, theta_b] x [d_ref, d_0] x [-v_max, v_max],
/// beta ~ CN(0, sigma_beta^2).
TargetScene random_scene(const SystemConfig& cfg, std::uint64_t seed);

/// Channel, scene, symbols, echo noise and selection mask all derive from
/// `seed`, so strategies and sweep points that share a seed see the same draws.
MetricRecord run_trial(const SystemConfig& cfg, Strategy strategy, std::uint64_t seed, const TrialOptions& opt = {});

struct ExperimentPlan {
  SystemConfig base;
  SweepAxis axis = SweepAxis::kGamma0Db;
  std::vector<double> values;
  int trials = 20;
  std::vector<Strategy> strategies{Strategy::kCsAssisted, Strategy::kFullSubcarrier, Strategy::kCommOnly};
  std::filesystem::path out_dir;  // empty: do not write files
  std::uint64_t master_seed = 1;
  int workers = 1;
};

/// Seed of trial t: hash(master, t). Shared across strategies and sweep
/// values; adding trials never changes existing ones.
std::uint64_t trial_seed(std::uint64_t master, int trial);

struct AggregateRow {
  Strategy strategy = Strategy::kCommOnly;
  double sweep_value = 0.0;
  int trials = 0;
  double sum_rate_bits = 0.0;
  std::optional<double> rmse_theta_rad;  // mean over trials with a match
  std::optional<double> rmse_d_m;
  std::optional<double> rmse_v_mps;
  double misses = 0.0;
  double converged = 0.0;  // fraction
  double feasible = 0.0;   // fraction
  double iterations = 0.0;
  int failures = 0;
};

struct SweepResult {
  std::vector<MetricRecord> rows;  // (strategy, value, trial) order
  std::vector<AggregateRow> means;
  std::filesystem::path csv_path;
  bool all_converged = true;
};

std::vector<AggregateRow> aggregate(const std::vector<MetricRecord>& rows);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Strategies x values x trials on a bounded worker pool. When out_dir is
/// set, writes metrics.csv (rows then mean rows), manifest.json and
/// timings.csv, each atomically.
SweepResult run_sweep(const ExperimentPlan& plan, const ProgressFn& progress = {});

std::string metrics_csv(const SweepResult& result, SweepAxis axis);
std::string timings_csv(const SweepResult& result);
std::string manifest_json(const ExperimentPlan& plan);

/// Revision of the source tree the library was built from.
std::string_view git_revision();

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace isac
