#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace isac {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

double db_to_linear(double db);
double linear_to_db(double linear);
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double deg_to_rad(double deg);
double rad_to_deg(double rad);

/// Stopping rule of the beamforming solver. Zero tolerances mean
/// "1e-3 * sqrt(problem dimension)".
struct SolverOptions {
  int max_iter = 500;
  double eps_primal = 0.0;
  double eps_dual = 0.0;
};

/// Random scene generation used by the experiment harness.
struct SceneOptions {
  int num_targets = 1;
  double max_speed_mps = 20.0;
};

struct DetectionOptions {
  double min_rel_peak = 0.5;
};

struct BasisPursuitOptions {
  double tol_eq = 1e-6;
  int max_iter = 2000;
  double penalty = 1.0;
};

/// All system constants. Every quantity is stored in linear SI units;
/// dB-denominated file inputs are converted once at load time.
struct SystemConfig {
  // OFDM numerology
  double f_c = 28e9;          // carrier frequency, Hz
  double delta_f = 120e3;     // subcarrier spacing, Hz
  int n_s = 256;              // subcarriers
  double t_d = 1.0 / 120e3;   // useful symbol duration, s
  double t_cp = 0.59e-6;      // cyclic prefix, s
  double t = 1.0 / 120e3 + 0.59e-6;  // total symbol duration, s
  int l = 128;                // symbols per CPI

  // arrays
  int n_t = 24;
  int n_r = 24;
  double d_t = 0.5 * kSpeedOfLight / 28e9;  // m
  double d_r = 0.5 * kSpeedOfLight / 28e9;  // m

  // propagation and noise (linear)
  double d_ref = 1.0;
  double c_ref = 1e-3;
  double alpha = 2.6;
  double sigma_beta_sq = 1.0;
  double sigma_c_sq = 1e-9;  // W
  double sigma_s_sq = 1e-9;  // W

  int qam_order = 16;

  // DFT sizes
  int n_a = 24;
  int n_d = 256;
  int n_v = 128;

  // beamforming problem
  double p_0 = 10.0;                        // W
  double gamma_0 = 0.31622776601683794;     // linear (-5 dB)
  double theta_a = -10.0 * kPi / 180.0;     // rad
  double theta_b = 10.0 * kPi / 180.0;      // rad
  double d_0 = 75.0;                        // m
  int g = 10;
  int k = 5;
  int n_sel = 64;
  double rho_1 = 500.0;
  double rho_2 = 500.0;
  double rho_3 = 50.0;

  std::uint64_t seed = 1;

  SolverOptions solver;
  SceneOptions scene;
  DetectionOptions detection;
  BasisPursuitOptions basis_pursuit;
};

/// Full-size reference settings (256 subcarriers, 28 GHz carrier) with
/// K = 5 users, G = 10 grid angles and N_sel = N_s / 4.
SystemConfig full_profile();

/// Reduced problem size for desk-top runs: N_t = N_r = 8, K = 2, N_s = 16,
/// L = 16, G = 4, N_sel = 4, solver max_iter = 2000. All other values as in
/// the full profile.
SystemConfig desk_profile();

SystemConfig profile_by_name(std::string_view name);

/// Collect every violated invariant; empty when the configuration is valid.
std::vector<std::string> check_invariants(const SystemConfig& cfg);

/// Throws ConfigError listing all violated invariants.
void validate(const SystemConfig& cfg);

/// Parse a JSON config document on top of `base`. Keys are nested by
/// section; unknown sections or keys are a hard error. A top-level
/// "profile" key replaces `base` with the named profile before overrides.
SystemConfig parse_config(std::string_view json_text, const SystemConfig& base);
SystemConfig load_config(const std::filesystem::path& path, const SystemConfig& base);

/// Canonical JSON serialization (linear units, sorted keys). Round-trips
/// through parse_config.
std::string to_json(const SystemConfig& cfg);

/// FNV-1a 64 of the canonical JSON.
std::uint64_t config_hash(const SystemConfig& cfg);
std::string hash_hex(std::uint64_t hash);

}  // namespace isac
