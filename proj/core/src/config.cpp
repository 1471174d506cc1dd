#include "isac/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "isac/errors.hpp"

namespace isac {

using nlohmann::json;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }
double dbm_to_watts(double dbm) { return db_to_linear(dbm - 30.0); }
double watts_to_dbm(double watts) { return linear_to_db(watts) + 30.0; }
double deg_to_rad(double deg) { return deg * kPi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

SystemConfig full_profile() {
  SystemConfig cfg;
  cfg.f_c = 28e9;
  cfg.delta_f = 120e3;
  cfg.n_s = 256;
  cfg.t_d = 1.0 / cfg.delta_f;
  cfg.t_cp = 0.59e-6;
  cfg.t = cfg.t_d + cfg.t_cp;
  cfg.l = 128;
  cfg.n_t = 24;
  cfg.n_r = 24;
  cfg.d_t = 0.5 * kSpeedOfLight / cfg.f_c;
  cfg.d_r = 0.5 * kSpeedOfLight / cfg.f_c;
  cfg.d_ref = 1.0;
  cfg.c_ref = db_to_linear(-30.0);
  cfg.alpha = 2.6;
  cfg.sigma_beta_sq = db_to_linear(0.0);
  cfg.sigma_c_sq = dbm_to_watts(-60.0);
  cfg.sigma_s_sq = dbm_to_watts(-60.0);
  cfg.qam_order = 16;
  cfg.n_a = cfg.n_r;
  cfg.n_d = cfg.n_s;
  cfg.n_v = cfg.l;
  cfg.p_0 = 10.0;
  cfg.gamma_0 = db_to_linear(-5.0);
  cfg.theta_a = deg_to_rad(-10.0);
  cfg.theta_b = deg_to_rad(10.0);
  cfg.d_0 = 75.0;
  cfg.g = 10;
  cfg.k = 5;
  cfg.n_sel = cfg.n_s / 4;
  cfg.rho_1 = 500.0;
  cfg.rho_2 = 500.0;
  cfg.rho_3 = 50.0;
  cfg.seed = 1;
  return cfg;
}

SystemConfig desk_profile() {
  SystemConfig cfg = full_profile();
  cfg.n_t = 8;
  cfg.n_r = 8;
  cfg.k = 2;
  cfg.n_s = 16;
  cfg.l = 16;
  cfg.g = 4;
  cfg.n_a = cfg.n_r;
  cfg.n_d = cfg.n_s;
  cfg.n_v = cfg.l;
  cfg.n_sel = cfg.n_s / 4;
  // With the larger per-subcarrier power the interleaved sweeps need about
  // 1300 iterations to reach the default tolerances.
  cfg.solver.max_iter = 2000;
  return cfg;
}

SystemConfig profile_by_name(std::string_view name) {
  if (name == "desk") return desk_profile();
  if (name == "full" || name == "paper") return full_profile();
  throw ConfigError("unknown profile '" + std::string(name) + "' (expected desk or full)");
}

namespace {

bool is_supported_qam(int order) {
  if (order < 4) return false;
  if ((order & (order - 1)) != 0) return false;
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
  return side * side == order;
}

}  // namespace

std::vector<std::string> check_invariants(const SystemConfig& cfg) {
  std::vector<std::string> errs;
  auto require = [&errs](bool ok, std::string msg) {
    if (!ok) errs.push_back(std::move(msg));
  };

  require(cfg.f_c > 0, "carrier frequency must be positive");
  require(cfg.delta_f > 0, "subcarrier spacing must be positive");
  require(cfg.t_cp >= 0, "cyclic prefix duration must be non-negative");
  if (cfg.delta_f > 0) {
    const double td = 1.0 / cfg.delta_f;
    require(std::abs(cfg.t_d - td) <= 1e-12 * td, "T_d must equal 1/delta_f");
    require(std::abs(cfg.t - (cfg.t_d + cfg.t_cp)) <= 1e-12 * std::abs(cfg.t),
            "T must equal T_d + T_cp");
  }
  require(cfg.n_s >= 1, "N_s must be >= 1");
  require(cfg.l >= 1, "L must be >= 1");
  require(cfg.n_t >= 1, "N_t must be >= 1");
  require(cfg.n_r >= 1, "N_r must be >= 1");
  require(cfg.d_t > 0 && cfg.d_r > 0, "antenna spacings must be positive");
  require(cfg.d_ref > 0, "reference distance must be positive");
  require(cfg.c_ref > 0, "reference gain must be positive");
  require(cfg.alpha > 0, "path-loss exponent must be positive");
  require(cfg.sigma_beta_sq > 0, "reflection power must be positive");
  require(cfg.sigma_c_sq > 0, "communication noise power must be positive");
  require(cfg.sigma_s_sq > 0, "sensing noise power must be positive");
  require(is_supported_qam(cfg.qam_order),
          "qam_order must be a square power of two >= 4 (got " + std::to_string(cfg.qam_order) + ")");
  require(cfg.n_a >= cfg.n_r, "N_a must be >= N_r");
  require(cfg.n_d >= cfg.n_s, "N_d must be >= N_s");
  require(cfg.n_v >= cfg.l, "N_v must be >= L");
  require(cfg.p_0 > 0, "power budget must be positive");
  require(cfg.gamma_0 >= 0, "sensing SNR threshold must be non-negative");
  require(cfg.theta_a <= cfg.theta_b, "theta_a must not exceed theta_b");
  require(std::abs(cfg.theta_a) <= kPi / 2 && std::abs(cfg.theta_b) <= kPi / 2,
          "sensing angles must lie in [-90, 90] degrees");
  require(cfg.d_0 >= cfg.d_ref, "max sensing range must be >= reference distance");
  require(cfg.g >= 2, "G must be >= 2");
  require(cfg.k >= 1 && cfg.k <= cfg.n_t, "K must satisfy 1 <= K <= N_t");
  require(cfg.n_sel > 0 && cfg.n_sel <= cfg.n_s, "N_sel must satisfy 0 < N_sel <= N_s");
  require(cfg.rho_1 > 0 && cfg.rho_2 > 0 && cfg.rho_3 > 0, "penalty parameters must be positive");
  require(cfg.solver.max_iter >= 1, "solver max_iter must be >= 1");
  require(cfg.solver.eps_primal >= 0 && cfg.solver.eps_dual >= 0,
          "solver tolerances must be non-negative");
  require(cfg.scene.num_targets >= 0, "num_targets must be >= 0");
  require(cfg.scene.max_speed_mps >= 0, "max speed must be non-negative");
  require(cfg.detection.min_rel_peak > 0 && cfg.detection.min_rel_peak <= 1,
          "min_rel_peak must lie in (0, 1]");
  require(cfg.basis_pursuit.tol_eq > 0, "basis pursuit tolerance must be positive");
  require(cfg.basis_pursuit.max_iter >= 1, "basis pursuit max_iter must be >= 1");
  require(cfg.basis_pursuit.penalty > 0, "basis pursuit penalty must be positive");
  return errs;
}

void validate(const SystemConfig& cfg) {
  const auto errs = check_invariants(cfg);
  if (errs.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& e : errs) msg += "\n  - " + e;
  throw ConfigError(msg);
}

namespace {

// Values that depend on other keys are resolved after the whole document is read.
struct Pending {
  std::optional<double> tx_spacing_wavelengths;
  std::optional<double> rx_spacing_wavelengths;
  bool n_a = false, n_d = false, n_v = false;
};

using Setter = std::function<void(SystemConfig&, Pending&, const json&)>;

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("key '" + key + "' must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("key '" + key + "' must be an integer");
  return v.get<int>();
}

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  using C = SystemConfig;
  using P = Pending;
  using J = json;
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"ofdm",
       {
           {"carrier_frequency_hz", [](C& c, P&, const J& v) { c.f_c = as_number(v, "carrier_frequency_hz"); }},
           {"subcarrier_spacing_hz", [](C& c, P&, const J& v) { c.delta_f = as_number(v, "subcarrier_spacing_hz"); }},
           {"num_subcarriers", [](C& c, P&, const J& v) { c.n_s = as_int(v, "num_subcarriers"); }},
           {"cp_duration_s", [](C& c, P&, const J& v) { c.t_cp = as_number(v, "cp_duration_s"); }},
           {"num_symbols", [](C& c, P&, const J& v) { c.l = as_int(v, "num_symbols"); }},
       }},
      {"array",
       {
           {"num_tx", [](C& c, P&, const J& v) { c.n_t = as_int(v, "num_tx"); }},
           {"num_rx", [](C& c, P&, const J& v) { c.n_r = as_int(v, "num_rx"); }},
           {"tx_spacing_m", [](C& c, P&, const J& v) { c.d_t = as_number(v, "tx_spacing_m"); }},
           {"rx_spacing_m", [](C& c, P&, const J& v) { c.d_r = as_number(v, "rx_spacing_m"); }},
           {"tx_spacing_wavelengths",
            [](C&, P& p, const J& v) { p.tx_spacing_wavelengths = as_number(v, "tx_spacing_wavelengths"); }},
           {"rx_spacing_wavelengths",
            [](C&, P& p, const J& v) { p.rx_spacing_wavelengths = as_number(v, "rx_spacing_wavelengths"); }},
       }},
      {"propagation",
       {
           {"reference_distance_m", [](C& c, P&, const J& v) { c.d_ref = as_number(v, "reference_distance_m"); }},
           {"reference_gain_db", [](C& c, P&, const J& v) { c.c_ref = db_to_linear(as_number(v, "reference_gain_db")); }},
           {"reference_gain_linear", [](C& c, P&, const J& v) { c.c_ref = as_number(v, "reference_gain_linear"); }},
           {"path_loss_exponent", [](C& c, P&, const J& v) { c.alpha = as_number(v, "path_loss_exponent"); }},
           {"reflection_power_db",
            [](C& c, P&, const J& v) { c.sigma_beta_sq = db_to_linear(as_number(v, "reflection_power_db")); }},
           {"reflection_power_linear",
            [](C& c, P&, const J& v) { c.sigma_beta_sq = as_number(v, "reflection_power_linear"); }},
       }},
      {"noise",
       {
           {"comm_noise_dbm", [](C& c, P&, const J& v) { c.sigma_c_sq = dbm_to_watts(as_number(v, "comm_noise_dbm")); }},
           {"comm_noise_w", [](C& c, P&, const J& v) { c.sigma_c_sq = as_number(v, "comm_noise_w"); }},
           {"sensing_noise_dbm",
            [](C& c, P&, const J& v) { c.sigma_s_sq = dbm_to_watts(as_number(v, "sensing_noise_dbm")); }},
           {"sensing_noise_w", [](C& c, P&, const J& v) { c.sigma_s_sq = as_number(v, "sensing_noise_w"); }},
       }},
      {"modulation",
       {
           {"qam_order", [](C& c, P&, const J& v) { c.qam_order = as_int(v, "qam_order"); }},
       }},
      {"processing",
       {
           {"n_a", [](C& c, P& p, const J& v) { c.n_a = as_int(v, "n_a"); p.n_a = true; }},
           {"n_d", [](C& c, P& p, const J& v) { c.n_d = as_int(v, "n_d"); p.n_d = true; }},
           {"n_v", [](C& c, P& p, const J& v) { c.n_v = as_int(v, "n_v"); p.n_v = true; }},
       }},
      {"sensing",
       {
           {"snr_threshold_db", [](C& c, P&, const J& v) { c.gamma_0 = db_to_linear(as_number(v, "snr_threshold_db")); }},
           {"snr_threshold_linear", [](C& c, P&, const J& v) { c.gamma_0 = as_number(v, "snr_threshold_linear"); }},
           {"theta_a_deg", [](C& c, P&, const J& v) { c.theta_a = deg_to_rad(as_number(v, "theta_a_deg")); }},
           {"theta_b_deg", [](C& c, P&, const J& v) { c.theta_b = deg_to_rad(as_number(v, "theta_b_deg")); }},
           {"theta_a_rad", [](C& c, P&, const J& v) { c.theta_a = as_number(v, "theta_a_rad"); }},
           {"theta_b_rad", [](C& c, P&, const J& v) { c.theta_b = as_number(v, "theta_b_rad"); }},
           {"max_range_m", [](C& c, P&, const J& v) { c.d_0 = as_number(v, "max_range_m"); }},
           {"grid_points", [](C& c, P&, const J& v) { c.g = as_int(v, "grid_points"); }},
           {"num_selected", [](C& c, P&, const J& v) { c.n_sel = as_int(v, "num_selected"); }},
       }},
      {"beamforming",
       {
           {"power_budget_w", [](C& c, P&, const J& v) { c.p_0 = as_number(v, "power_budget_w"); }},
           {"num_users", [](C& c, P&, const J& v) { c.k = as_int(v, "num_users"); }},
           {"rho_1", [](C& c, P&, const J& v) { c.rho_1 = as_number(v, "rho_1"); }},
           {"rho_2", [](C& c, P&, const J& v) { c.rho_2 = as_number(v, "rho_2"); }},
           {"rho_3", [](C& c, P&, const J& v) { c.rho_3 = as_number(v, "rho_3"); }},
           {"max_iter", [](C& c, P&, const J& v) { c.solver.max_iter = as_int(v, "max_iter"); }},
           {"eps_primal", [](C& c, P&, const J& v) { c.solver.eps_primal = as_number(v, "eps_primal"); }},
           {"eps_dual", [](C& c, P&, const J& v) { c.solver.eps_dual = as_number(v, "eps_dual"); }},
       }},
      {"scene",
       {
           {"num_targets", [](C& c, P&, const J& v) { c.scene.num_targets = as_int(v, "num_targets"); }},
           {"max_speed_mps", [](C& c, P&, const J& v) { c.scene.max_speed_mps = as_number(v, "max_speed_mps"); }},
       }},
      {"detection",
       {
           {"min_rel_peak", [](C& c, P&, const J& v) { c.detection.min_rel_peak = as_number(v, "min_rel_peak"); }},
       }},
      {"basis_pursuit",
       {
           {"tol_eq", [](C& c, P&, const J& v) { c.basis_pursuit.tol_eq = as_number(v, "tol_eq"); }},
           {"max_iter", [](C& c, P&, const J& v) { c.basis_pursuit.max_iter = as_int(v, "max_iter"); }},
           {"penalty", [](C& c, P&, const J& v) { c.basis_pursuit.penalty = as_number(v, "penalty"); }},
       }},
  };
  return table;
}

}  // namespace

SystemConfig parse_config(std::string_view json_text, const SystemConfig& base) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");

  SystemConfig cfg = base;
  if (auto it = doc.find("profile"); it != doc.end()) {
    if (!it->is_string()) throw ConfigError("'profile' must be a string");
    cfg = profile_by_name(it->get<std::string>());
  }

  Pending pending;
  const auto& table = schema();
  for (const auto& [section, body] : doc.items()) {
    if (section == "profile") continue;
    if (section == "seed") {
      if (!body.is_number_unsigned() && !body.is_number_integer())
        throw ConfigError("'seed' must be a non-negative integer");
      cfg.seed = body.get<std::uint64_t>();
      continue;
    }
    const auto sec = table.find(section);
    if (sec == table.end()) throw ConfigError("unknown config section '" + section + "'");
    if (!body.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end())
        throw ConfigError("unknown config key '" + section + "." + key + "'");
      setter->second(cfg, pending, value);
    }
  }

  cfg.t_d = 1.0 / cfg.delta_f;
  cfg.t = cfg.t_d + cfg.t_cp;
  const double wavelength = kSpeedOfLight / cfg.f_c;
  if (pending.tx_spacing_wavelengths) cfg.d_t = *pending.tx_spacing_wavelengths * wavelength;
  if (pending.rx_spacing_wavelengths) cfg.d_r = *pending.rx_spacing_wavelengths * wavelength;
  // DFT sizes default to the array/numerology sizes unless set explicitly.
  if (!pending.n_a) cfg.n_a = cfg.n_r;
  if (!pending.n_d) cfg.n_d = cfg.n_s;
  if (!pending.n_v) cfg.n_v = cfg.l;
  return cfg;
}

SystemConfig load_config(const std::filesystem::path& path, const SystemConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string to_json(const SystemConfig& cfg) {
  json doc;
  doc["ofdm"] = {{"carrier_frequency_hz", cfg.f_c},
                 {"subcarrier_spacing_hz", cfg.delta_f},
                 {"num_subcarriers", cfg.n_s},
                 {"cp_duration_s", cfg.t_cp},
                 {"num_symbols", cfg.l}};
  doc["array"] = {{"num_tx", cfg.n_t}, {"num_rx", cfg.n_r}, {"tx_spacing_m", cfg.d_t}, {"rx_spacing_m", cfg.d_r}};
  doc["propagation"] = {{"reference_distance_m", cfg.d_ref},
                        {"reference_gain_linear", cfg.c_ref},
                        {"path_loss_exponent", cfg.alpha},
                        {"reflection_power_linear", cfg.sigma_beta_sq}};
  doc["noise"] = {{"comm_noise_w", cfg.sigma_c_sq}, {"sensing_noise_w", cfg.sigma_s_sq}};
  doc["modulation"] = {{"qam_order", cfg.qam_order}};
  doc["processing"] = {{"n_a", cfg.n_a}, {"n_d", cfg.n_d}, {"n_v", cfg.n_v}};
  doc["sensing"] = {{"snr_threshold_linear", cfg.gamma_0},
                    {"theta_a_rad", cfg.theta_a},
                    {"theta_b_rad", cfg.theta_b},
                    {"max_range_m", cfg.d_0},
                    {"grid_points", cfg.g},
                    {"num_selected", cfg.n_sel}};
  doc["beamforming"] = {{"power_budget_w", cfg.p_0},
                        {"num_users", cfg.k},
                        {"rho_1", cfg.rho_1},
                        {"rho_2", cfg.rho_2},
                        {"rho_3", cfg.rho_3},
                        {"max_iter", cfg.solver.max_iter},
                        {"eps_primal", cfg.solver.eps_primal},
                        {"eps_dual", cfg.solver.eps_dual}};
  doc["scene"] = {{"num_targets", cfg.scene.num_targets}, {"max_speed_mps", cfg.scene.max_speed_mps}};
  doc["detection"] = {{"min_rel_peak", cfg.detection.min_rel_peak}};
  doc["basis_pursuit"] = {{"tol_eq", cfg.basis_pursuit.tol_eq},
                          {"max_iter", cfg.basis_pursuit.max_iter},
                          {"penalty", cfg.basis_pursuit.penalty}};
  doc["seed"] = cfg.seed;
  return doc.dump(2);
}

std::uint64_t config_hash(const SystemConfig& cfg) {
  const std::string text = to_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[hash & 0xF];
    hash >>= 4;
  }
  return out;
}

}  // namespace isac
