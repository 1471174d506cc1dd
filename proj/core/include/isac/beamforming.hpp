#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isac/config.hpp"
#include "isac/physics.hpp"
#include "isac/sparse_recovery.hpp"
#include "isac/waveform.hpp"

namespace isac {

/// Angular grid and threshold of the sensing SNR constraint.
struct SensingSpec {
  std::vector<double> theta_grid;           // theta_g, rad
  std::vector<Eigen::VectorXcd> steering;   // a(omega_t(theta_g)), length N_t
  double d_0 = 0.0;
  double gamma_0 = 0.0;                     // linear
  int n_sel = 0;
  /// N_sel sigma_s^2 Gamma_0 / (sigma_beta^2 PL(2 d_0)): lower bound on the
  /// summed beampattern over the selected subcarriers, per grid angle.
  double threshold_rhs = 0.0;
};

/// theta_g = theta_a + g (theta_b - theta_a) / (G - 1), g = 0..G-1.
SensingSpec make_sensing_spec(const SystemConfig& cfg, int n_sel);

/// Echo SNR at (theta, d) summed over selected subcarriers, normalized by
/// N_sel sigma_s^2.
double received_snr(const PrecoderSet& w, double theta, double d, const SelectionMask& mask, const SystemConfig& cfg);

/// min over the grid of received_snr / Gamma_0.
double min_sensing_ratio(const PrecoderSet& w, const SensingSpec& spec, const SelectionMask& mask,
                         const SystemConfig& cfg);

/// vec(W) = [w_1; ...; w_K] and back.
Eigen::VectorXcd vec(const Eigen::MatrixXcd& w);
Eigen::MatrixXcd unvec(const Eigen::VectorXcd& w, int n_t, int k);

/// Linear minorant Re{b^H w} + c of sum_k |a^H w_k|^2 around w_t.
struct MmTerm {
  Eigen::VectorXcd b;
  double c = 0.0;
};

MmTerm mm_surrogate(const Eigen::VectorXcd& w_t, const Eigen::VectorXcd& a, int k);

/// sum_k |a^H w_k|^2 = a^H W W^H a.
double beampattern(const Eigen::VectorXcd& w, const Eigen::VectorXcd& a, int k);

/// Fractional-programming auxiliaries of one subcarrier.
struct FpTerms {
  Eigen::VectorXd r;   // SINR per user
  Eigen::VectorXcd t;  // sqrt(1 + r_k) h_k^H w_k / (sum_j |h_k^H w_j|^2 + sigma^2)
};

FpTerms fp_update(const Eigen::MatrixXcd& w_i, const Eigen::MatrixXcd& h_i, double sigma_c_sq);

/// Everything the w-update of one subcarrier depends on.
struct QuadraticBlock {
  Eigen::MatrixXcd t;      // I_K kron sum_j |t_j|^2 h_j h_j^H
  Eigen::VectorXcd h_hat;  // [sqrt(1 + r_k) t_k h_k]_k
  Eigen::MatrixXd a_sym;   // A + A^T, real 2 N_t K square
  Eigen::VectorXd b;       // real linear term
};

/// Inputs of assemble_quadratic for one subcarrier. `mm`, `gamma_var` and
/// `gamma_dual` are empty for unselected subcarriers.
struct BlockInputs {
  const Eigen::MatrixXcd* h = nullptr;
  const FpTerms* fp = nullptr;
  const Eigen::VectorXcd* x = nullptr;
  const Eigen::VectorXcd* mu = nullptr;
  std::vector<MmTerm> mm;
  std::vector<double> gamma_var;
  std::vector<double> gamma_dual;
};

QuadraticBlock assemble_quadratic(const BlockInputs& in, double rho_1, double rho_3);

/// Complex value of the w-subproblem objective:
/// w^H T w - 2 Re{h_hat^H w} + rho_1/2 ||x - w + mu/rho_1||^2
///   + rho_3/2 sum_g (Re{b_g^H w} + c_g - Gamma_g + gamma_g/rho_3)^2.
double w_objective(const BlockInputs& in, const QuadraticBlock& q, const Eigen::VectorXcd& w, double rho_1,
                   double rho_3);

/// Real form w^T (A + A^T) w / 2 - b^T w of the same objective.
double w_objective_real(const QuadraticBlock& q, const Eigen::VectorXd& w_real);

Eigen::VectorXd stack_real(const Eigen::VectorXcd& v);
Eigen::VectorXcd unstack_real(const Eigen::VectorXd& v);

/// Moore-Penrose pseudoinverse of a symmetric matrix via eigendecomposition;
/// eigenvalues below rel_cutoff * max |lambda| are dropped.
Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& s, double rel_cutoff = 1e-10);

/// Minimizer of the quadratic block; throws SolverConsistencyError when the
/// stationarity residual exceeds 1e-8 (1 + ||b||).
Eigen::VectorXcd update_w(const QuadraticBlock& q);

struct XUpdate {
  Eigen::VectorXcd x;
  double objective = 0.0;
  bool degenerate = false;
};

/// h(x) = rho_1/2 ||x - w + mu/rho_1||^2 + rho_2/2 (||x||^2 - p + nu/rho_2)^2.
double x_objective(const Eigen::VectorXcd& x, const Eigen::VectorXcd& w, double p, const Eigen::VectorXcd& mu,
                   double nu, double rho_1, double rho_2);

/// Global minimizer of h over the stationary points x = v / (a + b ||x||^2).
XUpdate update_x(const Eigen::VectorXcd& w, double p, const Eigen::VectorXcd& mu, double nu, double rho_1,
                 double rho_2);

/// Projection of gamma_hat onto { sum >= rhs }: a uniform lift.
std::vector<double> project_sum_at_least(const std::vector<double>& gamma_hat, double rhs);
/// Projection of p_hat onto { sum <= budget }: a uniform shift.
std::vector<double> project_sum_at_most(const std::vector<double>& p_hat, double budget);

struct SolverState {
  int n_t = 0;
  int k = 0;
  std::vector<Eigen::VectorXcd> w, x, mu;  // per subcarrier, length N_t K
  std::vector<double> p, nu;               // per subcarrier
  std::vector<int> selected;               // sensing subcarriers
  Eigen::MatrixXd gamma_var;               // (selected index, g)
  Eigen::MatrixXd gamma_dual;              // (selected index, g)
  double rho_1 = 0.0, rho_2 = 0.0, rho_3 = 0.0;
  int iteration = 0;

  int n_s() const { return static_cast<int>(w.size()); }
  PrecoderSet precoders() const;
};

/// Steering-aligned start with total power P_0; x = w, p = ||W_i||^2,
/// Gamma = beampattern, duals zero. An empty mask disables sensing.
SolverState initialize(const SystemConfig& cfg, const SensingSpec& spec, const SelectionMask* mask);

/// MM expansion of every (selected subcarrier, grid angle) at the current w.
std::vector<std::vector<MmTerm>> mm_terms(const SolverState& s, const SensingSpec& spec);

void update_gamma(SolverState& s, const std::vector<std::vector<MmTerm>>& mm, const SensingSpec& spec);
void update_p(SolverState& s, double p_0);
void update_duals(SolverState& s, const std::vector<std::vector<MmTerm>>& mm);

struct Residuals {
  double r_primal = 0.0;
  double s_dual = 0.0;
};

Residuals residual_norms(const SolverState& now, const SolverState& prev, const std::vector<std::vector<MmTerm>>& mm);

struct StopRule {
  int max_iter = 500;
  double eps_primal = 0.0;  // 0 = 1e-3 sqrt(N_s N_t K)
  double eps_dual = 0.0;
};

StopRule stop_rule(const SystemConfig& cfg);

struct TraceRow {
  int iteration = 0;
  double sum_rate_bits = 0.0;
  double r_primal = 0.0;
  double s_dual = 0.0;
  std::optional<double> min_sensing_surplus_db;
  double wall_time_ms = 0.0;
};

/// Per-iteration checks, filled when SolveOptions::check_invariants is set.
struct InvariantLog {
  double max_psd_violation = 0.0;   // max over blocks of -eigmin / ||A+A^T||
  double max_asymmetry = 0.0;       // max |S - S^T| / ||S||
  double max_minorization_gap = 0.0;  // surrogate at w^(t+1) minus true value (should be <= 0)
  double max_tightness_error = 0.0;   // |surrogate - true| at the expansion point
  double max_dual_imag = 0.0;       // |Im| of nu and gamma accumulated in complex arithmetic
  int blocks_checked = 0;
};

struct SolveOptions {
  bool check_invariants = false;
  bool record_trace = true;
};

struct SolveResult {
  PrecoderSet w;            // after feasibility rounding
  std::vector<TraceRow> trace;
  int iterations = 0;
  bool converged = false;   // residuals met the stop rule
  bool feasible = true;     // power and sensing constraints hold after rounding
  double min_sensing_ratio = 0.0;  // min_g received_snr / Gamma_0 after rounding
  Residuals final_residuals;
  InvariantLog invariants;
};

/// One beamforming design. `mask` == nullptr or an empty selection solves the
/// communication-only problem.
SolveResult solve(const SystemConfig& cfg, const ChannelSet& h, const SensingSpec& spec, const SelectionMask* mask,
                  const StopRule& stop, const SolveOptions& opt = {});

std::string trace_to_csv(const std::vector<TraceRow>& trace);

}  // namespace isac
