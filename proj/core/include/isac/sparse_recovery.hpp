#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isac/config.hpp"
#include "isac/sensing_dft.hpp"

namespace isac {

/// Random subcarrier subset used for sensing.
struct SelectionMask {
  std::vector<std::uint8_t> phi;  // length N_s, 1 = selected
  std::vector<int> selected;      // ascending
  int n_d = 0;
  std::uint64_t seed = 0;

  int n_s() const { return static_cast<int>(phi.size()); }
  int n_sel() const { return static_cast<int>(selected.size()); }
  /// Rows kept by Phi: the selected subcarriers followed by every padding row.
  std::vector<int> rows() const;
};

/// Uniform subset of size cfg.n_sel drawn without replacement.
SelectionMask make_selection_mask(const SystemConfig& cfg, std::uint64_t seed);
SelectionMask make_selection_mask(int n_s, int n_d, int n_sel, std::uint64_t seed);
SelectionMask full_selection(int n_s, int n_d);

std::string mask_to_json(const SelectionMask& mask);
SelectionMask mask_from_json(const std::string& text);

/// A = Phi F^{-1}. Rows are scaled conjugate DFT rows, so A A^H = I / N_d;
/// construction checks this to 1e-10.
Eigen::MatrixXcd measurement_operator(const SelectionMask& mask);

struct BpSolution {
  Eigen::VectorXcd y_hat;
  double objective = 0.0;  // sum of moduli
  double residual = 0.0;   // ||A y - b||
  int iterations = 0;
  bool converged = false;
};

/// min ||y||_1 s.t. A y = b for an operator with A A^H = I / n_d, by ADMM
/// on the split y = z: affine projection, complex soft threshold, dual step.
/// The returned iterate is the projected one, so the equality holds to
/// rounding even without convergence.
BpSolution basis_pursuit(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b, int n_d,
                         const BasisPursuitOptions& opt = {});

struct OmpResult {
  std::vector<int> support;  // selection order
  Eigen::VectorXcd values;   // coefficients on support
  bool rank_deficient = false;
};

/// Greedy k-atom selection by maximal correlation with a least-squares refit
/// after each step.
OmpResult omp_oracle(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b, int sparsity);

struct CsResult {
  ProcessedCube cube;
  int fibers = 0;
  int nonconverged = 0;
};

/// Replace the delay DFT by basis pursuit on each (n_a, n_v) fiber, using
/// only the selected subcarriers.
CsResult cs_estimate(const DopplerSpectra& spectra, const SelectionMask& mask, const SystemConfig& cfg);

/// CS-assisted chain from echo to processed cube: coefficient removal and
/// alpha use only the selected subcarriers.
CsResult cs_process(const EchoCube& y, const std::vector<Eigen::MatrixXcd>& x, const SelectionMask& mask,
                    const SystemConfig& cfg);

}  // namespace isac
