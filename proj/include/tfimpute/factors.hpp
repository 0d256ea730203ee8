#pragma once

#include <optional>
#include <vector>

#include "tfimpute/covariance.hpp"
#include "tfimpute/tensor.hpp"

namespace tfimpute {

/// Leading eigenpairs of a mode covariance.
struct Loadings {
  Matrix q;            // d_k x r, orthonormal columns
  Vector eigenvalues;  // r values, descending
};

/// Top-r eigenvectors of cov.s_hat, descending by eigenvalue.  Each column is
/// signed so that its largest-magnitude entry is positive.
Loadings estimate_loadings(const ModeCovariance& cov, Index r);

/// Full spectrum of a symmetric matrix in descending order.
Vector descending_eigenvalues(const Matrix& s);

struct RankReport {
  std::size_t mode = 0;
  Vector eigenvalues;          // all d_k eigenvalues, descending
  double xi = 0.0;
  std::vector<double> ratios;  // ratios[l-1] = (lambda_{l+1} + xi) / (lambda_l + xi)
  Index selected = 0;
  bool boundary_hit = false;   // selected == floor(d_k / 2)
};

inline constexpr double kDefaultCXi = 0.2;

/// Penalty c_xi * d * [(T d_{-k})^{-1/2} + d_k^{-1/2}].
double rank_penalty(Index T, const Dims& dims, std::size_t k, double c_xi = kDefaultCXi);

/**
 * Perturbed eigenvalue-ratio rank: argmin over l in [1, floor(d_k/2)] of
 * (lambda_{l+1} + xi) / (lambda_l + xi), smallest l on ties.
 */
RankReport estimate_rank(const Vector& eigenvalues, Index T, const Dims& dims, std::size_t k,
                         double c_xi = kDefaultCXi);

/// Same rule with an explicit penalty xi.
RankReport estimate_rank_with_penalty(const Vector& eigenvalues, double xi, std::size_t k = 0);

struct CoreEstimate {
  Vector coefficients;        // vec of the r_1 x ... x r_K core
  bool pseudo_inverse = false;
  double condition = 1.0;
};

// Gram condition number above which the minimum-norm solution is used.
inline constexpr double kGramConditionLimit = 1e12;

/**
 * Masked least squares for the core factors at time t against the
 * Kronecker-chained loadings Q_K ⊗ ... ⊗ Q_1 (d x r).  Throws InputError when
 * slice t has no observations.
 */
CoreEstimate estimate_core(const TensorSeries& series, const Matrix& q_kron, Index t);
CoreEstimate estimate_core(const TensorSeries& series, std::span<const Matrix> loadings, Index t);

class FactorModel {
 public:
  FactorModel() = default;
  FactorModel(std::vector<Matrix> loadings, std::vector<Vector> eigenvalues,
              std::vector<DenseTensor> cores);

  std::size_t order() const { return loadings_.size(); }
  const Dims& ranks() const { return ranks_; }
  Dims dims() const;
  Index length() const { return static_cast<Index>(cores_.size()); }
  const std::vector<Matrix>& loadings() const { return loadings_; }
  const Matrix& loading(std::size_t k) const { return loadings_.at(k); }
  const std::vector<Vector>& eigenvalues() const { return eigenvalues_; }
  const Vector& eigenvalues(std::size_t k) const { return eigenvalues_.at(k); }
  const std::vector<DenseTensor>& cores() const { return cores_; }
  const DenseTensor& core(Index t) const { return cores_.at(static_cast<std::size_t>(t)); }

 private:
  Dims ranks_;
  std::vector<Matrix> loadings_;
  std::vector<Vector> eigenvalues_;
  std::vector<DenseTensor> cores_;
};

/// core(t) ×_1 Q_1 ... ×_K Q_K.
DenseTensor common_components(const FactorModel& model, Index t);

struct ImputeOptions {
  std::optional<Dims> ranks;  // nullopt selects ranks per mode with estimate_rank
  double c_xi = kDefaultCXi;
  unsigned threads = 1;
};

struct ModeDiagnostics {
  Index min_overlap = 0;
  Index dropped_terms = 0;
};

struct ImputationResult {
  TensorSeries completed;                  // fully observed
  FactorModel model;
  std::vector<DenseTensor> fitted_common;  // hat C_t
  std::vector<RankReport> rank_reports;    // from the first-pass covariances
  std::vector<ModeDiagnostics> diagnostics;
  std::vector<Index> empty_slices;         // t with no observations, filled with zeros
  std::vector<Index> pseudo_inverse_slices;
  int iterations = 0;                      // re-imputation passes performed
  std::vector<double> pass_changes;        // max |change| at missing cells, per pass
};

/**
 * Covariance per mode, loadings, core regression per time point, common
 * components, and fill.  Observed entries are copied verbatim.
 */
ImputationResult impute(const TensorSeries& series, const ImputeOptions& options = {});

/**
 * impute(), then up to max_passes refits on the completed series treated as
 * fully observed, refilling missing cells each time.  Stops early when the
 * largest change at missing cells is below tol times the observed-data sd.
 * Ranks stay at those of the first fit.
 */
ImputationResult reimpute(const TensorSeries& series, const ImputeOptions& options = {},
                          int max_passes = 1, double tol = 1e-6);

struct VarimaxResult {
  Matrix rotated;
  Matrix rotation;  // r x r orthogonal, rotated = q * rotation
  int sweeps = 0;
};

/// Raw varimax by pairwise plane rotations.
VarimaxResult varimax(const Matrix& q, double tol = 1e-8, int max_sweeps = 1000);

double varimax_criterion(const Matrix& loadings);

}  // namespace tfimpute
