#pragma once

#include <optional>

#include "tfimpute/factors.hpp"

namespace tfimpute {

struct InferenceReport {
  std::size_t mode = 0;
  Index row = 0;  // 0-based
  Index beta = 0;
  Matrix sigma_hac;
  Matrix sigma_hac_delta;
  Vector standardized;
  double statistic = 0.0;
  double p_value = 1.0;
};

/// floor((1/5) * (T d_k)^{1/4}).
Index auto_beta(Index T, Index dk);

/**
 * Bartlett-weighted HAC estimator for row j of the mode-k loadings,
 * D_0 + sum_{nu=1}^{beta} (1 - nu/(1+beta)) (D_nu + D_nu'), where
 * D_nu = sum_t g_t g_{t-nu}' and g_t collects residual-by-common products over
 * the pairwise-observation sets.  Requires beta < T.
 */
Matrix hac_sigma(const TensorSeries& series, const FactorModel& model, std::size_t k, Index j,
                 Index beta);

/// The missingness-discrepancy HAC counterpart; identically zero for a full mask.
Matrix hac_sigma_delta(const TensorSeries& series, const FactorModel& model, std::size_t k,
                       Index j, Index beta);

/**
 * Standardized loading row (Sigma_HAC + Sigma_HAC^Delta)^{-1/2} D_k Q_{k,j.}
 * and its chi-square(r_k) test of a zero row.  beta defaults to auto_beta.
 */
InferenceReport row_test(const TensorSeries& series, const FactorModel& model, std::size_t k,
                         Index j, std::optional<Index> beta = std::nullopt);

/// Upper tail of chi-square with df degrees of freedom.
double chi_square_upper(double x, double df);

}  // namespace tfimpute
