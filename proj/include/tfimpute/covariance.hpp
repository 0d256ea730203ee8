#pragma once

#include "tfimpute/tensor.hpp"

namespace tfimpute {

/// Mode-k second-moment matrix reconstructed from pairwise observations.
struct ModeCovariance {
  std::size_t mode = 0;
  Matrix s_hat;
  // Smallest |psi_{k,ij,h}| over contributing (i,j,h); T for a full mask.
  Index min_overlap = 0;
  // Ordered (i,j,h) triples with no common observation time; they contribute 0.
  Index dropped_terms = 0;
};

/// Number of times at which entries (i,h) and (j,h) of the mode-k unfolding
/// are both observed.  Indices are 0-based.
Index psi_count(const TensorSeries& series, std::size_t k, Index i, Index j, Index h);

/// (1/T) sum_t mat_k(Y_t) mat_k(Y_t)'.  Requires a full mask.
ModeCovariance covariance_complete(const TensorSeries& series, std::size_t k);

/**
 * Pairwise-observation mode-k covariance: entry (i,j) sums over fibres h the
 * average of y_ih * y_jh over the times where both are observed.  Triples with
 * empty overlap are dropped and counted.  Throws InputError if some row of the
 * mode-k unfolding is never observed.
 */
ModeCovariance covariance_missing(const TensorSeries& series, std::size_t k);

/// covariance_missing on the series after subtracting per-cell observed means.
ModeCovariance covariance_missing_centered(const TensorSeries& series, std::size_t k);

}  // namespace tfimpute
