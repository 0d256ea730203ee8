#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tfimpute/tensor.hpp"

namespace tfimpute {

/// Spectral norm of the difference between the projectors onto span(q) and
/// span(q_hat).  Lies in [0, 1]; throws if either argument is rank deficient.
double col_space_distance(const Matrix& q, const Matrix& q_hat);

enum class EntryRole { observed, missing, all };

struct EntrySelection {
  EntryRole role = EntryRole::all;
  std::vector<std::pair<Index, Index>> entries;  // (t, linear index)
};

EntrySelection select_entries(std::span<const ObservationMask> masks, EntryRole role);

/// sum (fitted - truth)^2 / sum truth^2 over the selected entries.
double relative_mse(std::span<const DenseTensor> fitted, std::span<const DenseTensor> truth,
                    const EntrySelection& selection);

/// Same over plain vectors (all entries).
double relative_mse(std::span<const double> fitted, std::span<const double> truth);

/**
 * q-quantile relative squared error.  Pairs are stably sorted by truth; the
 * cut index q_j is the smallest index whose value equals the nearest-rank
 * (j/q)-quantile; bin 1 is [q_0, q_1] and bin n > 1 is (q_{n-1}, q_n].
 * Returns sum_n (S_n - S^_n)^2 / sum_n S_n^2 over bin sums.
 */
double q_rse(std::span<const double> truth, std::span<const double> fitted, Index q);

}  // namespace tfimpute
