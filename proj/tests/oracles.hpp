#pragma once

#include <set>

#include "tfimpute/tensor.hpp"

namespace testing_util {

using namespace tfimpute;

// Position of entry (i, h) of the mode-k unfolding in a slice, computed from
// the multi-index rather than through unfold().
inline Index flat_of(const Dims& dims, std::size_t k, Index i, Index h) {
  std::vector<Index> idx(dims.size());
  Index rest = h;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    if (l == k) continue;
    idx[l] = rest % dims[l];
    rest /= dims[l];
  }
  idx[k] = i;
  Index flat = 0;
  Index stride = 1;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    flat += idx[l] * stride;
    stride *= dims[l];
  }
  return flat;
}

inline std::set<Index> psi_set(const TensorSeries& s, std::size_t k, Index i, Index j, Index h) {
  std::set<Index> both;
  for (Index t = 0; t < s.length(); ++t) {
    if (s.observed(t, flat_of(s.dims(), k, i, h)) && s.observed(t, flat_of(s.dims(), k, j, h))) {
      both.insert(t);
    }
  }
  return both;
}

// Explicit psi-set reconstruction of the mode-k covariance.
inline Matrix oracle_s_hat(const TensorSeries& s, std::size_t k, Index* dropped) {
  const Index dk = s.dims()[k];
  const Index dm = num_elements_except(s.dims(), k);
  Matrix out = Matrix::Zero(dk, dk);
  *dropped = 0;
  for (Index i = 0; i < dk; ++i) {
    for (Index j = 0; j < dk; ++j) {
      for (Index h = 0; h < dm; ++h) {
        const auto psi = psi_set(s, k, i, j, h);
        if (psi.empty()) {
          ++*dropped;
          continue;
        }
        double sum = 0;
        for (Index t : psi) {
          sum += s.slice(t)[flat_of(s.dims(), k, i, h)] * s.slice(t)[flat_of(s.dims(), k, j, h)];
        }
        out(i, j) += sum / static_cast<double>(psi.size());
      }
    }
  }
  return out;
}

}  // namespace testing_util
