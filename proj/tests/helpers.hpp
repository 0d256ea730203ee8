#pragma once

#include <random>
#include <vector>

#include "tfimpute/tensor.hpp"

namespace testing_util {

using namespace tfimpute;

inline DenseTensor random_tensor(const Dims& dims, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  DenseTensor x(dims);
  for (Index l = 0; l < x.size(); ++l) x[l] = n(rng);
  return x;
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  }
  return m;
}

inline Matrix random_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rows, cols, rng));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

// Random series with each entry missing with probability p_missing.
inline TensorSeries random_series(const Dims& dims, Index T, double p_missing,
                                  std::mt19937_64& rng) {
  std::bernoulli_distribution miss(p_missing);
  std::vector<DenseTensor> slices;
  std::vector<ObservationMask> masks;
  for (Index t = 0; t < T; ++t) {
    slices.push_back(random_tensor(dims, rng));
    ObservationMask m(dims, 1);
    for (Index l = 0; l < m.size(); ++l) m[l] = miss(rng) ? 0 : 1;
    masks.push_back(m);
  }
  return TensorSeries(dims, slices, masks);
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testing_util
