#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "tfimpute/error.hpp"

namespace tfimpute {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Dims = std::vector<Index>;

// Product of all dimensions; 1 for an empty list.
Index num_elements(std::span<const Index> dims);

// Product of all dimensions except mode k.
Index num_elements_except(std::span<const Index> dims, std::size_t k);

/**
 * Dense order-K array stored with the first index varying fastest, so the
 * flat storage of a tensor is exactly its vectorization.  Multi-indices are
 * 0-based in this API; file formats and reports use 1-based indices.
 */
template <typename T>
class BasicTensor {
 public:
  BasicTensor() = default;

  explicit BasicTensor(Dims dims, T fill = T{})
      : dims_(std::move(dims)), values_(check_dims(dims_), fill) {}

  BasicTensor(Dims dims, std::vector<T> values)
      : dims_(std::move(dims)), values_(std::move(values)) {
    if (static_cast<Index>(values_.size()) != check_dims(dims_)) {
      throw InputError("tensor value count does not match dimensions");
    }
  }

  const Dims& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  Index dim(std::size_t k) const { return dims_.at(k); }
  Index size() const { return static_cast<Index>(values_.size()); }

  T& operator[](Index linear) { return values_[static_cast<std::size_t>(linear)]; }
  const T& operator[](Index linear) const { return values_[static_cast<std::size_t>(linear)]; }

  T& operator()(std::span<const Index> index) { return (*this)[linear_index(index)]; }
  const T& operator()(std::span<const Index> index) const { return (*this)[linear_index(index)]; }

  Index linear_index(std::span<const Index> index) const {
    if (index.size() != dims_.size()) throw InputError("multi-index has wrong order");
    Index linear = 0;
    Index stride = 1;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      if (index[k] < 0 || index[k] >= dims_[k]) throw InputError("multi-index out of range");
      linear += index[k] * stride;
      stride *= dims_[k];
    }
    return linear;
  }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

  bool operator==(const BasicTensor&) const = default;

 private:
  static Index check_dims(const Dims& dims) {
    for (Index d : dims) {
      if (d <= 0) throw InputError("tensor dimensions must be positive");
    }
    return num_elements(dims);
  }

  Dims dims_;
  std::vector<T> values_;
};

using DenseTensor = BasicTensor<double>;
using ObservationMask = BasicTensor<std::uint8_t>;

// Value stored at unobserved positions.  Kernels gate on the mask, never on it.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// Inverse of linear_index for the given dims (0-based).
std::vector<Index> multi_index(std::span<const Index> dims, Index linear);

/// Mode-k unfolding: a d_k x d_{-k} matrix whose column h is the mode-k fibre
/// at the h-th combination of the remaining indices, lower modes fastest.
Matrix unfold(const DenseTensor& x, std::size_t k);

/// Inverse of unfold.
DenseTensor refold(const Matrix& m, std::size_t k, const Dims& dims);

/// mat_k(x ×_k a) = a · mat_k(x).
DenseTensor mode_product(const DenseTensor& x, const Matrix& a, std::size_t k);

/// x ×_1 a[0] ×_2 a[1] ... ×_K a[K-1].
DenseTensor multi_mode_product(const DenseTensor& x, std::span<const Matrix> a);

Vector vectorize(const DenseTensor& x);

/// a[K-1] ⊗ ... ⊗ a[0], the matrix acting on vec(x) for multi_mode_product.
Matrix kronecker_chain(std::span<const Matrix> a);

/**
 * A length-T series of order-K tensors with a parallel observation mask.
 * Unobserved positions hold kMissing.
 */
class TensorSeries {
 public:
  TensorSeries() = default;

  // Fully observed series.
  TensorSeries(Dims dims, std::vector<DenseTensor> slices);

  // Masked series; values at unobserved positions are overwritten with kMissing.
  TensorSeries(Dims dims, std::vector<DenseTensor> slices, std::vector<ObservationMask> masks);

  const Dims& dims() const { return dims_; }
  std::size_t order() const { return dims_.size(); }
  Index length() const { return static_cast<Index>(slices_.size()); }
  Index cells() const { return num_elements(dims_); }

  const DenseTensor& slice(Index t) const { return slices_.at(static_cast<std::size_t>(t)); }
  const ObservationMask& mask(Index t) const { return masks_.at(static_cast<std::size_t>(t)); }
  const std::vector<DenseTensor>& slices() const { return slices_; }
  const std::vector<ObservationMask>& masks() const { return masks_; }

  bool observed(Index t, Index linear) const { return mask(t)[linear] != 0; }
  bool fully_observed() const;
  Index observed_count() const;

  // Copy of slice t with unobserved entries replaced by zero.
  DenseTensor zero_filled(Index t) const;

 private:
  Dims dims_;
  std::vector<DenseTensor> slices_;
  std::vector<ObservationMask> masks_;
};

// Per-cell mean over observed times; cells never observed get 0.
DenseTensor observed_means(const TensorSeries& series);

// Subtract per-cell observed means (mask preserved).
TensorSeries center(const TensorSeries& series, const DenseTensor& means);

}  // namespace tfimpute
