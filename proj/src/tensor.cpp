#include "tfimpute/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace tfimpute {

Index num_elements(std::span<const Index> dims) {
  Index n = 1;
  for (Index d : dims) n *= d;
  return n;
}

Index num_elements_except(std::span<const Index> dims, std::size_t k) {
  Index n = 1;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    if (l != k) n *= dims[l];
  }
  return n;
}

std::vector<Index> multi_index(std::span<const Index> dims, Index linear) {
  std::vector<Index> index(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) {
    index[k] = linear % dims[k];
    linear /= dims[k];
  }
  return index;
}

namespace {

void check_mode(std::size_t k, std::size_t order) {
  if (k >= order) throw InputError("mode index out of range");
}

// Splits a tensor's linear index as inner + i_k * stride + outer * stride * d_k.
struct ModeLayout {
  Index inner;  // prod of dims below k
  Index dk;
  Index outer;  // prod of dims above k
};

ModeLayout layout(const Dims& dims, std::size_t k) {
  ModeLayout l{1, dims[k], 1};
  for (std::size_t m = 0; m < k; ++m) l.inner *= dims[m];
  for (std::size_t m = k + 1; m < dims.size(); ++m) l.outer *= dims[m];
  return l;
}

}  // namespace

Matrix unfold(const DenseTensor& x, std::size_t k) {
  check_mode(k, x.order());
  const ModeLayout l = layout(x.dims(), k);
  Matrix m(l.dk, l.inner * l.outer);
  Index linear = 0;
  for (Index b = 0; b < l.outer; ++b) {
    for (Index i = 0; i < l.dk; ++i) {
      for (Index a = 0; a < l.inner; ++a) {
        m(i, a + b * l.inner) = x[linear++];
      }
    }
  }
  return m;
}

DenseTensor refold(const Matrix& m, std::size_t k, const Dims& dims) {
  check_mode(k, dims.size());
  DenseTensor x(dims);
  const ModeLayout l = layout(dims, k);
  if (m.rows() != l.dk || m.cols() != l.inner * l.outer) {
    throw InputError("refold: matrix shape does not match dimensions");
  }
  Index linear = 0;
  for (Index b = 0; b < l.outer; ++b) {
    for (Index i = 0; i < l.dk; ++i) {
      for (Index a = 0; a < l.inner; ++a) {
        x[linear++] = m(i, a + b * l.inner);
      }
    }
  }
  return x;
}

DenseTensor mode_product(const DenseTensor& x, const Matrix& a, std::size_t k) {
  check_mode(k, x.order());
  if (a.cols() != x.dim(k)) throw InputError("mode_product: inner dimension mismatch");
  Dims out = x.dims();
  out[k] = a.rows();
  return refold(a * unfold(x, k), k, out);
}

DenseTensor multi_mode_product(const DenseTensor& x, std::span<const Matrix> a) {
  if (a.size() != x.order()) throw InputError("multi_mode_product: need one matrix per mode");
  DenseTensor y = x;
  for (std::size_t k = 0; k < a.size(); ++k) y = mode_product(y, a[k], k);
  return y;
}

Vector vectorize(const DenseTensor& x) {
  return Eigen::Map<const Vector>(x.values().data(), x.size());
}

Matrix kronecker_chain(std::span<const Matrix> a) {
  if (a.empty()) return Matrix::Identity(1, 1);
  Matrix out = a[0];
  for (std::size_t k = 1; k < a.size(); ++k) {
    const Matrix& next = a[k];
    Matrix kron(next.rows() * out.rows(), next.cols() * out.cols());
    for (Index i = 0; i < next.rows(); ++i) {
      for (Index j = 0; j < next.cols(); ++j) {
        kron.block(i * out.rows(), j * out.cols(), out.rows(), out.cols()) = next(i, j) * out;
      }
    }
    out = std::move(kron);
  }
  return out;
}

TensorSeries::TensorSeries(Dims dims, std::vector<DenseTensor> slices)
    : dims_(std::move(dims)), slices_(std::move(slices)) {
  if (slices_.empty()) throw InputError("series must have at least one time point");
  masks_.reserve(slices_.size());
  for (const auto& s : slices_) {
    if (s.dims() != dims_) throw InputError("all slices must share the series dimensions");
    masks_.emplace_back(dims_, std::uint8_t{1});
  }
}

TensorSeries::TensorSeries(Dims dims, std::vector<DenseTensor> slices,
                           std::vector<ObservationMask> masks)
    : dims_(std::move(dims)), slices_(std::move(slices)), masks_(std::move(masks)) {
  if (slices_.empty()) throw InputError("series must have at least one time point");
  if (masks_.size() != slices_.size()) throw InputError("need one mask per slice");
  for (std::size_t t = 0; t < slices_.size(); ++t) {
    if (slices_[t].dims() != dims_ || masks_[t].dims() != dims_) {
      throw InputError("all slices and masks must share the series dimensions");
    }
    for (Index j = 0; j < slices_[t].size(); ++j) {
      if (masks_[t][j] > 1) throw InputError("mask entries must be 0 or 1");
      if (masks_[t][j] == 0) slices_[t][j] = kMissing;
    }
  }
}

bool TensorSeries::fully_observed() const {
  return std::all_of(masks_.begin(), masks_.end(), [](const ObservationMask& m) {
    return std::all_of(m.values().begin(), m.values().end(), [](auto v) { return v != 0; });
  });
}

Index TensorSeries::observed_count() const {
  Index n = 0;
  for (const auto& m : masks_) {
    for (auto v : m.values()) n += v;
  }
  return n;
}

DenseTensor TensorSeries::zero_filled(Index t) const {
  DenseTensor out = slice(t);
  const auto& m = mask(t);
  for (Index j = 0; j < out.size(); ++j) {
    if (m[j] == 0) out[j] = 0.0;
  }
  return out;
}

DenseTensor observed_means(const TensorSeries& series) {
  DenseTensor sum(series.dims(), 0.0);
  std::vector<Index> count(static_cast<std::size_t>(sum.size()), 0);
  for (Index t = 0; t < series.length(); ++t) {
    for (Index j = 0; j < sum.size(); ++j) {
      if (series.observed(t, j)) {
        sum[j] += series.slice(t)[j];
        ++count[static_cast<std::size_t>(j)];
      }
    }
  }
  for (Index j = 0; j < sum.size(); ++j) {
    const auto c = count[static_cast<std::size_t>(j)];
    sum[j] = c > 0 ? sum[j] / static_cast<double>(c) : 0.0;
  }
  return sum;
}

TensorSeries center(const TensorSeries& series, const DenseTensor& means) {
  if (means.dims() != series.dims()) throw InputError("center: mean tensor has wrong shape");
  std::vector<DenseTensor> slices = series.slices();
  for (Index t = 0; t < series.length(); ++t) {
    auto& s = slices[static_cast<std::size_t>(t)];
    for (Index j = 0; j < s.size(); ++j) {
      if (series.observed(t, j)) s[j] -= means[j];
    }
  }
  return TensorSeries(series.dims(), std::move(slices), series.masks());
}

}  // namespace tfimpute
