#include "tfimpute/covariance.hpp"

#include <limits>
#include <string>

namespace tfimpute {

namespace {

void check_mode(const TensorSeries& series, std::size_t k) {
  if (k >= series.order()) throw InputError("mode index out of range");
}

// Stripes of the mode-k unfoldings grouped by fibre: columns [h*T, (h+1)*T)
// hold fibre h at every time point.
struct FibreStripes {
  Matrix values;  // zero at unobserved positions
  Matrix mask;
};

FibreStripes gather_stripes(const TensorSeries& series, std::size_t k) {
  const Index T = series.length();
  const Index dk = series.dims()[k];
  const Index dminus = num_elements_except(series.dims(), k);
  FibreStripes s{Matrix(dk, dminus * T), Matrix(dk, dminus * T)};
  for (Index t = 0; t < T; ++t) {
    const Matrix y = unfold(series.zero_filled(t), k);
    DenseTensor m(series.dims());
    for (Index j = 0; j < m.size(); ++j) m[j] = series.mask(t)[j];
    const Matrix mk = unfold(m, k);
    for (Index h = 0; h < dminus; ++h) {
      s.values.col(h * T + t) = y.col(h);
      s.mask.col(h * T + t) = mk.col(h);
    }
  }
  return s;
}

}  // namespace

Index psi_count(const TensorSeries& series, std::size_t k, Index i, Index j, Index h) {
  check_mode(series, k);
  const Index dk = series.dims()[k];
  const Index dminus = num_elements_except(series.dims(), k);
  if (i < 0 || j < 0 || i >= dk || j >= dk || h < 0 || h >= dminus) {
    throw InputError("psi_count: index out of range");
  }
  // Linear index of unfolding entry (row, h): split h into the parts below and above mode k.
  Index inner = 1;
  for (std::size_t m = 0; m < k; ++m) inner *= series.dims()[m];
  const Index a = h % inner;
  const Index b = h / inner;
  const Index li = a + i * inner + b * inner * dk;
  const Index lj = a + j * inner + b * inner * dk;
  Index count = 0;
  for (Index t = 0; t < series.length(); ++t) {
    if (series.observed(t, li) && series.observed(t, lj)) ++count;
  }
  return count;
}

ModeCovariance covariance_complete(const TensorSeries& series, std::size_t k) {
  check_mode(series, k);
  if (!series.fully_observed()) {
    throw InputError("covariance_complete requires a fully observed series");
  }
  const Index dk = series.dims()[k];
  Matrix s = Matrix::Zero(dk, dk);
  for (Index t = 0; t < series.length(); ++t) {
    const Matrix y = unfold(series.slice(t), k);
    s.selfadjointView<Eigen::Lower>().rankUpdate(y);
  }
  s = s.selfadjointView<Eigen::Lower>();
  s /= static_cast<double>(series.length());
  return ModeCovariance{k, std::move(s), series.length(), 0};
}

ModeCovariance covariance_missing(const TensorSeries& series, std::size_t k) {
  check_mode(series, k);
  const Index T = series.length();
  const Index dk = series.dims()[k];
  const Index dminus = num_elements_except(series.dims(), k);
  const FibreStripes stripes = gather_stripes(series, k);

  ModeCovariance out;
  out.mode = k;
  out.s_hat = Matrix::Zero(dk, dk);
  out.min_overlap = std::numeric_limits<Index>::max();
  std::vector<bool> row_seen(static_cast<std::size_t>(dk), false);

  Matrix numer(dk, dk);
  Matrix overlap(dk, dk);
  for (Index h = 0; h < dminus; ++h) {
    const auto y = stripes.values.middleCols(h * T, T);
    const auto m = stripes.mask.middleCols(h * T, T);
    numer.setZero();
    overlap.setZero();
    numer.selfadjointView<Eigen::Lower>().rankUpdate(y);
    overlap.selfadjointView<Eigen::Lower>().rankUpdate(m);
    for (Index j = 0; j < dk; ++j) {
      for (Index i = j; i < dk; ++i) {
        // Counts are small integers, exact in double.
        const auto n = static_cast<Index>(overlap(i, j));
        if (n == 0) {
          out.dropped_terms += (i == j) ? 1 : 2;
          continue;
        }
        if (i == j) row_seen[static_cast<std::size_t>(i)] = true;
        out.min_overlap = std::min(out.min_overlap, n);
        out.s_hat(i, j) += numer(i, j) / static_cast<double>(n);
      }
    }
  }
  for (Index i = 0; i < dk; ++i) {
    if (!row_seen[static_cast<std::size_t>(i)]) {
      throw InputError("mode " + std::to_string(k + 1) + " row " + std::to_string(i + 1) +
                       " is never observed; its loading row is unidentifiable");
    }
  }
  // Lower triangle holds the result; mirror it so s_hat == s_hat' exactly.
  out.s_hat = out.s_hat.selfadjointView<Eigen::Lower>();
  return out;
}

ModeCovariance covariance_missing_centered(const TensorSeries& series, std::size_t k) {
  return covariance_missing(center(series, observed_means(series)), k);
}

}  // namespace tfimpute
