#include "tfimpute/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tfimpute {

namespace {

Matrix projector(const Matrix& q) {
  Eigen::ColPivHouseholderQR<Matrix> qr(q);
  qr.setThreshold(1e-12);
  if (qr.rank() < q.cols()) throw InputError("col_space_distance: rank-deficient input");
  const Matrix basis = qr.householderQ() * Matrix::Identity(q.rows(), q.cols());
  return basis * basis.transpose();
}

}  // namespace

double col_space_distance(const Matrix& q, const Matrix& q_hat) {
  if (q.rows() != q_hat.rows()) throw InputError("col_space_distance: row counts differ");
  if (q.cols() < 1 || q_hat.cols() < 1) throw InputError("col_space_distance: empty input");
  const Matrix diff = projector(q) - projector(q_hat);
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(diff, Eigen::EigenvaluesOnly).eigenvalues();
  return std::min(1.0, ev.cwiseAbs().maxCoeff());
}

EntrySelection select_entries(std::span<const ObservationMask> masks, EntryRole role) {
  EntrySelection sel;
  sel.role = role;
  for (std::size_t t = 0; t < masks.size(); ++t) {
    const auto& m = masks[t];
    for (Index j = 0; j < m.size(); ++j) {
      const bool obs = m[j] != 0;
      if (role == EntryRole::all || (role == EntryRole::observed) == obs) {
        sel.entries.emplace_back(static_cast<Index>(t), j);
      }
    }
  }
  return sel;
}

double relative_mse(std::span<const DenseTensor> fitted, std::span<const DenseTensor> truth,
                    const EntrySelection& selection) {
  if (fitted.size() != truth.size()) throw InputError("relative_mse: series lengths differ");
  if (selection.entries.empty()) throw InputError("relative_mse: empty selection");
  double num = 0.0;
  double den = 0.0;
  for (const auto& [t, j] : selection.entries) {
    const double c = truth[static_cast<std::size_t>(t)][j];
    const double e = fitted[static_cast<std::size_t>(t)][j] - c;
    num += e * e;
    den += c * c;
  }
  if (den == 0.0) throw InputError("relative_mse: truth is zero on the selection");
  return num / den;
}

double relative_mse(std::span<const double> fitted, std::span<const double> truth) {
  if (fitted.size() != truth.size() || truth.empty()) {
    throw InputError("relative_mse: inputs must be nonempty and of equal length");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = fitted[i] - truth[i];
    num += e * e;
    den += truth[i] * truth[i];
  }
  if (den == 0.0) throw InputError("relative_mse: truth is zero");
  return num / den;
}

double q_rse(std::span<const double> truth, std::span<const double> fitted, Index q) {
  const auto n = static_cast<Index>(truth.size());
  if (static_cast<Index>(fitted.size()) != n) throw InputError("q_rse: lengths differ");
  if (q < 1 || q > n) throw InputError("q_rse: q must lie in [1, N]");

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return truth[a] < truth[b]; });
  std::vector<double> y(order.size());
  std::vector<double> yhat(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    y[i] = truth[order[i]];
    yhat[i] = fitted[order[i]];
  }

  // 0-based cut indices.
  std::vector<Index> cut(static_cast<std::size_t>(q + 1));
  for (Index j = 0; j <= q; ++j) {
    const double p = static_cast<double>(j) / static_cast<double>(q);
    Index rank = static_cast<Index>(std::ceil(p * static_cast<double>(n) - 1e-9));
    rank = std::clamp<Index>(rank, 1, n);
    const double value = y[static_cast<std::size_t>(rank - 1)];
    const auto first = std::lower_bound(y.begin(), y.end(), value);
    cut[static_cast<std::size_t>(j)] = static_cast<Index>(first - y.begin());
  }
  // The last bin always closes at the largest entry, even when it is tied.
  cut[static_cast<std::size_t>(q)] = n - 1;

  double num = 0.0;
  double den = 0.0;
  for (Index b = 1; b <= q; ++b) {
    const Index lo = (b == 1) ? cut[0] : cut[static_cast<std::size_t>(b - 1)] + 1;
    const Index hi = cut[static_cast<std::size_t>(b)];
    double s = 0.0;
    double shat = 0.0;
    for (Index i = lo; i <= hi; ++i) {
      s += y[static_cast<std::size_t>(i)];
      shat += yhat[static_cast<std::size_t>(i)];
    }
    num += (s - shat) * (s - shat);
    den += s * s;
  }
  if (den == 0.0) throw InputError("q_rse: all bin sums of truth are zero");
  return num / den;
}

}  // namespace tfimpute
