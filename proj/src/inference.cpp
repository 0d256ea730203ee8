#include "tfimpute/inference.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <string>

namespace tfimpute {

namespace {

// Per-time r_k vectors g_t (residual form) and g^Delta_t (missingness
// discrepancy form) for loading row j of mode k.
struct RowScores {
  Matrix resid;  // r_k x T
  Matrix delta;  // r_k x T
};

RowScores row_scores(const TensorSeries& series, const FactorModel& model, std::size_t k,
                     Index j) {
  if (k >= series.order() || model.order() != series.order()) {
    throw InputError("mode index out of range");
  }
  if (model.dims() != series.dims() || model.length() != series.length()) {
    throw InputError("model was not fitted on this series");
  }
  const Index T = series.length();
  const Index dk = series.dims()[k];
  const Index dminus = num_elements_except(series.dims(), k);
  if (j < 0 || j >= dk) throw InputError("loading row out of range");
  const Matrix& q = model.loading(k);
  const Vector& d = model.eigenvalues(k);
  const Index r = q.cols();

  std::vector<Matrix> common(static_cast<std::size_t>(T));
  std::vector<Matrix> resid(static_cast<std::size_t>(T));
  std::vector<Matrix> mask(static_cast<std::size_t>(T));
  Matrix gram = Matrix::Zero(dk, dk);
  for (Index t = 0; t < T; ++t) {
    const auto slot = static_cast<std::size_t>(t);
    const DenseTensor c = common_components(model, t);
    common[slot] = unfold(c, k);
    DenseTensor e = series.zero_filled(t);
    DenseTensor m(series.dims());
    for (Index l = 0; l < e.size(); ++l) {
      m[l] = series.mask(t)[l];
      if (series.observed(t, l)) e[l] -= c[l];
    }
    resid[slot] = unfold(e, k);
    mask[slot] = unfold(m, k);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(common[slot]);
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  gram /= static_cast<double>(T);
  // Column i is (1/T) sum_s D^{-1} Q' C_s C_{s,i.}'.
  const Matrix weights = d.cwiseInverse().asDiagonal() * (q.transpose() * gram);

  // |psi_{k,ij,h}| for fixed j.
  Matrix psi = Matrix::Zero(dk, dminus);
  for (Index t = 0; t < T; ++t) {
    const Matrix& m = mask[static_cast<std::size_t>(t)];
    for (Index h = 0; h < dminus; ++h) {
      if (m(j, h) == 0) continue;
      psi.col(h) += m.col(h);
    }
  }
  Matrix inv_psi = Matrix::Zero(dk, dminus);
  for (Index h = 0; h < dminus; ++h) {
    for (Index i = 0; i < dk; ++i) {
      if (psi(i, h) > 0) inv_psi(i, h) = 1.0 / psi(i, h);
    }
  }
  const double inv_T = 1.0 / static_cast<double>(T);

  RowScores out{Matrix::Zero(r, T), Matrix::Zero(r, T)};
  Vector a(dk);
  Vector b(dk);
  for (Index t = 0; t < T; ++t) {
    const auto slot = static_cast<std::size_t>(t);
    const Matrix& c = common[slot];
    const Matrix& e = resid[slot];
    const Matrix& m = mask[slot];
    a.setZero();
    b.setZero();
    for (Index h = 0; h < dminus; ++h) {
      const bool j_seen = m(j, h) != 0;
      const double ejh = e(j, h);
      const double cjh = c(j, h);
      for (Index i = 0; i < dk; ++i) {
        const bool both = j_seen && m(i, h) != 0;
        const double cih = c(i, h);
        if (both) a(i) += inv_psi(i, h) * ejh * cih;
        const double w = (both ? inv_psi(i, h) : 0.0) - inv_T;
        b(i) += w * (cih * cjh);
      }
    }
    out.resid.col(t) = weights * a;
    out.delta.col(t) = weights * b;
  }
  return out;
}

Matrix bartlett(const Matrix& g, Index beta) {
  const Index T = g.cols();
  if (beta < 0) throw InputError("beta must be non-negative");
  if (beta >= T) throw InputError("beta must be smaller than the series length");
  const Index r = g.rows();
  auto lag = [&](Index nu) {
    Matrix dnu = Matrix::Zero(r, r);
    for (Index t = nu; t < T; ++t) dnu.noalias() += g.col(t) * g.col(t - nu).transpose();
    return dnu;
  };
  Matrix sigma = lag(0);
  for (Index nu = 1; nu <= beta; ++nu) {
    const Matrix dnu = lag(nu);
    const double w = 1.0 - static_cast<double>(nu) / static_cast<double>(1 + beta);
    sigma += w * (dnu + dnu.transpose());
  }
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace

Index auto_beta(Index T, Index dk) {
  return static_cast<Index>(std::floor(0.2 * std::pow(static_cast<double>(T) * static_cast<double>(dk), 0.25)));
}

Matrix hac_sigma(const TensorSeries& series, const FactorModel& model, std::size_t k, Index j,
                 Index beta) {
  if (beta >= series.length()) throw InputError("beta must be smaller than the series length");
  return bartlett(row_scores(series, model, k, j).resid, beta);
}

Matrix hac_sigma_delta(const TensorSeries& series, const FactorModel& model, std::size_t k,
                       Index j, Index beta) {
  if (beta >= series.length()) throw InputError("beta must be smaller than the series length");
  return bartlett(row_scores(series, model, k, j).delta, beta);
}

double chi_square_upper(double x, double df) {
  if (x <= 0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

InferenceReport row_test(const TensorSeries& series, const FactorModel& model, std::size_t k,
                         Index j, std::optional<Index> beta) {
  const Index b = beta ? *beta : auto_beta(series.length(), series.dims().at(k));
  if (b < 0 || b >= series.length()) {
    throw InputError("beta must lie in [0, T)");
  }
  const RowScores scores = row_scores(series, model, k, j);
  InferenceReport rep;
  rep.mode = k;
  rep.row = j;
  rep.beta = b;
  rep.sigma_hac = bartlett(scores.resid, b);
  rep.sigma_hac_delta = bartlett(scores.delta, b);

  const Matrix total = rep.sigma_hac + rep.sigma_hac_delta;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(total);
  if (eig.info() != Eigen::Success) throw NumericalError("HAC eigendecomposition failed");
  const double floor = 1e-12 * std::abs(total.trace());
  if (!(total.trace() > 0) || eig.eigenvalues().minCoeff() <= floor) {
    throw NumericalError("HAC covariance for mode " + std::to_string(k + 1) + " row " +
                         std::to_string(j + 1) +
                         " is numerically singular; a longer series is needed");
  }
  const Matrix inv_sqrt = eig.eigenvectors() *
                          eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                          eig.eigenvectors().transpose();
  const Vector scaled_row = model.eigenvalues(k).asDiagonal() * model.loading(k).row(j).transpose();
  rep.standardized = inv_sqrt * scaled_row;
  rep.statistic = rep.standardized.squaredNorm();
  rep.p_value = chi_square_upper(rep.statistic, static_cast<double>(model.ranks()[k]));
  return rep;
}

}  // namespace tfimpute
