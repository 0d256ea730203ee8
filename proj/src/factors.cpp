#include "tfimpute/factors.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "parallel.hpp"

namespace tfimpute {

namespace {

struct Spectrum {
  Vector values;   // descending
  Matrix vectors;  // matching columns
};

Spectrum spectrum(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigendecomposition failed");
  }
  const Index n = s.rows();
  Spectrum out{Vector(n), Matrix(n, n)};
  for (Index c = 0; c < n; ++c) {
    out.values(c) = solver.eigenvalues()(n - 1 - c);
    out.vectors.col(c) = solver.eigenvectors().col(n - 1 - c);
  }
  return out;
}

void normalize_sign(Eigen::Ref<Vector> v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  }
  if (v(best) < 0) v = -v;
}

Loadings leading(const Spectrum& sp, Index r) {
  if (r < 1 || r > sp.values.size()) {
    throw InputError("rank " + std::to_string(r) + " outside [1, " +
                     std::to_string(sp.values.size()) + "]");
  }
  Loadings out{sp.vectors.leftCols(r), sp.values.head(r)};
  for (Index c = 0; c < r; ++c) normalize_sign(out.q.col(c));
  return out;
}

RankReport rank_from_penalty(const Vector& eigenvalues, double xi, std::size_t k) {
  const Index dk = eigenvalues.size();
  if (dk < 2) throw InputError("rank estimation needs at least two eigenvalues");
  RankReport report;
  report.mode = k;
  report.eigenvalues = eigenvalues;
  report.xi = xi;
  const Index limit = dk / 2;
  double best = std::numeric_limits<double>::infinity();
  for (Index l = 1; l <= limit; ++l) {
    const double ratio = (eigenvalues(l) + xi) / (eigenvalues(l - 1) + xi);
    report.ratios.push_back(ratio);
    if (ratio < best) {
      best = ratio;
      report.selected = l;
    }
  }
  if (report.selected == 0) report.selected = 1;  // every ratio NaN
  report.boundary_hit = report.selected == limit;
  return report;
}

}  // namespace

Loadings estimate_loadings(const ModeCovariance& cov, Index r) {
  if (cov.s_hat.rows() != cov.s_hat.cols()) throw InputError("covariance must be square");
  if (r < 1 || r > cov.s_hat.rows()) {
    throw InputError("rank " + std::to_string(r) + " outside [1, " +
                     std::to_string(cov.s_hat.rows()) + "]");
  }
  return leading(spectrum(cov.s_hat), r);
}

Vector descending_eigenvalues(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigendecomposition failed");
  }
  return solver.eigenvalues().reverse();
}

double rank_penalty(Index T, const Dims& dims, std::size_t k, double c_xi) {
  if (k >= dims.size()) throw InputError("mode index out of range");
  if (T < 1) throw InputError("series length must be positive");
  const double d = static_cast<double>(num_elements(dims));
  const double dk = static_cast<double>(dims[k]);
  const double dminus = d / dk;
  return c_xi * d * (1.0 / std::sqrt(static_cast<double>(T) * dminus) + 1.0 / std::sqrt(dk));
}

RankReport estimate_rank(const Vector& eigenvalues, Index T, const Dims& dims, std::size_t k,
                         double c_xi) {
  if (c_xi <= 0) throw InputError("c_xi must be positive");
  if (k >= dims.size() || eigenvalues.size() != dims[k]) {
    throw InputError("eigenvalue count must equal d_k");
  }
  return rank_from_penalty(eigenvalues, rank_penalty(T, dims, k, c_xi), k);
}

RankReport estimate_rank_with_penalty(const Vector& eigenvalues, double xi, std::size_t k) {
  return rank_from_penalty(eigenvalues, xi, k);
}

CoreEstimate estimate_core(const TensorSeries& series, const Matrix& q_kron, Index t) {
  if (t < 0 || t >= series.length()) throw InputError("time index out of range");
  if (q_kron.rows() != series.cells()) throw InputError("loading chain has wrong row count");
  const auto& slice = series.slice(t);
  const auto& mask = series.mask(t);
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(slice.size()));
  for (Index j = 0; j < slice.size(); ++j) {
    if (mask[j]) rows.push_back(j);
  }
  if (rows.empty()) {
    throw InputError("time point " + std::to_string(t + 1) + " has no observations");
  }
  const Index n = static_cast<Index>(rows.size());
  const Index r = q_kron.cols();
  Matrix qo(n, r);
  Vector yo(n);
  for (Index c = 0; c < n; ++c) {
    qo.row(c) = q_kron.row(rows[static_cast<std::size_t>(c)]);
    yo(c) = slice[rows[static_cast<std::size_t>(c)]];
  }
  Matrix gram = Matrix::Zero(r, r);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(qo.transpose());
  gram = gram.selfadjointView<Eigen::Lower>();
  const Vector rhs = qo.transpose() * yo;

  CoreEstimate out;
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues();
  out.condition = ev(0) > 0 ? ev(r - 1) / ev(0) : std::numeric_limits<double>::infinity();
  if (out.condition <= kGramConditionLimit) {
    out.coefficients = gram.ldlt().solve(rhs);
  } else {
    Eigen::JacobiSVD<Matrix> svd(qo, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    out.coefficients = svd.solve(yo);
    out.pseudo_inverse = true;
  }
  return out;
}

CoreEstimate estimate_core(const TensorSeries& series, std::span<const Matrix> loadings, Index t) {
  if (loadings.size() != series.order()) throw InputError("need one loading matrix per mode");
  return estimate_core(series, kronecker_chain(loadings), t);
}

FactorModel::FactorModel(std::vector<Matrix> loadings, std::vector<Vector> eigenvalues,
                         std::vector<DenseTensor> cores)
    : loadings_(std::move(loadings)), eigenvalues_(std::move(eigenvalues)), cores_(std::move(cores)) {
  if (loadings_.empty() || eigenvalues_.size() != loadings_.size()) {
    throw InputError("factor model needs loadings and eigenvalues for every mode");
  }
  for (std::size_t k = 0; k < loadings_.size(); ++k) {
    if (eigenvalues_[k].size() != loadings_[k].cols()) {
      throw InputError("eigenvalue count must match loading columns");
    }
    ranks_.push_back(loadings_[k].cols());
  }
  for (const auto& c : cores_) {
    if (c.dims() != ranks_) throw InputError("core tensor dims must equal the ranks");
  }
}

Dims FactorModel::dims() const {
  Dims d;
  for (const auto& q : loadings_) d.push_back(q.rows());
  return d;
}

DenseTensor common_components(const FactorModel& model, Index t) {
  return multi_mode_product(model.core(t), model.loadings());
}

namespace {

struct ModeFit {
  Spectrum spectrum;
  ModeDiagnostics diagnostics;
};

ImputationResult fit_once(const TensorSeries& series, const ImputeOptions& options,
                          bool want_rank_reports) {
  const std::size_t K = series.order();
  const Index T = series.length();
  const bool full = series.fully_observed();
  if (options.ranks && options.ranks->size() != K) {
    throw InputError("need one rank per mode");
  }

  ImputationResult result;
  std::vector<Matrix> loadings;
  std::vector<Vector> eigenvalues;
  for (std::size_t k = 0; k < K; ++k) {
    const ModeCovariance cov = full ? covariance_complete(series, k) : covariance_missing(series, k);
    result.diagnostics.push_back({cov.min_overlap, cov.dropped_terms});
    const Spectrum sp = spectrum(cov.s_hat);
    Index r = 0;
    if (want_rank_reports || !options.ranks) {
      if (sp.values.size() >= 2) {
        result.rank_reports.push_back(
            estimate_rank(sp.values, T, series.dims(), k, options.c_xi));
      } else {
        RankReport trivial;
        trivial.mode = k;
        trivial.eigenvalues = sp.values;
        trivial.selected = 1;
        result.rank_reports.push_back(trivial);
      }
    }
    r = options.ranks ? (*options.ranks)[k] : result.rank_reports.back().selected;
    Loadings l = leading(sp, r);
    loadings.push_back(std::move(l.q));
    eigenvalues.push_back(std::move(l.eigenvalues));
  }

  Dims ranks;
  for (const auto& q : loadings) ranks.push_back(q.cols());
  const Matrix q_kron = kronecker_chain(loadings);

  std::vector<DenseTensor> cores(static_cast<std::size_t>(T));
  std::vector<char> empty(static_cast<std::size_t>(T), 0);
  std::vector<char> pinv(static_cast<std::size_t>(T), 0);
  detail::parallel_for(T, options.threads, [&](Index t) {
    const auto slot = static_cast<std::size_t>(t);
    bool any = false;
    for (auto v : series.mask(t).values()) {
      if (v) {
        any = true;
        break;
      }
    }
    if (!any) {
      cores[slot] = DenseTensor(ranks, 0.0);
      empty[slot] = 1;
      return;
    }
    CoreEstimate est = estimate_core(series, q_kron, t);
    pinv[slot] = est.pseudo_inverse ? 1 : 0;
    std::vector<double> v(est.coefficients.data(), est.coefficients.data() + est.coefficients.size());
    cores[slot] = DenseTensor(ranks, std::move(v));
  });

  std::vector<DenseTensor> completed;
  completed.reserve(static_cast<std::size_t>(T));
  result.fitted_common.reserve(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) {
    const auto slot = static_cast<std::size_t>(t);
    if (empty[slot]) result.empty_slices.push_back(t);
    if (pinv[slot]) result.pseudo_inverse_slices.push_back(t);
    const Vector f = vectorize(cores[slot]);
    const Vector c = q_kron * f;
    DenseTensor fitted(series.dims(), std::vector<double>(c.data(), c.data() + c.size()));
    DenseTensor filled = series.slice(t);
    for (Index j = 0; j < filled.size(); ++j) {
      if (!series.observed(t, j)) filled[j] = fitted[j];
    }
    result.fitted_common.push_back(std::move(fitted));
    completed.push_back(std::move(filled));
  }
  result.completed = TensorSeries(series.dims(), std::move(completed));
  result.model = FactorModel(std::move(loadings), std::move(eigenvalues), std::move(cores));
  return result;
}

double observed_sd(const TensorSeries& series) {
  double sum = 0.0;
  double sq = 0.0;
  Index n = 0;
  for (Index t = 0; t < series.length(); ++t) {
    for (Index j = 0; j < series.cells(); ++j) {
      if (series.observed(t, j)) {
        const double v = series.slice(t)[j];
        sum += v;
        sq += v * v;
        ++n;
      }
    }
  }
  if (n < 2) return 0.0;
  const double mean = sum / static_cast<double>(n);
  return std::sqrt(std::max(0.0, (sq - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1)));
}

}  // namespace

ImputationResult impute(const TensorSeries& series, const ImputeOptions& options) {
  return fit_once(series, options, true);
}

ImputationResult reimpute(const TensorSeries& series, const ImputeOptions& options, int max_passes,
                          double tol) {
  if (max_passes < 0) throw InputError("max_passes must be non-negative");
  ImputationResult result = impute(series, options);
  ImputeOptions fixed = options;
  fixed.ranks = result.model.ranks();
  const double threshold = tol * observed_sd(series);

  for (int pass = 1; pass <= max_passes; ++pass) {
    ImputationResult next = fit_once(result.completed, fixed, false);
    double change = 0.0;
    std::vector<DenseTensor> completed = result.completed.slices();
    for (Index t = 0; t < series.length(); ++t) {
      auto& slot = completed[static_cast<std::size_t>(t)];
      const auto& fitted = next.fitted_common[static_cast<std::size_t>(t)];
      for (Index j = 0; j < slot.size(); ++j) {
        if (!series.observed(t, j)) {
          change = std::max(change, std::abs(fitted[j] - slot[j]));
          slot[j] = fitted[j];
        }
      }
    }
    result.completed = TensorSeries(series.dims(), std::move(completed));
    result.model = std::move(next.model);
    result.fitted_common = std::move(next.fitted_common);
    result.pseudo_inverse_slices = std::move(next.pseudo_inverse_slices);
    result.pass_changes.push_back(change);
    result.iterations = pass;
    if (change < threshold || change == 0.0) break;
  }
  return result;
}

}  // namespace tfimpute
