#include "tfimpute/simulate.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace tfimpute {

namespace {

constexpr double kStationarityMargin = 1e-8;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return make_stream(seed, stream)();
}

Matrix companion(const std::vector<double>& coeffs) {
  const auto p = static_cast<Index>(coeffs.size());
  Matrix a = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) a(0, i) = coeffs[static_cast<std::size_t>(i)];
  for (Index i = 1; i < p; ++i) a(i, i - 1) = 1.0;
  return a;
}

void check_stationary(const std::vector<double>& coeffs) {
  if (ar_spectral_radius(coeffs) >= 1.0 - kStationarityMargin) {
    throw InputError("AR coefficients are not stationary (companion spectral radius >= 1)");
  }
}

Dims noise_ranks_of(const SimConfig& config) {
  if (!config.noise_ranks.empty()) return config.noise_ranks;
  return Dims(config.dims.size(), 2);
}

}  // namespace

MissingPattern parse_missing_pattern(const std::string& id) {
  if (id == "none") return MissingPattern::none;
  if (id == "M-i") return MissingPattern::random_005;
  if (id == "M-ii") return MissingPattern::random_030;
  if (id == "M-iii") return MissingPattern::block;
  if (id == "M-iv") return MissingPattern::conditional;
  throw InputError("unknown missing pattern '" + id + "'");
}

std::string to_string(MissingPattern pattern) {
  switch (pattern) {
    case MissingPattern::none: return "none";
    case MissingPattern::random_005: return "M-i";
    case MissingPattern::random_030: return "M-ii";
    case MissingPattern::block: return "M-iii";
    case MissingPattern::conditional: return "M-iv";
  }
  return "none";
}

void SimConfig::validate() const {
  const std::size_t K = dims.size();
  if (K == 0) throw InputError("simulation needs at least one mode");
  for (Index d : dims) {
    if (d < 1) throw InputError("dimensions must be positive");
  }
  if (T < 1) throw InputError("T must be positive");
  if (ranks.size() != K) throw InputError("need one rank per mode");
  for (std::size_t k = 0; k < K; ++k) {
    if (ranks[k] < 1 || ranks[k] > dims[k]) throw InputError("rank must lie in [1, d_k]");
  }
  if (!zetas.empty()) {
    if (zetas.size() != K) throw InputError("need one zeta list per mode");
    for (std::size_t k = 0; k < K; ++k) {
      if (static_cast<Index>(zetas[k].size()) != ranks[k]) {
        throw InputError("need one zeta per factor");
      }
      for (double z : zetas[k]) {
        if (!(z >= 0.0 && z <= 0.5)) throw InputError("zeta must lie in [0, 0.5]");
      }
    }
  }
  check_stationary(ar_factor);
  check_stationary(ar_noise_common);
  check_stationary(ar_noise_idio);
  const Dims nr = noise_ranks_of(*this);
  if (nr.size() != K) throw InputError("need one noise rank per mode");
  for (Index r : nr) {
    if (r < 1) throw InputError("noise ranks must be positive");
  }
  if (!(noise_sparsity >= 0.0 && noise_sparsity <= 1.0)) {
    throw InputError("noise_sparsity must lie in [0, 1]");
  }
  if (!(idio_scale >= 0.0)) throw InputError("idio_scale must be non-negative");
  for (const auto& [k, row] : zero_rows) {
    if (k >= K || row < 0 || row >= dims[k]) throw InputError("zero_rows entry out of range");
  }
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

double ar_spectral_radius(const std::vector<double>& coeffs) {
  if (coeffs.empty()) return 0.0;
  Eigen::EigenSolver<Matrix> solver(companion(coeffs), false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double ar_stationary_variance(const std::vector<double>& coeffs) {
  check_stationary(coeffs);
  const auto p = static_cast<Index>(coeffs.size());
  if (p == 0) return 1.0;
  // vec(S) = (I - A ⊗ A)^{-1} vec(e_1 e_1').
  const Matrix a = companion(coeffs);
  const Matrix kron = kronecker_chain(std::vector<Matrix>{a, a});
  const Matrix system = Matrix::Identity(p * p, p * p) - kron;
  Vector rhs = Vector::Zero(p * p);
  rhs(0) = 1.0;
  const Vector s = system.partialPivLu().solve(rhs);
  return s(0);
}

Matrix gen_ar_series(Index count, Index T, const std::vector<double>& coeffs,
                     Innovation innovation, std::uint64_t seed) {
  if (count < 0 || T < 1) throw InputError("gen_ar_series: bad shape");
  const double sd = std::sqrt(ar_stationary_variance(coeffs));
  const auto p = static_cast<Index>(coeffs.size());
  const Index burn = 50 * p;
  auto rng = make_stream(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::student_t_distribution<double> student(3.0);
  const double t_scale = 1.0 / std::sqrt(3.0);
  auto draw = [&] {
    return innovation == Innovation::gaussian ? normal(rng) : t_scale * student(rng);
  };

  Matrix out(count, T);
  std::vector<double> path(static_cast<std::size_t>(burn + T + p), 0.0);
  for (Index s = 0; s < count; ++s) {
    std::fill(path.begin(), path.end(), 0.0);
    for (Index n = p; n < burn + T + p; ++n) {
      double x = draw();
      for (Index i = 0; i < p; ++i) {
        x += coeffs[static_cast<std::size_t>(i)] * path[static_cast<std::size_t>(n - 1 - i)];
      }
      path[static_cast<std::size_t>(n)] = x;
    }
    for (Index t = 0; t < T; ++t) out(s, t) = path[static_cast<std::size_t>(p + burn + t)] / sd;
  }
  return out;
}

Matrix gen_loadings(Index d, const std::vector<double>& zetas, std::uint64_t seed) {
  const auto r = static_cast<Index>(zetas.size());
  if (d < 1 || r < 1) throw InputError("gen_loadings: bad shape");
  auto rng = make_stream(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(d, r);
  for (Index j = 0; j < r; ++j) {
    const double scale = std::pow(static_cast<double>(d), -zetas[static_cast<std::size_t>(j)]);
    for (Index i = 0; i < d; ++i) a(i, j) = normal(rng) * scale;
  }
  return a;
}

std::vector<DenseTensor> gen_noise(const Dims& dims, Index T, const SimConfig& config,
                                   std::uint64_t seed) {
  const std::size_t K = dims.size();
  const Dims nr = noise_ranks_of(config);
  if (nr.size() != K) throw InputError("need one noise rank per mode");

  std::vector<Matrix> ae;
  for (std::size_t k = 0; k < K; ++k) {
    auto rng = make_stream(seed, 1 + k);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution zero(config.noise_sparsity);
    Matrix a(dims[k], nr[k]);
    for (Index j = 0; j < a.cols(); ++j) {
      for (Index i = 0; i < a.rows(); ++i) {
        const double v = normal(rng);
        a(i, j) = zero(rng) ? 0.0 : v;
      }
    }
    ae.push_back(std::move(a));
  }

  const Index d = num_elements(dims);
  Vector sd(d);
  {
    auto rng = make_stream(seed, 100);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index j = 0; j < d; ++j) sd(j) = std::abs(normal(rng)) * config.idio_scale;
  }
  const Matrix fe = gen_ar_series(num_elements(nr), T, config.ar_noise_common, config.innovation,
                                  derive_seed(seed, 101));
  const Matrix eps = gen_ar_series(d, T, config.ar_noise_idio, config.innovation,
                                   derive_seed(seed, 102));

  std::vector<DenseTensor> noise;
  noise.reserve(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) {
    const Vector col = fe.col(t);
    const DenseTensor core(nr, std::vector<double>(col.data(), col.data() + col.size()));
    DenseTensor e = multi_mode_product(core, ae);
    for (Index j = 0; j < d; ++j) e[j] += sd(j) * eps(j, t);
    noise.push_back(std::move(e));
  }
  return noise;
}

std::vector<ObservationMask> apply_missing(const Dims& dims, Index T, const MissingSpec& spec,
                                           const Matrix* loading_1, std::uint64_t seed) {
  std::vector<ObservationMask> masks(static_cast<std::size_t>(T), ObservationMask(dims, 1));
  const Index d = num_elements(dims);
  auto rng = make_stream(seed, 0);
  switch (spec.pattern) {
    case MissingPattern::none:
      break;
    case MissingPattern::random_005:
    case MissingPattern::random_030: {
      std::bernoulli_distribution miss(spec.pattern == MissingPattern::random_005 ? 0.05 : 0.3);
      for (auto& m : masks) {
        for (Index j = 0; j < d; ++j) m[j] = miss(rng) ? 0 : 1;
      }
      break;
    }
    case MissingPattern::block: {
      // 1-based t >= ceil(T/2) and i_k <= floor(d_k/2) for every mode.
      const Index t_first = (T + 1) / 2 - 1;
      for (Index t = std::max<Index>(t_first, 0); t < T; ++t) {
        auto& m = masks[static_cast<std::size_t>(t)];
        for (Index j = 0; j < d; ++j) {
          const auto idx = multi_index(dims, j);
          bool inside = true;
          for (std::size_t k = 0; k < dims.size(); ++k) inside = inside && idx[k] < dims[k] / 2;
          if (inside) m[j] = 0;
        }
      }
      break;
    }
    case MissingPattern::conditional: {
      if (loading_1 == nullptr || loading_1->rows() != dims[0] || loading_1->cols() < 1) {
        throw InputError("pattern M-iv needs the mode-1 loading matrix");
      }
      std::bernoulli_distribution low(0.2);
      std::bernoulli_distribution high(0.5);
      const Index d1 = dims[0];
      auto draw = [&](Index row) { return (*loading_1)(row, 0) >= 0 ? low(rng) : high(rng); };
      std::vector<char> gone(static_cast<std::size_t>(d1), 0);
      if (spec.per_series) {
        for (Index row = 0; row < d1; ++row) gone[static_cast<std::size_t>(row)] = draw(row);
      }
      for (auto& m : masks) {
        if (!spec.per_series) {
          for (Index row = 0; row < d1; ++row) gone[static_cast<std::size_t>(row)] = draw(row);
        }
        for (Index j = 0; j < d; ++j) {
          if (gone[static_cast<std::size_t>(j % d1)]) m[j] = 0;
        }
      }
      break;
    }
  }
  return masks;
}

GroundTruth gen_dataset(const SimConfig& config) {
  config.validate();
  const std::size_t K = config.dims.size();
  const Index T = config.T;

  GroundTruth truth;
  for (std::size_t k = 0; k < K; ++k) {
    const std::vector<double> z =
        config.zetas.empty() ? std::vector<double>(static_cast<std::size_t>(config.ranks[k]), 0.0)
                             : config.zetas[k];
    truth.loadings.push_back(gen_loadings(config.dims[k], z, derive_seed(config.seed, 10 + k)));
  }
  for (const auto& [k, row] : config.zero_rows) truth.loadings[k].row(row).setZero();

  const Matrix f = gen_ar_series(num_elements(config.ranks), T, config.ar_factor,
                                 config.innovation, derive_seed(config.seed, 1));
  truth.noise = gen_noise(config.dims, T, config, derive_seed(config.seed, 2));
  auto masks = apply_missing(config.dims, T, config.missing, &truth.loadings[0],
                             derive_seed(config.seed, 3));

  for (Index t = 0; t < T; ++t) {
    const Vector col = f.col(t);
    DenseTensor ft(config.ranks, std::vector<double>(col.data(), col.data() + col.size()));
    DenseTensor c = multi_mode_product(ft, truth.loadings);
    DenseTensor y(config.dims);
    const auto& e = truth.noise[static_cast<std::size_t>(t)];
    for (Index j = 0; j < y.size(); ++j) y[j] = c[j] + e[j];
    truth.factors.push_back(std::move(ft));
    truth.common.push_back(std::move(c));
    truth.full.push_back(std::move(y));
  }
  truth.data = TensorSeries(config.dims, truth.full, std::move(masks));
  return truth;
}

}  // namespace tfimpute
