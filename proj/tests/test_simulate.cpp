#include <gtest/gtest.h>

#include "helpers.hpp"
#include "tfimpute/simulate.hpp"

using namespace tfimpute;
using namespace testing_util;

namespace {

double sample_variance(const Eigen::Ref<const Vector>& x) {
  const double mean = x.mean();
  return (x.array() - mean).square().sum() / static_cast<double>(x.size() - 1);
}

double lag1_autocorrelation(const Eigen::Ref<const Vector>& x) {
  const Vector c = x.array() - x.mean();
  const Index n = c.size();
  return c.head(n - 1).dot(c.tail(n - 1)) / c.squaredNorm();
}

// Brute-force AR(p) stationary variance by iterating the autocovariance
// recursion of the companion state to convergence.
double iterated_variance(const std::vector<double>& a) {
  const auto p = static_cast<Index>(a.size());
  Matrix comp = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) comp(0, i) = a[static_cast<std::size_t>(i)];
  for (Index i = 1; i < p; ++i) comp(i, i - 1) = 1.0;
  Matrix s = Matrix::Zero(p, p);
  Matrix q = Matrix::Zero(p, p);
  q(0, 0) = 1.0;
  for (int it = 0; it < 5000; ++it) s = comp * s * comp.transpose() + q;
  return s(0, 0);
}

SimConfig small_config() {
  SimConfig c;
  c.dims = {6, 5};
  c.T = 20;
  c.ranks = {2, 1};
  c.seed = 99;
  return c;
}

}  // namespace

TEST(Ar, LyapunovVarianceMatchesIteration) {
  const std::vector<std::vector<double>> sets{{0.7, 0.3, -0.4, 0.2, -0.1},
                                              {-0.7, -0.3, -0.4, 0.2, 0.1},
                                              {0.8, 0.4, -0.4, 0.2, -0.1},
                                              {0.05},
                                              {0.5, -0.3}};
  for (const auto& a : sets) {
    EXPECT_NEAR(ar_stationary_variance(a), iterated_variance(a), 1e-9 * iterated_variance(a));
  }
  EXPECT_NEAR(ar_stationary_variance({0.05}), 1.0 / (1.0 - 0.0025), 1e-14);
  EXPECT_EQ(ar_stationary_variance({}), 1.0);
}

TEST(Ar, RejectsNonStationary) {
  EXPECT_THROW(gen_ar_series(1, 10, {1.0}, Innovation::gaussian, 1), InputError);
  EXPECT_THROW(gen_ar_series(1, 10, {0.5, 0.5}, Innovation::gaussian, 1), InputError);
  EXPECT_THROW(gen_ar_series(1, 10, {1.0 - 1e-9}, Innovation::gaussian, 1), InputError);
  EXPECT_NO_THROW(gen_ar_series(1, 10, {0.99}, Innovation::gaussian, 1));
  EXPECT_NEAR(ar_spectral_radius({0.5}), 0.5, 1e-14);
}

TEST(Ar, WhiteNoiseVariance) {
  const Matrix x = gen_ar_series(4, 1000, {}, Innovation::gaussian, 3);
  for (Index i = 0; i < 4; ++i) {
    const double v = sample_variance(x.row(i).transpose());
    EXPECT_GT(v, 0.8);
    EXPECT_LT(v, 1.2);
  }
}

TEST(Ar, LagOneAutocorrelation) {
  const Matrix x = gen_ar_series(1, 5000, {0.05}, Innovation::gaussian, 4);
  EXPECT_NEAR(lag1_autocorrelation(x.row(0).transpose()), 0.05, 0.05);
}

TEST(Ar, DefaultAr5IsStandardized) {
  const Matrix x = gen_ar_series(2, 10000, {0.7, 0.3, -0.4, 0.2, -0.1}, Innovation::gaussian, 5);
  for (Index i = 0; i < 2; ++i) {
    const double v = sample_variance(x.row(i).transpose());
    EXPECT_GT(v, 0.9);
    EXPECT_LT(v, 1.1);
  }
}

TEST(Ar, StudentInnovationsHaveUnitScale) {
  // t3 / sqrt(3) has variance 1 and E|x| = 2 / pi; the sample variance
  // converges too slowly to check directly.
  const Matrix x = gen_ar_series(1, 200000, {}, Innovation::student_t3, 6);
  EXPECT_NEAR(x.cwiseAbs().mean(), 2.0 / M_PI, 0.01);
}

TEST(Ar, SeedRepeatable) {
  EXPECT_EQ(gen_ar_series(3, 50, {0.3}, Innovation::student_t3, 8),
            gen_ar_series(3, 50, {0.3}, Innovation::student_t3, 8));
  EXPECT_NE(gen_ar_series(3, 50, {0.3}, Innovation::gaussian, 8),
            gen_ar_series(3, 50, {0.3}, Innovation::gaussian, 9));
}

TEST(Loadings, StrengthScaling) {
  const Matrix a = gen_loadings(400, {0.0, 0.5}, 6);
  EXPECT_GT(a.col(0).squaredNorm(), 200.0);
  EXPECT_LT(a.col(0).squaredNorm(), 800.0);
  EXPECT_GT(a.col(1).squaredNorm(), 0.5);
  EXPECT_LT(a.col(1).squaredNorm(), 2.0);
  EXPECT_EQ(a, gen_loadings(400, {0.0, 0.5}, 6));
  const Matrix b = gen_loadings(40, {0.0}, 7);
  EXPECT_GT(b.squaredNorm(), 20.0);
  EXPECT_LT(b.squaredNorm(), 80.0);
}

TEST(Noise, SparsityOneLeavesIdiosyncraticPart) {
  SimConfig c = small_config();
  c.noise_sparsity = 1.0;
  c.T = 5000;
  c.dims = {3, 2};
  c.ar_noise_idio = {};
  const auto noise = gen_noise(c.dims, c.T, c, 12);
  // Recover Sigma_eps from the same stream used by the generator.
  auto rng = make_stream(12, 100);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index j = 0; j < 6; ++j) {
    const double sd = std::abs(normal(rng));
    Vector x(c.T);
    for (Index t = 0; t < c.T; ++t) x(t) = noise[static_cast<std::size_t>(t)][j];
    EXPECT_NEAR(sample_variance(x), sd * sd, 0.1 * sd * sd + 1e-3);
  }
  EXPECT_EQ(noise, gen_noise(c.dims, c.T, c, 12));
}

TEST(Noise, ZeroNoiseGivesCommonOnly) {
  SimConfig c = small_config();
  c.noise_sparsity = 1.0;
  c.idio_scale = 0.0;
  const GroundTruth g = gen_dataset(c);
  EXPECT_EQ(g.full, g.common);
}

TEST(Missing, PatternNames) {
  EXPECT_EQ(parse_missing_pattern("M-iii"), MissingPattern::block);
  EXPECT_EQ(to_string(MissingPattern::conditional), "M-iv");
  EXPECT_EQ(parse_missing_pattern("none"), MissingPattern::none);
  EXPECT_THROW(parse_missing_pattern("M-v"), InputError);
}

TEST(Missing, NoneIsAllObserved) {
  const auto m = apply_missing({3, 4}, 5, {}, nullptr, 1);
  for (const auto& x : m) {
    for (auto v : x.values()) EXPECT_EQ(v, 1);
  }
}

TEST(Missing, BlockPatternEnumeration) {
  const auto m = apply_missing({4, 4}, 10, {MissingPattern::block, false}, nullptr, 1);
  Index missing = 0;
  for (Index t = 0; t < 10; ++t) {
    for (Index i1 = 0; i1 < 4; ++i1) {
      for (Index i2 = 0; i2 < 4; ++i2) {
        // 1-based: t in [5, 10], i1 and i2 in [1, 2].
        const bool expect_missing = (t + 1) >= 5 && (i1 + 1) <= 2 && (i2 + 1) <= 2;
        const Index idx[] = {i1, i2};
        EXPECT_EQ(m[static_cast<std::size_t>(t)](idx) == 0, expect_missing);
        missing += m[static_cast<std::size_t>(t)](idx) == 0 ? 1 : 0;
      }
    }
  }
  EXPECT_EQ(missing, 6 * 2 * 2);
  // Odd T: half-point 5.5 rounds up to 6.
  const auto odd = apply_missing({2}, 11, {MissingPattern::block, false}, nullptr, 1);
  EXPECT_EQ(odd[4][0], 1);
  EXPECT_EQ(odd[5][0], 0);
  EXPECT_EQ(odd[5][1], 1);
}

TEST(Missing, RandomFractions) {
  for (auto [pattern, p] : {std::pair{MissingPattern::random_005, 0.05},
                            std::pair{MissingPattern::random_030, 0.3}}) {
    const auto m = apply_missing({50, 40}, 60, {pattern, false}, nullptr, 2);
    double missing = 0;
    for (const auto& x : m) {
      for (auto v : x.values()) missing += v == 0 ? 1 : 0;
    }
    EXPECT_NEAR(missing / (50.0 * 40 * 60), p, 0.01);
  }
}

TEST(Missing, ConditionalSlices) {
  Matrix a1(40, 1);
  for (Index i = 0; i < 40; ++i) a1(i, 0) = i % 2 == 0 ? 1.0 : -1.0;
  const Dims dims{40, 3};
  const auto m = apply_missing(dims, 2000, {MissingPattern::conditional, false}, &a1, 3);
  double pos = 0;
  double neg = 0;
  for (const auto& x : m) {
    for (Index i = 0; i < 40; ++i) {
      // Whole mode-1 slices go missing together.
      const Index i0[] = {i, 0};
      for (Index j = 1; j < 3; ++j) {
        const Index ij[] = {i, j};
        EXPECT_EQ(x(ij), x(i0));
      }
      (i % 2 == 0 ? pos : neg) += x(i0) == 0 ? 1 : 0;
    }
  }
  EXPECT_NEAR(pos / (20.0 * 2000), 0.2, 0.01);
  EXPECT_NEAR(neg / (20.0 * 2000), 0.5, 0.01);
  EXPECT_THROW(apply_missing(dims, 5, {MissingPattern::conditional, false}, nullptr, 3), InputError);

  const auto per = apply_missing(dims, 50, {MissingPattern::conditional, true}, &a1, 3);
  for (const auto& x : per) EXPECT_EQ(x, per[0]);
}

TEST(Dataset, ShapesForSettingIa) {
  SimConfig c;
  c.dims = {40, 40};
  c.T = 100;
  c.ranks = {1, 2};
  c.missing = {MissingPattern::random_005, false};
  c.seed = 1;
  const GroundTruth g = gen_dataset(c);
  EXPECT_EQ(g.data.length(), 100);
  EXPECT_EQ(g.data.dims(), (Dims{40, 40}));
  EXPECT_EQ(g.loadings[0].rows(), 40);
  EXPECT_EQ(g.loadings[0].cols(), 1);
  EXPECT_EQ(g.loadings[1].cols(), 2);
  EXPECT_EQ(g.factors[0].dims(), (Dims{1, 2}));
  Eigen::FullPivLU<Matrix> lu(unfold(g.common[0], 1));
  EXPECT_LE(lu.rank(), 2);
}

TEST(Dataset, DecompositionAndMask) {
  SimConfig c = small_config();
  c.missing = {MissingPattern::random_030, false};
  const GroundTruth g = gen_dataset(c);
  for (Index t = 0; t < c.T; ++t) {
    const auto slot = static_cast<std::size_t>(t);
    EXPECT_EQ(g.common[slot], multi_mode_product(g.factors[slot], g.loadings));
    for (Index j = 0; j < g.data.cells(); ++j) {
      EXPECT_EQ(g.full[slot][j], g.common[slot][j] + g.noise[slot][j]);
      if (g.data.observed(t, j)) EXPECT_EQ(g.data.slice(t)[j], g.full[slot][j]);
    }
  }
}

TEST(Dataset, BitwiseReproducible) {
  SimConfig c = small_config();
  c.missing = {MissingPattern::conditional, false};
  c.innovation = Innovation::student_t3;
  const GroundTruth a = gen_dataset(c);
  const GroundTruth b = gen_dataset(c);
  EXPECT_EQ(a.full, b.full);
  EXPECT_EQ(a.data.masks(), b.data.masks());
  EXPECT_EQ(a.loadings, b.loadings);
  c.seed = 100;
  EXPECT_NE(gen_dataset(c).full, a.full);
}

TEST(Dataset, ZeroRowsAndValidation) {
  SimConfig c = small_config();
  c.zero_rows = {{0, 0}};
  const GroundTruth g = gen_dataset(c);
  EXPECT_EQ(g.loadings[0].row(0).norm(), 0.0);
  c.zero_rows = {{2, 0}};
  EXPECT_THROW(gen_dataset(c), InputError);
  c = small_config();
  c.zetas = {{0.0, 0.7}, {0.0}};
  EXPECT_THROW(gen_dataset(c), InputError);
  c = small_config();
  c.ranks = {7, 1};
  EXPECT_THROW(gen_dataset(c), InputError);
}

TEST(Seeding, StreamsDiffer) {
  auto a = make_stream(1, 0);
  auto b = make_stream(1, 1);
  auto c = make_stream(1, 0);
  EXPECT_NE(a(), b());
  a = make_stream(1, 0);
  EXPECT_EQ(a(), c());
}
