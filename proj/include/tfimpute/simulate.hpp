#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tfimpute/tensor.hpp"

namespace tfimpute {

enum class Innovation { gaussian, student_t3 };

enum class MissingPattern {
  none,
  random_005,   // M-i
  random_030,   // M-ii
  block,        // M-iii
  conditional,  // M-iv
};

// "M-i" ... "M-iv", "none".
MissingPattern parse_missing_pattern(const std::string& id);
std::string to_string(MissingPattern pattern);

struct MissingSpec {
  MissingPattern pattern = MissingPattern::none;
  // M-iv: draw slice missingness once per mode-1 index instead of per (t, index).
  bool per_series = false;
};

struct SimConfig {
  Dims dims;
  Index T = 0;
  Dims ranks;
  std::vector<std::vector<double>> zetas;  // zetas[k][j], each in [0, 0.5]
  std::vector<double> ar_factor{0.7, 0.3, -0.4, 0.2, -0.1};
  std::vector<double> ar_noise_common{-0.7, -0.3, -0.4, 0.2, 0.1};
  std::vector<double> ar_noise_idio{0.8, 0.4, -0.4, 0.2, -0.1};
  Innovation innovation = Innovation::gaussian;
  Dims noise_ranks;               // empty means 2 for every mode
  double noise_sparsity = 0.95;   // probability an A_{e,k} entry is exactly 0
  double idio_scale = 1.0;        // multiplies the |N(0,1)| idiosyncratic sds
  MissingSpec missing;
  // Loading rows forced to zero after generation, as (mode, row) 0-based pairs.
  std::vector<std::pair<std::size_t, Index>> zero_rows;
  std::uint64_t seed = 0;

  // Throws InputError on inconsistent fields.
  void validate() const;
};

struct GroundTruth {
  TensorSeries data;                // masked
  std::vector<DenseTensor> full;    // unmasked data
  std::vector<DenseTensor> common;  // C_t
  std::vector<DenseTensor> noise;   // E_t
  std::vector<Matrix> loadings;     // A_k
  std::vector<DenseTensor> factors; // F_t
};

/// Independent generator for stream `stream` of a seed.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

/// Largest companion-matrix eigenvalue modulus of x_t = sum_i a_i x_{t-i} + e_t.
double ar_spectral_radius(const std::vector<double>& coeffs);

/// Stationary variance of that process with unit-variance innovations, from
/// the discrete Lyapunov equation of its companion form.
double ar_stationary_variance(const std::vector<double>& coeffs);

/**
 * count x T matrix of independent AR paths driven by unit-variance
 * innovations and divided by the exact stationary sd; 50p burn-in steps are
 * discarded.  Rejects coefficient sets with spectral radius >= 1 - 1e-8.
 */
Matrix gen_ar_series(Index count, Index T, const std::vector<double>& coeffs,
                     Innovation innovation, std::uint64_t seed);

/// d x r matrix with i.i.d. N(0,1) entries, column j scaled by d^{-zetas[j]}.
Matrix gen_loadings(Index d, const std::vector<double>& zetas, std::uint64_t seed);

/// E_t = F_{e,t} ×_1 A_{e,1} ... ×_K A_{e,K} + Sigma_eps ∘ eps_t.
std::vector<DenseTensor> gen_noise(const Dims& dims, Index T, const SimConfig& config,
                                   std::uint64_t seed);

/// Observation masks for a pattern.  loading_1 (A_1) is read only for M-iv.
std::vector<ObservationMask> apply_missing(const Dims& dims, Index T, const MissingSpec& spec,
                                           const Matrix* loading_1, std::uint64_t seed);

GroundTruth gen_dataset(const SimConfig& config);

}  // namespace tfimpute
