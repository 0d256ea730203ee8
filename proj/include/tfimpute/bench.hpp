#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tfimpute/simulate.hpp"

namespace tfimpute {

/// What a named setting measures.
enum class SettingKind {
  imputation,  // Ia-Ig: relative MSE and loading-space distance
  rank,        // IIa-IVc: rank selection
  normality,   // Va, Vb: null-row standardized statistic
};

struct Setting {
  std::string id;
  SettingKind kind = SettingKind::imputation;
  SimConfig config;  // pattern and seed are filled per run
};

/// Ia..Ig, IIa..IId, IIIa..IIIc, IVa..IVc, Va (reduced null design) and Vb
/// (full-scale null design).  Throws InputError for unknown ids.
Setting named_setting(const std::string& id);
std::vector<std::string> setting_ids();

struct ReplicationResult {
  double rmse_observed = 0.0;  // NaN when the selection is empty
  double rmse_missing = 0.0;
  double rmse_all = 0.0;
  double rmse_all_reimputed = 0.0;  // NaN unless re-imputation was requested
  Dims rank_hat;
  bool rank_correct = false;
  std::vector<double> col_space;  // per mode, fitted at the true ranks
  double standardized = 0.0;      // normality settings: first coordinate
  double p_value = 1.0;
};

ReplicationResult run_replication(const Setting& setting, const SimConfig& config,
                                  int reimpute_passes);

struct BenchRun {
  std::string setting;
  std::string pattern = "M-i";
  Index replications = 100;
  int reimpute = 0;
};

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  Index count = 0;  // finite values used
};

Moments moments(const std::vector<double>& values);

struct RunSummary {
  BenchRun run;
  SettingKind kind = SettingKind::imputation;
  Moments rmse_observed;
  Moments rmse_missing;
  Moments rmse_all;
  Moments rmse_all_reimputed;
  double rank_correct = 0.0;
  std::vector<double> rank_mean;
  std::vector<double> col_space_mean;
  Moments standardized;
  double rejection_rate = 0.0;  // normality settings, nominal 5%
  std::vector<ReplicationResult> replications;
};

/// Seed of replication rep of (setting, pattern) under a suite seed.
std::uint64_t replication_seed(std::uint64_t suite_seed, const BenchRun& run, Index rep);

/**
 * Runs the replications of one setting x pattern, distributing them over
 * `threads` workers.  Each replication owns its seed, so results do not
 * depend on the worker count.
 */
RunSummary run_bench(const BenchRun& run, std::uint64_t suite_seed, unsigned threads = 1);

nlohmann::json summary_to_json(const RunSummary& s, bool with_replications = false);

}  // namespace tfimpute
