#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "tfimpute/io.hpp"

namespace tfimpute {

// Overrides applied on top of a manifest by command-line flags.
struct ManifestOverrides {
  std::optional<Dims> ranks;
  bool auto_ranks = false;
  std::optional<double> c_xi;
  std::optional<int> reimpute;
  std::optional<std::string> beta;  // "auto" or an integer
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<bool> center;
  std::optional<Index> rank_extra;
};

RunManifest load_manifest(const std::optional<std::string>& path, const ManifestOverrides& o);

// Each command writes its files under out_dir (manifest paths are relative to
// it unless absolute) and returns the main JSON document it wrote.
nlohmann::json cmd_impute(const std::string& data_csv, const RunManifest& manifest,
                          const std::string& out_dir);
nlohmann::json cmd_rank(const std::string& data_csv, const RunManifest& manifest,
                        const std::string& out_dir, bool refine);
nlohmann::json cmd_test(const std::string& data_csv, const RunManifest& manifest,
                        const std::string& out_dir, Index mode, Index row);
nlohmann::json cmd_simulate(const std::string& config_json, const std::string& out_dir);
nlohmann::json cmd_bench(const std::string& suite_json, const std::string& out_dir,
                         std::optional<unsigned> threads);

}  // namespace tfimpute
