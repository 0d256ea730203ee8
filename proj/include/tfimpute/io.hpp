#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"
#include "tfimpute/simulate.hpp"
#include "tfimpute/tensor.hpp"

namespace tfimpute {

/// Shortest decimal with 17 significant digits; parses back to the same double.
std::string format_double(double v);

/**
 * Reads long-format CSV with header "t,i1,...,iK,value" (1-based indices).
 * Empty value fields and absent rows are missing.  dims and T are inferred
 * from the largest indices unless given, in which case rows must fit them.
 * Errors carry the offending line number.
 */
TensorSeries read_long_csv(std::istream& in, std::optional<Dims> dims = std::nullopt,
                           std::optional<Index> T = std::nullopt);
TensorSeries read_long_csv_file(const std::string& path, std::optional<Dims> dims = std::nullopt,
                                std::optional<Index> T = std::nullopt);

/// Every cell in t-major, first-index-fastest order; missing cells have an empty value.
void write_long_csv(std::ostream& out, const TensorSeries& series);

/// Completed data with an extra 0/1 "imputed" column taken from original's mask.
void write_completed_csv(std::ostream& out, const TensorSeries& completed,
                         const TensorSeries& original);

struct RunManifest {
  std::optional<Dims> dims;
  std::optional<Index> T;
  std::optional<Dims> ranks;  // nullopt = auto
  double c_xi = 0.2;
  bool center = true;
  int reimpute = 1;
  std::optional<Index> beta;  // nullopt = auto
  Index rank_extra = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string completed_path = "completed.csv";
  std::string model_path = "model.json";
  std::string report_path = "report.json";
  std::string ranks_path = "ranks.json";
  std::string inference_path = "inference.json";
};

RunManifest manifest_from_json(const nlohmann::json& j);
nlohmann::json manifest_to_json(const RunManifest& m);

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json sim_config_to_json(const SimConfig& c);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace tfimpute
