#include "tfimpute/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

namespace tfimpute {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw InputError("line " + std::to_string(line) + ": " + what);
}

Index parse_index(std::string_view field, std::size_t line) {
  field = trim(field);
  Index v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    fail(line, "expected an integer, got '" + std::string(field) + "'");
  }
  if (v < 1) fail(line, "indices are 1-based and must be positive");
  return v;
}

std::optional<double> parse_value(std::string_view field, std::size_t line) {
  field = trim(field);
  if (field.empty() || field == "NA" || field == "NaN" || field == "nan") return std::nullopt;
  if (field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
    fail(line, "expected a finite number, got '" + std::string(field) + "'");
  }
  return v;
}

void write_index_fields(std::ostream& out, Index t, const std::vector<Index>& idx) {
  out << (t + 1);
  for (Index i : idx) out << ',' << (i + 1);
}

}  // namespace

TensorSeries read_long_csv(std::istream& in, std::optional<Dims> dims, std::optional<Index> T) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw InputError("empty CSV file");
  auto header = split(line);
  // Completed files carry an extra "imputed" flag column, which is ignored.
  const bool flagged = header.size() >= 4 && trim(header.back()) == "imputed";
  if (flagged) header.pop_back();
  if (header.size() < 3 || trim(header.front()) != "t" || trim(header.back()) != "value") {
    fail(line_no, "header must be t,i1,...,iK,value");
  }
  const std::size_t K = header.size() - 2;
  for (std::size_t k = 0; k < K; ++k) {
    if (trim(header[k + 1]) != "i" + std::to_string(k + 1)) {
      fail(line_no, "header must be t,i1,...,iK,value");
    }
  }
  if (dims && dims->size() != K) {
    fail(line_no, "header has " + std::to_string(K) + " index columns but dims has " +
                      std::to_string(dims->size()));
  }

  struct Row {
    Index t;
    std::vector<Index> idx;
    std::optional<double> value;
    std::size_t line;
  };
  std::vector<Row> rows;
  Dims seen(K, 0);
  Index t_max = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    const std::size_t expected = K + (flagged ? 3 : 2);
    if (fields.size() != expected) {
      fail(line_no, "expected " + std::to_string(expected) + " fields, got " +
                        std::to_string(fields.size()));
    }
    Row row{parse_index(fields[0], line_no), {}, parse_value(fields[K + 1], line_no), line_no};
    for (std::size_t k = 0; k < K; ++k) {
      row.idx.push_back(parse_index(fields[k + 1], line_no));
      seen[k] = std::max(seen[k], row.idx.back());
    }
    t_max = std::max(t_max, row.t);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("CSV has no data rows");

  const Dims shape = dims ? *dims : seen;
  const Index length = T ? *T : t_max;
  for (std::size_t k = 0; k < K; ++k) {
    if (shape[k] < 1) throw InputError("dimensions must be positive");
  }
  if (length < 1) throw InputError("T must be positive");

  std::vector<DenseTensor> slices(static_cast<std::size_t>(length), DenseTensor(shape, kMissing));
  std::vector<ObservationMask> masks(static_cast<std::size_t>(length), ObservationMask(shape, 0));
  std::vector<std::vector<char>> present(static_cast<std::size_t>(length),
                                         std::vector<char>(static_cast<std::size_t>(num_elements(shape)), 0));
  std::vector<Index> zero_based(K);
  for (const auto& row : rows) {
    if (row.t > length) fail(row.line, "t exceeds T = " + std::to_string(length));
    for (std::size_t k = 0; k < K; ++k) {
      if (row.idx[k] > shape[k]) {
        fail(row.line, "i" + std::to_string(k + 1) + " exceeds d" + std::to_string(k + 1) +
                           " = " + std::to_string(shape[k]));
      }
      zero_based[k] = row.idx[k] - 1;
    }
    const auto t = static_cast<std::size_t>(row.t - 1);
    const Index lin = slices[t].linear_index(zero_based);
    auto& flag = present[t][static_cast<std::size_t>(lin)];
    if (flag) fail(row.line, "duplicate (t, index) entry");
    flag = 1;
    if (row.value) {
      slices[t][lin] = *row.value;
      masks[t][lin] = 1;
    }
  }
  return TensorSeries(shape, std::move(slices), std::move(masks));
}

TensorSeries read_long_csv_file(const std::string& path, std::optional<Dims> dims,
                                std::optional<Index> T) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_long_csv(in, std::move(dims), T);
}

void write_long_csv(std::ostream& out, const TensorSeries& series) {
  out << 't';
  for (std::size_t k = 0; k < series.order(); ++k) out << ",i" << (k + 1);
  out << ",value\n";
  for (Index t = 0; t < series.length(); ++t) {
    for (Index j = 0; j < series.cells(); ++j) {
      write_index_fields(out, t, multi_index(series.dims(), j));
      out << ',';
      if (series.observed(t, j)) out << format_double(series.slice(t)[j]);
      out << '\n';
    }
  }
}

void write_completed_csv(std::ostream& out, const TensorSeries& completed,
                         const TensorSeries& original) {
  if (completed.dims() != original.dims() || completed.length() != original.length()) {
    throw InputError("completed and original series differ in shape");
  }
  out << 't';
  for (std::size_t k = 0; k < completed.order(); ++k) out << ",i" << (k + 1);
  out << ",value,imputed\n";
  for (Index t = 0; t < completed.length(); ++t) {
    for (Index j = 0; j < completed.cells(); ++j) {
      write_index_fields(out, t, multi_index(completed.dims(), j));
      out << ',' << format_double(completed.slice(t)[j]) << ','
          << (original.observed(t, j) ? 0 : 1) << '\n';
    }
  }
}

namespace {

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::optional<Index> auto_or_int(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const auto& v = j.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() == "auto") return std::nullopt;
    throw InputError(std::string("field '") + key + "' must be \"auto\" or an integer");
  }
  return v.get<Index>();
}

Innovation parse_innovation(const std::string& s) {
  if (s == "gaussian") return Innovation::gaussian;
  if (s == "student_t3" || s == "t3") return Innovation::student_t3;
  throw InputError("unknown innovation '" + s + "'");
}

}  // namespace

RunManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw InputError("manifest must be a JSON object");
  try {
    RunManifest m;
    m.dims = optional_field<Dims>(j, "dims");
    m.T = optional_field<Index>(j, "T");
    if (j.contains("ranks") && !j.at("ranks").is_null()) {
      const auto& r = j.at("ranks");
      if (r.is_string()) {
        if (r.get<std::string>() != "auto") throw InputError("ranks must be \"auto\" or a list");
      } else {
        m.ranks = r.get<Dims>();
      }
    }
    m.c_xi = j.value("c_xi", m.c_xi);
    m.center = j.value("center", m.center);
    m.reimpute = j.value("reimpute", m.reimpute);
    m.beta = auto_or_int(j, "beta");
    m.rank_extra = j.value("rank_extra", m.rank_extra);
    m.seed = j.value("seed", m.seed);
    m.threads = j.value("threads", m.threads);
    if (j.contains("outputs")) {
      const auto& o = j.at("outputs");
      m.completed_path = o.value("completed", m.completed_path);
      m.model_path = o.value("model", m.model_path);
      m.report_path = o.value("report", m.report_path);
      m.ranks_path = o.value("ranks", m.ranks_path);
      m.inference_path = o.value("inference", m.inference_path);
    }
    if (m.c_xi <= 0) throw InputError("c_xi must be positive");
    if (m.reimpute < 0) throw InputError("reimpute must be non-negative");
    if (m.rank_extra < 0) throw InputError("rank_extra must be non-negative");
    return m;
  } catch (const json::exception& e) {
    throw InputError(std::string("manifest: ") + e.what());
  }
}

json manifest_to_json(const RunManifest& m) {
  json j;
  j["dims"] = m.dims ? json(*m.dims) : json(nullptr);
  j["T"] = m.T ? json(*m.T) : json(nullptr);
  j["ranks"] = m.ranks ? json(*m.ranks) : json("auto");
  j["c_xi"] = m.c_xi;
  j["center"] = m.center;
  j["reimpute"] = m.reimpute;
  j["beta"] = m.beta ? json(*m.beta) : json("auto");
  j["rank_extra"] = m.rank_extra;
  j["seed"] = m.seed;
  j["threads"] = m.threads;
  j["outputs"] = {{"completed", m.completed_path}, {"model", m.model_path},
                  {"report", m.report_path},       {"ranks", m.ranks_path},
                  {"inference", m.inference_path}};
  return j;
}

SimConfig sim_config_from_json(const json& j) {
  if (!j.is_object()) throw InputError("simulation config must be a JSON object");
  try {
    SimConfig c;
    c.dims = j.at("dims").get<Dims>();
    c.T = j.at("T").get<Index>();
    c.ranks = j.at("ranks").get<Dims>();
    if (j.contains("zetas")) c.zetas = j.at("zetas").get<std::vector<std::vector<double>>>();
    c.ar_factor = j.value("ar_factor", c.ar_factor);
    c.ar_noise_common = j.value("ar_noise_common", c.ar_noise_common);
    c.ar_noise_idio = j.value("ar_noise_idio", c.ar_noise_idio);
    c.innovation = parse_innovation(j.value("innovation", std::string("gaussian")));
    c.noise_ranks = j.value("noise_ranks", c.noise_ranks);
    c.noise_sparsity = j.value("noise_sparsity", c.noise_sparsity);
    c.idio_scale = j.value("idio_scale", c.idio_scale);
    if (j.contains("missing")) {
      const auto& m = j.at("missing");
      if (m.is_string()) {
        c.missing.pattern = parse_missing_pattern(m.get<std::string>());
      } else {
        c.missing.pattern = parse_missing_pattern(m.at("pattern").get<std::string>());
        c.missing.per_series = m.value("per_series", false);
      }
    }
    if (j.contains("zero_rows")) {
      for (const auto& zr : j.at("zero_rows")) {
        // 1-based (mode, row) in files.
        const auto mode = zr.at(0).get<Index>();
        const auto row = zr.at(1).get<Index>();
        if (mode < 1 || row < 1) throw InputError("zero_rows entries are 1-based");
        c.zero_rows.emplace_back(static_cast<std::size_t>(mode - 1), row - 1);
      }
    }
    c.seed = j.value("seed", std::uint64_t{0});
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("simulation config: ") + e.what());
  }
}

json sim_config_to_json(const SimConfig& c) {
  json j;
  j["dims"] = c.dims;
  j["T"] = c.T;
  j["ranks"] = c.ranks;
  j["zetas"] = c.zetas;
  j["ar_factor"] = c.ar_factor;
  j["ar_noise_common"] = c.ar_noise_common;
  j["ar_noise_idio"] = c.ar_noise_idio;
  j["innovation"] = c.innovation == Innovation::gaussian ? "gaussian" : "student_t3";
  j["noise_ranks"] = c.noise_ranks;
  j["noise_sparsity"] = c.noise_sparsity;
  j["idio_scale"] = c.idio_scale;
  j["missing"] = {{"pattern", to_string(c.missing.pattern)}, {"per_series", c.missing.per_series}};
  json zr = json::array();
  for (const auto& [k, row] : c.zero_rows) zr.push_back({k + 1, row + 1});
  j["zero_rows"] = zr;
  j["seed"] = c.seed;
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace tfimpute
