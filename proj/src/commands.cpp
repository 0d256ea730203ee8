#include "tfimpute/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "tfimpute/bench.hpp"
#include "tfimpute/factors.hpp"
#include "tfimpute/inference.hpp"

namespace tfimpute {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& out_dir, const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute()) return p.string();
  return (fs::path(out_dir) / p).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  return out;
}

TensorSeries load_data(const std::string& data_csv, const RunManifest& m) {
  TensorSeries s = read_long_csv_file(data_csv, m.dims, m.T);
  if (m.ranks && m.ranks->size() != s.order()) {
    throw InputError("manifest ranks must have one entry per mode");
  }
  return s;
}

// The series the model sees: per-cell observed means removed when centering.
struct Prepared {
  TensorSeries working;
  DenseTensor means;
};

Prepared prepare(const TensorSeries& data, bool centered) {
  if (!centered) return {data, DenseTensor(data.dims(), 0.0)};
  DenseTensor means = observed_means(data);
  return {center(data, means), std::move(means)};
}

json rank_report_json(const RankReport& r) {
  return json{{"mode", r.mode + 1},
              {"eigenvalues", std::vector<double>(r.eigenvalues.data(),
                                                  r.eigenvalues.data() + r.eigenvalues.size())},
              {"xi", r.xi},
              {"ratios", r.ratios},
              {"selected", r.selected},
              {"boundary_hit", r.boundary_hit}};
}

json model_json(const FactorModel& model, const DenseTensor& means, bool centered) {
  json modes = json::array();
  for (std::size_t k = 0; k < model.order(); ++k) {
    const Matrix& q = model.loading(k);
    std::vector<double> rows;
    for (Index i = 0; i < q.rows(); ++i) {
      for (Index c = 0; c < q.cols(); ++c) rows.push_back(q(i, c));
    }
    const Vector& ev = model.eigenvalues(k);
    modes.push_back({{"mode", k + 1},
                     {"rows", q.rows()},
                     {"cols", q.cols()},
                     {"loadings_row_major", rows},
                     {"eigenvalues", std::vector<double>(ev.data(), ev.data() + ev.size())}});
  }
  json cores = json::array();
  for (const auto& c : model.cores()) {
    cores.push_back(std::vector<double>(c.values().begin(), c.values().end()));
  }
  json j{{"K", model.order()},
         {"dims", model.dims()},
         {"ranks", model.ranks()},
         {"modes", modes},
         {"core_series", cores},
         {"centered", centered}};
  if (centered) j["cell_means"] = std::vector<double>(means.values().begin(), means.values().end());
  return j;
}

ImputeOptions impute_options(const RunManifest& m) {
  ImputeOptions o;
  o.ranks = m.ranks;
  o.c_xi = m.c_xi;
  o.threads = m.threads;
  return o;
}

}  // namespace

RunManifest load_manifest(const std::optional<std::string>& path, const ManifestOverrides& o) {
  RunManifest m = path ? manifest_from_json(read_json_file(*path)) : RunManifest{};
  if (o.ranks) m.ranks = o.ranks;
  if (o.auto_ranks) m.ranks.reset();
  if (o.c_xi) m.c_xi = *o.c_xi;
  if (o.reimpute) m.reimpute = *o.reimpute;
  if (o.beta) {
    if (*o.beta == "auto") {
      m.beta.reset();
    } else {
      try {
        m.beta = std::stoll(*o.beta);
      } catch (const std::exception&) {
        throw InputError("--beta must be \"auto\" or an integer");
      }
    }
  }
  if (o.seed) m.seed = *o.seed;
  if (o.threads) m.threads = *o.threads;
  if (o.center) m.center = *o.center;
  if (o.rank_extra) m.rank_extra = *o.rank_extra;
  if (m.c_xi <= 0) throw InputError("c_xi must be positive");
  if (m.reimpute < 0) throw InputError("reimpute must be non-negative");
  return m;
}

json cmd_impute(const std::string& data_csv, const RunManifest& manifest,
                const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const TensorSeries data = load_data(data_csv, manifest);
  const Prepared prep = prepare(data, manifest.center);
  const ImputationResult result = reimpute(prep.working, impute_options(manifest), manifest.reimpute);

  std::vector<DenseTensor> completed = data.slices();
  for (Index t = 0; t < data.length(); ++t) {
    auto& slot = completed[static_cast<std::size_t>(t)];
    const auto& fitted = result.fitted_common[static_cast<std::size_t>(t)];
    for (Index j = 0; j < slot.size(); ++j) {
      if (!data.observed(t, j)) slot[j] = fitted[j] + prep.means[j];
    }
  }
  const TensorSeries filled(data.dims(), std::move(completed));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ensure_dir(out_dir);
  {
    auto out = open_out(resolve(out_dir, manifest.completed_path));
    write_completed_csv(out, filled, data);
  }
  write_json_file(resolve(out_dir, manifest.model_path),
                  model_json(result.model, prep.means, manifest.center));

  json modes = json::array();
  json warnings = json::array();
  for (std::size_t k = 0; k < data.order(); ++k) {
    const auto& d = result.diagnostics[k];
    modes.push_back({{"mode", k + 1},
                     {"dropped_terms", d.dropped_terms},
                     {"min_overlap", d.min_overlap},
                     {"rank", result.model.ranks()[k]},
                     {"rank_estimate", result.rank_reports[k].selected}});
    if (d.dropped_terms > 0) {
      warnings.push_back("mode " + std::to_string(k + 1) + ": " +
                         std::to_string(d.dropped_terms) + " (i,j,h) terms had no overlap");
    }
    if (!manifest.ranks && result.rank_reports[k].boundary_hit) {
      warnings.push_back("mode " + std::to_string(k + 1) +
                         ": estimated rank hit the floor(d_k/2) search bound");
    }
  }
  auto one_based = [](const std::vector<Index>& v) {
    std::vector<Index> out;
    for (Index t : v) out.push_back(t + 1);
    return out;
  };
  if (!result.empty_slices.empty()) warnings.push_back("time points with no observations were filled with zeros");
  json report{{"modes", modes},
              {"observed", data.observed_count()},
              {"cells", data.cells() * data.length()},
              {"iterations", result.iterations},
              {"pass_changes", result.pass_changes},
              {"empty_slices", one_based(result.empty_slices)},
              {"pseudo_inverse_slices", one_based(result.pseudo_inverse_slices)},
              {"warnings", warnings},
              {"seconds", seconds},
              {"manifest", manifest_to_json(manifest)}};
  write_json_file(resolve(out_dir, manifest.report_path), report);
  return report;
}

json cmd_rank(const std::string& data_csv, const RunManifest& manifest, const std::string& out_dir,
              bool refine) {
  const TensorSeries data = load_data(data_csv, manifest);
  const Prepared prep = prepare(data, manifest.center);
  ImputeOptions options = impute_options(manifest);
  options.ranks.reset();
  const ImputationResult first = impute(prep.working, options);

  json modes = json::array();
  Dims initial;
  for (const auto& r : first.rank_reports) {
    modes.push_back(rank_report_json(r));
    initial.push_back(r.selected);
  }
  json doc{{"T", data.length()}, {"dims", data.dims()}, {"c_xi", manifest.c_xi},
           {"modes", modes}, {"ranks", initial}};
  if (refine) {
    // Impute with r_hat + r_extra, then re-select ranks on the completed data.
    Dims widened = initial;
    for (std::size_t k = 0; k < widened.size(); ++k) {
      widened[k] = std::min(widened[k] + manifest.rank_extra, data.dims()[k]);
    }
    ImputeOptions wide = options;
    wide.ranks = widened;
    const ImputationResult filled = impute(prep.working, wide);
    const ImputationResult again = impute(filled.completed, options);
    json refined = json::array();
    Dims refined_ranks;
    for (const auto& r : again.rank_reports) {
      refined.push_back(rank_report_json(r));
      refined_ranks.push_back(r.selected);
    }
    doc["refinement"] = {{"rank_extra", manifest.rank_extra},
                         {"imputation_ranks", widened},
                         {"modes", refined},
                         {"ranks", refined_ranks}};
  }
  ensure_dir(out_dir);
  write_json_file(resolve(out_dir, manifest.ranks_path), doc);
  return doc;
}

json cmd_test(const std::string& data_csv, const RunManifest& manifest, const std::string& out_dir,
              Index mode, Index row) {
  const TensorSeries data = load_data(data_csv, manifest);
  if (mode < 1 || mode > static_cast<Index>(data.order())) throw InputError("--mode out of range");
  if (row < 1 || row > data.dims()[static_cast<std::size_t>(mode - 1)]) {
    throw InputError("--row out of range");
  }
  const Prepared prep = prepare(data, manifest.center);
  const ImputationResult fit = impute(prep.working, impute_options(manifest));
  const auto k = static_cast<std::size_t>(mode - 1);
  const InferenceReport rep = row_test(prep.working, fit.model, k, row - 1, manifest.beta);

  auto mat = [](const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
      std::vector<double> r;
      for (Index c = 0; c < m.cols(); ++c) r.push_back(m(i, c));
      rows.push_back(r);
    }
    return rows;
  };
  const Matrix& q = fit.model.loading(k);
  std::vector<double> loading_row;
  for (Index c = 0; c < q.cols(); ++c) loading_row.push_back(q(row - 1, c));
  json doc{{"mode", mode},
           {"row", row},
           {"rank", fit.model.ranks()[k]},
           {"beta", rep.beta},
           {"beta_auto", !manifest.beta.has_value()},
           {"loading_row", loading_row},
           {"sigma_hac", mat(rep.sigma_hac)},
           {"sigma_hac_delta", mat(rep.sigma_hac_delta)},
           {"standardized", std::vector<double>(rep.standardized.data(),
                                                rep.standardized.data() + rep.standardized.size())},
           {"statistic", rep.statistic},
           {"degrees_of_freedom", fit.model.ranks()[k]},
           {"p_value", rep.p_value}};
  ensure_dir(out_dir);
  write_json_file(resolve(out_dir, manifest.inference_path), doc);
  return doc;
}

json cmd_simulate(const std::string& config_json, const std::string& out_dir) {
  const SimConfig config = sim_config_from_json(read_json_file(config_json));
  const GroundTruth truth = gen_dataset(config);
  ensure_dir(out_dir);
  {
    auto out = open_out(resolve(out_dir, "data.csv"));
    write_long_csv(out, truth.data);
  }
  {
    auto out = open_out(resolve(out_dir, "truth.csv"));
    out << 't';
    for (std::size_t k = 0; k < config.dims.size(); ++k) out << ",i" << (k + 1);
    out << ",full,common,observed\n";
    for (Index t = 0; t < config.T; ++t) {
      const auto slot = static_cast<std::size_t>(t);
      for (Index j = 0; j < truth.data.cells(); ++j) {
        out << (t + 1);
        for (Index i : multi_index(config.dims, j)) out << ',' << (i + 1);
        out << ',' << format_double(truth.full[slot][j]) << ','
            << format_double(truth.common[slot][j]) << ','
            << (truth.data.observed(t, j) ? 1 : 0) << '\n';
      }
    }
  }
  json loadings = json::array();
  for (std::size_t k = 0; k < truth.loadings.size(); ++k) {
    const Matrix& a = truth.loadings[k];
    std::vector<double> rows;
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index c = 0; c < a.cols(); ++c) rows.push_back(a(i, c));
    }
    loadings.push_back({{"mode", k + 1}, {"rows", a.rows()}, {"cols", a.cols()},
                        {"loadings_row_major", rows}});
  }
  json doc{{"config", sim_config_to_json(config)},
           {"observed", truth.data.observed_count()},
           {"cells", truth.data.cells() * config.T},
           {"loadings", loadings},
           {"files", {"data.csv", "truth.csv", "truth.json"}}};
  write_json_file(resolve(out_dir, "truth.json"), doc);
  return doc;
}

json cmd_bench(const std::string& suite_json, const std::string& out_dir,
               std::optional<unsigned> threads) {
  const json suite = read_json_file(suite_json);
  std::vector<BenchRun> runs;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool detail = false;
  try {
    seed = suite.value("seed", std::uint64_t{0});
    workers = threads ? *threads : suite.value("threads", 1u);
    detail = suite.value("per_replication", false);
    const Index default_reps = suite.value("replications", Index{100});
    const int default_re = suite.value("reimpute", 0);
    for (const auto& r : suite.at("runs")) {
      BenchRun run;
      run.setting = r.at("setting").get<std::string>();
      run.pattern = r.value("pattern", std::string("M-i"));
      run.replications = r.value("replications", default_reps);
      run.reimpute = r.value("reimpute", default_re);
      named_setting(run.setting);
      parse_missing_pattern(run.pattern);
      runs.push_back(run);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("bench suite: ") + e.what());
  }

  json results = json::array();
  ensure_dir(out_dir);
  auto csv = open_out(resolve(out_dir, "results.csv"));
  csv << "setting,pattern,replications,rmse_obs_mean,rmse_obs_sd,rmse_miss_mean,rmse_miss_sd,"
         "rmse_all_mean,rmse_all_sd,rank_correct,col_space_mean,rejection_rate\n";
  auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
  for (const auto& run : runs) {
    const RunSummary s = run_bench(run, seed, workers);
    results.push_back(summary_to_json(s, detail));
    std::string cs;
    for (std::size_t k = 0; k < s.col_space_mean.size(); ++k) {
      cs += (k ? ";" : "") + format_double(s.col_space_mean[k]);
    }
    csv << run.setting << ',' << run.pattern << ',' << run.replications << ','
        << num(s.rmse_observed.mean) << ',' << num(s.rmse_observed.sd) << ','
        << num(s.rmse_missing.mean) << ',' << num(s.rmse_missing.sd) << ','
        << num(s.rmse_all.mean) << ',' << num(s.rmse_all.sd) << ',' << format_double(s.rank_correct)
        << ',' << cs << ','
        << (s.kind == SettingKind::normality ? format_double(s.rejection_rate) : std::string())
        << '\n';
  }
  json doc{{"seed", seed}, {"runs", results}};
  write_json_file(resolve(out_dir, "results.json"), doc);
  return doc;
}

}  // namespace tfimpute
