#include "tfimpute/bench.hpp"

#include <cmath>
#include <limits>

#include "parallel.hpp"
#include "tfimpute/factors.hpp"
#include "tfimpute/inference.hpp"
#include "tfimpute/metrics.hpp"

namespace tfimpute {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

SimConfig base(Dims dims, Index T, Dims ranks, double zeta) {
  SimConfig c;
  c.dims = std::move(dims);
  c.T = T;
  c.ranks = std::move(ranks);
  for (Index r : c.ranks) c.zetas.emplace_back(static_cast<std::size_t>(r), zeta);
  return c;
}

Setting make(std::string id, SettingKind kind, SimConfig c) {
  return Setting{std::move(id), kind, std::move(c)};
}

double selection_rmse(const GroundTruth& truth, const std::vector<DenseTensor>& fitted,
                      EntryRole role) {
  const auto sel = select_entries(truth.data.masks(), role);
  if (sel.entries.empty()) return kNaN;
  return relative_mse(fitted, truth.common, sel);
}

}  // namespace

std::vector<std::string> setting_ids() {
  return {"Ia",  "Ib",   "Ic",   "Id",   "Ie",  "If",  "Ig",  "IIa", "IIb", "IIc",
          "IId", "IIIa", "IIIb", "IIIc", "IVa", "IVb", "IVc", "Va",  "Vb"};
}

Setting named_setting(const std::string& id) {
  using K = SettingKind;
  if (id == "Ia") return make(id, K::imputation, base({40, 40}, 100, {1, 2}, 0.0));
  if (id == "Ib") {
    SimConfig c = base({40, 40}, 100, {1, 2}, 0.0);
    for (auto& z : c.zetas) z[0] = 0.2;
    return make(id, K::imputation, c);
  }
  if (id == "Ic" || id == "Id") {
    SimConfig c = id == "Ic" ? base({40, 40}, 100, {1, 2}, 0.2) : base({80, 80}, 200, {1, 2}, 0.2);
    c.innovation = Innovation::student_t3;
    return make(id, K::imputation, c);
  }
  if (id == "Ie") return make(id, K::imputation, base({20, 20, 20}, 80, {2, 2, 2}, 0.0));
  if (id == "If") return make(id, K::imputation, base({20, 20, 20}, 80, {2, 2, 2}, 0.2));
  if (id == "Ig") return make(id, K::imputation, base({40, 40, 40}, 200, {2, 2, 2}, 0.2));
  if (id == "IIa") return make(id, K::rank, base({80}, 80, {2}, 0.0));
  if (id == "IIb" || id == "IIc" || id == "IId") {
    SimConfig c = base({80}, id == "IId" ? 160 : 80, {2}, 0.0);
    c.zetas[0][0] = 0.1;
    if (id != "IIb") c.zetas[0][1] = 0.15;
    return make(id, K::rank, c);
  }
  if (id == "IIIa") return make(id, K::rank, base({40, 40}, 40, {2, 3}, 0.0));
  if (id == "IIIb") return make(id, K::rank, base({40, 40}, 40, {2, 3}, 0.1));
  if (id == "IIIc") return make(id, K::rank, base({80, 80}, 80, {2, 3}, 0.1));
  if (id == "IVa" || id == "IVb" || id == "IVc") {
    SimConfig c = base({20, 20, 20}, id == "IVc" ? 40 : 20, {2, 3, 4}, 0.0);
    if (id == "IVb") c.innovation = Innovation::student_t3;
    return make(id, K::rank, c);
  }
  if (id == "Va" || id == "Vb") {
    // One pervasive factor, AR(1) 0.05 everywhere, first mode-1 loading row zero.
    SimConfig c = id == "Va" ? base({200, 100}, 100, {1, 1}, 0.0) : base({400, 200}, 200, {1, 1}, 0.0);
    c.ar_factor = {0.05};
    c.ar_noise_common = {0.05};
    c.ar_noise_idio = {0.05};
    c.zero_rows = {{0, 0}};
    return make(id, K::normality, c);
  }
  throw InputError("unknown setting id '" + id + "'");
}

ReplicationResult run_replication(const Setting& setting, const SimConfig& config,
                                  int reimpute_passes) {
  const GroundTruth truth = gen_dataset(config);
  ImputeOptions options;
  options.ranks = config.ranks;
  const ImputationResult fit = impute(truth.data, options);

  ReplicationResult out;
  out.rmse_observed = selection_rmse(truth, fit.fitted_common, EntryRole::observed);
  out.rmse_missing = selection_rmse(truth, fit.fitted_common, EntryRole::missing);
  out.rmse_all = selection_rmse(truth, fit.fitted_common, EntryRole::all);
  out.rmse_all_reimputed = kNaN;
  if (reimpute_passes > 0) {
    const ImputationResult re = reimpute(truth.data, options, reimpute_passes);
    out.rmse_all_reimputed = selection_rmse(truth, re.fitted_common, EntryRole::all);
  }
  out.rank_correct = true;
  for (std::size_t k = 0; k < config.dims.size(); ++k) {
    const Index r = fit.rank_reports[k].selected;
    out.rank_hat.push_back(r);
    out.rank_correct = out.rank_correct && r == config.ranks[k];
    out.col_space.push_back(col_space_distance(truth.loadings[k], fit.model.loading(k)));
  }
  if (setting.kind == SettingKind::normality) {
    const InferenceReport rep = row_test(truth.data, fit.model, 0, 0);
    out.standardized = rep.standardized(0);
    out.p_value = rep.p_value;
  }
  return out;
}

Moments moments(const std::vector<double>& values) {
  Moments m;
  double sum = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++m.count;
    }
  }
  if (m.count == 0) return Moments{kNaN, kNaN, 0};
  m.mean = sum / static_cast<double>(m.count);
  double sq = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) sq += (v - m.mean) * (v - m.mean);
  }
  m.sd = m.count > 1 ? std::sqrt(sq / static_cast<double>(m.count - 1)) : 0.0;
  return m;
}

std::uint64_t replication_seed(std::uint64_t suite_seed, const BenchRun& run, Index rep) {
  // FNV-1a over the run key keeps streams distinct across settings and patterns.
  std::uint64_t h = 14695981039346656037ull;
  for (char ch : run.setting + "/" + run.pattern) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  return make_stream(suite_seed ^ h, static_cast<std::uint64_t>(rep))();
}

RunSummary run_bench(const BenchRun& run, std::uint64_t suite_seed, unsigned threads) {
  if (run.replications < 1) throw InputError("replications must be positive");
  const Setting setting = named_setting(run.setting);
  const MissingPattern pattern = parse_missing_pattern(run.pattern);

  RunSummary s;
  s.run = run;
  s.kind = setting.kind;
  s.replications.resize(static_cast<std::size_t>(run.replications));
  detail::parallel_for(run.replications, threads, [&](Index rep) {
    SimConfig config = setting.config;
    config.missing.pattern = pattern;
    config.seed = replication_seed(suite_seed, run, rep);
    s.replications[static_cast<std::size_t>(rep)] = run_replication(setting, config, run.reimpute);
  });

  const std::size_t K = setting.config.dims.size();
  std::vector<double> obs, miss, all, re, stdz;
  s.rank_mean.assign(K, 0.0);
  s.col_space_mean.assign(K, 0.0);
  Index correct = 0;
  Index rejected = 0;
  for (const auto& r : s.replications) {
    obs.push_back(r.rmse_observed);
    miss.push_back(r.rmse_missing);
    all.push_back(r.rmse_all);
    re.push_back(r.rmse_all_reimputed);
    stdz.push_back(r.standardized);
    correct += r.rank_correct ? 1 : 0;
    rejected += r.p_value < 0.05 ? 1 : 0;
    for (std::size_t k = 0; k < K; ++k) {
      s.rank_mean[k] += static_cast<double>(r.rank_hat[k]);
      s.col_space_mean[k] += r.col_space[k];
    }
  }
  const double n = static_cast<double>(run.replications);
  for (std::size_t k = 0; k < K; ++k) {
    s.rank_mean[k] /= n;
    s.col_space_mean[k] /= n;
  }
  s.rmse_observed = moments(obs);
  s.rmse_missing = moments(miss);
  s.rmse_all = moments(all);
  s.rmse_all_reimputed = moments(re);
  s.rank_correct = static_cast<double>(correct) / n;
  if (setting.kind == SettingKind::normality) {
    s.standardized = moments(stdz);
    s.rejection_rate = static_cast<double>(rejected) / n;
  }
  return s;
}

nlohmann::json summary_to_json(const RunSummary& s, bool with_replications) {
  using nlohmann::json;
  auto mom = [](const Moments& m) {
    return json{{"mean", std::isfinite(m.mean) ? json(m.mean) : json(nullptr)},
                {"sd", std::isfinite(m.sd) ? json(m.sd) : json(nullptr)},
                {"count", m.count}};
  };
  json j{{"setting", s.run.setting},
         {"pattern", s.run.pattern},
         {"replications", s.run.replications},
         {"relative_mse", {{"observed", mom(s.rmse_observed)},
                           {"missing", mom(s.rmse_missing)},
                           {"all", mom(s.rmse_all)}}},
         {"rank_correct_proportion", s.rank_correct},
         {"rank_mean", s.rank_mean},
         {"col_space_distance_mean", s.col_space_mean}};
  if (s.run.reimpute > 0) {
    j["reimpute"] = s.run.reimpute;
    j["relative_mse_reimputed_all"] = mom(s.rmse_all_reimputed);
  }
  if (s.kind == SettingKind::normality) {
    j["standardized"] = mom(s.standardized);
    j["rejection_rate_5pct"] = s.rejection_rate;
  }
  if (with_replications) {
    json reps = json::array();
    for (const auto& r : s.replications) {
      json row{{"rmse_all", std::isfinite(r.rmse_all) ? json(r.rmse_all) : json(nullptr)},
               {"rank_hat", r.rank_hat},
               {"col_space", r.col_space}};
      if (s.kind == SettingKind::normality) {
        row["standardized"] = r.standardized;
        row["p_value"] = r.p_value;
      }
      reps.push_back(row);
    }
    j["per_replication"] = reps;
  }
  return j;
}

}  // namespace tfimpute
