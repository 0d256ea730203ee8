#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tfimpute/commands.hpp"
#include "tfimpute/error.hpp"

namespace {

struct Common {
  std::string data;
  std::optional<std::string> manifest;
  std::string out_dir = ".";
  std::vector<tfimpute::Index> ranks;
  bool auto_ranks = false;
  std::optional<double> c_xi;
  std::optional<int> reimpute;
  std::optional<std::string> beta;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool center = false;
  bool no_center = false;
  std::optional<tfimpute::Index> rank_extra;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("data", c.data, "Long-format CSV (t,i1,...,iK,value)")->required();
  cmd->add_option("manifest", c.manifest, "Optional run manifest (JSON)");
  cmd->add_option("--out-dir", c.out_dir, "Output directory");
  cmd->add_option("--ranks", c.ranks, "Fixed ranks, one per mode")->delimiter(',');
  cmd->add_flag("--auto-ranks", c.auto_ranks, "Estimate ranks from the eigenvalue ratios");
  cmd->add_option("--c-xi", c.c_xi, "Rank penalty constant");
  cmd->add_option("--seed", c.seed, "Seed");
  cmd->add_option("--threads", c.threads, "Worker threads");
  cmd->add_flag("--center", c.center, "Remove per-cell observed means first");
  cmd->add_flag("--no-center", c.no_center, "Fit on the raw data");
}

tfimpute::RunManifest manifest_for(const Common& c) {
  tfimpute::ManifestOverrides o;
  if (!c.ranks.empty()) o.ranks = tfimpute::Dims(c.ranks.begin(), c.ranks.end());
  o.auto_ranks = c.auto_ranks;
  o.c_xi = c.c_xi;
  o.reimpute = c.reimpute;
  o.beta = c.beta;
  o.seed = c.seed;
  o.threads = c.threads;
  if (c.center && c.no_center) throw tfimpute::InputError("--center and --no-center conflict");
  if (c.center) o.center = true;
  if (c.no_center) o.center = false;
  o.rank_extra = c.rank_extra;
  return tfimpute::load_manifest(c.manifest, o);
}

int report_error(const std::string& kind, const std::string& message, int code) {
  nlohmann::json err{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor factor model imputation for time series with missing entries"};
  app.require_subcommand(1);

  Common impute_args;
  auto* impute = app.add_subcommand("impute", "Impute missing entries");
  add_common(impute, impute_args);
  impute->add_option("--reimpute", impute_args.reimpute, "Extra refitting passes on completed data");

  Common rank_args;
  bool refine = false;
  auto* rank = app.add_subcommand("rank", "Estimate the rank of each mode");
  add_common(rank, rank_args);
  rank->add_flag("--refine", refine, "Re-estimate ranks on data imputed with r_hat + rank_extra");
  rank->add_option("--rank-extra", rank_args.rank_extra, "Extra factors used by --refine");

  Common test_args;
  tfimpute::Index mode = 1;
  tfimpute::Index row = 1;
  auto* test = app.add_subcommand("test", "Asymptotic test on one loading row");
  add_common(test, test_args);
  test->add_option("--mode", mode, "Mode (1-based)")->required();
  test->add_option("--row", row, "Row (1-based)")->required();
  test->add_option("--beta", test_args.beta, "Bartlett bandwidth: integer or auto");

  std::string sim_config;
  std::string sim_out = ".";
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
  simulate->add_option("config", sim_config, "Simulation config (JSON)")->required();
  simulate->add_option("--out-dir", sim_out, "Output directory");

  std::string suite;
  std::string bench_out = ".";
  std::optional<unsigned> bench_threads;
  auto* bench = app.add_subcommand("bench", "Run a Monte Carlo benchmark suite");
  bench->add_option("suite", suite, "Suite description (JSON)")->required();
  bench->add_option("--out-dir", bench_out, "Output directory");
  bench->add_option("--threads", bench_threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what(), 2);
  }

  try {
    nlohmann::json out;
    if (*impute) {
      out = tfimpute::cmd_impute(impute_args.data, manifest_for(impute_args), impute_args.out_dir);
    } else if (*rank) {
      out = tfimpute::cmd_rank(rank_args.data, manifest_for(rank_args), rank_args.out_dir, refine);
    } else if (*test) {
      out = tfimpute::cmd_test(test_args.data, manifest_for(test_args), test_args.out_dir, mode, row);
    } else if (*simulate) {
      out = tfimpute::cmd_simulate(sim_config, sim_out);
    } else if (*bench) {
      out = tfimpute::cmd_bench(suite, bench_out, bench_threads);
    }
    std::cout << out.dump(2) << '\n';
  } catch (const tfimpute::InputError& e) {
    return report_error("input", e.what(), 2);
  } catch (const tfimpute::NumericalError& e) {
    return report_error("numerical", e.what(), 3);
  } catch (const nlohmann::json::exception& e) {
    return report_error("input", e.what(), 2);
  }
  return 0;
}
