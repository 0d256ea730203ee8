#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "helpers.hpp"
#include "tfimpute/bench.hpp"
#include "tfimpute/commands.hpp"

using namespace tfimpute;
using namespace testing_util;
namespace fs = std::filesystem;

namespace {

class Workdir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("tfimpute_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const TensorSeries& s) const {
    std::ofstream out(path(name));
    write_long_csv(out, s);
  }

  void write_text(const std::string& name, const std::string& text) const {
    std::ofstream out(path(name));
    out << text;
  }

  fs::path dir_;
};

RunManifest plain() {
  RunManifest m;
  m.center = false;
  return m;
}

int run_cli(const std::string& args, const std::string& err_file) {
  const std::string cmd = std::string(TFIMPUTE_CLI) + " " + args + " >/dev/null 2>" + err_file;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::stringstream b;
  b << in.rdbuf();
  return b.str();
}

// Rank-one noiseless series whose factor only flips sign over time.
TensorSeries sign_flip_series(double p_missing, std::uint64_t seed, std::vector<DenseTensor>* truth) {
  std::mt19937_64 rng(seed);
  const Matrix a = random_matrix(3, 1, rng);
  const Matrix b = random_matrix(3, 1, rng);
  std::bernoulli_distribution sign(0.5);
  std::bernoulli_distribution miss(p_missing);
  std::vector<ObservationMask> masks;
  for (Index t = 0; t < 6; ++t) {
    const double s = sign(rng) ? 1.0 : -1.0;
    truth->push_back(refold(s * a * b.transpose(), 0, {3, 3}));
    ObservationMask m({3, 3}, 1);
    for (Index l = 0; l < 9; ++l) m[l] = miss(rng) ? 0 : 1;
    masks.push_back(m);
  }
  return TensorSeries({3, 3}, *truth, masks);
}

}  // namespace

using Commands = Workdir;

TEST_F(Commands, FullyObservedImputeIsVerbatim) {
  std::mt19937_64 rng(81);
  const TensorSeries s = random_series({4, 3}, 8, 0.0, rng);
  write("data.csv", s);
  RunManifest m;  // centered by default
  m.ranks = Dims{1, 1};
  const auto report = cmd_impute(path("data.csv"), m, path("out"));
  const TensorSeries back = read_long_csv_file(path("out/completed.csv"));
  EXPECT_EQ(back.slices(), s.slices());
  EXPECT_EQ(slurp(path("out/completed.csv")).find(",1\n"), std::string::npos);
  const auto model = read_json_file(path("out/model.json"));
  EXPECT_EQ(model.at("ranks"), nlohmann::json({1, 1}));
  EXPECT_EQ(model.at("modes").at(0).at("loadings_row_major").size(), 4u);
  EXPECT_TRUE(report.contains("seconds"));
  EXPECT_EQ(report.at("modes").at(0).at("dropped_terms"), 0);
}

TEST_F(Commands, NoiselessFileRecovered) {
  std::vector<DenseTensor> truth;
  const TensorSeries s = sign_flip_series(0.2, 5, &truth);
  ASSERT_LT(s.observed_count(), 54);
  write("data.csv", s);
  RunManifest m = plain();
  m.ranks = Dims{1, 1};
  const auto report = cmd_impute(path("data.csv"), m, path("out"));
  ASSERT_EQ(report.at("modes").at(0).at("dropped_terms"), 0);
  ASSERT_EQ(report.at("modes").at(1).at("dropped_terms"), 0);
  const TensorSeries back = read_long_csv_file(path("out/completed.csv"));
  double scale = 0;
  for (const auto& x : truth) {
    for (double v : x.values()) scale = std::max(scale, std::abs(v));
  }
  for (Index t = 0; t < 6; ++t) {
    for (Index l = 0; l < 9; ++l) {
      EXPECT_NEAR(back.slice(t)[l], truth[static_cast<std::size_t>(t)][l], 1e-6 * scale);
    }
  }
}

TEST_F(Commands, CompletedFileRoundTrip) {
  std::mt19937_64 rng(82);
  write("data.csv", random_series({5, 4}, 10, 0.3, rng));
  RunManifest m;
  m.ranks = Dims{2, 1};
  cmd_impute(path("data.csv"), m, path("a"));
  cmd_impute(path("a/completed.csv"), m, path("b"));
  cmd_impute(path("a/completed.csv"), m, path("c"));
  const std::string once = slurp(path("a/completed.csv"));
  const TensorSeries first = read_long_csv_file(path("a/completed.csv"));
  const TensorSeries second = read_long_csv_file(path("b/completed.csv"));
  EXPECT_EQ(first.slices(), second.slices());
  EXPECT_EQ(slurp(path("b/completed.csv")), slurp(path("c/completed.csv")));
  EXPECT_EQ(slurp(path("b/model.json")), slurp(path("c/model.json")));
  EXPECT_NE(once.find(",1\n"), std::string::npos);
}

TEST_F(Commands, CenteringRestoresMeans) {
  std::mt19937_64 rng(83);
  TensorSeries s = random_series({4, 4}, 12, 0.2, rng);
  std::vector<DenseTensor> shifted;
  for (Index t = 0; t < 12; ++t) {
    DenseTensor x = s.zero_filled(t);
    for (Index l = 0; l < x.size(); ++l) x[l] += 100.0;
    shifted.push_back(x);
  }
  write("data.csv", TensorSeries(s.dims(), shifted, s.masks()));
  RunManifest m;
  m.ranks = Dims{1, 1};
  cmd_impute(path("data.csv"), m, path("out"));
  const TensorSeries back = read_long_csv_file(path("out/completed.csv"));
  for (Index t = 0; t < 12; ++t) {
    for (Index l = 0; l < 16; ++l) {
      if (!s.observed(t, l)) {
        EXPECT_GT(back.slice(t)[l], 90.0);
        EXPECT_LT(back.slice(t)[l], 110.0);
      }
    }
  }
}

TEST_F(Commands, ReimputeReportsPasses) {
  std::mt19937_64 rng(84);
  write("data.csv", random_series({5, 5}, 10, 0.3, rng));
  RunManifest m;
  m.reimpute = 2;
  const auto report = cmd_impute(path("data.csv"), m, path("out"));
  EXPECT_GE(report.at("iterations").get<int>(), 1);
  EXPECT_EQ(report.at("pass_changes").size(), report.at("iterations").get<std::size_t>());
}

TEST_F(Commands, RankOnSimulatedFile) {
  SimConfig c = named_setting("IIIa").config;
  c.missing = {MissingPattern::random_005, false};
  c.seed = 2024;
  write_text("sim.json", sim_config_to_json(c).dump());
  cmd_simulate(path("sim.json"), path("sim"));
  const auto doc = cmd_rank(path("sim/data.csv"), plain(), path("out"), true);
  EXPECT_EQ(doc.at("ranks"), nlohmann::json({2, 3}));
  const auto file = read_json_file(path("out/ranks.json"));
  EXPECT_EQ(file.at("modes").at(0).at("ratios").size(), 20u);
  EXPECT_EQ(file.at("refinement").at("imputation_ranks"), nlohmann::json({3, 4}));
  EXPECT_EQ(file.at("refinement").at("ranks"), nlohmann::json({2, 3}));
}

TEST_F(Commands, RowTestOutput) {
  SimConfig c = named_setting("Va").config;
  c.dims = {30, 20};
  c.T = 40;
  c.seed = 3;
  write_text("sim.json", sim_config_to_json(c).dump());
  cmd_simulate(path("sim.json"), path("sim"));
  RunManifest m = plain();
  m.ranks = Dims{1, 1};
  const auto doc = cmd_test(path("sim/data.csv"), m, path("out"), 1, 1);
  const auto file = read_json_file(path("out/inference.json"));
  EXPECT_EQ(file.at("beta"), tfimpute::Index{1});
  EXPECT_EQ(file.at("degrees_of_freedom"), 1);
  EXPECT_GE(file.at("p_value").get<double>(), 0.0);
  EXPECT_LE(file.at("p_value").get<double>(), 1.0);
  EXPECT_THROW(cmd_test(path("sim/data.csv"), m, path("out"), 3, 1), InputError);
  EXPECT_THROW(cmd_test(path("sim/data.csv"), m, path("out"), 1, 31), InputError);
}

TEST_F(Commands, SimulateFiles) {
  write_text("sim.json", R"({"dims":[4,3],"T":5,"ranks":[1,1],"missing":"M-iii","seed":9})");
  const auto doc = cmd_simulate(path("sim.json"), path("a"));
  cmd_simulate(path("sim.json"), path("b"));
  EXPECT_EQ(slurp(path("a/data.csv")), slurp(path("b/data.csv")));
  EXPECT_EQ(slurp(path("a/truth.csv")), slurp(path("b/truth.csv")));
  const TensorSeries s = read_long_csv_file(path("a/data.csv"));
  EXPECT_EQ(s.dims(), (Dims{4, 3}));
  EXPECT_EQ(s.length(), 5);
  // 1-based t in [3, 5], i1 in [1, 2], i2 = 1.
  EXPECT_EQ(s.cells() * 5 - s.observed_count(), 3 * 2 * 1);
  EXPECT_EQ(doc.at("observed"), s.observed_count());
  std::istringstream truth(slurp(path("a/truth.csv")));
  std::string header;
  std::getline(truth, header);
  EXPECT_EQ(header, "t,i1,i2,full,common,observed");
}

TEST_F(Commands, BenchIndependentOfWorkers) {
  write_text("suite.json",
             R"({"seed":5,"runs":[{"setting":"IIa","pattern":"M-ii","replications":3},
                 {"setting":"Ia","pattern":"M-iii","replications":2,"reimpute":1}]})");
  const auto a = cmd_bench(path("suite.json"), path("a"), 1u);
  const auto b = cmd_bench(path("suite.json"), path("b"), 3u);
  EXPECT_EQ(a.dump(), b.dump());
  EXPECT_EQ(slurp(path("a/results.csv")), slurp(path("b/results.csv")));
  EXPECT_EQ(a.at("runs").size(), 2u);
  write_text("bad.json", R"({"runs":[{"setting":"Xz"}]})");
  EXPECT_THROW(cmd_bench(path("bad.json"), path("c"), std::nullopt), InputError);
}

TEST_F(Commands, ManifestOverrides) {
  write_text("m.json", R"({"ranks":[2,2],"beta":3,"center":false})");
  ManifestOverrides o;
  o.auto_ranks = true;
  o.beta = "auto";
  const RunManifest m = load_manifest(path("m.json"), o);
  EXPECT_FALSE(m.ranks.has_value());
  EXPECT_FALSE(m.beta.has_value());
  EXPECT_FALSE(m.center);
  ManifestOverrides bad;
  bad.beta = "often";
  EXPECT_THROW(load_manifest(std::nullopt, bad), InputError);
}

TEST_F(Commands, CliExitCodes) {
  std::mt19937_64 rng(85);
  write("data.csv", random_series({4, 4}, 10, 0.1, rng));
  const std::string err = path("err.txt");
  EXPECT_EQ(run_cli("impute " + path("data.csv") + " --ranks 1,1 --out-dir " + path("o"), err), 0);
  EXPECT_TRUE(fs::exists(path("o/completed.csv")));

  EXPECT_EQ(run_cli("impute " + path("missing.csv") + " --out-dir " + path("o"), err), 2);
  const auto e = nlohmann::json::parse(slurp(err));
  EXPECT_EQ(e.at("exit_code"), 2);
  EXPECT_NE(e.at("message").get<std::string>().find("missing.csv"), std::string::npos);

  write_text("bad.csv", "t,i1,value\n1,1,1\n1,z,2\n");
  EXPECT_EQ(run_cli("rank " + path("bad.csv") + " --out-dir " + path("o"), err), 2);
  EXPECT_NE(slurp(err).find("line 3"), std::string::npos);

  EXPECT_EQ(run_cli("frobnicate", err), 2);

  write_text("zeros.csv", "t,i1,i2,value\n");
  {
    std::ofstream out(path("zeros.csv"));
    out << "t,i1,i2,value\n";
    for (int t = 1; t <= 6; ++t)
      for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) out << t << ',' << i << ',' << j << ",0\n";
  }
  EXPECT_EQ(run_cli("test " + path("zeros.csv") + " --mode 1 --row 1 --ranks 1,1 --no-center --out-dir " +
                        path("o"),
                    err),
            3);
  EXPECT_EQ(nlohmann::json::parse(slurp(err)).at("error"), "numerical");
}
