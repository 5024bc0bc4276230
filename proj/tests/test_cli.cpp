#include "statsvd/pipeline.hpp"
#include "statsvd/simbench.hpp"
#include "statsvd/tns_io.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace statsvd;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(STATSVD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("statsvd_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::size_t columns(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

const char* kOneCell = R"({"p":[16,16,16],"r":2,"s":[5,5,16],"lambda":40,"sigma":1,"replications":1,"seed":3,
  "methods":["stat_svd"]})";

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("fit"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, SimulateOneCell) {
  const auto dir = scratch("sim");
  write_file_atomic(dir / "grid.json", kOneCell);
  ASSERT_EQ(run("simulate " + q(dir / "grid.json") + " --no-timing --out " + q(dir / "a")), 0);
  const auto rows = lines(read_file(dir / "a" / "report.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], kReportCsvHeader);
  EXPECT_EQ(columns(rows[1]), 12u);
  EXPECT_EQ(rows[1].rfind("stat_svd,16x16x16,2x2x2,5x5x16,", 0), 0u) << rows[1];
  EXPECT_TRUE(fs::exists(dir / "a" / "summary.json"));
  (void)nlohmann::json::parse(read_file(dir / "a" / "summary.json"));
}

TEST(Cli, SimulateRerunIsByteIdentical) {
  const auto dir = scratch("rerun");
  write_file_atomic(dir / "grid.json", kOneCell);
  ASSERT_EQ(run("simulate " + q(dir / "grid.json") + " --no-timing --out " + q(dir / "a")), 0);
  ASSERT_EQ(run("simulate " + q(dir / "grid.json") + " --no-timing --out " + q(dir / "b")), 0);
  EXPECT_EQ(read_file(dir / "a" / "report.csv"), read_file(dir / "b" / "report.csv"));
  EXPECT_EQ(read_file(dir / "a" / "summary.json"), read_file(dir / "b" / "summary.json"));
}

TEST(Cli, SimulateScaleEchoesEffectiveParameters) {
  const auto dir = scratch("scale");
  write_file_atomic(dir / "grid.json", R"({"p":[50,50,50],"r":5,"s":[15,15,15],"lambda":70,"sigma":1,
    "replications":1,"seed":1,"methods":["hosvd"]})");
  ASSERT_EQ(run("simulate " + q(dir / "grid.json") + " --scale 0.4 --no-timing --out " + q(dir / "o")), 0);
  const auto rows = lines(read_file(dir / "o" / "report.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].rfind("hosvd,20x20x20,3x3x3,6x6x6,", 0), 0u) << rows[1];
}

TEST(Cli, SimulateBadConfig) {
  const auto dir = scratch("bad");
  write_file_atomic(dir / "grid.json", "{not json");
  EXPECT_EQ(run("simulate " + q(dir / "grid.json") + " --out " + q(dir)), 1);
  EXPECT_EQ(run("simulate " + q(dir / "missing.json") + " --out " + q(dir)), 2);
}

TEST(Cli, FitRoundTripNoiseless) {
  const auto dir = scratch("fit");
  SimParams sp{{20, 20, 20}, {3, 3, 3}, {6, 6, 6}, 50.0, 0.0, NoiseFamily::kGaussian, {0, 1, 2}};
  const auto inst = gen_instance(sp, 4);
  write_tns(dir / "y.tns", inst.y);
  ASSERT_EQ(run("fit " + q(dir / "y.tns") + " --ranks 3,3,3 --sigma 1e-6 --sparse-modes 1,2,3 --denoised --out " +
                q(dir)),
            0);
  const auto j = nlohmann::json::parse(read_file(dir / "fit.json"));
  EXPECT_EQ(j["sparse_modes"], nlohmann::json::array({1, 2, 3}));
  EXPECT_EQ(j["estimators"]["sigma"], "given");
  const Tensor denoised = read_tns(dir / "denoised.tns");
  EXPECT_LE((denoised - inst.x).norm(), 1e-6 * inst.x.norm());
  for (std::size_t k = 0; k < 3; ++k)
    EXPECT_EQ(j["supports"][k]["second"].get<std::vector<Index>>(), inst.supports[k]);
}

TEST(Cli, FitRejectsBadArguments) {
  const auto dir = scratch("fitbad");
  Tensor y(Shape{4, 4, 4});
  y.data().setLinSpaced(-1.0, 1.0);
  write_tns(dir / "y.tns", y);
  EXPECT_EQ(run("fit " + q(dir / "y.tns") + " --ranks 2,2,2 --sigma 0 --out " + q(dir)), 1);
  EXPECT_EQ(run("fit " + q(dir / "y.tns") + " --ranks 2,2 --sigma 1 --out " + q(dir)), 1);
  EXPECT_EQ(run("fit " + q(dir / "y.tns") + " --ranks 5,2,2 --sigma 1 --out " + q(dir)), 1);
  EXPECT_EQ(run("fit " + q(dir / "y.tns") + " --ranks 2,2,2 --sigma 1 --sparse-modes 4 --out " + q(dir)), 1);
  EXPECT_EQ(run("fit " + q(dir / "missing.tns") + " --ranks 2,2,2 --sigma 1 --out " + q(dir)), 2);
  write_file_atomic(dir / "junk.tns", "TNS1garbage");
  EXPECT_EQ(run("fit " + q(dir / "junk.tns") + " --ranks 2,2,2 --sigma 1 --out " + q(dir)), 2);
  // All-zero data: the median noise estimate is zero.
  write_tns(dir / "zero.tns", Tensor(Shape{4, 4, 4}));
  EXPECT_EQ(run("fit " + q(dir / "zero.tns") + " --out " + q(dir)), 3);
}

TEST(Cli, FitAutoEstimatesSigmaAndRanks) {
  const auto dir = scratch("auto");
  SimParams base{{50, 50, 50}, {5, 5, 5}, {15, 15, 15}, 70.0, 1.0, NoiseFamily::kGaussian, {0, 1, 2}};
  SimParams sp = base;
  sp.p = {30, 30, 30};
  sp.s = {9, 9, 9};
  sp.r = {3, 3, 3};
  sp.lambda = 70.0 * std::sqrt((27.0 * std::log(27000.0)) / (45.0 * std::log(125000.0)));
  const auto inst = gen_instance(sp, 6);
  write_tns(dir / "y.tns", inst.y);
  ASSERT_EQ(run("fit " + q(dir / "y.tns") + " --sparse-modes 1,2,3 --out " + q(dir)), 0);
  const auto j = nlohmann::json::parse(read_file(dir / "fit.json"));
  EXPECT_NEAR(j["sigma"].get<double>(), 1.0, 0.05);
  EXPECT_EQ(j["ranks"].get<std::vector<Index>>(), (std::vector<Index>{3, 3, 3}));
  EXPECT_EQ(j["estimators"]["sigma"], "median");
  EXPECT_EQ(j["estimators"]["ranks"], "spectral");
}

TEST(Cli, EstimateParams) {
  const auto dir = scratch("est");
  SimParams sp{{20, 20, 20}, {2, 2, 2}, {6, 6, 6}, 40.0, 1.0, NoiseFamily::kGaussian, {0, 1, 2}};
  write_tns(dir / "y.tns", gen_instance(sp, 2).y);
  ASSERT_EQ(run("estimate-params " + q(dir / "y.tns") + " --sparse-modes 1,2,3 --out " + q(dir)), 0);
  const auto j = nlohmann::json::parse(read_file(dir / "estimates.json"));
  EXPECT_GT(j["sigma_hat"].get<double>(), 0.0);
  EXPECT_EQ(j["ranks_hat"].size(), 3u);
}

TEST(Cli, PipelineSmokeAndCsvInput) {
  const auto dir = scratch("pipe");
  ASSERT_EQ(run("pipeline --smoke --seed 2 --out " + q(dir / "smoke")), 0);
  for (const char* f : {"fit.json", "summary.json", "back_transform_raw.csv", "supports.csv"})
    EXPECT_TRUE(fs::exists(dir / "smoke" / f)) << f;

  const auto smoke = make_mortality_smoke(5, {30, 12, 8}, {2, 2, 2}, 60.0, 1.0);
  LongTable table{{"age", "year", "country"}, "rate", smoke.y};
  for (Index i = 0; i < table.tensor.size(); ++i) table.tensor.data()[i] = std::exp(0.01 * smoke.y.data()[i]);
  write_file_atomic(dir / "rates.csv", format_long_csv(table));
  EXPECT_EQ(run("pipeline " + q(dir / "rates.csv") + " --pre log --rho 0.5 --trim 0.15 --out " + q(dir / "csv")), 0);
  EXPECT_EQ(run("pipeline " + q(dir / "rates.csv") + " --rho 1.5 --out " + q(dir / "csv")), 1);
  EXPECT_EQ(run("pipeline " + q(dir / "rates.csv") + " --difference-mode 4 --out " + q(dir / "csv")), 1);
  EXPECT_EQ(run("pipeline --out " + q(dir / "none")), 1);
}

TEST(Cli, BenchSmall) {
  const auto dir = scratch("bench");
  ASSERT_EQ(run("bench --scale 0.2 --runs 1 --out " + q(dir)), 0);
  const auto rows = lines(read_file(dir / "bench.csv"));
  EXPECT_GE(rows.size(), 2u);
  (void)nlohmann::json::parse(read_file(dir / "bench.json"));
}
