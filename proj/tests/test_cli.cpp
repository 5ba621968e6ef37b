#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "germforge/cli.hpp"

using namespace germforge;

namespace {

const std::string kFixtures = GERMFORGE_FIXTURES;

std::string fixture(const std::string& name) { return kFixtures + "/" + name; }

std::filesystem::path scratch() {
  const auto dir = std::filesystem::temp_directory_path() / "germforge_cli_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string out_path(const std::string& name) { return (scratch() / name).string(); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::vector<std::string>& args, std::string* out = nullptr, std::string* err = nullptr) {
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

int run_binary(const std::string& args) {
  const int status = std::system((std::string(GERMFORGE_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(CliVerify, BergerOnFlatMetric) {
  std::string out;
  ASSERT_EQ(run({"verify", "berger", "--input", fixture("metric_flat4.json")}, &out), 0);
  const json j = json::parse(out);
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(j.at("max_residual").get<double>(), 0.0);
  EXPECT_EQ(j.at("points_sampled"), 10);
}

TEST(CliVerify, BergerOnRandomMetricSeed42) {
  std::string out;
  ASSERT_EQ(run({"verify", "berger", "--input", fixture("metric_random4.json"), "--seed", "42"}, &out), 0);
  EXPECT_LE(json::parse(out).at("max_residual").get<double>(), 1e-8);
  EXPECT_EQ(run({"verify", "berger", "--input", "random-riemannian", "--seed", "42"}), 0);
}

TEST(CliVerify, GrayOnThreeDimensionalInput) {
  std::string err;
  EXPECT_EQ(run({"verify", "gray", "--input", fixture("metric_random3.json")}, nullptr, &err), 2);
  EXPECT_NE(err.find("precondition"), std::string::npos);
  EXPECT_NE(err.find("dimension 4"), std::string::npos);
}

TEST(CliVerify, StructureIdentitiesOnBundles) {
  EXPECT_EQ(run({"verify", "gray", "--input", fixture("hermitian_pair.json")}), 0);
  EXPECT_EQ(run({"verify", "chern", "--input", fixture("kahler_germ.json"), "--points", "4"}), 0);
  EXPECT_EQ(run({"verify", "kahler", "--input", "product-kahler", "--points", "4"}), 0);
  EXPECT_EQ(run({"verify", "gray", "--input", fixture("metric_random4.json")}), 2);
}

TEST(CliVerify, ToleranceFailureIsExitOne) {
  EXPECT_EQ(run({"verify", "berger", "--input", fixture("metric_random4.json"), "--tolerance", "0"}), 1);
}

TEST(CliVerify, CsvHasHeader) {
  std::string out;
  ASSERT_EQ(run({"verify", "berger", "--input", "flat", "--format", "csv", "--points", "3"}, &out), 0);
  std::istringstream in(out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x0,x1,x2,x3,residual");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 3u);
}

TEST(CliTransplant, MetricGermIntoItselfIsHost) {
  const std::string report = out_path("self.json");
  const std::string g = fixture("metric_normalized4.json");
  ASSERT_EQ(run({"transplant", "metric", "--germ", g, "--host", g, "--out", report}), 0);
  const json j = read_json_file(report);
  EXPECT_TRUE(j.at("passed").get<bool>());
  EXPECT_EQ(j.at("deviation").at("c0").get<double>(), 0.0);
  const PolynomialField host = read_germ(g);
  const PolynomialField output = read_germ(out_path("self.germ.json"));
  double gap = 0.0;
  for (const auto& p : detail::random_points(4, 0.5, 10, 3))
    gap = std::max(gap, max_abs_difference(host.field().values(p), output.field().values(p)));
  EXPECT_LE(gap, 1e-14);
}

TEST(CliTransplant, KahlerFixturesPass) {
  const std::string report = out_path("kahler.json");
  ASSERT_EQ(run({"transplant", "kahler", "--germ", fixture("kahler_germ.json"), "--host", fixture("kahler_host.json"),
                 "--out", report, "--points", "30"}),
            0);
  const json j = read_json_file(report);
  bool found = false;
  for (const auto& c : j.at("checks"))
    if (c.at("name") == "d_omega") {
      found = true;
      EXPECT_TRUE(c.at("passed").get<bool>());
    }
  EXPECT_TRUE(found);
  EXPECT_EQ(read_germ(out_path("kahler.germ.json")).kind(), FieldKind::metric);
}

TEST(CliTransplant, SignatureMismatchIsInputError) {
  std::string err;
  EXPECT_EQ(run({"transplant", "metric", "--germ", fixture("metric_normalized4.json"), "--host",
                 fixture("metric_lorentz4.json")},
                nullptr, &err),
            2);
  EXPECT_NE(err.find("signature"), std::string::npos);
  EXPECT_EQ(run({"transplant", "metric", "--germ", fixture("metric_random3.json"), "--host", "flat"}), 2);
}

TEST(CliTransplant, EveryKindWithBuiltins) {
  const std::vector<std::pair<std::string, std::string>> cases{{"metric", "random-riemannian"},
                                                               {"connection", "random-connection:3"},
                                                               {"almost-complex", "random-para-hermitian"},
                                                               {"almost-hermitian", "random-hermitian"},
                                                               {"kahler", "random-para-kahler"},
                                                               {"weyl", "random-weyl:3"}};
  for (const auto& [kind, builtin] : cases)
    EXPECT_EQ(run({"transplant", kind, "--germ", builtin, "--host", builtin, "--points", "20"}), 0) << kind;
  EXPECT_EQ(run({"transplant", "teleport", "--germ", "flat", "--host", "flat"}), 2);
}

TEST(CliRealize, RiemannianModel) {
  const std::string report = out_path("riem.json");
  ASSERT_EQ(run({"realize", "riemannian", "--model", fixture("model_riemannian.json"), "--out", report}), 0);
  const json j = read_json_file(report);
  EXPECT_LE(j.at("curvature_error").get<double>(), 1e-10);
  const PolynomialField g = read_germ(out_path("riem.germ.json"));
  const CurvatureModel model = read_model(fixture("model_riemannian.json"));
  EXPECT_LE(max_abs_difference(riemann(as_metric(g), Point(4, 0.0)).r, model.a), 1e-10);
}

TEST(CliRealize, Xi1313ThetaFile) {
  const std::string report = out_path("xi.json");
  ASSERT_EQ(run({"realize", "para-kahler", "--model", fixture("model_xi1313.json"), "--out", report}), 0);
  const json theta = read_json_file(out_path("xi.theta.json")).at("theta");
  ASSERT_EQ(theta.size(), 4u);
  for (const auto& t : theta) EXPECT_EQ(t.at("value").get<double>(), 0.125);
  EXPECT_TRUE(read_json_file(report).at("para_kahler").at("passed").get<bool>());
}

TEST(CliRealize, BianchiViolationNamesSymmetry) {
  std::string err;
  EXPECT_EQ(run({"realize", "--model", fixture("model_bianchi_violation.json")}, nullptr, &err), 2);
  EXPECT_NE(err.find("bianchi"), std::string::npos);
}

TEST(CliRealize, IntoHost) {
  std::string out;
  ASSERT_EQ(run({"realize", "--model", "random-para-kahler", "--host", "random-para-kahler"}, &out), 0);
  EXPECT_TRUE(json::parse(out).at("transplant").at("passed").get<bool>());
}

TEST(CliGeodesic, FlatScenario) {
  std::string out;
  ASSERT_EQ(run({"geodesic", "flat"}, &out), 0);
  const json j = json::parse(out);
  EXPECT_EQ(j.at("verdict"), "complete up to T_max");
  EXPECT_EQ(j.at("reached_horizon"), 100);
}

TEST(CliGeodesic, ScenarioFilesWithExpectations) {
  EXPECT_EQ(run({"geodesic", fixture("scenario_meneghini.json")}), 0);
  EXPECT_EQ(run({"geodesic", fixture("scenario_circle.json")}), 0);
  EXPECT_EQ(run({"geodesic", "--input", fixture("scenario_flat.json"), "--samples", "5"}), 0);
  std::string out;
  ASSERT_EQ(run({"geodesic", fixture("scenario_misner.json"), "--samples", "6"}, &out), 0);
  EXPECT_EQ(json::parse(out).at("verdict"), "incomplete evidence");
}

TEST(CliGeodesic, LemmaCheckScenario) {
  std::string out;
  ASSERT_EQ(run({"geodesic", "lemma-check", "--germ", fixture("connection_random3.json"), "--epsilon", "0.05",
                 "--samples", "50"},
                &out),
            0);
  const json j = json::parse(out);
  EXPECT_EQ(j.at("complete_fraction").get<double>(), 1.0);
  EXPECT_TRUE(j.at("matches_expectation").get<bool>());
}

TEST(CliGeodesic, TrajectoryCsv) {
  std::string out;
  ASSERT_EQ(run({"geodesic", "circle-gamma", "--samples", "2", "--format", "csv"}, &out), 0);
  std::istringstream in(out);
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "sample,t,x0,speed");
  ASSERT_TRUE(static_cast<bool>(std::getline(in, row)));
  EXPECT_EQ(row.substr(0, 4), "0,0,");
}

TEST(CliGeodesic, UnknownScenario) { EXPECT_EQ(run({"geodesic", "wormhole"}), 2); }

TEST(CliContract, UsageErrors) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"verify", "berger"}), 2);
  EXPECT_EQ(run({"verify", "berger", "--input", "flat", "--format", "xml"}), 2);
  EXPECT_EQ(run({"verify", "nonsense", "--input", "flat"}), 2);
  EXPECT_EQ(run({"verify", "berger", "--input", out_path("missing.json")}), 2);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST(CliContract, MalformedGermFile) {
  const std::string bad = out_path("bad.json");
  write_text_file(bad, "{\"kind\": \"metric\", \"dimension\": 2, \"coefficients\": [{\"component\": [0]}]}");
  EXPECT_EQ(run({"verify", "berger", "--input", bad}), 2);
  write_text_file(bad, "{not json");
  EXPECT_EQ(run({"verify", "berger", "--input", bad}), 2);
}

TEST(CliContract, BinaryExitCodes) {
  EXPECT_EQ(run_binary("verify berger --input " + fixture("metric_flat4.json")), 0);
  EXPECT_EQ(run_binary("verify berger --input " + fixture("metric_random4.json") + " --tolerance 0"), 1);
  EXPECT_EQ(run_binary("verify gray --input " + fixture("metric_random3.json")), 2);
  EXPECT_EQ(run_binary("frobnicate"), 2);
}

TEST(CliContract, ReportsAreByteIdentical) {
  const auto twice = [](std::vector<std::string> args, const std::string& name) {
    std::vector<std::string> a = args, b = args;
    a.insert(a.end(), {"--out", out_path(name + "_a.json")});
    b.insert(b.end(), {"--out", out_path(name + "_b.json")});
    EXPECT_EQ(run(a), run(b));
    EXPECT_EQ(slurp(out_path(name + "_a.json")), slurp(out_path(name + "_b.json"))) << name;
  };
  twice({"verify", "berger", "--input", "random-riemannian", "--seed", "7"}, "verify");
  twice({"transplant", "metric", "--germ", "random-riemannian", "--host", "random-riemannian", "--seed", "7",
         "--points", "20"},
        "transplant");
  twice({"realize", "--model", "random-para-kahler", "--seed", "7"}, "realize");
  twice({"geodesic", "meneghini", "--samples", "10", "--seed", "7"}, "geodesic");
  EXPECT_EQ(run_binary("geodesic misner --samples 4 --out " + out_path("bin_a.json")), 0);
  EXPECT_EQ(run_binary("geodesic misner --samples 4 --out " + out_path("bin_b.json")), 0);
  EXPECT_EQ(slurp(out_path("bin_a.json")), slurp(out_path("bin_b.json")));
}
