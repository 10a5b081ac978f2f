#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "mcflab/scenario.hpp"

using namespace mcflab;
namespace sc = mcflab::scenario;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "name": "minimal",
  "grid": {"dim": 2, "half_width_box_units": 1.0, "spacing_box_units": 0.0625},
  "ambient_field": {"kind": "radial", "kappa_per_time": 0.5},
  "flow": {"max_time_flow_units": 0.02},
  "sets": {"disk": {"shape": "ball", "radius_box_units": 0.5}},
  "checks": [{"id": "Compactness"}]
})";

ErrorKind kind_of(const std::string& text) {
  try {
    (void)sc::parse_scenario(text, "inline.json");
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::Io;
}

std::string with(const std::string& from, const std::string& to) {
  std::string s = kMinimal;
  const auto at = s.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return s.replace(at, from.size(), to);
}

int run_cli(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" MCFLAB_CLI "' " + args + " > cli.out 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("mcflab_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Parse, MinimalResolvesAndRecordsBounds) {
  const auto s = sc::parse_scenario(kMinimal, "inline.json");
  EXPECT_EQ(s.name, "minimal");
  EXPECT_EQ(s.grid.counts()[0], 33);
  EXPECT_NEAR(s.field.boundSupNorm, 0.5 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(s.lambda, 0.5, 1e-12);
  EXPECT_EQ(s.outputs.reportPath, "minimal.report.jsonl");
  EXPECT_NE(sc::header_line(s).find("lambda=0.5"), std::string::npos);
}

TEST(Parse, SyntaxErrorCarriesLineAndColumn) {
  const std::string bad = "{\n  \"name\": \"x\",\n  \"grid\": {\"dim\": 2,,}\n}";
  try {
    (void)sc::parse_scenario(bad, "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("bad.json:3:"), std::string::npos) << e.what();
  }
}

TEST(Parse, ResolutionErrors) {
  EXPECT_EQ(kind_of(with("\"name\": \"minimal\",", "")), ErrorKind::Resolution);
  EXPECT_EQ(kind_of(with("Compactness", "NoSuchCheck")), ErrorKind::Resolution);
  EXPECT_EQ(kind_of(with("\"shape\": \"ball\"", "\"shape\": \"blob\"")), ErrorKind::Resolution);
  EXPECT_EQ(kind_of(with("\"kind\": \"radial\"", "\"kind\": \"vortex\"")), ErrorKind::Resolution);
  EXPECT_EQ(kind_of(with("{\"id\": \"Compactness\"}", "{\"id\": \"Avoidance\", \"y\": \"disk\", \"z\": \"ghost\"}")),
            ErrorKind::Resolution);
  EXPECT_EQ(kind_of(with("\"spacing_box_units\": 0.0625", "\"spacing_box_units\": 0.0625, \"max_nodes\": 100")),
            ErrorKind::Resolution);
  EXPECT_EQ(kind_of(with("\"radius_box_units\": 0.5", "\"radius_box_units\": \"half\"")), ErrorKind::Resolution);
}

TEST(Parse, UnstableFlowSettingsArePreconditions) {
  EXPECT_EQ(kind_of(with("\"max_time_flow_units\": 0.02", "\"max_time_flow_units\": 0.02, \"cfl\": 0.9")),
            ErrorKind::Precondition);
}

TEST(Parse, OverridesApply) {
  sc::Overrides ov;
  ov.gridOverride = 8;
  ov.reportPath = "elsewhere.jsonl";
  ov.seed = 42;
  ov.dumpEvery = 3;
  const auto s = sc::parse_scenario(kMinimal, "inline.json", ov);
  EXPECT_DOUBLE_EQ(s.grid.spacing(), 0.125);
  EXPECT_EQ(s.outputs.reportPath, "elsewhere.jsonl");
  EXPECT_EQ(s.seed, 42u);
  EXPECT_EQ(s.outputs.dumpEvery, 3);
}

TEST(Parse, PolynomialFieldMatchesRadial) {
  const auto s = sc::parse_scenario(with(R"("ambient_field": {"kind": "radial", "kappa_per_time": 0.5})",
                                         R"("ambient_field": {"kind": "polynomial", "terms": [
                                              {"component": 0, "coefficient": 0.5, "powers": [1, 0]},
                                              {"component": 1, "coefficient": 0.5, "powers": [0, 1]}]})"),
                                    "inline.json");
  const auto R = AmbientField::radial(2, 0.5);
  const Vec x = make_vec(0.3, -0.7);
  EXPECT_NEAR((s.field.X(x) - R.X(x)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((s.field.jac(x) - R.jac(x)).norm(), 0.0, 1e-15);
}

TEST(Run, ReportIsDeterministic) {
  const auto dir = scratch("determinism");
  auto s = sc::parse_scenario(kMinimal, "inline.json");
  std::string text[2];
  for (int k = 0; k < 2; ++k) {
    s.outputs.reportPath = (dir / ("r" + std::to_string(k) + ".jsonl")).string();
    sc::write_report_file(s, sc::run_scenario(s));
    std::ifstream in(s.outputs.reportPath);
    std::string line;
    while (std::getline(in, line))
      if (line.rfind("#timing", 0) != 0) text[k] += line + "\n";
  }
  EXPECT_EQ(text[0], text[1]);
  EXPECT_NE(text[0].find("\"Compactness\""), std::string::npos);
}

TEST(Bundled, AtLeastTwelveScenariosLoad) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(MCFLAB_SCENARIO_DIR)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW((void)sc::load_scenario(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 12);
}

TEST(Describe, EveryCheckHasText) {
  for (const auto& [id, name] : theorem_names()) {
    const auto d = sc::describe_check(id);
    EXPECT_GT(std::string(d.statement).size(), 20u) << name;
  }
  EXPECT_NE(std::string(sc::describe_check(TheoremId::DistanceTheorem).statement).find("e^(lambda t)"), std::string::npos);
}

TEST(Cli, MalformedConfigWritesNothing) {
  const auto dir = scratch("malformed");
  EXPECT_EQ(run_cli(std::string("run '") + MCFLAB_TEST_DATA + "/malformed.json'", dir), 2);
  EXPECT_FALSE(fs::exists(dir / "malformed.report.jsonl"));
  std::ifstream in(dir / "cli.out");
  std::string all((std::istreambuf_iterator<char>(in)), {});
  EXPECT_NE(all.find("malformed.json:5:"), std::string::npos) << all;
}

TEST(Cli, OverlappingSetsArePreconditionError) {
  const auto dir = scratch("overlap");
  EXPECT_EQ(run_cli(std::string("run '") + MCFLAB_TEST_DATA + "/overlapping.json'", dir), 4);
  // the report is still written, with the error recorded
  std::ifstream in(dir / "overlapping.report.jsonl");
  std::string all((std::istreambuf_iterator<char>(in)), {});
  EXPECT_NE(all.find("#error"), std::string::npos);
}

TEST(Cli, UnknownSetIsResolutionError) {
  const auto dir = scratch("unknown");
  EXPECT_EQ(run_cli(std::string("run '") + MCFLAB_TEST_DATA + "/unknown-set.json'", dir), 3);
}

TEST(Cli, PassingScenarioExitsZero) {
  const auto dir = scratch("pass");
  EXPECT_EQ(run_cli(std::string("run '") + MCFLAB_SCENARIO_DIR + "/compactness.json' --report out/c.jsonl", dir), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "c.jsonl"));
}

TEST(Cli, FailingCheckExitsOne) {
  const auto dir = scratch("fail");
  // the literal perturbation ratio reading fails, so this bundled scenario exits 1
  EXPECT_EQ(run_cli(std::string("run '") + MCFLAB_SCENARIO_DIR + "/barrier-calculus.json' --report r.jsonl", dir), 1);
}

TEST(Cli, ListAndDescribe) {
  const auto dir = scratch("list");
  EXPECT_EQ(run_cli("list", dir), 0);
  std::ifstream in(dir / "cli.out");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_GE(lines, 12);
  EXPECT_EQ(run_cli("describe DistanceTheorem", dir), 0);
  EXPECT_EQ(run_cli("describe NotACheck", dir), 3);
  EXPECT_GE(run_cli("missing-command", dir), 100);  // CLI11 usage errors keep their own codes
}

TEST(Cli, MissingFileIsIoError) {
  const auto dir = scratch("missing");
  EXPECT_EQ(run_cli("run /nonexistent/scenario.json", dir), 6);
}
