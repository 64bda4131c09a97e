#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "loopalg/cli.hpp"
#include "support.hpp"

using namespace loopalg;
using namespace loopalg::testing;

namespace {

struct CliRun {
  int code;
  std::string out, err;
  Json json() const { return Json::parse(out); }
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string model(const std::string& n) { return models_dir() + "/" + n + ".sul"; }

std::string temp_file(const std::string& name, const std::string& text) {
  std::string path = ::testing::TempDir() + name;
  std::ofstream(path) << text;
  return path;
}

TEST(Cli, HochschildTableJson) {
  CliRun r = run({"hh", model("m11"), "--max-degree", "20", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  Json j = r.json();
  std::vector<int> dims;
  for (const auto& row : j["tables"]) dims.push_back(row["dimension"]);
  ASSERT_EQ(dims.size(), 21u);
  EXPECT_EQ(std::vector<int>(dims.begin(), dims.begin() + 7), (std::vector<int>{1, 0, 2, 2, 3, 3, 4}));
  EXPECT_EQ(j["verdicts"]["window"]["max_degree"], 20);
  EXPECT_EQ(j["elapsed_ms"], 0.0);
}

TEST(Cli, ComponentFilter) {
  CliRun all = run({"hh", model("m11"), "--max-degree", "8", "--format", "json"});
  int total = 0;
  for (int w = 0; w <= 8; ++w) {
    CliRun r = run({"hh", model("m11"), "--max-degree", "8", "--component", std::to_string(w), "--format", "json"});
    ASSERT_EQ(r.code, 0);
    for (const auto& row : r.json()["tables"]) total += row["dimension"].get<int>();
  }
  int expect = 0;
  for (const auto& row : all.json()["tables"]) expect += row["dimension"].get<int>();
  EXPECT_EQ(total, expect);
}

TEST(Cli, EmptyWindow) {
  CliRun r = run({"hh", model("m11"), "--max-degree", "-1", "--format", "json"});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.json()["tables"].empty());
}

TEST(Cli, BvExactVerdict) {
  CliRun r = run({"bv-exact", model("m11"), "--max-degree", "40", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  Json v = r.json()["verdicts"];
  EXPECT_EQ(v["bv_exact"], true);
  EXPECT_EQ(v["max_degree"], 40);
  EXPECT_EQ(v["cross_check_agrees"], true);
}

TEST(Cli, HcMinusAndGysin) {
  EXPECT_EQ(run({"hcminus", model("s3"), "--max-degree", "10"}).code, 0);
  CliRun g = run({"gysin-check", model("cp2"), "--max-degree", "12", "--format", "json"});
  EXPECT_EQ(g.code, 0);
  EXPECT_EQ(g.json()["verdicts"]["gysin_ok"], true);
}

TEST(Cli, Weights) {
  CliRun ok = run({"weights", model("m11"), "--format", "json"});
  EXPECT_EQ(ok.json()["verdicts"]["weights_valid"], true);
  EXPECT_EQ(ok.json()["verdicts"]["bv_exact_computed"], true);
  CliRun none = run({"weights", model("appendixA"), "--max-weight", "5", "--format", "json"});
  EXPECT_EQ(none.code, 0);
  EXPECT_EQ(none.json()["verdicts"]["search_valid"], 0);
  EXPECT_EQ(none.json()["verdicts"]["search_tried"], 15625);
}

TEST(Cli, Emss) {
  CliRun r = run({"emss", model("m11"), "--page", "2", "--max-degree", "20", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.json()["verdicts"]["page_zero"], true);
  CliRun e1 = run({"emss", model("m11"), "--page", "1", "--max-degree", "12", "--format", "json"});
  EXPECT_EQ(e1.json()["verdicts"]["page_zero"], false);
}

TEST(Cli, SbracketNamedOutput) {
  CliRun r = run({"sbracket", model("m11"), "--max-degree", "16", "--class", "x'", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::string dsb = r.json()["tables"][0]["dsb"];
  EXPECT_NE(dsb.find("eta_{1,1}"), std::string::npos) << dsb;
}

TEST(Cli, SbracketWithShriekFile) {
  std::string f = temp_file("s3.shriek", "shriek fundamental = R(x) - L(x)\n");
  CliRun r = run({"sbracket", model("s3"), "--max-degree", "12", "--shriek", f, "--table", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.json()["witnesses"]["bracket_table"].empty());
  std::string bad = temp_file("bad.shriek", "shriek fundamental = R(x)\n");
  EXPECT_EQ(run({"sbracket", model("s3"), "--shriek", bad}).code, 1);
}

TEST(Cli, ClassifyingSpace) {
  std::string su2 = temp_file("su2.sul", "generator x deg 3\n");
  CliRun r = run({"bg", su2, "--class", "y1^3*x1v", "--class", "u^0", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.json()["witnesses"]["bracket"], "-3 y1^2*x1v");
  EXPECT_EQ(run({"bg", model("cp2")}).code, 1);
}

TEST(Cli, ExitCodes) {
  std::string bad = temp_file("bad.sul", "generator a deg 2\ngenerator b deg 3\ngenerator c deg 4\ndiff a = b\ndiff b = c\n");
  CliRun r = run({"parse", bad});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("'a'"), std::string::npos) << r.err;
  EXPECT_EQ(run({"parse", model("m11")}).code, 0);
  EXPECT_EQ(run({"parse", "/nonexistent.sul"}).code, 1);
  EXPECT_EQ(run({"frobnicate", model("m11")}).code, 1);
  EXPECT_EQ(run({"hh"}).code, 1);
  EXPECT_EQ(run({"hh", model("m11"), "--format", "xml"}).code, 1);
  EXPECT_EQ(run({"sbracket", model("m11"), "--max-degree", "12", "--class", "z"}).code, 1);
}

TEST(Cli, JobsDoNotChangeOutput) {
  for (const char* cmd : {"hh", "hcminus", "bv-exact"}) {
    CliRun a = run({cmd, model("m11"), "--max-degree", "18", "--format", "json", "--jobs", "1"});
    CliRun b = run({cmd, model("m11"), "--max-degree", "18", "--format", "json", "--jobs", "3"});
    EXPECT_EQ(a.out, b.out) << cmd;
  }
}

TEST(Cli, TimingIsOptIn) {
  CliRun r = run({"hh", model("s3"), "--max-degree", "4", "--format", "json", "--timing"});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.json()["elapsed_ms"].is_number());
}

}  // namespace
