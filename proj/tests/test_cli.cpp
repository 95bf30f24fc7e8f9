#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "stacked/serialization.hpp"

using namespace stacked;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(const std::vector<std::string>& args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::main_entry(args, in, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "stacked_cli_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, CatalogPipesIntoCheck) {
  const auto cat = invoke({"config", "catalog", "rPD", "--K", "3"});
  ASSERT_EQ(cat.code, 0) << cat.err;
  const auto check = invoke({"config", "check", "-"}, cat.out);
  ASSERT_EQ(check.code, 0) << check.err;
  const Json report = parse_json(check.out);
  EXPECT_TRUE(report["balanced"].get<bool>());
  EXPECT_TRUE(report["nondegeneracy"]["nondegenerate"].get<bool>());
}

TEST(Cli, UsageErrorsExitTwo) {
  const auto unknown = invoke({"config", "catalog", "no-such-stack"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("twin-rPD"), std::string::npos);
  EXPECT_EQ(invoke({"config"}).code, 2);
  EXPECT_EQ(invoke({"bogus"}).code, 2);
  EXPECT_EQ(invoke({"hecke", "solve", "--tau", "0,-1"}).code, 2);
  EXPECT_EQ(invoke({"hecke", "solve", "--tau", "1"}).code, 2);
  EXPECT_EQ(invoke({"config", "check", (scratch_dir() / "missing.json").string()}).code, 2);
  EXPECT_EQ(invoke({"config", "check", "-"}, "{\"tau\": [0, 1]}").code, 2);
  EXPECT_EQ(invoke({"surface", "mesh", "-", "--layers", "2..1"}).code, 2);
  const auto cfg = invoke({"config", "catalog", "rPD", "--K", "2"}).out;
  EXPECT_EQ(invoke({"surface", "solve", "-", "--t", "0.5"}, cfg).code, 2);
  EXPECT_EQ(invoke({"surface", "solve", "-", "--t", "0.01", "--schedule", "0.005,x"}, cfg).code, 2);
}

TEST(Cli, HelpExitsZero) {
  const auto help = invoke({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("surface"), std::string::npos);
}

TEST(Cli, HeckeSolveAndAtlas) {
  const auto solve = invoke({"hecke", "solve", "--tau", "0.5,0.8660254037844386"});
  ASSERT_EQ(solve.code, 0) << solve.err;
  const Json set = parse_json(solve.out);
  EXPECT_EQ(set["count"].get<int>(), static_cast<int>(set["roots"].size()));
  const auto atlas = invoke({"hecke", "atlas", "--steps", "2", "--im-min", "0.8", "--im-max", "1.2"});
  ASSERT_EQ(atlas.code, 0) << atlas.err;
  std::istringstream rows(atlas.out);
  std::string line;
  std::getline(rows, line);
  EXPECT_EQ(line, "tau_re,tau_im,count");
  int n = 0;
  while (std::getline(rows, line)) ++n;
  EXPECT_EQ(n, 9);
}

TEST(Cli, SolveMeshPipelineIsReproducible) {
  const fs::path dir = scratch_dir();
  const auto cfg = (dir / "rpd.json").string();
  const auto state = (dir / "state.json").string();
  const auto obj = (dir / "mesh.obj").string();
  ASSERT_EQ(invoke({"config", "catalog", "rPD", "--K", "2", "--out", cfg}).code, 0);
  const auto solve = invoke({"surface", "solve", cfg, "--t", "0.02", "--out", state, "--verbose"});
  ASSERT_EQ(solve.code, 0) << solve.err;
  EXPECT_NE(solve.err.find("residual"), std::string::npos);
  const Json doc = parse_json(read_text(state));
  EXPECT_LT(doc["report"]["final_residual"].get<double>(), 1e-9);
  const auto mesh = invoke({"surface", "mesh", state, "--layers", "-1..1", "--copies", "2", "--grid-res", "48",
                            "--out", obj});
  ASSERT_EQ(mesh.code, 0) << mesh.err;
  const Json summary = parse_json(mesh.out);
  EXPECT_TRUE(summary["heights_increasing"].get<bool>());
  EXPECT_TRUE(summary["embeddedness_ok"].get<bool>());
  const Json sidecar = parse_json(read_text(dir / "mesh.json"));
  EXPECT_EQ(sidecar["frames"].size(), 3u);
  EXPECT_EQ(sidecar["copies"].get<int>(), 2);

  const std::string first_state = read_text(state);
  const std::string first_obj = read_text(obj);
  ASSERT_EQ(invoke({"surface", "solve", cfg, "--t", "0.02", "--out", state}).code, 0);
  ASSERT_EQ(invoke({"surface", "mesh", state, "--layers", "-1..1", "--copies", "2", "--grid-res", "48", "--out", obj})
                .code,
            0);
  EXPECT_EQ(read_text(state), first_state);
  EXPECT_EQ(read_text(obj), first_obj);
  fs::remove_all(dir);
}
