#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "s2cgan/checkpoint.hpp"
#include "s2cgan/cli.hpp"
#include "s2cgan/error.hpp"
#include "s2cgan/report.hpp"
#include "test_util.hpp"

using namespace s2cgan;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli_main(args, in, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("s2cgan_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, TaskKind kind) {
  auto cfg = small_config(kind);
  cfg.seeds = {0};
  cfg.output_dir = (dir / "runs").string();
  const fs::path p = dir / "config.json";
  std::ofstream(p) << to_json(cfg).dump(2);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("grid literals and edits") {
  CHECK(parse_grid_literal("0001112220001112", 16, 3) ==
        std::vector<int>{0, 0, 0, 1, 1, 1, 2, 2, 2, 0, 0, 0, 1, 1, 1, 2});
  CHECK_THROWS_AS(parse_grid_literal("00011122200011122", 16, 3), InvalidArgument);
  CHECK_THROWS_AS(parse_grid_literal("000111222000111x", 16, 3), InvalidArgument);
  CHECK_THROWS_AS(parse_grid_literal("0001112220001113", 16, 3), InvalidArgument);

  std::vector<int> g(16, 0);
  apply_edit(g, "set 0..4 2", 3);
  for (std::size_t i = 0; i < 16; ++i) CHECK(g[i] == (i <= 4 ? 2 : 0));
  apply_edit(g, "set 9 1", 3);
  CHECK(grid_to_string(g) == "2222200001000000");
  CHECK_THROWS_AS(apply_edit(g, "set 4..2 1", 3), InvalidArgument);
  CHECK_THROWS_AS(apply_edit(g, "set 0..16 1", 3), InvalidArgument);
  CHECK_THROWS_AS(apply_edit(g, "set 0 3", 3), InvalidArgument);
  CHECK_THROWS_AS(apply_edit(g, "paint 0 1", 3), InvalidArgument);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"train", "--task", "c"}).code == 1);
  const auto dir = scratch("bad_config");
  std::ofstream(dir / "bad.json") << R"({"lambda":"x"})";
  const auto r = run({"train", "--config", (dir / "bad.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("/lambda") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("train, eval and infer") {
  const auto dir = scratch("train");
  const auto cfg = write_config(dir, TaskKind::b);
  const auto t = run({"train", "--config", cfg.string()});
  REQUIRE(t.code == 0);
  const fs::path seed_dir = dir / "runs" / "s2cgan-taskb" / "seed0";
  CHECK(fs::exists(seed_dir / "checkpoint.s2cg"));
  CHECK(fs::exists(seed_dir / "config.json"));
  const auto csv = slurp(seed_dir / "metrics.csv");
  CHECK(parse_metrics_csv(csv).size() == 2);

  // identical rerun reproduces the csv byte for byte
  const auto first_ckpt = slurp(seed_dir / "checkpoint.s2cg");
  REQUIRE(run({"train", "--config", cfg.string()}).code == 0);
  CHECK(slurp(seed_dir / "metrics.csv") == csv);
  CHECK(slurp(seed_dir / "checkpoint.s2cg") == first_ckpt);

  const auto ckpt = (seed_dir / "checkpoint.s2cg").string();
  const auto e = run({"eval", "--config", cfg.string(), "--checkpoint", ckpt, "--passes", "2"});
  CHECK(e.code == 0);
  CHECK(e.out.find("label_agreement") != std::string::npos);

  const auto bad = run({"infer", "--config", cfg.string(), "--checkpoint", ckpt, "--grid", "00011122200011122"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("16") != std::string::npos);

  const auto good = run({"infer", "--config", cfg.string(), "--checkpoint", ckpt, "--grid", "0001112220001112",
                         "--passes", "2", "--count", "3"});
  CHECK(good.code == 0);
  CHECK(fs::exists(dir / "runs" / "infer" / "samples.csv"));

  const auto edit = run({"edit-infer", "--config", cfg.string(), "--checkpoint", ckpt, "--grid", "0000000000000000"},
                        "set 0..4 2\nshow\nquit\n");
  CHECK(edit.code == 0);
  CHECK(edit.out.find("2222200000000000") != std::string::npos);

  const auto edit_bad = run({"edit-infer", "--config", cfg.string(), "--checkpoint", ckpt}, "set 0..99 1\nquit\n");
  CHECK(edit_bad.code == 0);
  CHECK(edit_bad.out.find("error: edit") != std::string::npos);

  auto corrupt = slurp(seed_dir / "checkpoint.s2cg");
  corrupt[0] = 'Z';
  std::ofstream(dir / "corrupt.s2cg", std::ios::binary) << corrupt;
  CHECK(run({"eval", "--config", cfg.string(), "--checkpoint", (dir / "corrupt.s2cg").string()}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("output directory precedence") {
  const auto dir = scratch("env");
  const auto cfg = write_config(dir, TaskKind::a);
  ::setenv("S2CGAN_OUT", (dir / "from_env").string().c_str(), 1);
  REQUIRE(run({"train", "--config", cfg.string(), "--steps", "2"}).code == 0);
  CHECK(fs::exists(dir / "from_env" / "s2cgan-taska" / "seed0" / "metrics.csv"));
  REQUIRE(run({"train", "--config", cfg.string(), "--steps", "2", "--out", (dir / "flag").string()}).code == 0);
  CHECK(fs::exists(dir / "flag" / "s2cgan-taska" / "seed0" / "metrics.csv"));
  ::unsetenv("S2CGAN_OUT");
  CHECK_FALSE(fs::exists(dir / "runs"));
  fs::remove_all(dir);
}

TEST_CASE("baseline, oracle-check and gradcheck") {
  const auto dir = scratch("baseline");
  const auto cfg = write_config(dir, TaskKind::b);
  REQUIRE(run({"baseline", "naive", "--config", cfg.string(), "--steps", "5"}).code == 0);
  CHECK(fs::exists(dir / "runs" / "baseline-naive-taskb" / "seed0" / "pseudo_labels.txt"));
  REQUIRE(run({"baseline", "full", "--config", cfg.string(), "--steps", "5"}).code == 0);
  CHECK(fs::exists(dir / "runs" / "baseline-full-taskb" / "seed0" / "metrics.csv"));
  CHECK(run({"baseline", "fancy", "--config", cfg.string()}).code == 1);

  const auto o = run({"oracle-check", "--trials", "200"});
  CHECK(o.code == 0);
  CHECK(o.out.find("marginal equality on S_c") != std::string::npos);

  CHECK(run({"gradcheck"}).code == 0);
  fs::remove_all(dir);
}
