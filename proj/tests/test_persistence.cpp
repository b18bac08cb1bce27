#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "s2cgan/checkpoint.hpp"
#include "s2cgan/error.hpp"
#include "s2cgan/report.hpp"
#include "test_util.hpp"

using namespace s2cgan;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("s2cgan_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TrainState trained_state(std::uint64_t seed, std::size_t steps) {
  auto cfg = small_config(TaskKind::b);
  auto state = init_train_state(cfg, seed);
  const auto split = make_run_split(cfg, seed);
  for (std::size_t i = 0; i < steps; ++i) train_step(state, draw_batches(state, split));
  return state;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("checkpoint round trip") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto state = trained_state(seed, 3);
    const auto ck = make_checkpoint(state);
    const auto bytes = encode_checkpoint(ck);
    const auto back = decode_checkpoint(bytes);
    CHECK(back == ck);
    CHECK(encode_checkpoint(back) == bytes);
    CHECK(back.network(NetworkRole::labeller) == state.labeller.params);
  }
  auto state = trained_state(1, 2);
  const auto dir = scratch("ckpt");
  save_checkpoint(state, dir / "a.s2cg");
  auto loaded = load_checkpoint(dir / "a.s2cg");
  auto fresh = init_train_state(state.config, 9);
  restore_state(fresh, loaded);
  CHECK(fresh.generator.params == state.generator.params);
  CHECK(fresh.discriminator.moments == state.discriminator.moments);

  const auto light = make_checkpoint(state, false);
  CHECK_FALSE(decode_checkpoint(encode_checkpoint(light)).moments.has_value());

  auto other = state.config;
  other.tau = 0.5;
  auto mismatched = init_train_state(other, 0);
  CHECK_THROWS_AS(restore_state(mismatched, loaded), InvalidArgument);
  fs::remove_all(dir);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto bytes = encode_checkpoint(make_checkpoint(trained_state(0, 1)));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), FormatError);

  auto v2 = bytes;
  v2[4] = 2;
  try {
    decode_checkpoint(v2);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }

  for (std::size_t cut : {std::size_t{3}, std::size_t{11}, bytes.size() / 2, bytes.size() - 1}) {
    CHECK_THROWS_AS(decode_checkpoint(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + cut)), FormatError);
  }
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing), FormatError);

  CHECK_THROWS_AS(load_checkpoint(fs::temp_directory_path() / "s2cgan_no_such_file.s2cg"), IoError);
}

TEST_CASE("atomic writes leave no temp files") {
  const auto dir = scratch("atomic");
  write_file_atomic(dir / "f.txt", "hello");
  std::ifstream in(dir / "f.txt");
  std::string s;
  in >> s;
  CHECK(s == "hello");

  // renaming onto a non-empty directory fails
  fs::create_directories(dir / "occupied" / "x");
  CHECK_THROWS_AS(write_file_atomic(dir / "occupied", "data"), IoError);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file();
  CHECK(files == 1);
  fs::remove_all(dir);
}

TEST_CASE("metrics csv") {
  CHECK(metrics_csv({}) == std::string(kMetricsHeader) + "\n");

  std::vector<MetricsRecord> h(3);
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i].step = 500 * (i + 1);
    h[i].label_agreement = 0.123456789012345 * static_cast<double>(i + 1);
    h[i].mmd2 = 1.0 / 3.0;
    h[i].objective = full_objective(-1.2345678901234, 0.1, -0.7, {1, 1, 1});
    if (i > 0) h[i].marginal_tv = 0.05;
  }
  const auto text = metrics_csv(h);
  CHECK(count(text, "\n") == 4);
  const auto rows = parse_metrics_csv(text);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].step == 1000);
  CHECK(rows[1].values[4].value() == doctest::Approx(h[1].label_agreement).epsilon(1e-12));
  CHECK(rows[2].values[6].value() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(rows[0].values[0].value() == doctest::Approx(-1.2345678901234).epsilon(1e-12));
  CHECK_FALSE(rows[0].values[7].has_value());
  CHECK(rows[1].values[7].value() == 0.05);
  CHECK_FALSE(rows[0].values[8].has_value());

  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK_THROWS_AS(parse_metrics_csv("bogus\n1,2\n"), FormatError);
}

TEST_CASE("scatter svg") {
  const Tensor none;
  const std::vector<int> no_labels;
  const auto empty = scatter_svg(none, no_labels, none, no_labels);
  CHECK(empty.rfind("<svg", 0) == 0);
  CHECK(empty.find("</svg>") != std::string::npos);
  CHECK(count(empty, "class=\"real\"") == 0);

  Rng rng(3);
  Tensor real = sample_normal(25, 2, rng), fake = sample_normal(13, 2, rng);
  std::vector<int> rl(25), fl(13);
  for (std::size_t i = 0; i < rl.size(); ++i) rl[i] = static_cast<int>(i % 4);
  for (std::size_t i = 0; i < fl.size(); ++i) fl[i] = static_cast<int>(i % 4);
  const auto svg = scatter_svg(real, rl, fake, fl);
  CHECK(count(svg, "<circle class=\"real\"") == 25);
  CHECK(count(svg, "<path class=\"fake\"") == 13);
  CHECK(svg == scatter_svg(real, rl, fake, fl));
  CHECK_THROWS(scatter_svg(real, fl, fake, fl));
}
