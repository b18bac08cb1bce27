#include "doctest.h"
#include "s2cgan/error.hpp"
#include "s2cgan/trainer.hpp"
#include "test_util.hpp"

using namespace s2cgan;

namespace {

std::string pointer_of(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  return "<accepted>";
}

}  // namespace

TEST_CASE("config parsing") {
  const auto empty = parse_config_text("{}");
  CHECK(empty == default_config(TaskKind::a));
  CHECK_NOTHROW(empty.validate());

  const auto sup = parse_config_text(R"({"lambdas":[1,0,0]})");
  CHECK(sup.lambdas == Lambdas{1, 0, 0});
  CHECK_FALSE(labeller_trained(sup));

  CHECK(pointer_of(R"({"lambda":"x"})") == "/lambda");
  CHECK(pointer_of(R"({"optimizer":{"lr_d":"fast"}})") == "/optimizer/lr_d");
  CHECK(pointer_of(R"({"optimizer":{"lr_d":-1}})") == "/optimizer/lr_d");
  CHECK(pointer_of(R"({"lambdas":[1,0]})") == "/lambdas");
  CHECK(pointer_of(R"({"tau":0})") == "/tau");
  CHECK(pointer_of(R"({"split":{"n_supervised":0}})") == "/split/n_supervised");
  CHECK(pointer_of("[1,2]") == "/");
  CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
}

TEST_CASE("config round trip and hash") {
  auto c = small_config(TaskKind::b);
  c.tau_final = 0.3;
  c.stop_gradient.fake_pair = true;
  c.label_sampling = LabelSampling::straight_through;
  const auto back = parse_config(to_json(c));
  CHECK(back == c);
  CHECK(config_hash(back) == config_hash(c));
  auto d = c;
  d.optimizer.lr_g = 1e-3;
  CHECK(config_hash(d) != config_hash(c));

  CHECK(c.tau_at(0) == 1.0);
  CHECK(c.tau_at(c.optimizer.steps) == doctest::Approx(0.3));
  CHECK(default_config(TaskKind::b).optimizer.steps == 12000);
  CHECK(default_config(TaskKind::a).optimizer.steps == 6000);
  CHECK(c.resolved_batch_sup(5) == 5);
  CHECK(c.resolved_batch_sup(40) == 16);
}
