#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "s2cgan/error.hpp"
#include "s2cgan/nets.hpp"

using namespace s2cgan;

namespace {

std::vector<double> softmax_row(const std::vector<double>& l) {
  const double m = *std::max_element(l.begin(), l.end());
  std::vector<double> p(l.size());
  double z = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) z += p[i] = std::exp(l[i] - m);
  for (double& v : p) v /= z;
  return p;
}

// TV between the argmax histogram of hard Gumbel samples and softmax(logits).
double gumbel_argmax_tv(const std::vector<double>& logits, double tau, std::size_t draws, Rng& rng) {
  std::vector<double> hist(logits.size(), 0.0);
  for (std::size_t i = 0; i < draws; ++i) {
    auto y = gumbel_softmax_sample(logits, tau, rng, true);
    hist[static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin())] += 1.0;
  }
  const auto p = softmax_row(logits);
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(hist[i] / static_cast<double>(draws) - p[i]);
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("init_params") {
  Rng a(3), b(3);
  const std::vector<std::size_t> w{2, 1};
  auto p = init_params(w, NetworkRole::generator, a);
  CHECK(p.bias(0) == Tensor::zeros({1}));
  CHECK(p == init_params(w, NetworkRole::generator, b));

  Rng r(11);
  const std::vector<std::size_t> wide{10, 64, 64, 2};
  auto q = init_params(wide, NetworkRole::discriminator, r);
  const auto& w0 = q.weight(0).values();
  double ss = 0.0;
  for (double v : w0) ss += v * v;
  const double sd = std::sqrt(ss / static_cast<double>(w0.size()));
  CHECK(std::abs(sd - std::sqrt(2.0 / 74.0)) < 0.2 * std::sqrt(2.0 / 74.0));
  CHECK(q.parameter_count() == 10 * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2);
}

TEST_CASE("generator forward") {
  const auto layout = ConditionLayout::classes(4);
  const std::vector<std::size_t> w{4 + 3, 8, 2};
  Rng rng(1);
  auto g = init_params(w, NetworkRole::generator, rng);
  const std::vector<int> labels{0, 1, 2, 3, 1};
  Condition hard = Condition::from_labels(layout, labels);
  Tensor z = sample_normal(5, 3, rng);
  CHECK(generator_forward(g, hard, z).shape() == Shape{5, 2});

  Tensor soft_v = Tensor::full({5, 4}, 0.25);
  Condition soft(layout, soft_v, false);
  CHECK(generator_forward(g, soft, z).shape() == Shape{5, 2});

  auto zero = zero_params(w, NetworkRole::generator);
  CHECK(generator_forward(zero, hard, z) == Tensor::zeros({5, 2}));

  CHECK_THROWS_AS(generator_forward(g, hard, sample_normal(5, 2, rng)), ShapeError);
}

TEST_CASE("discriminator forward") {
  const auto layout = ConditionLayout::classes(3);
  const std::vector<std::size_t> w{2 + 3, 6, 1};
  auto zero = zero_params(w, NetworkRole::discriminator);
  Rng rng(2);
  Tensor x = sample_normal(4, 2, rng);
  const std::vector<int> labels{0, 1, 2, 0};
  Condition c = Condition::from_labels(layout, labels);
  Tensor logits = discriminator_forward(zero, x, c);
  CHECK(logits == Tensor::zeros({4, 1}));

  auto d = init_params(w, NetworkRole::discriminator, rng);
  Tensor out = discriminator_forward(d, x, c);
  // reverse the batch and expect reversed logits
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 4; i-- > 0;) rows.emplace_back(x.row(i).begin(), x.row(i).end());
  const std::vector<int> rev{0, 2, 1, 0};
  Tensor out_rev = discriminator_forward(d, stack_rows(rows), Condition::from_labels(layout, rev));
  for (std::size_t i = 0; i < 4; ++i) CHECK(out_rev[i] == out[3 - i]);
}

TEST_CASE("condition invariants") {
  const auto layout = ConditionLayout::grid(3, 2);
  const std::vector<int> labels{0, 1, 1, 1, 0, 0};
  Condition c = Condition::from_labels(layout, labels);
  CHECK(c.batch() == 2);
  CHECK(c.hard());
  CHECK(c.labels() == labels);
  CHECK_THROWS_AS(Condition(layout, Tensor::matrix({{0.5, 0.6, 1, 0, 1, 0}}), false), InvalidArgument);
  CHECK_THROWS_AS(Condition(layout, Tensor::matrix({{0.5, 0.5, 1, 0, 1, 0}}), true), InvalidArgument);
  CHECK_THROWS_AS(Condition(layout, Tensor::matrix({{1, 0, 1, 0}}), true), ShapeError);
  const std::vector<int> bad{0, 2, 1};
  CHECK_THROWS(Condition::from_labels(layout, bad));

  Condition soft(layout, Tensor::matrix({{0.5, 0.5, 0.3, 0.7, 0.9, 0.1}}), false);
  CHECK(soft.labels() == std::vector<int>{0, 1, 0});
  CHECK(soft.to_hard().values() == Tensor::matrix({{1, 0, 0, 1, 1, 0}}));
}

TEST_CASE("labeller forward modes") {
  const auto layout = ConditionLayout::grid(4, 3);
  const std::vector<std::size_t> w{4, 8, 12};
  auto zero = zero_params(w, NetworkRole::labeller);
  Rng rng(5);
  Tensor x = sample_normal(6, 4, rng);
  Condition soft = labeller_forward(zero, layout, x, LabelMode::soft, 1.0, rng);
  for (double v : soft.values().data()) CHECK(v == doctest::Approx(1.0 / 3.0));

  auto l = init_params(w, NetworkRole::labeller, rng);
  Condition hard = labeller_forward(l, layout, x, LabelMode::hard, 1.0, rng);
  CHECK(hard.hard());
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t cell = 0; cell < 4; ++cell) {
      double ones = 0.0, sum = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        const double v = hard.values().at(r, cell * 3 + k);
        sum += v;
        ones += v == 1.0;
      }
      CHECK(ones == 1.0);
      CHECK(sum == 1.0);
    }
  }
}

TEST_CASE("gumbel-softmax samples") {
  Rng rng(9);
  const std::vector<double> logits{0.4, -1.0, 2.0};
  auto y = gumbel_softmax_sample(logits, 0.7, rng, false);
  CHECK(std::accumulate(y.begin(), y.end(), 0.0) == doctest::Approx(1.0));
  for (double v : y) CHECK(v > 0.0);

  std::size_t first = 0;
  const std::vector<double> peaked{5, 0, 0};
  for (int i = 0; i < 10000; ++i) {
    auto s = gumbel_softmax_sample(peaked, 0.1, rng, false);
    first += std::max_element(s.begin(), s.end()) == s.begin();
  }
  CHECK(first >= 9800);

  CHECK(gumbel_argmax_tv({0, 0, 0, 0}, 1.0, 100000, rng) < 0.02);
  CHECK(gumbel_argmax_tv(logits, 1.0, 100000, rng) < 0.02);
}

TEST_CASE("gumbel-softmax gradient with frozen noise") {
  const auto layout = ConditionLayout::grid(2, 3);
  Rng rng(4);
  Tensor g = sample_gumbel(3, 6, rng);
  Tensor logits = sample_normal(3, 6, rng);
  for (bool hard : {false, true}) {
    ad::Expr e = [&](ad::Tape&, const std::map<std::string, ad::Var>& v) {
      return ad::mean_all(gumbel_softmax_graph(v.at("l"), g, 0.8, layout, hard) *
                          v.at("l").tape().constant(Tensor::matrix(3, 6, {1, 2, 3, 4, 5, 6, 6, 5, 4, 3, 2, 1,
                                                                          0, 1, 0, 2, 0, 3})));
    };
    if (!hard) {
      CHECK(ad::finite_diff_check(e, {{"l", logits}}, "l", 1e-5) < 1e-5);
    } else {
      auto ev = ad::forward_eval(e, {{"l", logits}});
      CHECK(ev.tape->backward(ev.output).at("l").all_finite());
    }
  }
}
