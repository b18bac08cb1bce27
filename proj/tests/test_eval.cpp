#include <cmath>

#include "doctest.h"
#include "s2cgan/error.hpp"
#include "s2cgan/inference.hpp"
#include "s2cgan/metrics.hpp"
#include "test_util.hpp"

using namespace s2cgan;

namespace {

TaskSpec make_task(TaskKind kind) {
  TaskSpec t;
  t.kind = kind;
  return t;
}

// G(c) = noise-free render of c, with `noise` ignored inputs.
NetworkParams renderer_generator(const TaskSpec& task, std::size_t noise = 0) {
  const auto layout = task.layout();
  const std::vector<std::size_t> w{layout.flat_dim() + noise, task.data_dim()};
  auto g = zero_params(w, NetworkRole::generator);
  Tensor& W = *g.find("W0");
  if (task.kind == TaskKind::a) {
    for (std::size_t c = 0; c < task.a.classes; ++c) {
      const auto m = task.a.mean(c);
      W.at(c, 0) = m[0];
      W.at(c, 1) = m[1];
    }
  } else {
    for (std::size_t i = 0; i < task.b.cells; ++i) {
      for (std::size_t l = 0; l < task.b.labels; ++l) W.at(i * task.b.labels + l, i) = task.b.means[l];
    }
  }
  return g;
}

// Linear labeller with logits m_c . x - |m_c|^2 / 2, exact for nearest-mean.
NetworkParams bayes_labeller(const TaskSpec& task) {
  const auto layout = task.layout();
  const std::vector<std::size_t> w{task.data_dim(), layout.flat_dim()};
  auto l = zero_params(w, NetworkRole::labeller);
  Tensor& W = *l.find("W0");
  Tensor& b = *l.find("b0");
  if (task.kind == TaskKind::a) {
    for (std::size_t c = 0; c < task.a.classes; ++c) {
      const auto m = task.a.mean(c);
      W.at(0, c) = m[0];
      W.at(1, c) = m[1];
      b[c] = -0.5 * (m[0] * m[0] + m[1] * m[1]);
    }
  } else {
    for (std::size_t i = 0; i < task.b.cells; ++i) {
      for (std::size_t k = 0; k < task.b.labels; ++k) {
        const double m = task.b.means[k];
        W.at(i, i * task.b.labels + k) = m;
        b[i * task.b.labels + k] = -0.5 * m * m;
      }
    }
  }
  return l;
}

}  // namespace

TEST_CASE("one-pass inference") {
  const auto task = make_task(TaskKind::a);
  const auto layout = task.layout();
  Rng rng(1);
  const std::vector<std::size_t> w{4 + 3, 8, 2};
  auto g = init_params(w, NetworkRole::generator, rng);
  const std::vector<int> labels{0, 1, 2, 3};
  Condition c = Condition::from_labels(layout, labels);

  auto zero = zero_params(w, NetworkRole::generator);
  CHECK(infer_one_pass(zero, {c, NoiseMode::fresh, std::nullopt, true}, rng) == Tensor::zeros({4, 2}));

  Tensor z = sample_normal(4, 3, rng);
  InferenceRequest fixed{c, NoiseMode::fixed, z, true};
  CHECK(infer_one_pass(g, fixed, rng) == infer_one_pass(g, fixed, rng));

  // row i depends only on condition i and z_i
  Tensor full = infer_one_pass(g, fixed, rng);
  for (std::size_t i = 0; i < 4; ++i) {
    const std::vector<int> one{labels[i]};
    Tensor zi = Tensor::matrix(1, 3, {z.at(i, 0), z.at(i, 1), z.at(i, 2)});
    Tensor xi = infer_one_pass(g, {Condition::from_labels(layout, one), NoiseMode::fixed, zi, true}, rng);
    CHECK(xi[0] == doctest::Approx(full.at(i, 0)).epsilon(1e-14));
    CHECK(xi[1] == doctest::Approx(full.at(i, 1)).epsilon(1e-14));
  }

  CHECK_THROWS_AS(infer_one_pass(g, {c, NoiseMode::fixed, std::nullopt, true}, rng), InvalidArgument);
  CHECK_THROWS_AS(infer_one_pass(g, {c, NoiseMode::fixed, sample_normal(4, 2, rng), true}, rng), ShapeError);
  const std::vector<int> grid_labels(16, 0);
  Condition wrong = Condition::from_labels(make_task(TaskKind::b).layout(), grid_labels);
  CHECK_THROWS_AS(infer_one_pass(g, {wrong, NoiseMode::fresh, std::nullopt, true}, rng), ShapeError);
}

TEST_CASE("two-pass inference") {
  const auto task = make_task(TaskKind::b);
  const auto layout = task.layout();
  Rng rng(2);
  auto g = renderer_generator(task, 2);
  auto l = bayes_labeller(task);
  std::vector<int> labels;
  Rng lr(5);
  for (const auto& s : sample_task_b(task.b, lr, 3)) labels.insert(labels.end(), s.labels.begin(), s.labels.end());
  Condition c = Condition::from_labels(layout, labels);
  Tensor z = sample_normal(3, 2, rng);
  const auto r = infer_two_pass(g, l, {c, NoiseMode::fixed, z, true}, rng);
  CHECK(r.c_synthetic.labels() == labels);
  CHECK(r.x_final == r.x_first);

  const std::vector<std::size_t> lw{16, 8, 48};
  auto random_l = init_params(lw, NetworkRole::labeller, rng);
  const auto r2 = infer_two_pass(g, random_l, {c, NoiseMode::fresh, std::nullopt, false}, rng);
  CHECK(r2.c_synthetic.hard());
  CHECK(r2.c_synthetic.layout() == layout);
  CHECK(r2.x_final.shape() == r2.x_first.shape());
}

TEST_CASE("label agreement") {
  const auto task = make_task(TaskKind::a);
  Rng rng(3);
  auto test = sample_task_a(task.a, rng, 500);
  Condition c = samples_condition(task, test);
  InferenceSpec spec;
  auto g = renderer_generator(task);
  auto perfect = label_agreement(g, nullptr, task, c, 1, spec, rng);
  CHECK(perfect.accuracy == 1.0);
  for (double iou : perfect.per_class_iou) CHECK(iou == 1.0);
  CHECK(perfect.mean_iou == 1.0);

  auto l = bayes_labeller(task);
  CHECK(label_agreement(g, &l, task, c, 2, spec, rng).accuracy == 1.0);
  CHECK_THROWS_AS(label_agreement(g, nullptr, task, c, 2, spec, rng), InvalidArgument);
  CHECK_THROWS_AS(label_agreement(g, nullptr, task, c, 3, spec, rng), InvalidArgument);

  // a generator that ignores its input lands on chance
  const std::vector<std::size_t> w{4, 2};
  auto blind = zero_params(w, NetworkRole::generator);
  (*blind.find("b0"))[0] = 2.0;
  const double acc = label_agreement(blind, nullptr, task, c, 1, spec, rng).accuracy;
  CHECK(std::abs(acc - 0.25) <= 0.03);

  const auto tb = make_task(TaskKind::b);
  auto test_b = sample_task_b(tb.b, rng, 50);
  CHECK(label_agreement(renderer_generator(tb), nullptr, tb, samples_condition(tb, test_b), 1, spec, rng).accuracy ==
        1.0);
}

TEST_CASE("score_labels IoU") {
  const std::vector<int> ref{0, 0, 1, 1};
  const std::vector<int> pred{0, 0, 2, 2};
  auto r = score_labels(pred, ref, 3);
  CHECK(r.accuracy == 0.5);
  CHECK(r.per_class_iou[0] == 1.0);
  CHECK(r.per_class_iou[1] == 0.0);
  CHECK(std::isnan(r.per_class_iou[2]));
  CHECK(r.mean_iou == 0.5);
  const std::vector<int> none;
  CHECK_THROWS_AS(score_labels(none, none, 3), InvalidArgument);
  const std::vector<int> shorter{0};
  CHECK_THROWS_AS(score_labels(shorter, ref, 3), ShapeError);
}

TEST_CASE("mmd") {
  Rng rng(4);
  Tensor x = sample_normal(500, 2, rng);
  Tensor y = sample_normal(500, 2, rng);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += 4.0;
  CHECK(mmd_rbf(x, y) > 0.5);
  CHECK(mmd_rbf(x, y) == mmd_rbf(y, x));
  const std::vector<double> h{0.5, 1.0, 2.0};
  CHECK(mmd_rbf(x, y, h) == mmd_rbf(y, x, h));
  CHECK(mmd_rbf(x, x, h) <= 1e-12);
  CHECK(std::abs(mmd_rbf(x, sample_normal(500, 2, rng), h)) < 0.02);

  CHECK_THROWS_AS(mmd_rbf(x, sample_normal(1, 2, rng)), InvalidArgument);
  CHECK_THROWS_AS(mmd_rbf(x, sample_normal(5, 3, rng)), ShapeError);
  const std::vector<double> bad{0.0};
  CHECK_THROWS_AS(mmd_rbf(x, y, bad), InvalidArgument);
}

TEST_CASE("label marginal TV") {
  const auto task = make_task(TaskKind::a);
  Rng rng(5);
  auto data = sample_task_a(task.a, rng, 10000);
  CHECK(label_marginal_tv(bayes_labeller(task), task, samples_x(data)) <= 0.02);

  const std::vector<std::size_t> w{2, 4};
  auto constant = zero_params(w, NetworkRole::labeller);
  (*constant.find("b0"))[2] = 1.0;
  CHECK(label_marginal_tv(constant, task, samples_x(data)) == doctest::Approx(0.75));

  const auto tb = make_task(TaskKind::b);
  auto data_b = sample_task_b(tb.b, rng, 3000);
  const double tv_b = label_marginal_tv(bayes_labeller(tb), tb, samples_x(data_b));
  CHECK(tv_b >= 0.0);
  CHECK(tv_b <= 0.05);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng r(s);
    const std::vector<std::size_t> lw{16, 8, 48};
    const double tv = label_marginal_tv(init_params(lw, NetworkRole::labeller, r), tb, samples_x(data_b));
    CHECK(tv >= 0.0);
    CHECK(tv <= 1.0);
  }
}

TEST_CASE("evaluate_model fills every column") {
  auto cfg = small_config(TaskKind::b);
  const auto split = make_splits(cfg.task, 700, 5, 100, 1);
  const auto ctx = make_eval_context(split, cfg);
  CHECK(ctx.bandwidths.size() == 3);
  Rng rng(6);
  auto g = renderer_generator(cfg.task);
  auto l = bayes_labeller(cfg.task);
  const auto rec = evaluate_model(ctx, g, &l, 1, rng);
  CHECK(rec.label_agreement == 1.0);
  CHECK(rec.mmd2 < 0.05);
  CHECK(rec.marginal_tv.has_value());
  CHECK_FALSE(evaluate_model(ctx, g, nullptr, 1, rng).marginal_tv.has_value());
}
