#include "s2cgan/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "s2cgan/autodiff.hpp"
#include "s2cgan/nets.hpp"
#include "s2cgan/objectives.hpp"

namespace s2cgan {

namespace {

using ad::Bindings;
using ad::Expr;
using ad::Tape;
using ad::Var;
using Leaves = std::map<std::string, Var>;

constexpr double kEps = 1e-6;

Tensor normal(Shape shape, Rng& rng, double lo_abs = 0.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(shape_size(shape));
  for (double& x : v) {
    do x = n(rng);
    while (std::abs(x) < lo_abs);
  }
  return Tensor(std::move(shape), std::move(v));
}

Tensor uniform(Shape shape, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v));
}

// Contracts an op's output against fixed random weights so every Jacobian
// entry contributes to a scalar.
Expr contracted(std::function<Var(Tape&, const Leaves&)> op, Tensor weights) {
  return [op, weights](Tape& t, const Leaves& l) {
    Var out = op(t, l);
    return ad::sum_all(ad::mul(out, t.constant(weights)));
  };
}

// Analytic gradient of `expr` against the central difference of `reference`.
double reference_check(const Expr& expr, const Expr& reference, const Bindings& bindings,
                       const std::string& leaf) {
  const ad::Evaluation ev = ad::forward_eval(expr, bindings);
  const Tensor grad = ev.tape->backward(ev.output, {leaf}).at(leaf);
  double worst = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    Bindings plus = bindings, minus = bindings;
    plus.at(leaf).mutable_data()[i] += kEps;
    minus.at(leaf).mutable_data()[i] -= kEps;
    const double fd = (ad::forward_eval(reference, plus).value.item() -
                       ad::forward_eval(reference, minus).value.item()) /
                      (2.0 * kEps);
    worst = std::max(worst, std::abs(grad[i] - fd) / std::max(1.0, std::abs(grad[i])));
  }
  return worst;
}

class Suite {
 public:
  explicit Suite(std::uint64_t seed) : rng_(seed) {}

  void check(const std::string& op, const Expr& expr, const Bindings& b, double tol = kOpTolerance) {
    for (const auto& [leaf, _] : b) {
      record(op + "/" + leaf, ad::finite_diff_check(expr, b, leaf, kEps), tol);
    }
  }

  void check_against(const std::string& op, const Expr& expr, const Expr& ref, const Bindings& b) {
    for (const auto& [leaf, _] : b) record(op + "/" + leaf, reference_check(expr, ref, b, leaf), kOpTolerance);
  }

  void unary(const std::string& op, Var (*f)(Var), Tensor input) {
    const Tensor w = normal(input.shape(), rng_);
    check(op, contracted([f](Tape&, const Leaves& l) { return f(l.at("a")); }, w), {{"a", std::move(input)}});
  }

  Rng& rng() { return rng_; }
  std::vector<GradCheckResult> take() { return std::move(results_); }

 private:
  void record(std::string name, double err, double tol) {
    results_.push_back({std::move(name), err, tol, std::isfinite(err) && err < tol});
  }
  Rng rng_;
  std::vector<GradCheckResult> results_;
};

void op_checks(Suite& s) {
  Rng& r = s.rng();
  const Shape m{3, 4};

  s.check("matmul", contracted([](Tape&, const Leaves& l) { return ad::matmul(l.at("a"), l.at("b")); },
                               normal({3, 2}, r)),
          {{"a", normal({3, 4}, r)}, {"b", normal({4, 2}, r)}});
  using Binary = Var (*)(Var, Var);
  const std::pair<const char*, Binary> binaries[] = {{"add", ad::add}, {"sub", ad::sub}, {"mul", ad::mul}};
  for (const auto& [name, f] : binaries) {
    s.check(name, contracted([f](Tape&, const Leaves& l) { return f(l.at("a"), l.at("b")); }, normal(m, r)),
            {{"a", normal(m, r)}, {"b", normal(m, r)}});
    s.check(std::string(name) + "_broadcast",
            contracted([f](Tape&, const Leaves& l) { return f(l.at("a"), l.at("b")); }, normal(m, r)),
            {{"a", normal(m, r)}, {"b", normal({4}, r)}});
  }
  s.check("scale", contracted([](Tape&, const Leaves& l) { return ad::scale(l.at("a"), -1.7); }, normal(m, r)),
          {{"a", normal(m, r)}});
  s.check("add_scalar",
          contracted([](Tape&, const Leaves& l) { return ad::add_scalar(l.at("a"), 0.3); }, normal(m, r)),
          {{"a", normal(m, r)}});
  s.unary("tanh", ad::tanh, normal(m, r));
  s.unary("sigmoid", ad::sigmoid, normal(m, r));
  s.unary("relu", ad::relu, normal(m, r, 0.05));
  s.unary("exp", ad::exp, normal(m, r));
  s.unary("log", ad::log, uniform(m, 0.2, 3.0, r));
  s.unary("log_sigmoid", ad::log_sigmoid, normal(m, r));
  s.unary("softmax", ad::softmax, normal(m, r));
  s.unary("log_softmax", ad::log_softmax, normal(m, r));
  s.check("mean_batch",
          contracted([](Tape&, const Leaves& l) { return ad::mean_batch(l.at("a")); }, normal({4}, r)),
          {{"a", normal(m, r)}});
  s.check("mean_all", [](Tape&, const Leaves& l) { return ad::scale(ad::mean_all(l.at("a")), 2.5); },
          {{"a", normal(m, r)}});
  s.check("sum_all", [](Tape&, const Leaves& l) { return ad::scale(ad::sum_all(l.at("a")), -0.7); },
          {{"a", normal(m, r)}});
  s.check("concat",
          contracted([](Tape&, const Leaves& l) { return ad::concat({l.at("a"), l.at("b")}); }, normal({3, 6}, r)),
          {{"a", normal(m, r)}, {"b", normal({3, 2}, r)}});
  s.check("slice", contracted([](Tape&, const Leaves& l) { return ad::slice(l.at("a"), 1, 3); }, normal({3, 2}, r)),
          {{"a", normal(m, r)}});
  s.check("reshape",
          contracted([](Tape&, const Leaves& l) { return ad::reshape(l.at("a"), {6, 2}); }, normal({6, 2}, r)),
          {{"a", normal(m, r)}});

  // Straight-through: the gradient is that of the identity on the soft input.
  const Tensor w = normal(m, r);
  const Tensor hard = normal(m, r);
  s.check_against("straight_through",
                  contracted([hard](Tape&, const Leaves& l) { return ad::straight_through(l.at("a"), hard); }, w),
                  contracted([](Tape&, const Leaves& l) { return l.at("a"); }, w), {{"a", normal(m, r)}});
  // Stop-gradient: the stopped branch behaves as a constant.
  const Tensor frozen = normal(m, r);
  s.check_against(
      "stop_gradient",
      [w](Tape& t, const Leaves& l) {
        Var a = l.at("a");
        return ad::sum_all(ad::mul(ad::mul(ad::stop_gradient(a), a), t.constant(w)));
      },
      [w, frozen](Tape& t, const Leaves& l) {
        return ad::sum_all(ad::mul(ad::mul(t.constant(frozen), l.at("a")), t.constant(w)));
      },
      {{"a", frozen}});
}

BoundNetwork bound_from(const NetworkParams& p, const Leaves& l) {
  BoundNetwork b;
  b.params = &p;
  const std::string prefix = role_prefix(p.role);
  for (std::size_t i = 0; i < p.layers(); ++i) {
    b.weights.push_back(l.at(prefix + "W" + std::to_string(i)));
    b.biases.push_back(l.at(prefix + "b" + std::to_string(i)));
  }
  return b;
}

void composite_checks(Suite& s) {
  Rng& r = s.rng();
  const ConditionLayout layout = ConditionLayout::grid(4, 3);
  const std::size_t data_dim = 4, noise = 2, batch = 3;
  const std::size_t gw[] = {layout.flat_dim() + noise, 8, data_dim};
  const std::size_t dw[] = {data_dim + layout.flat_dim(), 8, 1};
  const std::size_t lw[] = {data_dim, 8, layout.flat_dim()};
  const NetworkParams g = init_params(gw, NetworkRole::generator, r);
  const NetworkParams d = init_params(dw, NetworkRole::discriminator, r);
  const NetworkParams l = init_params(lw, NetworkRole::labeller, r);

  std::vector<int> labels(batch * layout.cells);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(layout.labels) - 1);
  for (int& v : labels) v = pick(r);
  const SupervisedBatch sup{normal({batch, data_dim}, r), Condition::from_labels(layout, labels),
                            normal({batch, noise}, r)};
  const UnsupervisedBatch unsup{normal({batch, data_dim}, r), normal({batch, noise}, r),
                                sample_gumbel(batch, layout.flat_dim(), r), std::nullopt, std::nullopt};

  Bindings bindings;
  for (const NetworkParams* p : {&g, &d, &l}) {
    for (const auto& e : p->entries) bindings[role_prefix(p->role) + e.name] = e.value;
  }
  const Expr loss = [&](Tape&, const Leaves& leaves) {
    const BoundNetwork gb = bound_from(g, leaves), db = bound_from(d, leaves), lb = bound_from(l, leaves);
    LabelPathOptions opts;
    opts.tau = 0.7;
    const SupervisedTerms st = supervised_terms(db, gb, sup);
    const UnsupervisedTerms ut = unsupervised_terms(db, gb, lb, layout, unsup, opts);
    // Every term of the combined objective, in both its literal and flipped forms.
    return st.real + st.fake - st.fake_flip + labeller_ce_graph(lb, layout, sup.x, sup.c) + ut.real + ut.fake -
           ut.fake_flip - ut.real_flip;
  };
  s.check("composite", loss, bindings, kCompositeTolerance);
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed) {
  Suite s(seed);
  op_checks(s);
  composite_checks(s);
  return s.take();
}

}  // namespace s2cgan
