#include "s2cgan/trainer.hpp"

#include <cmath>
#include <set>

#include "s2cgan/error.hpp"

namespace s2cgan {

void adam_update(Tensor& param, const Tensor& grad, AdamMoments& moments, const AdamHyper& hyper,
                 std::uint64_t step) {
  if (param.shape() != grad.shape() || moments.first.shape() != param.shape() ||
      moments.second.shape() != param.shape()) {
    throw ShapeError("adam_update: parameter " + shape_string(param.shape()) + ", gradient " +
                     shape_string(grad.shape()) + " and moments must share a shape");
  }
  if (step < 1) throw InvalidArgument("adam_update: step counts from 1");
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  auto p = param.mutable_data();
  auto m = moments.first.mutable_data();
  auto v = moments.second.mutable_data();
  const auto g = grad.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g[i];
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    p[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

OptimizedNetwork OptimizedNetwork::create(NetworkParams params) {
  OptimizedNetwork net;
  for (const auto& e : params.entries) {
    net.moments.push_back({Tensor::zeros(e.value.shape()), Tensor::zeros(e.value.shape())});
  }
  net.params = std::move(params);
  return net;
}

void OptimizedNetwork::apply(const ad::GradMap& grads, const AdamHyper& hyper) {
  ++updates;
  const std::string prefix = role_prefix(params.role);
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    auto it = grads.find(prefix + params.entries[i].name);
    if (it == grads.end()) continue;
    adam_update(params.entries[i].value, it->second, moments[i], hyper, updates);
  }
}

Rng derive_rng(std::uint64_t seed, std::uint32_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
  return Rng(seq);
}

namespace {

std::set<std::string> leaf_names(const NetworkParams& params) {
  std::set<std::string> names;
  for (const auto& e : params.entries) names.insert(role_prefix(params.role) + e.name);
  return names;
}

void check_finite(const ad::GradMap& grads, NetworkRole role, std::uint64_t step) {
  const std::string prefix = role_prefix(role);
  for (const auto& [name, g] : grads) {
    if (name.rfind(prefix, 0) == 0 && !g.all_finite()) {
      throw NumericError("train_step: non-finite gradient in " + std::string(role_name(role)) +
                         " parameter '" + name + "' at step " + std::to_string(step));
    }
  }
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count, bool replacement,
                                        Rng& rng) {
  std::vector<std::size_t> out(count);
  if (replacement) {
    std::uniform_int_distribution<std::size_t> pick(0, population - 1);
    for (auto& i : out) i = pick(rng);
    return out;
  }
  std::vector<std::size_t> pool(population);
  for (std::size_t i = 0; i < population; ++i) pool[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(pool[i], pool[pick(rng)]);
    out[i] = pool[i];
  }
  return out;
}

Tensor noise_or_placeholder(std::size_t rows, std::size_t dim, Rng& rng) {
  return dim == 0 ? Tensor::zeros({rows, 1}) : sample_normal(rows, dim, rng);
}

Tensor gather_rows(const std::vector<std::vector<double>>& rows, std::span<const std::size_t> idx) {
  std::vector<std::vector<double>> picked;
  picked.reserve(idx.size());
  for (std::size_t i : idx) picked.push_back(rows[i]);
  return stack_rows(picked);
}

}  // namespace

bool labeller_trained(const ExperimentConfig& config) {
  return config.lambdas.labeller > 0.0 || config.lambdas.unsup > 0.0;
}

TrainState init_train_state(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  Rng init = derive_rng(seed, 0);
  TrainState state{
      OptimizedNetwork::create(init_params(config.generator_widths(), NetworkRole::generator, init)),
      OptimizedNetwork::create(init_params(config.discriminator_widths(), NetworkRole::discriminator, init)),
      OptimizedNetwork::create(init_params(config.labeller_widths(), NetworkRole::labeller, init)),
      0,
      derive_rng(seed, 1),
      derive_rng(seed, 2),
      derive_rng(seed, 3),
      config,
  };
  return state;
}

StepBatches draw_batches(TrainState& state, const DatasetSplit& split) {
  const ExperimentConfig& cfg = state.config;
  if (split.supervised.empty()) throw InvalidArgument("train_step: the supervised set is empty");
  const ConditionLayout layout = split.task.layout();
  const std::size_t noise_dim = cfg.arch.noise_dim;

  const std::size_t b_sup = cfg.resolved_batch_sup(split.supervised.size());
  const bool replace = split.supervised.size() < b_sup;
  const auto idx = sample_indices(split.supervised.size(), b_sup, replace, state.data_rng);
  std::vector<Sample> picked;
  picked.reserve(idx.size());
  for (std::size_t i : idx) picked.push_back(split.supervised[i]);
  StepBatches out{
      {samples_x(picked), samples_condition(split.task, picked),
       noise_or_placeholder(b_sup, noise_dim, state.noise_rng)},
      std::nullopt};

  if (!split.unsupervised.empty() && cfg.lambdas.unsup > 0.0) {
    const std::size_t b = cfg.optimizer.batch_unsup;
    std::uniform_int_distribution<std::size_t> pick(0, split.unsupervised.size() - 1);
    std::vector<std::size_t> u_idx(b);
    for (auto& i : u_idx) i = pick(state.data_rng);
    UnsupervisedBatch u{gather_rows(split.unsupervised, u_idx), Tensor(), Tensor(), std::nullopt,
                        std::nullopt};
    if (cfg.independent_unsup_batches) {
      for (auto& i : u_idx) i = pick(state.data_rng);
      u.x_fake = gather_rows(split.unsupervised, u_idx);
      u.gumbel_fake = sample_gumbel(b, layout.flat_dim(), state.gumbel_rng);
    }
    u.z = noise_or_placeholder(b, noise_dim, state.noise_rng);
    u.gumbel = sample_gumbel(b, layout.flat_dim(), state.gumbel_rng);
    out.unsup = std::move(u);
  }
  return out;
}

namespace {

LabelPathOptions label_options(const ExperimentConfig& cfg, std::uint64_t step) {
  LabelPathOptions opts;
  opts.tau = cfg.tau_at(step);
  opts.straight_through = cfg.label_sampling == LabelSampling::straight_through;
  return opts;
}

AdamHyper hyper(const OptimizerSpec& o, double lr) { return {lr, o.beta1, o.beta2, o.epsilon}; }

void check_params(const OptimizedNetwork& net, std::uint64_t step) {
  for (const auto& e : net.params.entries) {
    if (!e.value.all_finite()) {
      throw NumericError("train_step: non-finite " + std::string(role_name(net.params.role)) + " parameter '" +
                         e.name + "' at step " + std::to_string(step));
    }
  }
}

}  // namespace

ad::GradMap discriminator_gradients(const TrainState& state, const StepBatches& batches,
                                    ObjectiveBreakdown* logged) {
  const ExperimentConfig& cfg = state.config;
  const Lambdas& lam = cfg.lambdas;
  const ConditionLayout layout = cfg.task.layout();
  const bool use_unsup = batches.unsup.has_value() && lam.unsup > 0.0;

  ad::Tape tape;
  BoundNetwork d = bind_network(tape, state.discriminator.params, true);
  BoundNetwork g = bind_network(tape, state.generator.params, false);
  BoundNetwork l = bind_network(tape, state.labeller.params, false);
  const SupervisedTerms sup = supervised_terms(d, g, batches.sup);
  ad::Var objective = lam.sup * (sup.real + sup.fake);
  double v_unsup = 0.0;
  if (use_unsup) {
    const UnsupervisedTerms u =
        unsupervised_terms(d, g, l, layout, *batches.unsup, label_options(cfg, state.step));
    objective = objective + lam.unsup * (u.real + u.fake);
    v_unsup = u.real.value().item() + u.fake.value().item();
  }
  if (logged) {
    const double v_lab = labeller_ce_graph(l, layout, batches.sup.x, batches.sup.c).value().item();
    *logged = full_objective(sup.real.value().item() + sup.fake.value().item(), v_lab, v_unsup, lam);
  }
  return tape.backward(-objective, leaf_names(state.discriminator.params));
}

ad::GradMap generator_labeller_gradients(const TrainState& state, const StepBatches& batches) {
  const ExperimentConfig& cfg = state.config;
  const Lambdas& lam = cfg.lambdas;
  const ConditionLayout layout = cfg.task.layout();
  const bool train_labeller = labeller_trained(cfg);
  const bool use_unsup = batches.unsup.has_value() && lam.unsup > 0.0;
  const bool saturating = cfg.surrogate == Surrogate::saturating;
  // During warm-up L learns from the cross-entropy term only.
  const bool warmup = state.step < cfg.warmup_steps;

  ad::Tape tape;
  BoundNetwork d = bind_network(tape, state.discriminator.params, false);
  BoundNetwork g = bind_network(tape, state.generator.params, true);
  BoundNetwork l = bind_network(tape, state.labeller.params, train_labeller);

  const SupervisedTerms sup = supervised_terms(d, g, batches.sup);
  ad::Var loss = lam.sup * (saturating ? sup.fake : -sup.fake_flip);
  if (train_labeller && lam.labeller > 0.0) {
    loss = loss + lam.labeller * labeller_ce_graph(l, layout, batches.sup.x, batches.sup.c);
  }
  if (use_unsup) {
    LabelPathOptions opts = label_options(cfg, state.step);
    opts.stop_real_pair = cfg.stop_gradient.real_pair || warmup;
    opts.stop_generator_input = cfg.stop_gradient.generator_input || warmup;
    opts.stop_fake_pair = cfg.stop_gradient.fake_pair || warmup;
    const UnsupervisedTerms u = unsupervised_terms(d, g, l, layout, *batches.unsup, opts);
    loss = loss + lam.unsup * (saturating ? u.real + u.fake : -(u.fake_flip + u.real_flip));
  }

  std::set<std::string> wanted = leaf_names(state.generator.params);
  if (train_labeller) {
    const auto l_names = leaf_names(state.labeller.params);
    wanted.insert(l_names.begin(), l_names.end());
  }
  return tape.backward(loss, wanted);
}

ObjectiveBreakdown train_step(TrainState& state, const StepBatches& batches) {
  const ExperimentConfig& cfg = state.config;
  const OptimizerSpec& o = cfg.optimizer;
  check_params(state.generator, state.step);
  check_params(state.discriminator, state.step);
  check_params(state.labeller, state.step);

  ObjectiveBreakdown logged;
  for (std::size_t k = 0; k < o.d_steps_per_g_step; ++k) {
    const ad::GradMap grads = discriminator_gradients(state, batches, k == 0 ? &logged : nullptr);
    check_finite(grads, NetworkRole::discriminator, state.step);
    state.discriminator.apply(grads, hyper(o, o.lr_d));
  }

  const ad::GradMap grads = generator_labeller_gradients(state, batches);
  check_finite(grads, NetworkRole::generator, state.step);
  state.generator.apply(grads, hyper(o, o.lr_g));
  if (labeller_trained(cfg)) {
    check_finite(grads, NetworkRole::labeller, state.step);
    state.labeller.apply(grads, hyper(o, o.lr_l));
  }

  ++state.step;
  return logged;
}

DatasetSplit make_run_split(const ExperimentConfig& config, std::uint64_t seed) {
  const std::uint64_t mixed = config.split.seed ^ (seed * 0x9E3779B97F4A7C15ULL);
  return make_splits(config.task, config.split.n_total, config.split.n_supervised,
                     config.split.n_test, mixed);
}

TrainResult train(TrainState state, const DatasetSplit& split, std::uint64_t seed,
                  const TrainHooks& hooks) {
  TrainResult result{std::move(state), {}};
  TrainState& st = result.state;
  const ExperimentConfig& config = st.config;
  const EvalContext ctx = make_eval_context(split, config);
  const bool with_labeller = labeller_trained(config);
  const std::size_t steps = config.optimizer.steps;

  while (st.step < steps) {
    const StepBatches batches = draw_batches(st, split);
    const ObjectiveBreakdown logged = train_step(st, batches);

    if (config.eval_every > 0 && st.step % config.eval_every == 0) {
      Rng eval_rng = derive_rng(seed, static_cast<std::uint32_t>(1000 + st.step / config.eval_every));
      MetricsRecord rec = evaluate_model(ctx, st.generator.params,
                                         with_labeller ? &st.labeller.params : nullptr,
                                         config.eval_passes, eval_rng);
      rec.step = st.step;
      rec.objective = logged;
      if (hooks.on_metrics) hooks.on_metrics(rec);
      result.history.push_back(std::move(rec));
    }
    const bool last = st.step == steps;
    const bool periodic = config.checkpoint_every > 0 && st.step % config.checkpoint_every == 0;
    if (hooks.on_checkpoint && (periodic || last)) hooks.on_checkpoint(st);
  }
  return result;
}

TrainResult train(const ExperimentConfig& config, const DatasetSplit& split, std::uint64_t seed,
                  const TrainHooks& hooks) {
  return train(init_train_state(config, seed), split, seed, hooks);
}

TrainResult train(const ExperimentConfig& config, std::uint64_t seed, const TrainHooks& hooks) {
  return train(config, make_run_split(config, seed), seed, hooks);
}

}  // namespace s2cgan
