#include "s2cgan/baselines.hpp"

#include "s2cgan/error.hpp"

namespace s2cgan {

ExperimentConfig supervised_stage_config(const ExperimentConfig& config, std::size_t n_supervised) {
  ExperimentConfig out = config;
  out.lambdas = {1.0, 0.0, 0.0};
  out.optimizer.batch_sup = config.resolved_batch_sup(n_supervised) + config.optimizer.batch_unsup;
  return out;
}

BaselineResult run_baseline_full(const ExperimentConfig& config, const DatasetSplit& split,
                                 std::uint64_t seed, const TrainHooks& hooks) {
  if (split.withheld_labels.size() != split.unsupervised.size()) {
    throw InvalidArgument("run_baseline_full: the split carries no withheld labels for U");
  }
  DatasetSplit full = split;
  for (std::size_t i = 0; i < split.unsupervised.size(); ++i) {
    full.supervised.push_back({split.unsupervised[i], split.withheld_labels[i]});
  }
  full.unsupervised.clear();
  full.withheld_labels.clear();
  const ExperimentConfig cfg = supervised_stage_config(config, split.supervised.size());
  return {train(cfg, full, seed, hooks), {}, 0.0};
}

NetworkParams pretrain_labeller(const ExperimentConfig& config, const DatasetSplit& split, Rng& rng) {
  if (split.supervised.empty()) throw InvalidArgument("pretrain_labeller: the supervised set is empty");
  const ConditionLayout layout = split.task.layout();
  OptimizedNetwork l = OptimizedNetwork::create(
      init_params(config.labeller_widths(), NetworkRole::labeller, rng));
  const AdamHyper hyper{config.optimizer.lr_l, config.optimizer.beta1, config.optimizer.beta2,
                        config.optimizer.epsilon};
  const std::size_t b = config.resolved_batch_sup(split.supervised.size());
  std::uniform_int_distribution<std::size_t> pick(0, split.supervised.size() - 1);
  for (std::size_t step = 0; step < config.naive_pretrain_steps; ++step) {
    std::vector<Sample> batch;
    batch.reserve(b);
    for (std::size_t i = 0; i < b; ++i) batch.push_back(split.supervised[pick(rng)]);
    ad::Tape tape;
    const BoundNetwork bound = bind_network(tape, l.params, true);
    const ad::Var loss =
        labeller_ce_graph(bound, layout, samples_x(batch), samples_condition(split.task, batch));
    l.apply(tape.backward(loss), hyper);
  }
  return l.params;
}

BaselineResult run_baseline_naive(const ExperimentConfig& config, const DatasetSplit& split,
                                  std::uint64_t seed, const TrainHooks& hooks) {
  Rng rng = derive_rng(seed, 4);
  const NetworkParams labeller = pretrain_labeller(config, split, rng);
  const ConditionLayout layout = split.task.layout();

  BaselineResult out;
  DatasetSplit pseudo = split;
  if (!split.unsupervised.empty()) {
    std::vector<std::vector<double>> rows = split.unsupervised;
    const Condition labels =
        labeller_forward(labeller, layout, stack_rows(rows), LabelMode::hard, 1.0, rng);
    const std::vector<int> flat = labels.labels();
    std::size_t correct = 0, total = 0;
    for (std::size_t i = 0; i < split.unsupervised.size(); ++i) {
      std::vector<int> item(flat.begin() + static_cast<std::ptrdiff_t>(i * layout.cells),
                            flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * layout.cells));
      if (i < split.withheld_labels.size()) {
        for (std::size_t c = 0; c < layout.cells; ++c) correct += item[c] == split.withheld_labels[i][c];
        total += layout.cells;
      }
      pseudo.supervised.push_back({split.unsupervised[i], item});
      out.pseudo_labels.push_back(std::move(item));
    }
    if (total > 0) out.pseudo_label_acc = static_cast<double>(correct) / static_cast<double>(total);
  }
  pseudo.unsupervised.clear();
  pseudo.withheld_labels.clear();

  const ExperimentConfig cfg = supervised_stage_config(config, split.supervised.size());
  TrainState state = init_train_state(cfg, seed);
  state.labeller.params = labeller;

  TrainHooks wrapped = hooks;
  const double acc = out.pseudo_label_acc;
  const bool has_acc = !split.withheld_labels.empty();
  wrapped.on_metrics = [&hooks, acc, has_acc](const MetricsRecord& rec) {
    if (!hooks.on_metrics) return;
    MetricsRecord copy = rec;
    if (has_acc) copy.pseudo_label_acc = acc;
    hooks.on_metrics(copy);
  };
  out.run = train(std::move(state), pseudo, seed, wrapped);
  if (has_acc) {
    for (auto& rec : out.run.history) rec.pseudo_label_acc = acc;
  }
  return out;
}

}  // namespace s2cgan
