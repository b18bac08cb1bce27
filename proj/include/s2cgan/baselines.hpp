#pragma once

// Reference runs for the semi-supervised method: a cGAN trained with every
// label, and the pseudo-labelling pipeline (labeller pretrained on S, frozen,
// then a plain cGAN on S plus pseudo-labelled U).

#include <cstdint>
#include <vector>

#include "s2cgan/trainer.hpp"

namespace s2cgan {

struct BaselineResult {
  TrainResult run;
  std::vector<std::vector<int>> pseudo_labels;  // naive only, parallel to split.unsupervised
  double pseudo_label_acc = 0.0;               // naive only, cell accuracy against withheld truth
};

// Config for the supervised cGAN stage: lambdas (1, 0, 0) and a supervised
// batch equal to the semi-supervised run's per-step sample count.
ExperimentConfig supervised_stage_config(const ExperimentConfig& config, std::size_t n_supervised);

// All of the split's training labels; U is folded into S.
BaselineResult run_baseline_full(const ExperimentConfig& config, const DatasetSplit& split,
                                 std::uint64_t seed, const TrainHooks& hooks = {});

// Cross-entropy pretraining of a labeller on S alone.
NetworkParams pretrain_labeller(const ExperimentConfig& config, const DatasetSplit& split, Rng& rng);

BaselineResult run_baseline_naive(const ExperimentConfig& config, const DatasetSplit& split,
                                  std::uint64_t seed, const TrainHooks& hooks = {});

}  // namespace s2cgan
