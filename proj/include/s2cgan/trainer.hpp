#pragma once

// Alternating minimax training of the discriminator against the generator
// and labeller under the combined semi-supervised objective.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "s2cgan/config.hpp"
#include "s2cgan/metrics.hpp"
#include "s2cgan/nets.hpp"
#include "s2cgan/objectives.hpp"
#include "s2cgan/synth_data.hpp"

namespace s2cgan {

struct AdamMoments {
  Tensor first;
  Tensor second;
  bool operator==(const AdamMoments&) const = default;
};

struct AdamHyper {
  double lr = 2e-4;
  double beta1 = 0.0;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam step; `step` counts updates from 1.
void adam_update(Tensor& param, const Tensor& grad, AdamMoments& moments, const AdamHyper& hyper,
                 std::uint64_t step);

// A network together with its optimizer state.
struct OptimizedNetwork {
  NetworkParams params;
  std::vector<AdamMoments> moments;  // parallel to params.entries
  std::uint64_t updates = 0;

  static OptimizedNetwork create(NetworkParams params);
  // Applies gradients keyed by tape leaf name (role prefix + entry name).
  void apply(const ad::GradMap& grads, const AdamHyper& hyper);
};

// Independent generator for stream `id` of a run seed.
Rng derive_rng(std::uint64_t seed, std::uint32_t id);

struct TrainState {
  OptimizedNetwork generator;
  OptimizedNetwork discriminator;
  OptimizedNetwork labeller;
  std::uint64_t step = 0;
  Rng data_rng;
  Rng noise_rng;
  Rng gumbel_rng;
  ExperimentConfig config;
};

// Fresh networks and RNG streams for one run seed.
TrainState init_train_state(const ExperimentConfig& config, std::uint64_t seed);

// Whether the labeller receives gradients under the configured lambdas.
bool labeller_trained(const ExperimentConfig& config);

struct StepBatches {
  SupervisedBatch sup;
  std::optional<UnsupervisedBatch> unsup;
};

// Draws one step's batches plus the generator noise and Gumbel noise that
// stay frozen across the step's discriminator and generator phases.
StepBatches draw_batches(TrainState& state, const DatasetSplit& split);

// Discriminator gradients of -(lambda1 V_c + lambda3 V_c^u) on the step's
// batches, with G and L frozen. `logged` receives the literal objective
// values of the current state when non-null.
ad::GradMap discriminator_gradients(const TrainState& state, const StepBatches& batches,
                                    ObjectiveBreakdown* logged = nullptr);

// Generator and labeller gradients of the training surrogate, with D frozen.
// Labeller entries are present only when the labeller is trained.
ad::GradMap generator_labeller_gradients(const TrainState& state, const StepBatches& batches);

// One minimax step: d_steps_per_g_step discriminator ascent updates, then a
// joint generator/labeller descent update. Returns the literal objective
// values of the pre-update state on these batches.
ObjectiveBreakdown train_step(TrainState& state, const StepBatches& batches);

struct TrainHooks {
  // Called after every step whose index is a multiple of checkpoint_every,
  // and after the last step.
  std::function<void(const TrainState&)> on_checkpoint;
  std::function<void(const MetricsRecord&)> on_metrics;
};

struct TrainResult {
  TrainState state;
  std::vector<MetricsRecord> history;
};

// The split for a run seed: derived from the config's split seed and the run
// seed.
DatasetSplit make_run_split(const ExperimentConfig& config, std::uint64_t seed);

// Runs config.optimizer.steps steps, appending metrics every eval_every.
TrainResult train(const ExperimentConfig& config, const DatasetSplit& split, std::uint64_t seed,
                  const TrainHooks& hooks = {});
TrainResult train(const ExperimentConfig& config, std::uint64_t seed, const TrainHooks& hooks = {});
// Continues from an existing state until state.config.optimizer.steps.
TrainResult train(TrainState state, const DatasetSplit& split, std::uint64_t seed,
                  const TrainHooks& hooks = {});

}  // namespace s2cgan
