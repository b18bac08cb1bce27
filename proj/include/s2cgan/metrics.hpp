#pragma once

// Evaluation of trained generators against a fixed referee (the Bayes
// oracle of the synthetic task), kernel two-sample distance, and labeller
// marginal fidelity.

#include <optional>
#include <span>
#include <vector>

#include "s2cgan/config.hpp"
#include "s2cgan/inference.hpp"
#include "s2cgan/objectives.hpp"
#include "s2cgan/synth_data.hpp"

namespace s2cgan {

struct MetricsRecord {
  std::size_t step = 0;
  double label_agreement = 0.0;
  std::vector<double> per_class_iou;  // NaN for labels absent from the reference
  double mean_iou = 0.0;
  double mmd2 = 0.0;
  std::optional<double> marginal_tv;
  std::optional<double> pseudo_label_acc;
  ObjectiveBreakdown objective;
};

struct AgreementResult {
  double accuracy = 0.0;
  std::vector<double> per_class_iou;
  double mean_iou = 0.0;
  Tensor generated;  // the scored samples
};

// Fraction of reference labels recovered by the oracle, and per-label IoU
// over all cells of all items. Labels absent from the reference get NaN and
// are excluded from the mean.
AgreementResult score_labels(std::span<const int> predicted, std::span<const int> reference,
                             std::size_t labels);

// Synthesizes one sample per test condition (one or two passes) and scores
// the oracle's labelling of it against the input condition. `labeller` is
// required when passes = 2.
AgreementResult label_agreement(const NetworkParams& g, const NetworkParams* labeller,
                                const TaskSpec& task, const Condition& test_conditions,
                                std::size_t passes, const InferenceSpec& inference, Rng& rng);

// Unbiased (diagonal-excluded) squared MMD with a sum of RBF kernels
// exp(-|x - y|^2 / (2 h^2)) over the given bandwidths. Empty bandwidths
// select {0.5, 1, 2} x the median pairwise distance of the pooled sample.
double mmd_rbf(const Tensor& x, const Tensor& y, std::span<const double> bandwidths = {});

// Median Euclidean distance over distinct pairs of rows (up to `max_rows`).
double median_pairwise_distance(const Tensor& x, std::size_t max_rows = 500);

// TV distance between the labeller's hard-label histogram over `samples`
// and the true prior. Grid tasks compare each cell against the uniform
// stationary distribution and average over cells.
double label_marginal_tv(const NetworkParams& labeller, const TaskSpec& task, const Tensor& samples);

// Every unlabelled and supervised sample of a split, stacked.
Tensor labeller_marginal_samples(const DatasetSplit& split);

struct EvalContext {
  const DatasetSplit* split = nullptr;
  const ExperimentConfig* config = nullptr;
  std::vector<double> bandwidths;  // fixed per split for comparability
};

EvalContext make_eval_context(const DatasetSplit& split, const ExperimentConfig& config);

// Metrics of a model snapshot on the split's test set. The labeller is
// optional (baselines without one leave marginal_tv empty).
MetricsRecord evaluate_model(const EvalContext& ctx, const NetworkParams& g,
                             const NetworkParams* labeller, std::size_t passes, Rng& rng);

}  // namespace s2cgan
