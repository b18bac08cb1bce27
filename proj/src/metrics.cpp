#include "s2cgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "s2cgan/error.hpp"

namespace s2cgan {

AgreementResult score_labels(std::span<const int> predicted, std::span<const int> reference,
                             std::size_t labels) {
  if (reference.empty()) throw InvalidArgument("label_agreement: empty test set");
  if (predicted.size() != reference.size()) {
    throw ShapeError("label_agreement: prediction and reference lengths differ");
  }
  std::vector<std::size_t> inter(labels, 0), uni(labels, 0), present(labels, 0);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const auto p = static_cast<std::size_t>(predicted[i]);
    const auto r = static_cast<std::size_t>(reference[i]);
    ++present[r];
    if (p == r) {
      ++matches;
      ++inter[r];
      ++uni[r];
    } else {
      ++uni[r];
      ++uni[p];
    }
  }
  AgreementResult out;
  out.accuracy = static_cast<double>(matches) / static_cast<double>(reference.size());
  out.per_class_iou.assign(labels, std::numeric_limits<double>::quiet_NaN());
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t l = 0; l < labels; ++l) {
    if (!present[l]) continue;
    out.per_class_iou[l] = static_cast<double>(inter[l]) / static_cast<double>(uni[l]);
    total += out.per_class_iou[l];
    ++counted;
  }
  out.mean_iou = total / static_cast<double>(counted);
  return out;
}

AgreementResult label_agreement(const NetworkParams& g, const NetworkParams* labeller,
                                const TaskSpec& task, const Condition& test_conditions,
                                std::size_t passes, const InferenceSpec& inference, Rng& rng) {
  if (test_conditions.batch() == 0) throw InvalidArgument("label_agreement: empty test set");
  if (passes != 1 && passes != 2) throw InvalidArgument("label_agreement: passes must be 1 or 2");
  if (passes == 2 && !labeller) throw InvalidArgument("label_agreement: two passes need a labeller");
  InferenceRequest req{test_conditions, inference.noise, std::nullopt, inference.reuse_noise};
  if (req.noise == NoiseMode::fixed) req.noise = NoiseMode::fresh;
  Tensor x = passes == 1 ? infer_one_pass(g, req, rng) : infer_two_pass(g, *labeller, req, rng).x_final;
  const std::vector<int> predicted = bayes_oracle_labels(task, x);
  const std::vector<int> reference = test_conditions.labels();
  AgreementResult out = score_labels(predicted, reference, task.layout().labels);
  out.generated = std::move(x);
  return out;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

double kernel_sum(double d2, std::span<const double> inv_two_h2) {
  double k = 0.0;
  for (double s : inv_two_h2) k += std::exp(-d2 * s);
  return k;
}

}  // namespace

double median_pairwise_distance(const Tensor& x, std::size_t max_rows) {
  const std::size_t n = std::min(x.rows(), max_rows);
  if (n < 2) throw InvalidArgument("median_pairwise_distance: need at least 2 rows");
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d.push_back(std::sqrt(squared_distance(x.row(i), x.row(j))));
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

double mmd_rbf(const Tensor& x_in, const Tensor& y_in, std::span<const double> bandwidths) {
  if (x_in.rank() != 2 || y_in.rank() != 2 || x_in.rows() < 2 || y_in.rows() < 2) {
    throw InvalidArgument("mmd_rbf: need at least 2 samples in each set");
  }
  if (x_in.cols() != y_in.cols()) throw ShapeError("mmd_rbf: sample dimensions differ");
  // Canonical argument order makes the estimate exactly symmetric.
  const bool swap = std::lexicographical_compare(y_in.data().begin(), y_in.data().end(),
                                                 x_in.data().begin(), x_in.data().end());
  const Tensor& x = swap ? y_in : x_in;
  const Tensor& y = swap ? x_in : y_in;

  std::vector<double> h(bandwidths.begin(), bandwidths.end());
  if (h.empty()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < x.rows(); ++i) rows.emplace_back(x.row(i).begin(), x.row(i).end());
    for (std::size_t i = 0; i < y.rows(); ++i) rows.emplace_back(y.row(i).begin(), y.row(i).end());
    const double med = median_pairwise_distance(stack_rows(rows), rows.size());
    h = {0.5 * med, med, 2.0 * med};
  }
  std::vector<double> inv;
  for (double b : h) {
    if (!(b > 0.0)) throw InvalidArgument("mmd_rbf: bandwidths must be positive");
    inv.push_back(1.0 / (2.0 * b * b));
  }

  const std::size_t m = x.rows();
  const std::size_t n = y.rows();
  double kxx = 0.0, kyy = 0.0, kxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) kxx += kernel_sum(squared_distance(x.row(i), x.row(j)), inv);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) kyy += kernel_sum(squared_distance(y.row(i), y.row(j)), inv);
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) kxy += kernel_sum(squared_distance(x.row(i), y.row(j)), inv);
  }
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  return 2.0 * kxx / (md * (md - 1.0)) + 2.0 * kyy / (nd * (nd - 1.0)) - 2.0 * kxy / (md * nd);
}

double label_marginal_tv(const NetworkParams& labeller, const TaskSpec& task, const Tensor& samples) {
  if (samples.rank() != 2 || samples.rows() == 0) throw InvalidArgument("label_marginal_tv: empty sample set");
  const ConditionLayout layout = task.layout();
  Rng unused(0);
  const std::vector<int> labels =
      labeller_forward(labeller, layout, samples, LabelMode::hard, 1.0, unused).labels();
  const std::size_t n = samples.rows();
  const std::size_t m = layout.labels;
  std::vector<double> prior = task.kind == TaskKind::a
                                  ? task.a.resolved_prior()
                                  : std::vector<double>(m, 1.0 / static_cast<double>(m));
  double tv_total = 0.0;
  for (std::size_t cell = 0; cell < layout.cells; ++cell) {
    std::vector<double> hist(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) hist[static_cast<std::size_t>(labels[i * layout.cells + cell])] += 1.0;
    double tv = 0.0;
    for (std::size_t l = 0; l < m; ++l) tv += std::abs(hist[l] / static_cast<double>(n) - prior[l]);
    tv_total += 0.5 * tv;
  }
  return std::min(1.0, tv_total / static_cast<double>(layout.cells));
}

Tensor labeller_marginal_samples(const DatasetSplit& split) {
  std::vector<std::vector<double>> rows;
  rows.reserve(split.supervised.size() + split.unsupervised.size());
  for (const auto& s : split.supervised) rows.push_back(s.x);
  for (const auto& x : split.unsupervised) rows.push_back(x);
  return stack_rows(rows);
}

EvalContext make_eval_context(const DatasetSplit& split, const ExperimentConfig& config) {
  EvalContext ctx;
  ctx.split = &split;
  ctx.config = &config;
  const double med = median_pairwise_distance(samples_x(split.test));
  for (double s : config.mmd_bandwidth_scales) ctx.bandwidths.push_back(s * med);
  return ctx;
}

MetricsRecord evaluate_model(const EvalContext& ctx, const NetworkParams& g,
                             const NetworkParams* labeller, std::size_t passes, Rng& rng) {
  const DatasetSplit& split = *ctx.split;
  const Condition conditions = samples_condition(split.task, split.test);
  AgreementResult agreement =
      label_agreement(g, labeller, split.task, conditions, passes, ctx.config->inference, rng);
  MetricsRecord rec;
  rec.label_agreement = agreement.accuracy;
  rec.per_class_iou = agreement.per_class_iou;
  rec.mean_iou = agreement.mean_iou;
  rec.mmd2 = mmd_rbf(samples_x(split.test), agreement.generated, ctx.bandwidths);
  if (labeller) rec.marginal_tv = label_marginal_tv(*labeller, split.task, labeller_marginal_samples(split));
  return rec;
}

}  // namespace s2cgan
