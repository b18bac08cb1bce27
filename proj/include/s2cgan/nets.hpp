#pragma once

// Generator, discriminator and labeller MLPs, the condition representation
// they exchange, and the Gumbel-softmax head of the labeller.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "s2cgan/autodiff.hpp"
#include "s2cgan/tensor.hpp"

namespace s2cgan {

using Rng = std::mt19937_64;

enum class NetworkRole : std::uint8_t { generator = 0, discriminator = 1, labeller = 2 };

const char* role_name(NetworkRole role);
// Prefix used for tape leaf names, e.g. "G." for the generator.
std::string role_prefix(NetworkRole role);

struct NamedTensor {
  std::string name;
  Tensor value;
  bool operator==(const NamedTensor&) const = default;
};

// Weights "W<i>" with shape (width_i, width_{i+1}) and biases "b<i>" with
// shape (width_{i+1}), stored in layer order.
struct NetworkParams {
  NetworkRole role = NetworkRole::generator;
  std::vector<std::size_t> widths;
  std::vector<NamedTensor> entries;

  std::size_t layers() const { return widths.size() - 1; }
  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  const Tensor& weight(std::size_t layer) const { return entries[2 * layer].value; }
  const Tensor& bias(std::size_t layer) const { return entries[2 * layer + 1].value; }
  Tensor* find(const std::string& name);
  const Tensor* find(const std::string& name) const;
  std::size_t parameter_count() const;

  // Rebuilds `widths` from the entry shapes and checks the layer invariants.
  void validate() const;

  bool operator==(const NetworkParams&) const = default;
};

// Weights ~ N(0, 2 / (fan_in + fan_out)), biases zero.
NetworkParams init_params(std::span<const std::size_t> widths, NetworkRole role, Rng& rng);

// Same architecture, every entry zero.
NetworkParams zero_params(std::span<const std::size_t> widths, NetworkRole role);

enum class ConditionKind : std::uint8_t { class_label, semantic_grid };

// Shape of one condition: `cells` simplex rows of `labels` entries each. A
// class condition is a single cell.
struct ConditionLayout {
  ConditionKind kind = ConditionKind::class_label;
  std::size_t cells = 1;
  std::size_t labels = 2;

  static ConditionLayout classes(std::size_t k) { return {ConditionKind::class_label, 1, k}; }
  static ConditionLayout grid(std::size_t cells, std::size_t labels) {
    return {ConditionKind::semantic_grid, cells, labels};
  }
  std::size_t flat_dim() const { return cells * labels; }
  bool operator==(const ConditionLayout&) const = default;
};

// A batch of conditions: `values` is (batch, cells * labels), each cell a
// simplex row. Hard conditions are one-hot in every cell.
class Condition {
 public:
  Condition(ConditionLayout layout, Tensor values, bool hard);

  // One-hot batch from integer labels, `cells` labels per item.
  static Condition from_labels(ConditionLayout layout, std::span<const int> labels);

  const ConditionLayout& layout() const { return layout_; }
  const Tensor& values() const { return values_; }
  bool hard() const { return hard_; }
  std::size_t batch() const { return values_.rows(); }

  // Argmax label per cell, row-major (batch * cells). Ties go to the lowest
  // index.
  std::vector<int> labels() const;
  // The same condition snapped to one-hot rows.
  Condition to_hard() const;

 private:
  ConditionLayout layout_;
  Tensor values_;
  bool hard_;
};

struct NoiseSpec {
  std::size_t dim = 0;  // 0 disables noise
};

Tensor sample_normal(std::size_t rows, std::size_t cols, Rng& rng);
// Standard Gumbel noise -log(-log(u)), u clamped to [1e-12, 1 - 1e-12].
Tensor sample_gumbel(std::size_t rows, std::size_t cols, Rng& rng);
// One-hot of the per-cell argmax of a (batch, cells * labels) tensor.
Tensor one_hot_argmax(const Tensor& values, std::size_t labels);

// --- graph builders -------------------------------------------------------

// Parameters registered on a tape, either as named leaves (trainable) or as
// constants (frozen).
struct BoundNetwork {
  const NetworkParams* params = nullptr;
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
};

BoundNetwork bind_network(ad::Tape& tape, const NetworkParams& params, bool trainable);

// relu hidden layers, linear output.
ad::Var mlp_graph(const BoundNetwork& net, ad::Var input);
ad::Var generator_graph(const BoundNetwork& g, ad::Var condition, std::optional<ad::Var> noise);
ad::Var discriminator_graph(const BoundNetwork& d, ad::Var x, ad::Var condition);
ad::Var labeller_logits_graph(const BoundNetwork& l, ad::Var x);
// Softmax applied independently to every cell.
ad::Var cellwise_softmax(ad::Var logits, const ConditionLayout& layout);
ad::Var cellwise_log_softmax(ad::Var logits, const ConditionLayout& layout);
// softmax((logits + gumbel) / tau) per cell; with `hard` the forward value is
// the one-hot argmax and the gradient is that of the soft sample.
ad::Var gumbel_softmax_graph(ad::Var logits, const Tensor& gumbel, double tau,
                             const ConditionLayout& layout, bool hard);

// --- value-level forward passes -------------------------------------------

Tensor generator_forward(const NetworkParams& g, const Condition& c, const Tensor& z);
Tensor discriminator_forward(const NetworkParams& d, const Tensor& x, const Condition& c);

enum class LabelMode : std::uint8_t { soft, gumbel, hard };

Tensor labeller_logits(const NetworkParams& l, const Tensor& x);
Condition labeller_forward(const NetworkParams& l, const ConditionLayout& layout, const Tensor& x,
                           LabelMode mode, double tau, Rng& rng);

// Single-row Gumbel-softmax sample over `logits`.
std::vector<double> gumbel_softmax_sample(std::span<const double> logits, double tau, Rng& rng,
                                          bool hard);

}  // namespace s2cgan
