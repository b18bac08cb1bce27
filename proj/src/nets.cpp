#include "s2cgan/nets.hpp"

#include <algorithm>
#include <cmath>

#include "s2cgan/error.hpp"

namespace s2cgan {

const char* role_name(NetworkRole role) {
  switch (role) {
    case NetworkRole::generator: return "generator";
    case NetworkRole::discriminator: return "discriminator";
    case NetworkRole::labeller: return "labeller";
  }
  return "unknown";
}

std::string role_prefix(NetworkRole role) {
  switch (role) {
    case NetworkRole::generator: return "G.";
    case NetworkRole::discriminator: return "D.";
    case NetworkRole::labeller: return "L.";
  }
  return "?.";
}

Tensor* NetworkParams::find(const std::string& name) {
  for (auto& e : entries) {
    if (e.name == name) return &e.value;
  }
  return nullptr;
}

const Tensor* NetworkParams::find(const std::string& name) const {
  return const_cast<NetworkParams*>(this)->find(name);
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.value.size();
  return n;
}

void NetworkParams::validate() const {
  if (widths.size() < 2) throw InvalidArgument("network: need at least input and output widths");
  if (entries.size() != 2 * layers()) {
    throw InvalidArgument("network: expected " + std::to_string(2 * layers()) + " entries, found " +
                          std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < layers(); ++i) {
    const auto& w = entries[2 * i];
    const auto& b = entries[2 * i + 1];
    if (w.name != "W" + std::to_string(i) || b.name != "b" + std::to_string(i)) {
      throw InvalidArgument("network: unexpected entry names '" + w.name + "', '" + b.name + "'");
    }
    if (w.value.shape() != Shape{widths[i], widths[i + 1]}) {
      throw ShapeError("network: " + w.name + " has shape " + shape_string(w.value.shape()));
    }
    if (b.value.shape() != Shape{widths[i + 1]}) {
      throw ShapeError("network: " + b.name + " has shape " + shape_string(b.value.shape()));
    }
  }
}

namespace {

void check_widths(std::span<const std::size_t> widths) {
  if (widths.empty()) throw InvalidArgument("init_params: empty architecture");
  if (widths.size() < 2) throw InvalidArgument("init_params: need at least one layer");
  for (std::size_t w : widths) {
    if (w < 1) throw InvalidArgument("init_params: widths must be >= 1");
  }
}

}  // namespace

NetworkParams init_params(std::span<const std::size_t> widths, NetworkRole role, Rng& rng) {
  NetworkParams p = zero_params(widths, role);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const double sd = std::sqrt(2.0 / static_cast<double>(widths[i] + widths[i + 1]));
    std::normal_distribution<double> normal(0.0, sd);
    for (double& v : p.entries[2 * i].value.mutable_data()) v = normal(rng);
  }
  return p;
}

NetworkParams zero_params(std::span<const std::size_t> widths, NetworkRole role) {
  check_widths(widths);
  NetworkParams p;
  p.role = role;
  p.widths.assign(widths.begin(), widths.end());
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    p.entries.push_back({"W" + std::to_string(i), Tensor::zeros({widths[i], widths[i + 1]})});
    p.entries.push_back({"b" + std::to_string(i), Tensor::zeros({widths[i + 1]})});
  }
  return p;
}

// ---------------------------------------------------------------------------

Condition::Condition(ConditionLayout layout, Tensor values, bool hard)
    : layout_(layout), values_(std::move(values)), hard_(hard) {
  if (values_.rank() != 2 || values_.cols() != layout_.flat_dim()) {
    throw ShapeError("condition: values of shape " + shape_string(values_.shape()) +
                     " do not match layout width " + std::to_string(layout_.flat_dim()));
  }
  const std::size_t m = layout_.labels;
  const auto v = values_.data();
  for (std::size_t row = 0; row < values_.size() / m; ++row) {
    double total = 0.0;
    std::size_t ones = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double e = v[row * m + j];
      if (!(e >= 0.0)) throw InvalidArgument("condition: negative or NaN simplex entry");
      total += e;
      if (e == 1.0) ++ones;
      else if (hard_ && e != 0.0) throw InvalidArgument("condition: hard row is not one-hot");
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("condition: simplex row does not sum to 1");
    if (hard_ && ones != 1) throw InvalidArgument("condition: hard row is not one-hot");
  }
}

Condition Condition::from_labels(ConditionLayout layout, std::span<const int> labels) {
  if (labels.empty() || labels.size() % layout.cells != 0) {
    throw InvalidArgument("condition: label count not a positive multiple of cells");
  }
  const std::size_t batch = labels.size() / layout.cells;
  Tensor values = Tensor::zeros({batch, layout.flat_dim()});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= layout.labels) {
      throw InvalidArgument("condition: label " + std::to_string(labels[i]) + " out of range");
    }
    values[i * layout.labels + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  return Condition(layout, std::move(values), true);
}

std::vector<int> Condition::labels() const {
  const std::size_t m = layout_.labels;
  std::vector<int> out(values_.size() / m);
  const auto v = values_.data();
  for (std::size_t row = 0; row < out.size(); ++row) {
    const double* r = v.data() + row * m;
    out[row] = static_cast<int>(std::max_element(r, r + m) - r);
  }
  return out;
}

Condition Condition::to_hard() const {
  return Condition(layout_, one_hot_argmax(values_, layout_.labels), true);
}

Tensor sample_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor t = Tensor::zeros({rows, cols});
  for (double& v : t.mutable_data()) v = normal(rng);
  return t;
}

Tensor sample_gumbel(std::size_t rows, std::size_t cols, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Tensor t = Tensor::zeros({rows, cols});
  for (double& v : t.mutable_data()) {
    const double u = std::clamp(uniform(rng), 1e-12, 1.0 - 1e-12);
    v = -std::log(-std::log(u));
  }
  return t;
}

Tensor one_hot_argmax(const Tensor& values, std::size_t labels) {
  Tensor out = Tensor::zeros(values.shape());
  const auto v = values.data();
  for (std::size_t row = 0; row < values.size() / labels; ++row) {
    const double* r = v.data() + row * labels;
    const std::size_t k = static_cast<std::size_t>(std::max_element(r, r + labels) - r);
    out[row * labels + k] = 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

BoundNetwork bind_network(ad::Tape& tape, const NetworkParams& params, bool trainable) {
  BoundNetwork net;
  net.params = &params;
  const std::string prefix = role_prefix(params.role);
  for (std::size_t i = 0; i < params.layers(); ++i) {
    const auto& w = params.entries[2 * i];
    const auto& b = params.entries[2 * i + 1];
    if (trainable) {
      net.weights.push_back(tape.leaf(prefix + w.name, w.value));
      net.biases.push_back(tape.leaf(prefix + b.name, b.value));
    } else {
      net.weights.push_back(tape.constant(w.value));
      net.biases.push_back(tape.constant(b.value));
    }
  }
  return net;
}

ad::Var mlp_graph(const BoundNetwork& net, ad::Var input) {
  const std::size_t expected = net.params->input_width();
  if (input.value().rank() != 2 || input.value().cols() != expected) {
    throw ShapeError(std::string(role_name(net.params->role)) + ": input of shape " +
                     shape_string(input.shape()) + " does not match input width " +
                     std::to_string(expected));
  }
  ad::Var h = input;
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    h = ad::matmul(h, net.weights[i]) + net.biases[i];
    if (i + 1 < net.weights.size()) h = ad::relu(h);
  }
  return h;
}

ad::Var generator_graph(const BoundNetwork& g, ad::Var condition, std::optional<ad::Var> noise) {
  if (!noise) return mlp_graph(g, condition);
  return mlp_graph(g, ad::concat({condition, *noise}));
}

ad::Var discriminator_graph(const BoundNetwork& d, ad::Var x, ad::Var condition) {
  return mlp_graph(d, ad::concat({x, condition}));
}

ad::Var labeller_logits_graph(const BoundNetwork& l, ad::Var x) { return mlp_graph(l, x); }

namespace {

ad::Var per_cell(ad::Var logits, const ConditionLayout& layout, ad::Var (*op)(ad::Var)) {
  const Shape original = logits.shape();
  if (layout.cells == 1) return op(logits);
  const std::size_t rows = logits.value().size() / layout.labels;
  ad::Var flat = ad::reshape(logits, {rows, layout.labels});
  return ad::reshape(op(flat), original);
}

}  // namespace

ad::Var cellwise_softmax(ad::Var logits, const ConditionLayout& layout) {
  return per_cell(logits, layout, &ad::softmax);
}

ad::Var cellwise_log_softmax(ad::Var logits, const ConditionLayout& layout) {
  return per_cell(logits, layout, &ad::log_softmax);
}

ad::Var gumbel_softmax_graph(ad::Var logits, const Tensor& gumbel, double tau,
                             const ConditionLayout& layout, bool hard) {
  if (!(tau > 0.0)) throw InvalidArgument("gumbel_softmax: tau must be positive");
  ad::Var noisy = logits + logits.tape().constant(gumbel);
  ad::Var soft = cellwise_softmax(ad::scale(noisy, 1.0 / tau), layout);
  if (!hard) return soft;
  return ad::straight_through(soft, one_hot_argmax(soft.value(), layout.labels));
}

// ---------------------------------------------------------------------------

Tensor generator_forward(const NetworkParams& g, const Condition& c, const Tensor& z) {
  ad::Tape tape;
  BoundNetwork net = bind_network(tape, g, false);
  std::optional<ad::Var> noise;
  const std::size_t flat = c.layout().flat_dim();
  if (g.input_width() > flat) {
    if (z.rank() != 2 || z.rows() != c.batch() || z.cols() != g.input_width() - flat) {
      throw ShapeError("generator: noise of shape " + shape_string(z.shape()) + " does not match (" +
                       std::to_string(c.batch()) + "x" + std::to_string(g.input_width() - flat) + ")");
    }
    noise = tape.constant(z);
  }
  return generator_graph(net, tape.constant(c.values()), noise).value();
}

Tensor discriminator_forward(const NetworkParams& d, const Tensor& x, const Condition& c) {
  ad::Tape tape;
  BoundNetwork net = bind_network(tape, d, false);
  if (x.rank() != 2 || x.rows() != c.batch()) {
    throw ShapeError("discriminator: sample batch " + shape_string(x.shape()) +
                     " does not match condition batch " + std::to_string(c.batch()));
  }
  return discriminator_graph(net, tape.constant(x), tape.constant(c.values())).value();
}

Tensor labeller_logits(const NetworkParams& l, const Tensor& x) {
  ad::Tape tape;
  BoundNetwork net = bind_network(tape, l, false);
  return labeller_logits_graph(net, tape.constant(x)).value();
}

Condition labeller_forward(const NetworkParams& l, const ConditionLayout& layout, const Tensor& x,
                           LabelMode mode, double tau, Rng& rng) {
  if (mode == LabelMode::gumbel && !(tau > 0.0)) {
    throw InvalidArgument("labeller: tau must be positive in gumbel mode");
  }
  if (l.output_width() != layout.flat_dim()) {
    throw ShapeError("labeller: output width " + std::to_string(l.output_width()) +
                     " does not match condition width " + std::to_string(layout.flat_dim()));
  }
  ad::Tape tape;
  BoundNetwork net = bind_network(tape, l, false);
  ad::Var logits = labeller_logits_graph(net, tape.constant(x));
  switch (mode) {
    case LabelMode::soft:
      return Condition(layout, cellwise_softmax(logits, layout).value(), false);
    case LabelMode::gumbel: {
      const Tensor& lv = logits.value();
      Tensor g = sample_gumbel(lv.rows(), lv.cols(), rng);
      return Condition(layout, gumbel_softmax_graph(logits, g, tau, layout, false).value(), false);
    }
    case LabelMode::hard:
      return Condition(layout, one_hot_argmax(logits.value(), layout.labels), true);
  }
  throw InvalidArgument("labeller: unknown mode");
}

std::vector<double> gumbel_softmax_sample(std::span<const double> logits, double tau, Rng& rng,
                                          bool hard) {
  if (!(tau > 0.0)) throw InvalidArgument("gumbel_softmax_sample: tau must be positive");
  if (logits.empty()) throw InvalidArgument("gumbel_softmax_sample: empty logits");
  const Tensor g = sample_gumbel(1, logits.size(), rng);
  std::vector<double> y(logits.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (logits[i] + g[i]) / tau;
  const double mx = *std::max_element(y.begin(), y.end());
  double total = 0.0;
  for (double& v : y) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : y) v /= total;
  if (hard) {
    const auto k = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    std::fill(y.begin(), y.end(), 0.0);
    y[k] = 1.0;
  }
  return y;
}

}  // namespace s2cgan
