#include "s2cgan/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "s2cgan/error.hpp"

namespace s2cgan::ad {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

const double kLogClampValue = std::log(kLogClamp);
const double kLogUpperValue = std::log1p(-kLogClamp);

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap as_matrix(Tensor& t) {
  return MutMap(t.mutable_data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

// op(x) * op(y) with op a optional transpose. Eigen's small-product kernels
// pick their vector peeling from the buffer address, so operands are copied
// into Eigen-owned aligned storage to keep results independent of where a
// Tensor happens to live.
Tensor product(const Tensor& x, bool tx, const Tensor& y, bool ty) {
  const RowMatrix a = as_matrix(x);
  const RowMatrix b = as_matrix(y);
  RowMatrix c;
  if (tx) {
    c.noalias() = a.transpose() * b;
  } else if (ty) {
    c.noalias() = a * b.transpose();
  } else {
    c.noalias() = a * b;
  }
  Tensor out = Tensor::zeros({static_cast<std::size_t>(c.rows()), static_cast<std::size_t>(c.cols())});
  as_matrix(out) = c;
  return out;
}

// How two operands of a binary elementwise op line up.
struct Broadcast {
  Shape out;
  std::size_t rows = 1;
  std::size_t cols = 1;
  bool a_row = false;  // a is a single row repeated over the batch
  bool b_row = false;
};

bool is_row(const Shape& s) { return s.size() == 1 || (s.size() == 2 && s[0] == 1); }

Broadcast plan_broadcast(const char* op, const Tensor& a, const Tensor& b) {
  Broadcast p;
  if (a.shape() == b.shape()) {
    p.out = a.shape();
    p.rows = a.rows();
    p.cols = a.size() / std::max<std::size_t>(a.rows(), 1);
    return p;
  }
  if (a.rank() == 2 && is_row(b.shape()) && b.cols() == a.cols()) {
    p.out = a.shape();
    p.b_row = true;
  } else if (b.rank() == 2 && is_row(a.shape()) && a.cols() == b.cols()) {
    p.out = b.shape();
    p.a_row = true;
  } else {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()));
  }
  p.rows = p.out[0];
  p.cols = p.out[1];
  return p;
}

// Sums a (rows, cols) gradient down to `target` when the operand was a
// broadcast row.
Tensor reduce_to(const Tensor& grad, const Shape& target, bool was_row) {
  if (!was_row) return grad.reshaped(target);
  std::vector<double> acc(grad.cols(), 0.0);
  for (std::size_t r = 0; r < grad.rows(); ++r) {
    for (std::size_t c = 0; c < grad.cols(); ++c) acc[c] += grad.at(r, c);
  }
  return Tensor(target, std::move(acc));
}

// Rows of the last axis for row-wise ops (softmax family).
std::size_t row_count(const Tensor& t) { return t.size() / t.cols(); }

void require_float_shape_equal(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

template <typename F>
Tensor map_values(const Tensor& a, F&& f) {
  std::vector<double> out(a.size());
  const auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return Tensor(a.shape(), std::move(out));
}

Var unary(Var a, OpKind op, Tensor value, double scalar = 0.0) {
  TapeNode node;
  node.op = op;
  node.inputs = {a.id()};
  node.value = std::move(value);
  node.scalar = scalar;
  return a.tape().push(std::move(node));
}

void check_same_tape(const char* op, Var a, Var b) {
  if (&a.tape() != &b.tape()) throw InvalidArgument(std::string(op) + ": operands on different tapes");
}

Tensor softmax_rows(const Tensor& x) {
  const std::size_t cols = x.cols();
  const std::size_t rows = row_count(x);
  std::vector<double> out(x.size());
  const auto in = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = in.data() + r * cols;
    double* dst = out.data() + r * cols;
    const double mx = *std::max_element(src, src + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      dst[c] = std::exp(src[c] - mx);
      total += dst[c];
    }
    for (std::size_t c = 0; c < cols; ++c) dst[c] /= total;
  }
  return Tensor(x.shape(), std::move(out));
}

}  // namespace

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::leaf: return "leaf";
    case OpKind::constant: return "constant";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::scale: return "scale";
    case OpKind::add_scalar: return "add_scalar";
    case OpKind::tanh: return "tanh";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::relu: return "relu";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::log_sigmoid: return "log_sigmoid";
    case OpKind::softmax: return "softmax";
    case OpKind::log_softmax: return "log_softmax";
    case OpKind::mean_batch: return "mean_batch";
    case OpKind::mean_all: return "mean_all";
    case OpKind::sum_all: return "sum_all";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::reshape: return "reshape";
    case OpKind::straight_through: return "straight_through";
    case OpKind::stop_gradient: return "stop_gradient";
  }
  return "unknown";
}

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::leaf(const std::string& name, Tensor value) {
  if (name.empty()) throw InvalidArgument("leaf: empty name");
  if (leaves_.count(name)) throw InvalidArgument("leaf: duplicate leaf '" + name + "'");
  TapeNode node;
  node.op = OpKind::leaf;
  node.value = std::move(value);
  node.requires_grad = true;
  node.name = name;
  leaves_[name] = nodes_.size();
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  TapeNode node;
  node.op = OpKind::constant;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(TapeNode node) {
  node.requires_grad = false;
  if (node.op != OpKind::stop_gradient) {
    for (std::size_t in : node.inputs) {
      if (in >= nodes_.size()) throw InvalidArgument("tape: input refers to a later node");
      node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
    }
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

GradMap Tape::backward(Var output) const {
  std::set<std::string> all;
  for (const auto& [name, id] : leaves_) all.insert(name);
  return backward(output, all);
}

GradMap Tape::backward(Var output, const std::set<std::string>& leaves) const {
  if (&output.tape() != this) throw InvalidArgument("backward: output belongs to another tape");
  const Tensor& out_value = nodes_.at(output.id()).value;
  if (out_value.size() != 1) {
    throw ShapeError("backward: output of shape " + shape_string(out_value.shape()) +
                     " is not scalar");
  }
  for (const auto& name : leaves) {
    if (!leaves_.count(name)) throw InvalidArgument("backward: leaf '" + name + "' not on tape");
  }

  std::vector<Tensor> grads(output.id() + 1);
  std::vector<bool> has(output.id() + 1, false);
  auto accumulate = [&](std::size_t id, Tensor g) {
    if (!nodes_[id].requires_grad) return;
    if (!has[id]) {
      grads[id] = std::move(g);
      has[id] = true;
      return;
    }
    auto dst = grads[id].mutable_data();
    const auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  };
  if (nodes_[output.id()].requires_grad) {
    grads[output.id()] = Tensor::full(out_value.shape(), 1.0);
    has[output.id()] = true;
  }

  for (std::size_t id = output.id() + 1; id-- > 0;) {
    if (!has[id]) continue;
    const TapeNode& n = nodes_[id];
    const Tensor& g = grads[id];
    switch (n.op) {
      case OpKind::leaf:
      case OpKind::constant:
      case OpKind::stop_gradient:
        break;
      case OpKind::matmul: {
        const Tensor& a = nodes_[n.inputs[0]].value;
        const Tensor& b = nodes_[n.inputs[1]].value;
        if (nodes_[n.inputs[0]].requires_grad) {
          accumulate(n.inputs[0], product(g, false, b, true));
        }
        if (nodes_[n.inputs[1]].requires_grad) {
          accumulate(n.inputs[1], product(a, true, g, false));
        }
        break;
      }
      case OpKind::add:
      case OpKind::sub:
      case OpKind::mul: {
        const Tensor& a = nodes_[n.inputs[0]].value;
        const Tensor& b = nodes_[n.inputs[1]].value;
        const Broadcast p = plan_broadcast(op_name(n.op), a, b);
        const std::size_t cols = p.cols;
        const auto gd = g.data();
        const auto ad = a.data();
        const auto bd = b.data();
        auto a_at = [&](std::size_t i) { return p.a_row ? ad[i % cols] : ad[i]; };
        auto b_at = [&](std::size_t i) { return p.b_row ? bd[i % cols] : bd[i]; };
        if (nodes_[n.inputs[0]].requires_grad) {
          std::vector<double> ga(g.size());
          for (std::size_t i = 0; i < ga.size(); ++i) {
            ga[i] = n.op == OpKind::mul ? gd[i] * b_at(i) : gd[i];
          }
          accumulate(n.inputs[0], reduce_to(Tensor(g.shape(), std::move(ga)), a.shape(), p.a_row));
        }
        if (nodes_[n.inputs[1]].requires_grad) {
          std::vector<double> gb(g.size());
          for (std::size_t i = 0; i < gb.size(); ++i) {
            gb[i] = n.op == OpKind::mul ? gd[i] * a_at(i) : (n.op == OpKind::sub ? -gd[i] : gd[i]);
          }
          accumulate(n.inputs[1], reduce_to(Tensor(g.shape(), std::move(gb)), b.shape(), p.b_row));
        }
        break;
      }
      case OpKind::scale:
        accumulate(n.inputs[0], map_values(g, [s = n.scalar](double v) { return v * s; }));
        break;
      case OpKind::add_scalar:
      case OpKind::reshape:
      case OpKind::straight_through:
        accumulate(n.inputs[0], g.reshaped(nodes_[n.inputs[0]].value.shape()));
        break;
      case OpKind::tanh:
      case OpKind::sigmoid:
      case OpKind::exp: {
        std::vector<double> gx(g.size());
        const auto y = n.value.data();
        const auto gd = g.data();
        for (std::size_t i = 0; i < gx.size(); ++i) {
          const double local = n.op == OpKind::tanh      ? 1.0 - y[i] * y[i]
                               : n.op == OpKind::sigmoid ? y[i] * (1.0 - y[i])
                                                         : y[i];
          gx[i] = gd[i] * local;
        }
        accumulate(n.inputs[0], Tensor(g.shape(), std::move(gx)));
        break;
      }
      case OpKind::relu:
      case OpKind::log:
      case OpKind::log_sigmoid: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        std::vector<double> gx(g.size());
        const auto xd = x.data();
        const auto y = n.value.data();
        const auto gd = g.data();
        for (std::size_t i = 0; i < gx.size(); ++i) {
          double local = 0.0;
          if (n.op == OpKind::relu) {
            local = xd[i] > 0.0 ? 1.0 : 0.0;
          } else if (n.op == OpKind::log) {
            local = xd[i] >= kLogClamp ? 1.0 / xd[i] : 0.0;
          } else if (y[i] > kLogClampValue && y[i] < kLogUpperValue) {
            // d/dx log sigmoid(x) = sigmoid(-x) = 1 - exp(log sigmoid(x))
            local = -std::expm1(y[i]);
          }
          gx[i] = gd[i] * local;
        }
        accumulate(n.inputs[0], Tensor(g.shape(), std::move(gx)));
        break;
      }
      case OpKind::softmax:
      case OpKind::log_softmax: {
        const std::size_t cols = n.value.cols();
        const std::size_t rows = row_count(n.value);
        std::vector<double> gx(g.size());
        const auto y = n.value.data();
        const auto gd = g.data();
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t o = r * cols;
          if (n.op == OpKind::softmax) {
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) dot += gd[o + c] * y[o + c];
            for (std::size_t c = 0; c < cols; ++c) gx[o + c] = y[o + c] * (gd[o + c] - dot);
          } else {
            double total = 0.0;
            for (std::size_t c = 0; c < cols; ++c) total += gd[o + c];
            for (std::size_t c = 0; c < cols; ++c) gx[o + c] = gd[o + c] - std::exp(y[o + c]) * total;
          }
        }
        accumulate(n.inputs[0], Tensor(g.shape(), std::move(gx)));
        break;
      }
      case OpKind::mean_batch: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        const double inv = 1.0 / static_cast<double>(x.rows());
        std::vector<double> gx(x.size());
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = g[i % x.cols()] * inv;
        accumulate(n.inputs[0], Tensor(x.shape(), std::move(gx)));
        break;
      }
      case OpKind::mean_all:
      case OpKind::sum_all: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        const double v = n.op == OpKind::mean_all ? g.item() / static_cast<double>(x.size()) : g.item();
        accumulate(n.inputs[0], Tensor::full(x.shape(), v));
        break;
      }
      case OpKind::concat: {
        const std::size_t rows = row_count(g);
        const std::size_t total = g.cols();
        std::size_t offset = 0;
        for (std::size_t in : n.inputs) {
          const Tensor& part = nodes_[in].value;
          const std::size_t w = part.cols();
          if (nodes_[in].requires_grad) {
            std::vector<double> gp(part.size());
            for (std::size_t r = 0; r < rows; ++r) {
              std::copy_n(g.data().data() + r * total + offset, w, gp.data() + r * w);
            }
            accumulate(in, Tensor(part.shape(), std::move(gp)));
          }
          offset += w;
        }
        break;
      }
      case OpKind::slice: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        const std::size_t rows = row_count(x);
        const std::size_t w = g.cols();
        Tensor gx = Tensor::zeros(x.shape());
        for (std::size_t r = 0; r < rows; ++r) {
          std::copy_n(g.data().data() + r * w, w, gx.mutable_data().data() + r * x.cols() + n.begin);
        }
        accumulate(n.inputs[0], std::move(gx));
        break;
      }
    }
  }

  GradMap result;
  for (const auto& name : leaves) {
    const std::size_t id = leaves_.at(name);
    if (id <= output.id() && has[id]) {
      result.emplace(name, grads[id]);
    } else {
      result.emplace(name, Tensor::zeros(nodes_[id].value.shape()));
    }
  }
  return result;
}

Var matmul(Var a, Var b) {
  check_same_tape("matmul", a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rank() != 2 || y.rank() != 2 || x.dim(1) != y.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(x.shape()) + " and " +
                     shape_string(y.shape()));
  }
  Tensor out = product(x, false, y, false);
  TapeNode node;
  node.op = OpKind::matmul;
  node.inputs = {a.id(), b.id()};
  node.value = std::move(out);
  return a.tape().push(std::move(node));
}

namespace {

Var binary(Var a, Var b, OpKind op) {
  check_same_tape(op_name(op), a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const Broadcast p = plan_broadcast(op_name(op), x, y);
  const std::size_t n = shape_size(p.out);
  std::vector<double> out(n);
  const auto xd = x.data();
  const auto yd = y.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double u = p.a_row ? xd[i % p.cols] : xd[i];
    const double v = p.b_row ? yd[i % p.cols] : yd[i];
    out[i] = op == OpKind::add ? u + v : op == OpKind::sub ? u - v : u * v;
  }
  TapeNode node;
  node.op = op;
  node.inputs = {a.id(), b.id()};
  node.value = Tensor(p.out, std::move(out));
  return a.tape().push(std::move(node));
}

}  // namespace

Var add(Var a, Var b) { return binary(a, b, OpKind::add); }
Var sub(Var a, Var b) { return binary(a, b, OpKind::sub); }
Var mul(Var a, Var b) { return binary(a, b, OpKind::mul); }

Var scale(Var a, double factor) {
  return unary(a, OpKind::scale, map_values(a.value(), [factor](double v) { return v * factor; }),
               factor);
}

Var add_scalar(Var a, double constant) {
  return unary(a, OpKind::add_scalar,
               map_values(a.value(), [constant](double v) { return v + constant; }), constant);
}

Var tanh(Var a) { return unary(a, OpKind::tanh, map_values(a.value(), [](double v) { return std::tanh(v); })); }

Var sigmoid(Var a) {
  return unary(a, OpKind::sigmoid, map_values(a.value(), [](double v) {
                 return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
               }));
}

Var relu(Var a) {
  return unary(a, OpKind::relu, map_values(a.value(), [](double v) { return v > 0.0 ? v : 0.0; }));
}

Var exp(Var a) { return unary(a, OpKind::exp, map_values(a.value(), [](double v) { return std::exp(v); })); }

Var log(Var a) {
  std::size_t clamps = 0;
  Tensor out = map_values(a.value(), [&clamps](double v) {
    if (std::isnan(v) || v < 0.0) throw DomainError("log: input outside [0, inf)");
    if (v < kLogClamp) {
      ++clamps;
      return kLogClampValue;
    }
    return std::log(v);
  });
  a.tape().mutable_diagnostics().log_clamps += clamps;
  return unary(a, OpKind::log, std::move(out));
}

Var log_sigmoid(Var a) {
  std::size_t clamps = 0;
  Tensor out = map_values(a.value(), [&clamps](double v) {
    if (std::isnan(v)) throw DomainError("log_sigmoid: NaN input");
    // log sigmoid(v) = -softplus(-v)
    const double y = -(std::max(-v, 0.0) + std::log1p(std::exp(-std::abs(v))));
    if (y <= kLogClampValue) {
      ++clamps;
      return kLogClampValue;
    }
    if (y >= kLogUpperValue) {
      ++clamps;
      return kLogUpperValue;
    }
    return y;
  });
  a.tape().mutable_diagnostics().log_clamps += clamps;
  return unary(a, OpKind::log_sigmoid, std::move(out));
}

Var softmax(Var a) {
  if (a.value().rank() == 0) throw ShapeError("softmax: scalar input");
  return unary(a, OpKind::softmax, softmax_rows(a.value()));
}

Var log_softmax(Var a) {
  const Tensor& x = a.value();
  if (x.rank() == 0) throw ShapeError("log_softmax: scalar input");
  const std::size_t cols = x.cols();
  const std::size_t rows = row_count(x);
  std::vector<double> out(x.size());
  const auto in = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = in.data() + r * cols;
    const double mx = *std::max_element(src, src + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(src[c] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = src[c] - lse;
  }
  return unary(a, OpKind::log_softmax, Tensor(x.shape(), std::move(out)));
}

Var mean_batch(Var a) {
  const Tensor& x = a.value();
  if (x.rank() != 2) throw ShapeError("mean_batch: expected rank 2, got " + shape_string(x.shape()));
  std::vector<double> out(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] += x.at(r, c);
  }
  for (double& v : out) v /= static_cast<double>(x.rows());
  return unary(a, OpKind::mean_batch, Tensor::vector(std::move(out)));
}

Var mean_all(Var a) {
  const Tensor& x = a.value();
  double total = 0.0;
  for (double v : x.data()) total += v;
  return unary(a, OpKind::mean_all, Tensor::scalar(total / static_cast<double>(x.size())));
}

Var sum_all(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return unary(a, OpKind::sum_all, Tensor::scalar(total));
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  Tape& tape = parts.front().tape();
  const Tensor& first = parts.front().value();
  if (first.rank() != 1 && first.rank() != 2) {
    throw ShapeError("concat: expected rank 1 or 2, got " + shape_string(first.shape()));
  }
  const std::size_t rows = row_count(first);
  std::size_t total = 0;
  for (const Var& p : parts) {
    check_same_tape("concat", parts.front(), p);
    const Tensor& t = p.value();
    if (t.rank() != first.rank() || row_count(t) != rows) {
      throw ShapeError("concat: shape " + shape_string(t.shape()) + " does not match " +
                       shape_string(first.shape()));
    }
    total += t.cols();
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    const std::size_t w = t.cols();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(t.data().data() + r * w, w, out.data() + r * total + offset);
    }
    offset += w;
    ids.push_back(p.id());
  }
  TapeNode node;
  node.op = OpKind::concat;
  node.inputs = std::move(ids);
  node.value = first.rank() == 1 ? Tensor::vector(std::move(out))
                                 : Tensor::matrix(rows, total, std::move(out));
  return tape.push(std::move(node));
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  if (x.rank() == 0 || begin >= end || end > x.cols()) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for shape " + shape_string(x.shape()));
  }
  const std::size_t rows = row_count(x);
  const std::size_t w = end - begin;
  std::vector<double> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.data().data() + r * x.cols() + begin, w, out.data() + r * w);
  }
  Shape shape = x.shape();
  shape.back() = w;
  TapeNode node;
  node.op = OpKind::slice;
  node.inputs = {a.id()};
  node.value = Tensor(std::move(shape), std::move(out));
  node.begin = begin;
  return a.tape().push(std::move(node));
}

Var reshape(Var a, Shape shape) { return unary(a, OpKind::reshape, a.value().reshaped(std::move(shape))); }

Var straight_through(Var a, Tensor forward_value) {
  require_float_shape_equal("straight_through", a.value(), forward_value);
  return unary(a, OpKind::straight_through, std::move(forward_value));
}

Var stop_gradient(Var a) { return unary(a, OpKind::stop_gradient, a.value()); }

Evaluation forward_eval(const Expr& expr, const Bindings& bindings) {
  Evaluation ev;
  ev.tape = std::make_unique<Tape>();
  std::map<std::string, Var> leaves;
  for (const auto& [name, value] : bindings) leaves.emplace(name, ev.tape->leaf(name, value));
  ev.output = expr(*ev.tape, leaves);
  ev.value = ev.output.value();
  return ev;
}

double finite_diff_check(const Expr& expr, const Bindings& bindings, const std::string& leaf,
                         double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("finite_diff_check: eps must be positive");
  if (!bindings.count(leaf)) throw InvalidArgument("finite_diff_check: no binding for '" + leaf + "'");
  Evaluation ev = forward_eval(expr, bindings);
  const Tensor analytic = ev.tape->backward(ev.output, {leaf}).at(leaf);

  Bindings probe = bindings;
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double base = bindings.at(leaf)[i];
    probe.at(leaf)[i] = base + eps;
    const double up = forward_eval(expr, probe).value.item();
    probe.at(leaf)[i] = base - eps;
    const double down = forward_eval(expr, probe).value.item();
    probe.at(leaf)[i] = base;
    const double numeric = (up - down) / (2.0 * eps);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace s2cgan::ad
