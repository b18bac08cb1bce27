#pragma once

// Eager reverse-mode differentiation over a small, fixed operation set.
//
// A Tape records every operation as it is evaluated. Leaves are named
// parameters (gradients can be requested for them); constants are inputs that
// never receive gradients. Broadcasting is restricted to a leading batch
// axis: a rank-1 (n) or (1, n) operand may be combined with a (B, n) operand.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "s2cgan/tensor.hpp"

namespace s2cgan::ad {

enum class OpKind : std::uint8_t {
  leaf,
  constant,
  matmul,
  add,
  sub,
  mul,
  scale,
  add_scalar,
  tanh,
  sigmoid,
  relu,
  exp,
  log,
  log_sigmoid,
  softmax,
  log_softmax,
  mean_batch,
  mean_all,
  sum_all,
  concat,
  slice,
  reshape,
  straight_through,
  stop_gradient,
};

const char* op_name(OpKind op);

// Lower clamp applied to log inputs and to probabilities inside log_sigmoid.
inline constexpr double kLogClamp = 1e-12;

struct TapeNode {
  OpKind op = OpKind::constant;
  std::vector<std::size_t> inputs;
  Tensor value;
  double scalar = 0.0;      // scale factor / additive constant
  std::size_t begin = 0;    // slice start column
  bool requires_grad = false;
  std::string name;         // leaves only
};

struct Diagnostics {
  std::size_t log_clamps = 0;  // entries whose log input was clamped
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using GradMap = std::map<std::string, Tensor>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(const std::string& name, Tensor value);
  Var constant(Tensor value);

  const Tensor& value(Var v) const { return nodes_.at(v.id()).value; }
  const TapeNode& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }
  const Diagnostics& diagnostics() const { return diag_; }
  bool has_leaf(const std::string& name) const { return leaves_.count(name) != 0; }

  // Gradients of a scalar output with respect to the named leaves. Leaves
  // that do not influence the output receive zero gradients.
  GradMap backward(Var output, const std::set<std::string>& leaves) const;
  // Gradients with respect to every leaf on the tape.
  GradMap backward(Var output) const;

  // Internal: append an op node. Used by the free op functions below.
  Var push(TapeNode node);
  Diagnostics& mutable_diagnostics() { return diag_; }

 private:
  std::vector<TapeNode> nodes_;
  std::map<std::string, std::size_t> leaves_;
  Diagnostics diag_;
};

// Operations. Shape violations throw ShapeError naming the op.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double constant);
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var exp(Var a);
// log(max(a, 1e-12)); clamped entries are counted and get zero gradient.
// Negative or NaN inputs throw DomainError.
Var log(Var a);
// log(clamp(sigmoid(a), 1e-12, 1 - 1e-12)), evaluated stably.
Var log_sigmoid(Var a);
Var softmax(Var a);
Var log_softmax(Var a);
// Mean over the leading axis: (B, n) -> (n).
Var mean_batch(Var a);
Var mean_all(Var a);
Var sum_all(Var a);
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
// Columns [begin, end) of the last axis.
Var slice(Var a, std::size_t begin, std::size_t end);
Var reshape(Var a, Shape shape);
// Forward value is `forward_value`; the gradient flows to `a` unchanged.
Var straight_through(Var a, Tensor forward_value);
Var stop_gradient(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator-(Var a) { return scale(a, -1.0); }

using Bindings = std::map<std::string, Tensor>;
// Builds an expression on a tape whose leaves have been created from the
// bindings (looked up by name through `leaves`).
using Expr = std::function<Var(Tape&, const std::map<std::string, Var>& leaves)>;

struct Evaluation {
  Tensor value;
  std::unique_ptr<Tape> tape;
  Var output;
};

// Evaluates `expr` with every binding registered as a leaf.
Evaluation forward_eval(const Expr& expr, const Bindings& bindings);

// Max over the entries of `leaf` of |analytic - central difference| /
// max(1, |analytic|).
double finite_diff_check(const Expr& expr, const Bindings& bindings, const std::string& leaf,
                         double eps);

}  // namespace s2cgan::ad
