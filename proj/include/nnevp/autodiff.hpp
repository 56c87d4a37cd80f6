#ifndef NNEVP_AUTODIFF_HPP
#define NNEVP_AUTODIFF_HPP

/**
 * @file autodiff.hpp
 *
 * Reverse-mode automatic differentiation over scalar computation graphs.
 *
 * A Tape is a Wengert list: every elementary operation appends one node that
 * stores its value, up to two parent ids and the local partial derivatives
 * with respect to those parents. Reverse sweeps accumulate adjoints from an
 * output node back to the requested inputs.
 *
 * A Var without a tape is a constant. Arithmetic on constants is evaluated
 * eagerly and never recorded, so the same numerical code runs both for
 * differentiable training and for plain forward prediction.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nnevp {

class Tape;

/// Elementary operations recorded on the tape.
enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  AddConst,  // a + c
  MulConst,  // a * c
  ConstDiv,  // c / a
  Exp,
  Log,
  Sqrt,
  Tanh,
  Sigmoid,
  Softplus,
  Relu,  // max(a, 0); subgradient 0 at a == 0
  Abs,   // derivative sign(a); 0 at a == 0
  Pow,   // a^c
  Copy,  // identity; also used for the branch taken by select()
};

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A scalar value, optionally recorded on a Tape.
class Var {
 public:
  static constexpr std::int32_t kConstant = -1;

  Var() = default;
  Var(double value) : value_(value) {}  // NOLINT(google-explicit-constructor)

  double value() const { return value_; }
  std::int32_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool is_constant() const { return tape_ == nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::int32_t id, double value) : tape_(tape), id_(id), value_(value) {}

  Tape* tape_ = nullptr;
  std::int32_t id_ = kConstant;
  double value_ = 0.0;
};

class Tape {
 public:
  struct Node {
    double value;
    double d0;
    double d1;
    double aux;
    std::int32_t p0;
    std::int32_t p1;
    Op op;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// New independent variable.
  Var leaf(double value) { return push(Op::Leaf, value, -1, 0.0, -1, 0.0, 0.0); }

  /// Identity node; gives a distinct id for the same value.
  Var copy(const Var& a) {
    if (a.is_constant()) return leaf(a.value());
    check(a);
    return push(Op::Copy, a.value(), a.id(), 1.0, -1, 0.0, 0.0);
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }
  const Node& node(std::int32_t id) const { return nodes_.at(static_cast<std::size_t>(id)); }

  // Recording entry points used by the free-function operators below.
  Var unary(Op op, const Var& a, double value, double da, double aux = 0.0) {
    check(a);
    return push(op, value, a.id(), da, -1, 0.0, aux);
  }
  Var binary(Op op, const Var& a, const Var& b, double value, double da, double db) {
    check(a);
    check(b);
    return push(op, value, a.id(), da, b.id(), db, 0.0);
  }

  /**
   * d(output)/d(input) for every input by one reverse sweep.
   *
   * The sweep only visits nodes between the smallest input id and the output,
   * so gradients with respect to recently created nodes are cheap even on a
   * long tape. Inputs that the output does not depend on get 0.
   */
  std::vector<double> grad(const Var& output, std::span<const Var> inputs) const {
    std::vector<double> out(inputs.size(), 0.0);
    if (output.is_constant() || inputs.empty()) return out;
    check(output);
    std::int32_t lo = output.id();
    for (const Var& v : inputs) {
      if (v.is_constant()) continue;
      check(v);
      lo = std::min(lo, v.id());
    }
    adjoint_.assign(static_cast<std::size_t>(output.id() - lo + 1), 0.0);
    sweep(output.id(), lo, 1.0);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const Var& v = inputs[i];
      if (v.is_constant() || v.id() > output.id()) continue;
      out[i] = adjoint_[static_cast<std::size_t>(v.id() - lo)];
    }
    return out;
  }

  /// Rows are grad(outputs[i], inputs).
  std::vector<std::vector<double>> jacobian(std::span<const Var> outputs,
                                            std::span<const Var> inputs) const {
    std::vector<std::vector<double>> jac;
    jac.reserve(outputs.size());
    for (const Var& y : outputs) jac.push_back(grad(y, inputs));
    return jac;
  }

  /// Adjoints of every node with id < count, seeded at output. Used for the
  /// loss gradient with respect to parameters recorded first on the tape.
  std::vector<double> grad_prefix(const Var& output, std::int32_t count) const {
    std::vector<double> out(static_cast<std::size_t>(count), 0.0);
    if (output.is_constant()) return out;
    check(output);
    adjoint_.assign(static_cast<std::size_t>(output.id() + 1), 0.0);
    sweep(output.id(), 0, 1.0);
    for (std::int32_t i = 0; i < count && i <= output.id(); ++i) out[static_cast<std::size_t>(i)] = adjoint_[static_cast<std::size_t>(i)];
    return out;
  }

  /// Recomputes every node value from its op and parents.
  std::vector<double> replay() const {
    std::vector<double> v(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      const double a = n.p0 >= 0 ? v[static_cast<std::size_t>(n.p0)] : 0.0;
      const double b = n.p1 >= 0 ? v[static_cast<std::size_t>(n.p1)] : 0.0;
      v[i] = evaluate(n.op, a, b, n.aux, n.value);
    }
    return v;
  }

  static double evaluate(Op op, double a, double b, double c, double leaf_value) {
    switch (op) {
      case Op::Leaf: return leaf_value;
      case Op::Add: return a + b;
      case Op::Sub: return a - b;
      case Op::Mul: return a * b;
      case Op::Div: return a / b;
      case Op::Neg: return -a;
      case Op::AddConst: return a + c;
      case Op::MulConst: return a * c;
      case Op::ConstDiv: return c / a;
      case Op::Exp: return std::exp(a);
      case Op::Log: return std::log(a);
      case Op::Sqrt: return std::sqrt(a);
      case Op::Tanh: return std::tanh(a);
      case Op::Sigmoid: return sigmoid(a);
      case Op::Softplus: return softplus(a);
      case Op::Relu: return a > 0.0 ? a : 0.0;
      case Op::Abs: return std::fabs(a);
      case Op::Pow: return std::pow(a, c);
      case Op::Copy: return a;
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  static double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  }
  static double softplus(double x) {
    // log(1 + e^x) without overflow
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }

 private:
  Var push(Op op, double value, std::int32_t p0, double d0, std::int32_t p1, double d1, double aux) {
    if (nodes_.size() >= static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
      throw TapeError("tape exceeds node capacity");
    nodes_.push_back(Node{value, d0, d1, aux, p0, p1, op});
    return Var(this, static_cast<std::int32_t>(nodes_.size() - 1), value);
  }

  void check(const Var& v) const {
    if (v.is_constant()) return;
    if (v.tape() != this) throw TapeError("variable belongs to a different tape");
    if (v.id() < 0 || static_cast<std::size_t>(v.id()) >= nodes_.size())
      throw TapeError("dangling node id " + std::to_string(v.id()));
  }

  void sweep(std::int32_t top, std::int32_t lo, double seed) const {
    adjoint_[static_cast<std::size_t>(top - lo)] = seed;
    for (std::int32_t i = top; i >= lo; --i) {
      const double adj = adjoint_[static_cast<std::size_t>(i - lo)];
      if (adj == 0.0) continue;
      const Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.p0 >= lo) adjoint_[static_cast<std::size_t>(n.p0 - lo)] += n.d0 * adj;
      if (n.p1 >= lo) adjoint_[static_cast<std::size_t>(n.p1 - lo)] += n.d1 * adj;
    }
  }

  std::vector<Node> nodes_;
  mutable std::vector<double> adjoint_;
};

/// Free-function form of Tape::grad.
inline std::vector<double> grad(const Tape& tape, const Var& output, std::span<const Var> inputs) {
  return tape.grad(output, inputs);
}

inline std::vector<std::vector<double>> jacobian(const Tape& tape, std::span<const Var> outputs,
                                                 std::span<const Var> inputs) {
  return tape.jacobian(outputs, inputs);
}

namespace detail {

inline Tape* common_tape(const Var& a, const Var& b) {
  if (a.tape() && b.tape() && a.tape() != b.tape())
    throw TapeError("operands recorded on different tapes");
  return a.tape() ? a.tape() : b.tape();
}

}  // namespace detail

// ---- arithmetic -----------------------------------------------------------

inline Var operator+(const Var& a, const Var& b) {
  Tape* t = detail::common_tape(a, b);
  const double v = a.value() + b.value();
  if (!t) return v;
  if (a.is_constant()) return t->unary(Op::AddConst, b, v, 1.0, a.value());
  if (b.is_constant()) return t->unary(Op::AddConst, a, v, 1.0, b.value());
  return t->binary(Op::Add, a, b, v, 1.0, 1.0);
}

inline Var operator-(const Var& a) {
  if (a.is_constant()) return -a.value();
  return a.tape()->unary(Op::Neg, a, -a.value(), -1.0);
}

inline Var operator-(const Var& a, const Var& b) {
  Tape* t = detail::common_tape(a, b);
  const double v = a.value() - b.value();
  if (!t) return v;
  if (b.is_constant()) return t->unary(Op::AddConst, a, v, 1.0, -b.value());
  if (a.is_constant()) {
    const Var nb = -b;
    return t->unary(Op::AddConst, nb, v, 1.0, a.value());
  }
  return t->binary(Op::Sub, a, b, v, 1.0, -1.0);
}

inline Var operator*(const Var& a, const Var& b) {
  Tape* t = detail::common_tape(a, b);
  const double v = a.value() * b.value();
  if (!t) return v;
  if (a.is_constant()) return t->unary(Op::MulConst, b, v, a.value(), a.value());
  if (b.is_constant()) return t->unary(Op::MulConst, a, v, b.value(), b.value());
  return t->binary(Op::Mul, a, b, v, b.value(), a.value());
}

inline Var operator/(const Var& a, const Var& b) {
  Tape* t = detail::common_tape(a, b);
  const double v = a.value() / b.value();
  if (!t) return v;
  if (b.is_constant()) return t->unary(Op::MulConst, a, v, 1.0 / b.value(), 1.0 / b.value());
  if (a.is_constant()) return t->unary(Op::ConstDiv, b, v, -v / b.value(), a.value());
  return t->binary(Op::Div, a, b, v, 1.0 / b.value(), -v / b.value());
}

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

// ---- elementary functions -------------------------------------------------

inline Var exp(const Var& a) {
  const double v = std::exp(a.value());
  if (a.is_constant()) return v;
  return a.tape()->unary(Op::Exp, a, v, v);
}

inline Var log(const Var& a) {
  const double v = std::log(a.value());
  if (a.is_constant()) return v;
  return a.tape()->unary(Op::Log, a, v, 1.0 / a.value());
}

inline Var sqrt(const Var& a) {
  const double v = std::sqrt(a.value());
  if (a.is_constant()) return v;
  return a.tape()->unary(Op::Sqrt, a, v, v > 0.0 ? 0.5 / v : 0.0);
}

inline Var tanh(const Var& a) {
  const double v = std::tanh(a.value());
  if (a.is_constant()) return v;
  return a.tape()->unary(Op::Tanh, a, v, 1.0 - v * v);
}

/// Logistic function 1 / (1 + e^-a).
inline Var sigmoid(const Var& a) {
  const double v = Tape::sigmoid(a.value());
  if (a.is_constant()) return v;
  return a.tape()->unary(Op::Sigmoid, a, v, v * (1.0 - v));
}

/// log(1 + e^a).
inline Var softplus(const Var& a) {
  const double v = Tape::softplus(a.value());
  if (a.is_constant()) return v;
  return a.tape()->unary(Op::Softplus, a, v, Tape::sigmoid(a.value()));
}

/// max(a, 0) with subgradient 0 at a == 0.
inline Var relu(const Var& a) {
  const double v = a.value() > 0.0 ? a.value() : 0.0;
  if (a.is_constant()) return v;
  return a.tape()->unary(Op::Relu, a, v, a.value() > 0.0 ? 1.0 : 0.0);
}

/// |a| with derivative sign(a), 0 at a == 0.
inline Var abs(const Var& a) {
  const double v = std::fabs(a.value());
  if (a.is_constant()) return v;
  const double s = a.value() > 0.0 ? 1.0 : (a.value() < 0.0 ? -1.0 : 0.0);
  return a.tape()->unary(Op::Abs, a, v, s);
}

/// a^p for a constant exponent. The derivative at a == 0 is taken as 0.
inline Var pow(const Var& a, double p) {
  const double v = std::pow(a.value(), p);
  if (a.is_constant()) return v;
  const double d = a.value() == 0.0 ? 0.0 : p * std::pow(a.value(), p - 1.0);
  return a.tape()->unary(Op::Pow, a, v, d, p);
}

/// Picks a branch by a condition fixed at record time; nothing about the
/// comparison itself is recorded.
inline Var select(bool condition, const Var& if_true, const Var& if_false) {
  return condition ? if_true : if_false;
}

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

}  // namespace nnevp

#endif  // NNEVP_AUTODIFF_HPP
