#pragma once

// The closed interpretation vocabulary: literals, projections, arithmetic,
// tanh, tuples, affine maps and composition. An expression maps an input
// tuple to an output tuple over some carrier; operator interpretations and
// dynamical-system maps are all written in it, which keeps model files
// declarative and lets constructions be serialized.

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rwd/error.hpp"
#include "rwd/rational.hpp"

namespace rwd {

using RationalMatrix = std::vector<std::vector<Rational>>;

enum class ExprKind { literal, proj, add, sub, mul, neg, tanh, tuple, affine, compose };

class Expr {
 public:
  struct Node {
    ExprKind kind = ExprKind::literal;
    Rational value;
    std::size_t index = 0;
    std::vector<Expr> args;
    RationalMatrix matrix;
    std::vector<Rational> offset;
    /// affine only: when false the map reads the whole input tuple.
    bool has_input = false;
  };

  Expr() = default;

  static Expr literal(Rational q) {
    Node n;
    n.value = std::move(q);
    return Expr(std::move(n));
  }
  static Expr literal(long long v) { return literal(Rational(v)); }

  /// 1-based projection onto the input tuple.
  static Expr proj(std::size_t i) {
    if (i == 0) throw Error(ErrorCode::parse_error, "proj indices are 1-based");
    Node n;
    n.kind = ExprKind::proj;
    n.index = i;
    return Expr(std::move(n));
  }

  static Expr nary(ExprKind kind, std::vector<Expr> args) {
    Node n;
    n.kind = kind;
    n.args = std::move(args);
    return Expr(std::move(n));
  }
  static Expr add(std::vector<Expr> args) { return nary(ExprKind::add, std::move(args)); }
  static Expr mul(std::vector<Expr> args) { return nary(ExprKind::mul, std::move(args)); }
  static Expr tuple(std::vector<Expr> args) { return nary(ExprKind::tuple, std::move(args)); }
  static Expr sub(Expr a, Expr b) { return nary(ExprKind::sub, {std::move(a), std::move(b)}); }
  static Expr neg(Expr a) { return nary(ExprKind::neg, {std::move(a)}); }
  static Expr tanh(Expr a) { return nary(ExprKind::tanh, {std::move(a)}); }
  /// `outer` reads the tuple produced by `inner`.
  static Expr compose(Expr outer, Expr inner) { return nary(ExprKind::compose, {std::move(outer), std::move(inner)}); }

  static Expr affine(RationalMatrix m, std::vector<Rational> b) {
    check_affine_shape(m, b);
    Node n;
    n.kind = ExprKind::affine;
    n.matrix = std::move(m);
    n.offset = std::move(b);
    return Expr(std::move(n));
  }
  static Expr affine(RationalMatrix m, std::vector<Rational> b, Expr input) {
    Expr e = affine(std::move(m), std::move(b));
    auto node = *e.node_;
    node.has_input = true;
    node.args = {std::move(input)};
    return Expr(std::move(node));
  }

  bool empty() const { return node_ == nullptr; }
  const Node& node() const { return *node_; }
  ExprKind kind() const { return node_->kind; }

 private:
  explicit Expr(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}

  static void check_affine_shape(const RationalMatrix& m, const std::vector<Rational>& b) {
    if (m.empty()) throw Error(ErrorCode::dimension_mismatch, "affine map needs at least one row");
    if (m.size() != b.size())
      throw Error(ErrorCode::dimension_mismatch, "affine offset length " + std::to_string(b.size()) +
                                                     " differs from row count " + std::to_string(m.size()));
    for (const auto& row : m)
      if (row.size() != m.front().size())
        throw Error(ErrorCode::dimension_mismatch, "affine matrix rows have different lengths");
  }

  std::shared_ptr<const Node> node_;
};

/// Identity on a d-tuple.
inline Expr identity_expr(std::size_t d) {
  if (d == 1) return Expr::proj(1);
  std::vector<Expr> parts;
  for (std::size_t i = 1; i <= d; ++i) parts.push_back(Expr::proj(i));
  return Expr::tuple(std::move(parts));
}

/// Replaces proj(i) by args[i-1]. The outer side of a composition reads the
/// inner result and is left alone.
inline Expr substitute(const Expr& e, std::span<const Expr> args) {
  const auto& n = e.node();
  switch (n.kind) {
    case ExprKind::literal:
      return e;
    case ExprKind::proj:
      if (n.index > args.size())
        throw Error(ErrorCode::dimension_mismatch, "proj(" + std::to_string(n.index) + ") applied to " +
                                                       std::to_string(args.size()) + " arguments");
      return args[n.index - 1];
    case ExprKind::compose:
      return Expr::compose(n.args[0], substitute(n.args[1], args));
    case ExprKind::affine:
      if (n.has_input) return Expr::affine(n.matrix, n.offset, substitute(n.args[0], args));
      return Expr::affine(n.matrix, n.offset, Expr::tuple(std::vector<Expr>(args.begin(), args.end())));
    default: {
      std::vector<Expr> kids;
      kids.reserve(n.args.size());
      for (const auto& a : n.args) kids.push_back(substitute(a, args));
      return Expr::nary(n.kind, std::move(kids));
    }
  }
}

inline const char* expr_keyword(ExprKind k) {
  switch (k) {
    case ExprKind::literal: return "lit";
    case ExprKind::proj: return "proj";
    case ExprKind::add: return "add";
    case ExprKind::sub: return "sub";
    case ExprKind::mul: return "mul";
    case ExprKind::neg: return "neg";
    case ExprKind::tanh: return "tanh";
    case ExprKind::tuple: return "tuple";
    case ExprKind::affine: return "affine";
    case ExprKind::compose: return "compose";
  }
  return "?";
}

inline void print_rational_list(std::string& out, const std::vector<Rational>& xs) {
  out += '[';
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += to_string(xs[i]);
  }
  out += ']';
}

inline void print_matrix(std::string& out, const RationalMatrix& m) {
  out += '[';
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) out += ',';
    print_rational_list(out, m[i]);
  }
  out += ']';
}

inline void print_expr(std::string& out, const Expr& e) {
  const auto& n = e.node();
  switch (n.kind) {
    case ExprKind::literal:
      out += to_string(n.value);
      return;
    case ExprKind::proj:
      out += "proj(" + std::to_string(n.index) + ")";
      return;
    case ExprKind::affine:
      out += "affine(";
      print_matrix(out, n.matrix);
      out += ',';
      print_rational_list(out, n.offset);
      if (n.has_input) {
        out += ',';
        print_expr(out, n.args[0]);
      }
      out += ')';
      return;
    default:
      out += expr_keyword(n.kind);
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ',';
        print_expr(out, n.args[i]);
      }
      out += ')';
  }
}

inline std::string print_expr(const Expr& e) {
  std::string out;
  print_expr(out, e);
  return out;
}

// ---------------------------------------------------------------------------
// Carriers

/// Float vector carrier value. Length-1 values broadcast in arithmetic.
struct FloatVec {
  std::vector<double> v;
  friend bool operator==(const FloatVec&, const FloatVec&) = default;
};

template <class C>
struct carrier_traits;

template <>
struct carrier_traits<Rational> {
  static constexpr const char* name = "rational";
  static Rational literal(const Rational& q) { return q; }
  static Rational add(const Rational& a, const Rational& b) { return a + b; }
  static Rational sub(const Rational& a, const Rational& b) { return a - b; }
  static Rational mul(const Rational& a, const Rational& b) { return a * b; }
  static Rational neg(const Rational& a) { return -a; }
  static Rational tanh(const Rational&) {
    throw Error(ErrorCode::inexpressible, "tanh has no exact value on the rational carrier");
  }
  static std::vector<Rational> affine(const RationalMatrix& m, const std::vector<Rational>& b,
                                      std::span<const Rational> x) {
    if (x.size() != m.front().size())
      throw Error(ErrorCode::dimension_mismatch, "affine map with " + std::to_string(m.front().size()) +
                                                     " columns applied to " + std::to_string(x.size()) + " values");
    std::vector<Rational> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      Rational acc = b[i];
      for (std::size_t j = 0; j < x.size(); ++j)
        if (m[i][j] != 0) acc += m[i][j] * x[j];
      out[i] = std::move(acc);
    }
    return out;
  }
  static double abs_diff(const Rational& a, const Rational& b) { return std::abs(to_double(a - b)); }
};

template <>
struct carrier_traits<double> {
  static constexpr const char* name = "float";
  static double literal(const Rational& q) { return to_double(q); }
  static double add(double a, double b) { return a + b; }
  static double sub(double a, double b) { return a - b; }
  static double mul(double a, double b) { return a * b; }
  static double neg(double a) { return -a; }
  static double tanh(double a) { return std::tanh(a); }
  static std::vector<double> affine(const RationalMatrix& m, const std::vector<Rational>& b,
                                    std::span<const double> x) {
    if (x.size() != m.front().size())
      throw Error(ErrorCode::dimension_mismatch, "affine map with " + std::to_string(m.front().size()) +
                                                     " columns applied to " + std::to_string(x.size()) + " values");
    std::vector<double> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      double acc = to_double(b[i]);
      for (std::size_t j = 0; j < x.size(); ++j) acc += to_double(m[i][j]) * x[j];
      out[i] = acc;
    }
    return out;
  }
  static double abs_diff(double a, double b) { return std::abs(a - b); }
};

template <>
struct carrier_traits<FloatVec> {
  static constexpr const char* name = "vector";
  static FloatVec literal(const Rational& q) { return FloatVec{{to_double(q)}}; }

  template <class Op>
  static FloatVec zip(const FloatVec& a, const FloatVec& b, Op op) {
    std::size_t n = std::max(a.v.size(), b.v.size());
    if (!(a.v.size() == n || a.v.size() == 1) || !(b.v.size() == n || b.v.size() == 1))
      throw Error(ErrorCode::dimension_mismatch, "vector lengths " + std::to_string(a.v.size()) + " and " +
                                                     std::to_string(b.v.size()) + " differ");
    FloatVec out;
    out.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.v[i] = op(a.v[a.v.size() == 1 ? 0 : i], b.v[b.v.size() == 1 ? 0 : i]);
    return out;
  }

  static FloatVec add(const FloatVec& a, const FloatVec& b) { return zip(a, b, std::plus<>{}); }
  static FloatVec sub(const FloatVec& a, const FloatVec& b) { return zip(a, b, std::minus<>{}); }
  static FloatVec mul(const FloatVec& a, const FloatVec& b) { return zip(a, b, std::multiplies<>{}); }
  static FloatVec neg(FloatVec a) {
    for (auto& x : a.v) x = -x;
    return a;
  }
  static FloatVec tanh(FloatVec a) {
    for (auto& x : a.v) x = std::tanh(x);
    return a;
  }
  /// Matrix-apply over the concatenation of all input vectors; yields one vector.
  static std::vector<FloatVec> affine(const RationalMatrix& m, const std::vector<Rational>& b,
                                      std::span<const FloatVec> x) {
    std::vector<double> flat;
    for (const auto& xi : x) flat.insert(flat.end(), xi.v.begin(), xi.v.end());
    FloatVec out{carrier_traits<double>::affine(m, b, flat)};
    return {std::move(out)};
  }
  static double abs_diff(const FloatVec& a, const FloatVec& b) {
    if (a.v.size() != b.v.size()) return std::numeric_limits<double>::infinity();
    double worst = 0;
    for (std::size_t i = 0; i < a.v.size(); ++i) worst = std::max(worst, std::abs(a.v[i] - b.v[i]));
    return worst;
  }
};

namespace detail {

template <class C, class Op>
std::vector<C> broadcast(const std::vector<C>& a, const std::vector<C>& b, Op op) {
  std::size_t n = std::max(a.size(), b.size());
  if (!(a.size() == n || a.size() == 1) || !(b.size() == n || b.size() == 1))
    throw Error(ErrorCode::dimension_mismatch, "tuple lengths " + std::to_string(a.size()) + " and " +
                                                   std::to_string(b.size()) + " differ");
  std::vector<C> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(op(a[a.size() == 1 ? 0 : i], b[b.size() == 1 ? 0 : i]));
  return out;
}

}  // namespace detail

/// Evaluates `e` on an input tuple. Arithmetic is componentwise on tuples,
/// with length-1 tuples broadcasting.
template <class C>
std::vector<C> eval_expr(const Expr& e, std::span<const C> in) {
  using T = carrier_traits<C>;
  const auto& n = e.node();
  switch (n.kind) {
    case ExprKind::literal:
      return {T::literal(n.value)};
    case ExprKind::proj:
      if (n.index > in.size())
        throw Error(ErrorCode::dimension_mismatch, "proj(" + std::to_string(n.index) + ") applied to a " +
                                                       std::to_string(in.size()) + "-tuple");
      return {in[n.index - 1]};
    case ExprKind::add:
    case ExprKind::mul: {
      if (n.args.empty()) throw Error(ErrorCode::dimension_mismatch, "empty add/mul");
      auto acc = eval_expr<C>(n.args[0], in);
      for (std::size_t i = 1; i < n.args.size(); ++i) {
        auto rhs = eval_expr<C>(n.args[i], in);
        acc = n.kind == ExprKind::add ? detail::broadcast(acc, rhs, [](const C& a, const C& b) { return T::add(a, b); })
                                      : detail::broadcast(acc, rhs, [](const C& a, const C& b) { return T::mul(a, b); });
      }
      return acc;
    }
    case ExprKind::sub:
      return detail::broadcast(eval_expr<C>(n.args[0], in), eval_expr<C>(n.args[1], in),
                               [](const C& a, const C& b) { return T::sub(a, b); });
    case ExprKind::neg: {
      auto v = eval_expr<C>(n.args[0], in);
      for (auto& x : v) x = T::neg(x);
      return v;
    }
    case ExprKind::tanh: {
      auto v = eval_expr<C>(n.args[0], in);
      for (auto& x : v) x = T::tanh(x);
      return v;
    }
    case ExprKind::tuple: {
      std::vector<C> out;
      for (const auto& a : n.args) {
        auto part = eval_expr<C>(a, in);
        out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
      return out;
    }
    case ExprKind::affine: {
      if (!n.has_input) return T::affine(n.matrix, n.offset, in);
      auto x = eval_expr<C>(n.args[0], in);
      return T::affine(n.matrix, n.offset, std::span<const C>(x));
    }
    case ExprKind::compose: {
      auto mid = eval_expr<C>(n.args[1], in);
      return eval_expr<C>(n.args[0], std::span<const C>(mid));
    }
  }
  throw Error(ErrorCode::parse_error, "corrupt expression");
}

/// Evaluates an expression that must produce exactly one value.
template <class C>
C eval_scalar(const Expr& e, std::span<const C> in) {
  auto out = eval_expr<C>(e, in);
  if (out.size() != 1)
    throw Error(ErrorCode::dimension_mismatch, print_expr(e) + " produced " + std::to_string(out.size()) +
                                                   " values where one was expected");
  return std::move(out.front());
}

}  // namespace rwd
