#pragma once

// Cartesian dynamical systems X^d -> X^d with an output map X^d -> X, and the
// stock constructions: recurrence lifting, linear systems and message passing.

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "rwd/expr.hpp"

namespace rwd {

template <class C>
using State = std::vector<C>;

template <class C>
using Matrix = std::vector<std::vector<C>>;

/// Linear data of a system declared as x -> A x, output b . x.
struct LinearForm {
  RationalMatrix a;
  std::vector<Rational> b;
};

/// A system written in the interpretation vocabulary.
struct SystemSpec {
  std::size_t dim = 0;
  /// Outputs are concatenated; the total length must be `dim`.
  std::vector<Expr> transition;
  Expr output;
  /// Applied after `output` when present (the context of a non-root projection).
  std::optional<Expr> context;
  std::optional<LinearForm> linear;
};

template <class C>
struct CartesianDynamicalSystem {
  std::size_t dim = 0;
  std::function<State<C>(std::span<const C>)> transition;
  std::function<C(std::span<const C>)> output;
  /// Present when the system was built from the vocabulary and can be serialized or embedded.
  std::optional<SystemSpec> symbolic;
};

template <class C>
struct Trajectory {
  std::vector<C> outputs;
  /// Filled only when requested; hidden[k] is the state after k steps.
  std::vector<State<C>> hidden;
};

template <class C>
CartesianDynamicalSystem<C> instantiate_system(const SystemSpec& spec) {
  CartesianDynamicalSystem<C> sys;
  sys.dim = spec.dim;
  sys.symbolic = spec;
  sys.transition = [parts = spec.transition, dim = spec.dim](std::span<const C> x) {
    State<C> out;
    out.reserve(dim);
    for (const auto& e : parts) {
      auto v = eval_expr<C>(e, x);
      out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    }
    if (out.size() != dim)
      throw Error(ErrorCode::dimension_mismatch, "transition produced " + std::to_string(out.size()) +
                                                     " coordinates for a " + std::to_string(dim) + "-dim system");
    return out;
  };
  sys.output = [out = spec.output, ctx = spec.context](std::span<const C> x) {
    C y = eval_scalar<C>(out, x);
    if (!ctx) return y;
    return eval_scalar<C>(*ctx, std::span<const C>(&y, 1));
  };
  return sys;
}

/// [f(y0), f(G(y0)), ..., f(G^n(y0))].
template <class C>
Trajectory<C> trajectory(const CartesianDynamicalSystem<C>& sys, State<C> y0, std::size_t n, bool keep_hidden = false) {
  if (y0.size() != sys.dim)
    throw Error(ErrorCode::dimension_mismatch, "initial state has " + std::to_string(y0.size()) +
                                                   " coordinates, system has " + std::to_string(sys.dim));
  Trajectory<C> out;
  out.outputs.reserve(n + 1);
  State<C> y = std::move(y0);
  for (std::size_t k = 0;; ++k) {
    out.outputs.push_back(sys.output(y));
    if (keep_hidden) out.hidden.push_back(y);
    if (k == n) break;
    y = sys.transition(y);
    if (y.size() != sys.dim) throw Error(ErrorCode::dimension_mismatch, "transition changed the state dimension");
  }
  return out;
}

/// Lifts s_n = g(s_{n-1}, ..., s_{n-d}) to (x1..xd) -> (g(x), x1..x_{d-1}) with output x1.
/// `inits` are s_0..s_{d-1}; the state is most-recent-first, so the trajectory
/// emits s_{d-1}, s_d, s_{d+1}, ...
template <class C>
std::pair<CartesianDynamicalSystem<C>, State<C>> from_recurrence(std::function<C(std::span<const C>)> g,
                                                                 std::vector<C> inits) {
  if (inits.empty()) throw Error(ErrorCode::dimension_mismatch, "a recurrence needs at least one initial value");
  CartesianDynamicalSystem<C> sys;
  sys.dim = inits.size();
  sys.transition = [g = std::move(g)](std::span<const C> x) {
    State<C> next;
    next.reserve(x.size());
    next.push_back(g(x));
    next.insert(next.end(), x.begin(), x.end() - 1);
    return next;
  };
  sys.output = [](std::span<const C> x) { return x[0]; };
  State<C> y0(inits.rbegin(), inits.rend());
  return {std::move(sys), std::move(y0)};
}

/// Symbolic recurrence lift: `step` reads (s_{n-1}, ..., s_{n-d}) as proj(1..d).
inline SystemSpec recurrence_system(const Expr& step, std::size_t depth) {
  if (depth == 0) throw Error(ErrorCode::dimension_mismatch, "a recurrence needs depth at least one");
  SystemSpec spec;
  spec.dim = depth;
  spec.transition.push_back(step);
  for (std::size_t i = 1; i < depth; ++i) spec.transition.push_back(Expr::proj(i));
  spec.output = Expr::proj(1);
  return spec;
}

/// x -> A x with output b . x.
inline SystemSpec linear_system_spec(RationalMatrix a, std::vector<Rational> b) {
  const std::size_t d = a.size();
  if (d == 0) throw Error(ErrorCode::dimension_mismatch, "empty matrix");
  for (const auto& row : a)
    if (row.size() != d) throw Error(ErrorCode::dimension_mismatch, "transition matrix is not square");
  if (b.size() != d)
    throw Error(ErrorCode::dimension_mismatch, "output functional has length " + std::to_string(b.size()) +
                                                   ", state has " + std::to_string(d));
  SystemSpec spec;
  spec.dim = d;
  spec.transition.push_back(Expr::affine(a, std::vector<Rational>(d, Rational(0))));
  spec.output = Expr::affine({b}, {Rational(0)});
  spec.linear = LinearForm{std::move(a), std::move(b)};
  return spec;
}

/// Numeric linear system without a symbolic form.
template <class C>
CartesianDynamicalSystem<C> linear_system(Matrix<C> a, std::vector<C> b) {
  const std::size_t d = a.size();
  if (d == 0) throw Error(ErrorCode::dimension_mismatch, "empty matrix");
  for (const auto& row : a)
    if (row.size() != d) throw Error(ErrorCode::dimension_mismatch, "transition matrix is not square");
  if (b.size() != d) throw Error(ErrorCode::dimension_mismatch, "output functional length differs from state");
  CartesianDynamicalSystem<C> sys;
  sys.dim = d;
  sys.transition = [a = std::move(a)](std::span<const C> x) {
    State<C> y(x.size(), C(0));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
    return y;
  };
  sys.output = [b = std::move(b)](std::span<const C> x) {
    C acc(0);
    for (std::size_t j = 0; j < x.size(); ++j) acc += b[j] * x[j];
    return acc;
  };
  return sys;
}

// ---------------------------------------------------------------------------
// Message passing

/// Undirected graph with vertices 1..n and one fixed label vector per edge.
struct Graph {
  std::size_t vertices = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::vector<Rational>> labels;

  /// Neighbours of v with the label of the connecting edge.
  std::vector<std::pair<std::size_t, const std::vector<Rational>*>> neighbours(std::size_t v) const {
    std::vector<std::pair<std::size_t, const std::vector<Rational>*>> out;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto [a, b] = edges[e];
      if (a == v) out.emplace_back(b, &labels[e]);
      if (b == v && a != v) out.emplace_back(a, &labels[e]);
    }
    return out;
  }
};

/// message reads (h_v, h_w, e_vw) and yields k values; update reads (h_v, m_v)
/// and yields k values; readout reads all n*k hidden coordinates.
struct MpnnSpec {
  std::size_t hidden = 1;
  std::size_t edge_dim = 0;
  Expr message;
  Expr update;
  Expr readout;
};

namespace detail {

inline void expect_outputs(const Expr& e, std::size_t inputs, std::size_t outputs, const char* what) {
  std::vector<double> zeros(inputs, 0.0);
  std::vector<double> out;
  try {
    out = eval_expr<double>(e, zeros);
  } catch (const Error& err) {
    throw Error(ErrorCode::dimension_mismatch, std::string(what) + " cannot read " + std::to_string(inputs) +
                                                   " inputs: " + err.what());
  }
  if (out.size() != outputs)
    throw Error(ErrorCode::dimension_mismatch, std::string(what) + " yields " + std::to_string(out.size()) +
                                                   " values, expected " + std::to_string(outputs));
}

}  // namespace detail

/// The message-passing network as a cartesian system on n*k coordinates,
/// vertex-major: coordinate (v-1)*k + j is component j of h_v.
inline SystemSpec mpnn_system(const Graph& g, const MpnnSpec& spec) {
  const std::size_t n = g.vertices;
  const std::size_t k = spec.hidden;
  if (n == 0 || k == 0) throw Error(ErrorCode::dimension_mismatch, "graph and hidden size must be non-empty");
  if (g.labels.size() != g.edges.size())
    throw Error(ErrorCode::dimension_mismatch, "every edge needs a label");
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto [a, b] = g.edges[e];
    if (a == 0 || b == 0 || a > n || b > n)
      throw Error(ErrorCode::dimension_mismatch, "edge endpoint outside 1.." + std::to_string(n));
    if (g.labels[e].size() != spec.edge_dim)
      throw Error(ErrorCode::dimension_mismatch, "edge label length differs from edge_dim");
  }
  detail::expect_outputs(spec.message, 2 * k + spec.edge_dim, k, "message");
  detail::expect_outputs(spec.update, 2 * k, k, "update");
  detail::expect_outputs(spec.readout, n * k, 1, "readout");

  auto hidden_of = [k](std::size_t v) {
    std::vector<Expr> parts;
    for (std::size_t j = 1; j <= k; ++j) parts.push_back(Expr::proj((v - 1) * k + j));
    return parts;
  };

  SystemSpec sys;
  sys.dim = n * k;
  for (std::size_t v = 1; v <= n; ++v) {
    std::vector<Expr> messages;
    for (auto [w, label] : g.neighbours(v)) {
      std::vector<Expr> in = hidden_of(v);
      auto hw = hidden_of(w);
      in.insert(in.end(), hw.begin(), hw.end());
      for (const auto& x : *label) in.push_back(Expr::literal(x));
      messages.push_back(Expr::compose(spec.message, Expr::tuple(std::move(in))));
    }
    Expr m;
    if (messages.empty()) {
      m = Expr::tuple(std::vector<Expr>(k, Expr::literal(0)));
    } else if (messages.size() == 1) {
      m = messages.front();
    } else {
      m = Expr::add(std::move(messages));
    }
    std::vector<Expr> in = hidden_of(v);
    in.push_back(std::move(m));
    sys.transition.push_back(Expr::compose(spec.update, Expr::tuple(std::move(in))));
  }
  sys.output = spec.readout;
  return sys;
}

}  // namespace rwd
