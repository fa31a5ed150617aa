#pragma once

// Seeded generators for property checks: signatures, terms, substitutions,
// iterable rewriting models, linear systems and message-passing networks.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rwd/correspondence.hpp"
#include "rwd/dynamics.hpp"
#include "rwd/expr.hpp"
#include "rwd/rewrite.hpp"
#include "rwd/term.hpp"

namespace rwd::gen {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t default_seed = 20240601;

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

template <class T>
const T& pick(Rng& rng, const std::vector<T>& xs) {
  return xs[uniform(rng, 0, xs.size() - 1)];
}

/// Small integers and halves/thirds; keeps exact arithmetic cheap.
inline Rational small_rational(Rng& rng, long lo = -3, long hi = 3) {
  long num = std::uniform_int_distribution<long>(lo, hi)(rng);
  if (coin(rng, 0.75)) return Rational(num);
  long den = static_cast<long>(uniform(rng, 2, 3));
  return Rational(num, den);
}

inline double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

struct SignatureShape {
  std::size_t constants = 3;
  std::size_t max_arity = 3;
  std::size_t operators = 4;
};

/// Constants c1..cK and operators f1..fN with arities in 1..max_arity.
inline Signature random_signature(Rng& rng, SignatureShape shape = {}) {
  Signature sig;
  for (std::size_t i = 1; i <= std::max<std::size_t>(shape.constants, 1); ++i) sig.add({"c" + std::to_string(i), 0});
  for (std::size_t i = 1; i <= shape.operators; ++i)
    sig.add({"f" + std::to_string(i), uniform(rng, 1, std::max<std::size_t>(shape.max_arity, 1))});
  return sig;
}

inline std::vector<Variable> variable_pool(std::size_t n, const std::string& stem = "x") {
  std::vector<Variable> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(Variable{stem + std::to_string(i)});
  return out;
}

/// A term of depth at most max_depth; leaves are variables with probability var_p.
inline Term random_term(Rng& rng, const Signature& sig, const std::vector<Variable>& vars, std::size_t max_depth,
                        double var_p = 0.3, double stop_p = 0.3) {
  auto constants = sig.of_arity(0);
  std::vector<Symbol> ops;
  for (const auto& s : sig.symbols())
    if (s.arity > 0 && s.name != iota_name) ops.push_back(s);
  auto leaf = [&]() -> Term {
    if (!vars.empty() && (constants.empty() || coin(rng, var_p))) return Term::variable(pick(rng, vars));
    return Term::constant(pick(rng, constants).name);
  };
  auto go = [&](auto& self, std::size_t budget) -> Term {
    if (budget == 0 || ops.empty() || coin(rng, stop_p)) return leaf();
    const Symbol& f = pick(rng, ops);
    std::vector<Term> kids;
    for (std::size_t i = 0; i < f.arity; ++i) kids.push_back(self(self, budget - 1));
    return Term::apply(f.name, std::move(kids));
  };
  return go(go, max_depth);
}

inline Term random_ground_term(Rng& rng, const Signature& sig, std::size_t max_depth) {
  return random_term(rng, sig, {}, max_depth, 0.0);
}

/// A term whose head is an operator (never a bare leaf).
inline Term random_compound(Rng& rng, const Signature& sig, const std::vector<Variable>& vars, std::size_t max_depth,
                            double var_p = 0.5) {
  for (;;) {
    Term t = random_term(rng, sig, vars, max_depth, var_p, 0.2);
    if (!t.is_leaf()) return t;
  }
}

inline Substitution random_ground_substitution(Rng& rng, const Signature& sig, const std::set<Variable>& over,
                                               std::size_t max_depth) {
  Substitution s;
  for (const auto& v : over) s.bind(v, random_ground_term(rng, sig, max_depth));
  return s;
}

/// Random expression with exactly `arity` inputs and one output, from the
/// linear part of the vocabulary so that exact values stay small.
inline Expr random_linear_expr(Rng& rng, std::size_t arity) {
  if (arity == 0) return Expr::literal(small_rational(rng));
  switch (uniform(rng, 0, 4)) {
    case 0: {
      std::vector<Rational> row;
      for (std::size_t i = 0; i < arity; ++i) row.push_back(small_rational(rng, -2, 2));
      return Expr::affine({row}, {small_rational(rng)});
    }
    case 1: {
      std::vector<Expr> parts;
      for (std::size_t i = 1; i <= arity; ++i) parts.push_back(Expr::proj(i));
      if (coin(rng)) parts.push_back(Expr::literal(small_rational(rng)));
      return Expr::add(std::move(parts));
    }
    case 2:
      return Expr::sub(Expr::proj(uniform(rng, 1, arity)), Expr::proj(uniform(rng, 1, arity)));
    case 3:
      return Expr::neg(Expr::add({Expr::proj(uniform(rng, 1, arity)), Expr::literal(small_rational(rng))}));
    default:
      return Expr::mul({Expr::literal(small_rational(rng, -2, 2)), Expr::proj(uniform(rng, 1, arity))});
  }
}

inline AlgebraSpec random_linear_algebra(Rng& rng, const Signature& sig) {
  AlgebraSpec alg;
  alg.carrier = CarrierKind::rational;
  for (const auto& s : sig.symbols())
    if (s.name != iota_name) alg.interp.emplace(s.name, random_linear_expr(rng, s.arity));
  return alg;
}

struct ModelShape {
  std::size_t max_lhs_depth = 3;
  std::size_t max_lhs_leaves = 5;
  std::size_t max_image_depth = 2;
  std::size_t max_context_depth = 3;
  bool root_only = false;
};

/// An iterable model: r = tau(l), t0 = s[sigma(l)]_p for a random ground context s.
inline ModelSpec random_iterable_model(Rng& rng, ModelShape shape = {}) {
  SignatureShape ss;
  ss.constants = uniform(rng, 1, 3);
  ss.operators = uniform(rng, 1, 4);
  ss.max_arity = 3;
  Signature sig = random_signature(rng, ss);
  auto pool = variable_pool(uniform(rng, 1, 3), "v");

  Term lhs;
  for (;;) {
    lhs = random_compound(rng, sig, pool, uniform(rng, 1, shape.max_lhs_depth), 0.6);
    if (lhs.depth() <= shape.max_lhs_depth && flatten(lhs).leaf_count() <= shape.max_lhs_leaves) break;
  }
  std::set<Variable> lv = vars(lhs);
  std::vector<Variable> lvars(lv.begin(), lv.end());
  Substitution tau;
  for (const auto& v : lvars) tau.bind(v, random_term(rng, sig, lvars, shape.max_image_depth, 0.6, 0.35));
  Term rhs = apply_substitution(tau, lhs);

  Term context = random_ground_term(rng, sig, shape.root_only ? 0 : uniform(rng, 0, shape.max_context_depth));
  auto ps = positions(context);
  Position p = shape.root_only ? Position::root() : pick(rng, ps);
  Term at_p = apply_substitution(random_ground_substitution(rng, sig, lv, 2), lhs);

  ModelSpec m;
  m.signature = sig;
  m.variables = std::set<Variable>(pool.begin(), pool.end());
  m.rule = RewriteRule{Identity(lhs, rhs), p};
  m.algebra = random_linear_algebra(rng, sig);
  m.initial = replace_at(context, at_p, p);
  return m;
}

struct LinearSystemCase {
  SystemSpec spec;
  RationalMatrix a;
  std::vector<Rational> b;
  std::vector<Rational> x0;
};

inline LinearSystemCase random_linear_system(Rng& rng, std::size_t max_dim = 4) {
  LinearSystemCase c;
  std::size_t d = uniform(rng, 1, max_dim);
  c.a.assign(d, std::vector<Rational>(d));
  for (auto& row : c.a)
    for (auto& x : row) x = small_rational(rng, -2, 2);
  for (std::size_t i = 0; i < d; ++i) c.b.push_back(small_rational(rng));
  for (std::size_t i = 0; i < d; ++i) c.x0.push_back(small_rational(rng));
  c.spec = linear_system_spec(c.a, c.b);
  return c;
}

/// Random orthogonal matrix (QR of a Gaussian matrix), as plain nested vectors.
inline std::vector<std::vector<double>> random_orthogonal(Rng& rng, std::size_t d) {
  std::normal_distribution<double> n01;
  std::vector<std::vector<double>> q(d, std::vector<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> v(d);
    for (auto& x : v) x = n01(rng);
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0;
      for (std::size_t i = 0; i < d; ++i) dot += v[i] * q[i][k];
      for (std::size_t i = 0; i < d; ++i) v[i] -= dot * q[i][k];
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < d; ++i) q[i][j] = v[i] / norm;
  }
  return q;
}

/// A = Q diag(lambda) Q^T with the given eigenvalues; b = c^T Q^T so that c
/// holds b's coordinates in the eigenbasis.
struct SpectralSystem {
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> lambda;
  std::vector<double> c;
};

inline SpectralSystem spectral_system(Rng& rng, std::vector<double> lambda, std::vector<double> c) {
  const std::size_t d = lambda.size();
  auto q = random_orthogonal(rng, d);
  SpectralSystem s;
  s.a.assign(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) s.a[i][j] += q[i][k] * lambda[k] * q[j][k];
  s.b.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k) s.b[j] += c[k] * q[j][k];
  s.lambda = std::move(lambda);
  s.c = std::move(c);
  return s;
}

/// Distinct eigenvalues in [-1.2, 1.2] at least `gap` apart, and eigen-coordinates
/// of b bounded away from zero.
inline SpectralSystem well_conditioned_system(Rng& rng, std::size_t d, double gap = 0.25) {
  std::vector<double> lambda;
  while (lambda.size() < d) {
    double x = uniform_real(rng, -1.2, 1.2);
    if (std::all_of(lambda.begin(), lambda.end(), [&](double y) { return std::abs(x - y) >= gap; })) lambda.push_back(x);
  }
  std::vector<double> c;
  for (std::size_t i = 0; i < d; ++i) c.push_back((coin(rng) ? 1 : -1) * uniform_real(rng, 0.5, 1.5));
  return spectral_system(rng, std::move(lambda), std::move(c));
}

struct MpnnCase {
  Graph graph;
  MpnnSpec spec;
  /// Weights, kept so that an independent simulator can be written against them.
  RationalMatrix wm, wu, wr;
  std::vector<Rational> bm, bu, br;
  std::vector<Rational> h0;
};

inline RationalMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  RationalMatrix m(rows, std::vector<Rational>(cols));
  for (auto& row : m)
    for (auto& x : row) x = small_rational(rng, -2, 2) / 2;
  return m;
}

inline std::vector<Rational> random_vector(Rng& rng, std::size_t n) {
  std::vector<Rational> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(small_rational(rng, -2, 2) / 2);
  return v;
}

/// M = tanh(Wm (h_v, h_w, e) + bm), U = tanh(Wu (h_v, m) + bu), R = Wr h + br.
inline MpnnCase random_mpnn(Rng& rng, std::size_t max_vertices = 6, std::size_t max_hidden = 3) {
  MpnnCase c;
  const std::size_t n = uniform(rng, 1, max_vertices);
  const std::size_t k = uniform(rng, 1, max_hidden);
  const std::size_t e = uniform(rng, 0, 2);
  c.graph.vertices = n;
  for (std::size_t v = 1; v <= n; ++v)
    for (std::size_t w = v + 1; w <= n; ++w)
      if (coin(rng, 0.45)) {
        c.graph.edges.emplace_back(v, w);
        c.graph.labels.push_back(random_vector(rng, e));
      }
  c.wm = random_matrix(rng, k, 2 * k + e);
  c.bm = random_vector(rng, k);
  c.wu = random_matrix(rng, k, 2 * k);
  c.bu = random_vector(rng, k);
  c.wr = random_matrix(rng, 1, n * k);
  c.br = random_vector(rng, 1);
  c.spec.hidden = k;
  c.spec.edge_dim = e;
  c.spec.message = Expr::tanh(Expr::affine(c.wm, c.bm));
  c.spec.update = Expr::tanh(Expr::affine(c.wu, c.bu));
  c.spec.readout = Expr::affine(c.wr, c.br);
  c.h0 = random_vector(rng, n * k);
  return c;
}

}  // namespace rwd::gen
