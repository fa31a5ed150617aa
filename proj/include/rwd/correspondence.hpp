#pragma once

// Rewriting models and their constructive equivalence with cartesian
// dynamical systems: projection of a model onto a system on X^L(l) (with a
// context map for non-root positions) and embedding of a system as a model.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rwd/algebra.hpp"
#include "rwd/dynamics.hpp"
#include "rwd/rewrite.hpp"

namespace rwd {

/// n -> cata(R_p^n(t0)) for an iterable rule, an iota-extended algebra and a ground t0 in T_p^l.
template <class C>
class RewritingModel {
 public:
  RewritingModel(RewriteRule rule, SigmaAlgebra<C> algebra, Term initial)
      : rule_(std::move(rule)), algebra_(extend_with_identity(std::move(algebra))), initial_(std::move(initial)) {
    auto tau = iterability_witness(rule_.identity);
    if (!tau)
      throw Error(ErrorCode::not_iterable, "right-hand side " + print_term(rule_.rhs()) +
                                               " is not an instance of " + print_term(rule_.lhs()));
    tau_ = std::move(*tau);
    if (!initial_.ground()) throw Error(ErrorCode::unbound_variable, "initial term must be ground");
    if (!instance_at(initial_, rule_.lhs(), rule_.position))
      throw Error(ErrorCode::no_match, "initial term is not an instance of the left-hand side at position " +
                                           rule_.position.to_string());
  }

  const RewriteRule& rule() const { return rule_; }
  const Substitution& tau() const { return tau_; }
  const SigmaAlgebra<C>& algebra() const { return algebra_; }
  const Term& initial() const { return initial_; }

 private:
  RewriteRule rule_;
  SigmaAlgebra<C> algebra_;
  Term initial_;
  Substitution tau_;
};

template <class C>
C model_output(const RewritingModel<C>& m, std::size_t n) {
  RewriteStream stream(m.rule(), m.initial());
  for (std::size_t k = 0; k < n; ++k) stream.advance();
  return catamorphism(m.algebra(), stream.current());
}

/// model_output for 0..n in one pass.
template <class C>
std::vector<C> model_outputs(const RewritingModel<C>& m, std::size_t n) {
  std::vector<C> out;
  out.reserve(n + 1);
  RewriteStream stream(m.rule(), m.initial());
  CachedCatamorphism<C> cata(m.algebra());
  out.push_back(cata(stream.current()));
  for (std::size_t k = 0; k < n; ++k) out.push_back(cata(stream.advance()));
  return out;
}

/// Sub_s^p(t): s[t]_p when p is a position of s, t otherwise.
inline Term substitute_into_context(const Term& s, const Term& t, const Position& p) {
  if (is_position_of(s, p)) return replace_at(s, t, p);
  return t;
}

/// alpha_p^t, the carrier map with alpha(cata(s)) = cata(t[s]_p).
template <class C>
std::function<C(const C&)> context_function(const SigmaAlgebra<C>& alg, const Term& t, const Position& p) {
  if (!is_position_of(t, p))
    throw Error(ErrorCode::invalid_position, "position " + p.to_string() + " not in " + print_term(t));
  struct Frame {
    const typename SigmaAlgebra<C>::Fn* fn;
    std::vector<C> siblings;
    std::size_t slot;
  };
  std::vector<Frame> frames;
  const Term* cur = &t;
  for (auto k : p.indices()) {
    if (cur->name() != iota_name) {
      const auto* fn = alg.find(cur->name());
      if (!fn) throw Error(ErrorCode::unknown_symbol, "no interpretation for '" + cur->name() + "'");
      Frame f{fn, {}, k - 1};
      for (std::size_t i = 0; i < cur->arity(); ++i)
        f.siblings.push_back(i == k - 1 ? C{} : catamorphism(alg, cur->children()[i]));
      frames.push_back(std::move(f));
    }
    cur = &cur->children()[k - 1];
  }
  return [frames = std::move(frames)](const C& x) {
    C acc = x;
    for (std::size_t i = frames.size(); i-- > 0;) {
      auto args = frames[i].siblings;
      args[frames[i].slot] = std::move(acc);
      acc = (*frames[i].fn)(std::span<const C>(args));
    }
    return acc;
  };
}

/// Leaf layout of a model's flattened lhs, shared by the hidden step and projection.
struct LhsLayout {
  Term flat_lhs;
  LeafTuple lifted;
  /// tau applied to each leaf of the flattened lhs.
  std::vector<Term> images;
  /// Variable -> index (0-based) of its first, leftmost leaf.
  std::map<Variable, std::size_t> first_leaf;
};

inline LhsLayout lhs_layout(const Term& lhs, const Substitution& tau) {
  LhsLayout out;
  out.flat_lhs = flatten(lhs);
  out.lifted = lift(out.flat_lhs);
  for (std::size_t i = 0; i < out.lifted.leaves.size(); ++i) {
    const Term& leaf = out.lifted.leaves[i];
    out.images.push_back(apply_substitution(tau, leaf));
    if (leaf.is_variable()) out.first_leaf.emplace(Variable{leaf.name()}, i);
  }
  return out;
}

namespace detail {

template <class C>
State<C> hidden_step(const SigmaAlgebra<C>& alg, const LhsLayout& layout, std::span<const C> state,
                     bool check_repeats) {
  if (state.size() != layout.lifted.leaves.size())
    throw Error(ErrorCode::dimension_mismatch, "state has " + std::to_string(state.size()) + " entries, expected " +
                                                   std::to_string(layout.lifted.leaves.size()));
  Assignment<C> a;
  for (const auto& [v, i] : layout.first_leaf) a.emplace(v, state[i]);
  if (check_repeats) {
    for (std::size_t i = 0; i < layout.lifted.leaves.size(); ++i) {
      const Term& leaf = layout.lifted.leaves[i];
      if (leaf.is_variable() && !(a.at(Variable{leaf.name()}) == state[i]))
        throw Error(ErrorCode::dimension_mismatch, "repeated variable '" + leaf.name() +
                                                       "' carries different values in the state");
    }
  }
  State<C> next;
  next.reserve(layout.images.size());
  for (const auto& img : layout.images) next.push_back(eval_with_assignment(alg, img, a));
  return next;
}

}  // namespace detail

/// Hidden step on the leaf cofactor X^L(l): entry i becomes
/// the value of tau(leaf_i), reading each variable at its first leaf.
template <class C>
State<C> hidden_step(const RewritingModel<C>& m, std::span<const C> state) {
  return detail::hidden_step(m.algebra(), lhs_layout(m.rule().lhs(), m.tau()), state, false);
}

template <class C>
struct ProjectedSystem {
  CartesianDynamicalSystem<C> system;
  State<C> x0;
  /// Identity when the rule acts at the root.
  std::function<C(const C&)> context;
  LhsLayout layout;

  /// context(output(G^k(x0))) for k = 0..n.
  std::vector<C> outputs(std::size_t n) const {
    auto traj = trajectory(system, x0, n);
    for (auto& y : traj.outputs) y = context(y);
    return traj.outputs;
  }
};

struct ProjectOptions {
  /// Exact carriers only: reject states where repeated variables disagree.
  bool check_repeated_variables = false;
};

/// Projects a rewriting model onto a cartesian system on X^L(flatten(l)).
template <class C>
ProjectedSystem<C> project(const RewritingModel<C>& m, ProjectOptions opts = {}) {
  ProjectedSystem<C> out;
  out.layout = lhs_layout(m.rule().lhs(), m.tau());
  const Term& at_p = subterm_at(m.initial(), m.rule().position);
  auto sigma = match(m.rule().lhs(), at_p);
  if (!sigma) throw Error(ErrorCode::no_match, "initial term left the instance set");
  for (const auto& leaf : out.layout.lifted.leaves)
    out.x0.push_back(catamorphism(m.algebra(), apply_substitution(*sigma, leaf)));

  auto alg = m.algebra();
  auto layout = out.layout;
  out.system.dim = out.x0.size();
  out.system.transition = [alg, layout, check = opts.check_repeated_variables](std::span<const C> x) {
    return detail::hidden_step(alg, layout, x, check);
  };
  out.system.output = [alg, skeleton = layout.lifted.skeleton](std::span<const C> x) {
    return eval_skeleton(alg, skeleton, x);
  };
  if (m.rule().position.is_root()) {
    out.context = [](const C& x) { return x; };
  } else {
    out.context = context_function(m.algebra(), m.initial(), m.rule().position);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Declarative models

/// A rewriting model written in the interpretation vocabulary.
struct ModelSpec {
  Signature signature;
  std::set<Variable> variables;
  std::optional<RewriteRule> rule;
  AlgebraSpec algebra;
  Term initial;
};

template <class C>
RewritingModel<C> instantiate_model(const ModelSpec& spec) {
  if (!spec.rule) throw Error(ErrorCode::not_iterable, "model has no rule");
  return RewritingModel<C>(*spec.rule, instantiate_algebra<C>(spec.signature, spec.algebra), spec.initial);
}

/// Embeds a system as the model  s0(v1..vd) => s0(s1(v..), ..., sd(v..)) @ e  with
/// t0 = s0(a1..ad) and s0 -> output, si -> proj(i) . transition, ai -> x0_i, iota -> id.
inline ModelSpec embed(const SystemSpec& sys, const std::vector<Rational>& x0) {
  const std::size_t d = sys.dim;
  if (d == 0) throw Error(ErrorCode::dimension_mismatch, "cannot embed a 0-dimensional system");
  if (x0.size() != d)
    throw Error(ErrorCode::dimension_mismatch, "initial state has " + std::to_string(x0.size()) +
                                                   " entries, system has " + std::to_string(d));
  if (sys.transition.empty()) throw Error(ErrorCode::inexpressible, "system has no transition expressions");
  ModelSpec m;
  m.algebra.carrier = CarrierKind::rational;
  for (std::size_t i = 1; i <= d; ++i) m.signature.add(Symbol{"a" + std::to_string(i), 0});
  m.signature.add(Symbol{std::string(iota_name), 1});
  for (std::size_t i = 0; i <= d; ++i) m.signature.add(Symbol{"s" + std::to_string(i), d});

  std::vector<Term> vs;
  for (std::size_t i = 1; i <= d; ++i) {
    m.variables.insert(Variable{"v" + std::to_string(i)});
    vs.push_back(Term::variable("v" + std::to_string(i)));
  }
  std::vector<Term> rhs_kids;
  for (std::size_t i = 1; i <= d; ++i) rhs_kids.push_back(Term::apply("s" + std::to_string(i), vs));
  Term lhs = Term::apply("s0", vs);
  Term rhs = Term::apply("s0", std::move(rhs_kids));
  m.rule = RewriteRule{Identity(lhs, rhs), Position::root()};

  std::vector<Term> consts;
  for (std::size_t i = 1; i <= d; ++i) consts.push_back(Term::constant("a" + std::to_string(i)));
  m.initial = Term::apply("s0", std::move(consts));

  Expr g = sys.transition.size() == 1 ? sys.transition.front() : Expr::tuple(sys.transition);
  Expr f = sys.output;
  if (sys.context) f = Expr::compose(*sys.context, f);
  m.algebra.interp.emplace("s0", f);
  for (std::size_t i = 1; i <= d; ++i) {
    Expr gi = sys.transition.size() == d ? sys.transition[i - 1] : Expr::compose(Expr::proj(i), g);
    m.algebra.interp.emplace("s" + std::to_string(i), gi);
    m.algebra.interp.emplace("a" + std::to_string(i), Expr::literal(x0[i - 1]));
  }
  return m;
}

/// Numeric embedding; the system must carry its symbolic form.
template <class C>
RewritingModel<C> embed(const CartesianDynamicalSystem<C>& sys, const State<C>& x0) {
  if (!sys.symbolic)
    throw Error(ErrorCode::inexpressible, "system has no expression in the interpretation vocabulary");
  std::vector<Rational> init;
  for (const auto& x : x0) {
    if constexpr (std::is_same_v<C, Rational>) {
      init.push_back(x);
    } else {
      init.push_back(exact_rational(x));
    }
  }
  return instantiate_model<C>(embed(*sys.symbolic, init));
}

// ---------------------------------------------------------------------------
// Symbolic projection

namespace detail {

inline const Expr& interp_of(const AlgebraSpec& alg, const std::string& name) {
  auto it = alg.interp.find(name);
  if (it == alg.interp.end()) throw Error(ErrorCode::unknown_symbol, "no interpretation for '" + name + "'");
  return it->second;
}

/// Rewrites a term over variables into one expression by inlining interpretations.
inline Expr inline_term(const Term& t, const AlgebraSpec& alg, const std::function<Expr(const std::string&)>& leaf,
                        std::unordered_map<const void*, Expr>& memo) {
  if (t.is_variable()) return leaf(t.name());
  if (auto it = memo.find(t.id()); it != memo.end()) return it->second;
  Expr out;
  if (t.name() == iota_name) {
    out = inline_term(t.children()[0], alg, leaf, memo);
  } else {
    std::vector<Expr> args;
    for (const auto& c : t.children()) args.push_back(inline_term(c, alg, leaf, memo));
    out = substitute(interp_of(alg, t.name()), args);
  }
  memo.emplace(t.id(), out);
  return out;
}

template <class C>
Rational literal_of(const C& x) {
  if constexpr (std::is_same_v<C, Rational>) {
    return x;
  } else if constexpr (std::is_same_v<C, double>) {
    return exact_rational(x);
  } else {
    throw Error(ErrorCode::inexpressible, "carrier values cannot be written as literals");
  }
}

}  // namespace detail

template <class C>
struct SymbolicProjection {
  SystemSpec system;
  State<C> x0;
};

/// Projection written back in the vocabulary: one transition expression per
/// leaf of the flattened lhs, the skeleton as output map and alpha_p^t0 as context.
template <class C>
SymbolicProjection<C> project_symbolic(const ModelSpec& spec) {
  auto model = instantiate_model<C>(spec);
  auto numeric = project(model);
  const auto& layout = numeric.layout;

  SymbolicProjection<C> out;
  out.x0 = numeric.x0;
  out.system.dim = layout.lifted.leaves.size();
  std::unordered_map<const void*, Expr> memo;
  auto var_leaf = [&](const std::string& v) {
    auto it = layout.first_leaf.find(Variable{v});
    if (it == layout.first_leaf.end()) throw Error(ErrorCode::unbound_variable, "variable '" + v + "'");
    return Expr::proj(it->second + 1);
  };
  for (const auto& img : layout.images) out.system.transition.push_back(detail::inline_term(img, spec.algebra, var_leaf, memo));

  std::unordered_map<const void*, Expr> skeleton_memo;
  out.system.output = detail::inline_term(
      layout.lifted.skeleton, spec.algebra,
      [](const std::string& hole) { return Expr::proj(std::stoul(hole.substr(1))); }, skeleton_memo);

  const Position& p = spec.rule->position;
  if (!p.is_root()) {
    const auto& alg = model.algebra();
    const Term* cur = &model.initial();
    std::vector<std::pair<const Term*, std::size_t>> path;
    for (auto k : p.indices()) {
      path.emplace_back(cur, k);
      cur = &cur->children()[k - 1];
    }
    Expr ctx = Expr::proj(1);
    for (std::size_t i = path.size(); i-- > 0;) {
      auto [node, k] = path[i];
      if (node->name() == iota_name) continue;
      std::vector<Expr> args;
      for (std::size_t j = 1; j <= node->arity(); ++j)
        args.push_back(j == k ? ctx : Expr::literal(detail::literal_of(catamorphism(alg, node->child(j)))));
      ctx = substitute(detail::interp_of(spec.algebra, node->name()), args);
    }
    out.system.context = ctx;
  }
  return out;
}

}  // namespace rwd
