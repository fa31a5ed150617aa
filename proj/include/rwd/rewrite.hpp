#pragma once

// Single-rule positional rewriting: instance sets, the rewriting function at a
// fixed position, iterability, iota-flattening and the leaf-tuple
// split/assemble pair used by the model correspondence.

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rwd/term.hpp"

namespace rwd {

/// A pair (lhs, rhs) with vars(rhs) contained in vars(lhs). A bare-variable lhs is rejected.
class Identity {
 public:
  Identity(Term lhs, Term rhs) : lhs_(std::move(lhs)), rhs_(std::move(rhs)) {
    if (lhs_.is_variable())
      throw Error(ErrorCode::invalid_identity, "left-hand side may not be a bare variable");
    auto lv = vars(lhs_);
    for (const auto& v : vars(rhs_)) {
      if (!lv.contains(v))
        throw Error(ErrorCode::invalid_identity,
                    "variable '" + v.name + "' of the right-hand side does not occur on the left");
    }
  }

  const Term& lhs() const { return lhs_; }
  const Term& rhs() const { return rhs_; }

 private:
  Term lhs_;
  Term rhs_;
};

struct RewriteRule {
  Identity identity;
  Position position;

  const Term& lhs() const { return identity.lhs(); }
  const Term& rhs() const { return identity.rhs(); }
};

/// t belongs to the instance set of s at p.
inline bool instance_at(const Term& t, const Term& s, const Position& p) {
  if (!is_position_of(t, p)) return false;
  return match(s, subterm_at(t, p)).has_value();
}

/// t[sigma(r)]_p where sigma matches l against t|_p.
inline Term rewrite_at(const RewriteRule& rule, const Term& t) {
  if (!is_position_of(t, rule.position))
    throw Error(ErrorCode::no_match, "position " + rule.position.to_string() + " does not exist in the subject");
  auto sigma = match(rule.lhs(), subterm_at(t, rule.position));
  if (!sigma)
    throw Error(ErrorCode::no_match, "left-hand side does not match at position " + rule.position.to_string());
  return replace_at(t, apply_substitution(*sigma, rule.rhs()), rule.position);
}

/// tau with tau(l) = r, when the rule can be iterated at a fixed position.
inline std::optional<Substitution> iterability_witness(const Identity& id) { return match(id.lhs(), id.rhs()); }

/// Lazily yields t0, R_p(t0), R_p^2(t0), ...; holds only the current term.
class RewriteStream {
 public:
  RewriteStream(RewriteRule rule, Term t0) : rule_(std::move(rule)), current_(std::move(t0)) {}

  const Term& current() const { return current_; }
  std::size_t step() const { return step_; }

  /// Advances one rewrite; throws no_match when the rule stops applying.
  const Term& advance() {
    current_ = rewrite_at(rule_, current_);
    ++step_;
    return current_;
  }

 private:
  RewriteRule rule_;
  Term current_;
  std::size_t step_ = 0;
};

/// [t0, R_p(t0), ..., R_p^n(t0)]; requires an iterable rule and t0 in the instance set.
inline std::vector<Term> iterate(const RewriteRule& rule, const Term& t0, std::size_t n) {
  if (!iterability_witness(rule.identity))
    throw Error(ErrorCode::not_iterable, "right-hand side is not an instance of the left-hand side");
  if (!instance_at(t0, rule.lhs(), rule.position))
    throw Error(ErrorCode::no_match, "initial term is not an instance of the left-hand side at " +
                                         rule.position.to_string());
  std::vector<Term> out;
  out.reserve(n + 1);
  RewriteStream stream(rule, t0);
  out.push_back(stream.current());
  for (std::size_t k = 0; k < n; ++k) out.push_back(stream.advance());
  return out;
}

// ---------------------------------------------------------------------------
// Flatness

namespace detail {

struct DepthRange {
  std::size_t lo = std::numeric_limits<std::size_t>::max();
  std::size_t hi = 0;
  bool empty() const { return lo > hi; }
};

/// Depth range of leaves (relative to t) that satisfy `want`.
template <class Pred>
DepthRange leaf_depths(const Term& t, Pred want, std::unordered_map<const void*, DepthRange>& memo) {
  if (t.is_leaf()) {
    return want(t) ? DepthRange{0, 0} : DepthRange{};
  }
  if (auto it = memo.find(t.id()); it != memo.end()) return it->second;
  DepthRange out;
  for (const auto& c : t.children()) {
    auto r = leaf_depths(c, want, memo);
    if (r.empty()) continue;
    out.lo = std::min(out.lo, r.lo + 1);
    out.hi = std::max(out.hi, r.hi + 1);
  }
  memo.emplace(t.id(), out);
  return out;
}

}  // namespace detail

/// Every variable occurs at depth d(t). Constants may sit anywhere.
inline bool is_flat(const Term& t) {
  std::unordered_map<const void*, detail::DepthRange> memo;
  auto r = detail::leaf_depths(t, [](const Term& leaf) { return leaf.is_variable(); }, memo);
  return r.empty() || (r.lo == t.depth() && r.hi == t.depth());
}

/// Every leaf, variable or constant, occurs at depth d(t).
inline bool has_uniform_leaf_depth(const Term& t) {
  std::unordered_map<const void*, detail::DepthRange> memo;
  auto r = detail::leaf_depths(t, [](const Term&) { return true; }, memo);
  return r.lo == t.depth() && r.hi == t.depth();
}

inline Term iota_power(Term t, std::size_t k) {
  for (std::size_t i = 0; i < k; ++i) t = Term::apply(std::string(iota_name), {std::move(t)});
  return t;
}

namespace detail {

inline Term flatten(const Term& t, std::unordered_map<const void*, Term>& memo) {
  if (t.is_leaf()) return t;
  if (auto it = memo.find(t.id()); it != memo.end()) return it->second;
  std::vector<Term> kids;
  kids.reserve(t.arity());
  for (const auto& c : t.children()) kids.push_back(iota_power(flatten(c, memo), t.depth() - c.depth() - 1));
  Term out = Term::apply(t.name(), std::move(kids));
  memo.emplace(t.id(), out);
  return out;
}

}  // namespace detail

/// Pads every child with iota until all leaves sit at depth d(t).
/// `extended` must contain iota; the result has the same depth as t.
inline Term flatten(const Term& t, const Signature& extended) {
  if (!extended.has_identity())
    throw Error(ErrorCode::invalid_signature, "flattening needs the iota-extended signature");
  std::unordered_map<const void*, Term> memo;
  return detail::flatten(t, memo);
}

/// Flatten without a signature check; iota is implicit everywhere in this library.
inline Term flatten(const Term& t) {
  std::unordered_map<const void*, Term> memo;
  return detail::flatten(t, memo);
}

// ---------------------------------------------------------------------------
// Leaf tuples

/// Name of the i-th hole (1-based) in a skeleton. Never a valid user identifier.
inline std::string hole_name(std::size_t i) { return "#" + std::to_string(i); }

/// A uniformly-deep term split into its operator scaffold and its leaves.
struct LeafTuple {
  Term skeleton;
  std::vector<Term> leaves;

  friend bool operator==(const LeafTuple&, const LeafTuple&) = default;
};

namespace detail {

inline Term cut_leaves(const Term& t, std::vector<Term>& leaves) {
  if (t.is_leaf()) {
    leaves.push_back(t);
    return Term::variable(hole_name(leaves.size()));
  }
  std::vector<Term> kids;
  kids.reserve(t.arity());
  for (const auto& c : t.children()) kids.push_back(cut_leaves(c, leaves));
  return Term::apply(t.name(), std::move(kids));
}

}  // namespace detail

/// Splits t at depth d(t): leaves in left-to-right order, holes #1..#L in the skeleton.
inline LeafTuple lift(const Term& t) {
  if (!has_uniform_leaf_depth(t))
    throw Error(ErrorCode::non_uniform_depth, "leaves of " + print_term(t) + " are not all at depth " +
                                                  std::to_string(t.depth()));
  LeafTuple out;
  out.skeleton = detail::cut_leaves(t, out.leaves);
  return out;
}

/// Number of holes in a skeleton, validating that they are exactly #1..#L in order.
inline std::size_t hole_count(const Term& skeleton) {
  std::size_t seen = 0;
  std::vector<const Term*> stack{&skeleton};
  while (!stack.empty()) {
    const Term* cur = stack.back();
    stack.pop_back();
    if (cur->is_variable()) {
      if (cur->name() != hole_name(seen + 1))
        throw Error(ErrorCode::dimension_mismatch, "skeleton hole '" + cur->name() + "' out of order");
      ++seen;
      continue;
    }
    auto kids = cur->children();
    for (std::size_t i = kids.size(); i-- > 0;) stack.push_back(&kids[i]);
  }
  return seen;
}

/// Inverse of lift: plugs the leaves back into the skeleton.
inline Term assemble(const LeafTuple& lt) {
  std::size_t holes = hole_count(lt.skeleton);
  if (holes != lt.leaves.size())
    throw Error(ErrorCode::dimension_mismatch, "skeleton has " + std::to_string(holes) + " holes but " +
                                                   std::to_string(lt.leaves.size()) + " leaves were given");
  Substitution fill;
  for (std::size_t i = 0; i < lt.leaves.size(); ++i) fill.bind(Variable{hole_name(i + 1)}, lt.leaves[i]);
  return apply_substitution(fill, lt.skeleton);
}

/// Finite data of the leaf reindexing between a flat lhs and its flattened tau-image.
struct ReindexMap {
  /// u[i] (1-based) is the leaf of l that leaf i+1 of r' is drawn from.
  std::vector<std::size_t> u;
  /// images[j] is tau applied to leaf j+1 of l.
  std::vector<Term> images;
};

/// For flat l and r' = flatten(tau(l)), maps each leaf of r' to the first equal leaf of l.
inline ReindexMap variable_reindexing(const Term& l, const Term& r_flat, const Substitution& tau) {
  auto lhat = lift(l).leaves;
  auto rhat = lift(r_flat).leaves;
  ReindexMap out;
  out.u.reserve(rhat.size());
  for (const auto& leaf : rhat) {
    auto it = std::find(lhat.begin(), lhat.end(), leaf);
    if (it == lhat.end())
      throw Error(ErrorCode::unmappable_leaf, "leaf '" + print_term(leaf) + "' of the right-hand side has no "
                                                                           "matching leaf on the left");
    out.u.push_back(static_cast<std::size_t>(it - lhat.begin()) + 1);
  }
  out.images.reserve(lhat.size());
  for (const auto& leaf : lhat) out.images.push_back(apply_substitution(tau, leaf));
  return out;
}

}  // namespace rwd
