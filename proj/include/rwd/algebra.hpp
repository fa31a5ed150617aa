#pragma once

// Sigma-algebras over pluggable carriers and catamorphic evaluation.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rwd/expr.hpp"
#include "rwd/term.hpp"

namespace rwd {

enum class CarrierKind { rational, real, vector, term };

inline const char* to_string(CarrierKind k) {
  switch (k) {
    case CarrierKind::rational: return "rational";
    case CarrierKind::real: return "float";
    case CarrierKind::vector: return "vector";
    case CarrierKind::term: return "term";
  }
  return "?";
}

inline std::optional<CarrierKind> parse_carrier(std::string_view s) {
  if (s == "rational") return CarrierKind::rational;
  if (s == "float") return CarrierKind::real;
  if (s == "vector") return CarrierKind::vector;
  if (s == "term") return CarrierKind::term;
  return std::nullopt;
}

/// A carrier plus one total interpretation per operator. iota, when present,
/// is always the identity and cannot be reinterpreted.
template <class C>
class SigmaAlgebra {
 public:
  using Fn = std::function<C(std::span<const C>)>;

  SigmaAlgebra() = default;
  explicit SigmaAlgebra(Signature sig) : sig_(std::move(sig)) {}

  const Signature& signature() const { return sig_; }

  SigmaAlgebra& interpret(const std::string& name, Fn fn) {
    auto ar = sig_.arity(name);
    if (!ar) throw Error(ErrorCode::unknown_symbol, "cannot interpret '" + name + "': not in signature");
    if (name == iota_name) throw Error(ErrorCode::invalid_signature, "iota is always the identity");
    interp_.insert_or_assign(name, std::move(fn));
    return *this;
  }

  /// Interprets through an expression over the argument tuple.
  SigmaAlgebra& interpret(const std::string& name, Expr e) {
    return interpret(name, Fn([e = std::move(e)](std::span<const C> args) { return eval_scalar<C>(e, args); }));
  }

  const Fn* find(std::string_view name) const {
    auto it = interp_.find(std::string(name));
    return it == interp_.end() ? nullptr : &it->second;
  }

  /// Symbols of the signature that still lack an interpretation.
  std::vector<Symbol> missing() const {
    std::vector<Symbol> out;
    for (const auto& s : sig_.symbols())
      if (s.name != iota_name && !find(s.name)) out.push_back(s);
    return out;
  }

  void extend_signature_with_identity() { sig_ = sig_.with_identity(); }

 private:
  Signature sig_;
  std::map<std::string, Fn> interp_;
};

/// Same carrier and interpretations, with iota added as the identity.
template <class C>
SigmaAlgebra<C> extend_with_identity(SigmaAlgebra<C> alg) {
  alg.extend_signature_with_identity();
  return alg;
}

/// The initial algebra: every operator builds its own node.
inline SigmaAlgebra<Term> term_algebra(const Signature& sig) {
  SigmaAlgebra<Term> alg(sig.with_identity());
  for (const auto& s : sig.symbols()) {
    if (s.name == iota_name) continue;
    alg.interpret(s.name, [name = s.name](std::span<const Term> args) {
      return Term::apply(name, std::vector<Term>(args.begin(), args.end()));
    });
  }
  return alg;
}

namespace detail {

/// Bottom-up evaluation with an explicit stack, memoized per shared node so
/// that DAG-shaped terms are evaluated in time linear in their node count.
template <class C, class Lookup>
C evaluate(const SigmaAlgebra<C>& alg, const Term& root, Lookup&& lookup, std::unordered_map<const void*, C>& memo) {
  std::vector<std::pair<const Term*, bool>> stack{{&root, false}};
  std::vector<C> args;
  while (!stack.empty()) {
    auto& [t, expanded] = stack.back();
    if (memo.contains(t->id())) {
      stack.pop_back();
      continue;
    }
    if (t->is_variable()) {
      memo.emplace(t->id(), lookup(t->name()));
      stack.pop_back();
      continue;
    }
    if (!expanded) {
      expanded = true;
      const Term* cur = t;
      auto ar = alg.signature().arity(cur->name());
      if (!ar) throw Error(ErrorCode::unknown_symbol, "no interpretation for '" + cur->name() + "'");
      if (*ar != cur->arity())
        throw Error(ErrorCode::arity_mismatch, "'" + cur->name() + "' interpreted with arity " + std::to_string(*ar) +
                                                   ", applied to " + std::to_string(cur->arity()));
      for (const auto& c : cur->children())
        if (!memo.contains(c.id())) stack.emplace_back(&c, false);
      continue;
    }
    const Term* cur = t;
    stack.pop_back();
    if (cur->name() == iota_name) {
      memo.emplace(cur->id(), memo.at(cur->children()[0].id()));
      continue;
    }
    const auto* fn = alg.find(cur->name());
    if (!fn) throw Error(ErrorCode::unknown_symbol, "no interpretation for '" + cur->name() + "'");
    args.clear();
    for (const auto& c : cur->children()) args.push_back(memo.at(c.id()));
    memo.emplace(cur->id(), (*fn)(std::span<const C>(args)));
  }
  return memo.at(root.id());
}

template <class C, class Lookup>
C evaluate(const SigmaAlgebra<C>& alg, const Term& root, Lookup&& lookup) {
  std::unordered_map<const void*, C> memo;
  return evaluate(alg, root, std::forward<Lookup>(lookup), memo);
}

template <class C>
C no_variables(const std::string& v) {
  throw Error(ErrorCode::unbound_variable, "variable '" + v + "'");
}

}  // namespace detail

/// The unique structural evaluation of a ground term.
template <class C>
C catamorphism(const SigmaAlgebra<C>& alg, const Term& t) {
  if (!t.ground()) throw Error(ErrorCode::unbound_variable, "catamorphism needs a ground term: " + print_term(t));
  return detail::evaluate(alg, t, detail::no_variables<C>);
}

/// Catamorphism over a sequence of terms that share structure, such as the
/// iterates of a rewrite: node values persist between calls, so each call
/// costs only the nodes not seen before. Evaluated terms are kept alive.
template <class C>
class CachedCatamorphism {
 public:
  explicit CachedCatamorphism(SigmaAlgebra<C> alg) : alg_(std::move(alg)) {}

  C operator()(const Term& t) {
    if (!t.ground()) throw Error(ErrorCode::unbound_variable, "catamorphism needs a ground term: " + print_term(t));
    pinned_.push_back(t);
    return detail::evaluate(alg_, t, detail::no_variables<C>, memo_);
  }

  /// Distinct nodes evaluated so far.
  std::size_t nodes() const { return memo_.size(); }

 private:
  SigmaAlgebra<C> alg_;
  std::unordered_map<const void*, C> memo_;
  std::vector<Term> pinned_;
};

template <class C>
using Assignment = std::map<Variable, C>;

/// Structural evaluation where variables are read from an assignment.
template <class C>
C eval_with_assignment(const SigmaAlgebra<C>& alg, const Term& t, const Assignment<C>& a) {
  return detail::evaluate(alg, t, [&](const std::string& v) -> C {
    auto it = a.find(Variable{v});
    if (it == a.end()) throw Error(ErrorCode::unbound_variable, "variable '" + v + "' has no value");
    return it->second;
  });
}

/// Evaluates with variables named `#i` read from `values[i-1]`, as in lifted skeletons.
template <class C>
C eval_skeleton(const SigmaAlgebra<C>& alg, const Term& skeleton, std::span<const C> values) {
  return detail::evaluate(alg, skeleton, [&](const std::string& v) -> C {
    std::size_t idx = 0;
    if (v.size() < 2 || v[0] != '#' || (idx = std::stoul(v.substr(1))) == 0 || idx > values.size())
      throw Error(ErrorCode::unbound_variable, "skeleton hole '" + v + "' out of range");
    return values[idx - 1];
  });
}

// ---------------------------------------------------------------------------
// Declarative algebras

/// An algebra written in the interpretation vocabulary; instantiable on any scalar carrier.
struct AlgebraSpec {
  CarrierKind carrier = CarrierKind::rational;
  /// Length of values on the vector carrier.
  std::size_t vector_dim = 0;
  std::map<std::string, Expr> interp;
};

template <class C>
SigmaAlgebra<C> instantiate_algebra(const Signature& sig, const AlgebraSpec& spec) {
  SigmaAlgebra<C> alg(sig.with_identity());
  for (const auto& [name, e] : spec.interp) alg.interpret(name, e);
  return alg;
}

/// Vector carrier: interpretations must return vectors of `dim` (length-1 results broadcast).
inline SigmaAlgebra<FloatVec> instantiate_vector_algebra(const Signature& sig, const AlgebraSpec& spec) {
  SigmaAlgebra<FloatVec> alg(sig.with_identity());
  const std::size_t dim = spec.vector_dim;
  for (const auto& [name, e] : spec.interp) {
    alg.interpret(name, SigmaAlgebra<FloatVec>::Fn([e, dim, name](std::span<const FloatVec> args) {
                    FloatVec v = eval_scalar<FloatVec>(e, args);
                    if (v.v.size() == 1 && dim > 1) v.v.assign(dim, v.v[0]);
                    if (v.v.size() != dim)
                      throw Error(ErrorCode::dimension_mismatch, "'" + name + "' produced a vector of length " +
                                                                     std::to_string(v.v.size()) + ", expected " +
                                                                     std::to_string(dim));
                    return v;
                  }));
  }
  return alg;
}

}  // namespace rwd
