#pragma once

// First-order terms over a signature: positions, subterms, replacement,
// substitution and syntactic matching.
//
// Terms are immutable and share structure. Substituting a variable never
// copies the bound term, so iterated rewriting builds a DAG whose size grows
// linearly even when the tree it denotes grows exponentially. Size-like
// measures are cached per node and saturate instead of overflowing.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rwd/error.hpp"

namespace rwd {

/// Reserved name of the unary identity operator added by the iota extension.
inline constexpr std::string_view iota_name = "iota";

struct Symbol {
  std::string name;
  std::size_t arity = 0;

  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

class Signature {
 public:
  Signature() = default;

  explicit Signature(std::vector<Symbol> symbols) {
    for (auto& s : symbols) add(std::move(s));
  }

  /// Rejects empty names and a name redeclared with any arity.
  void add(Symbol symbol) {
    if (symbol.name.empty()) throw Error(ErrorCode::invalid_signature, "empty symbol name");
    if (auto it = arity_.find(symbol.name); it != arity_.end()) {
      throw Error(ErrorCode::invalid_signature,
                  "symbol '" + symbol.name + "' declared twice (arities " + std::to_string(it->second) + " and " +
                      std::to_string(symbol.arity) + ")");
    }
    if (symbol.name == iota_name && symbol.arity != 1) {
      throw Error(ErrorCode::invalid_signature, "'iota' is reserved for the unary identity operator");
    }
    arity_.emplace(symbol.name, symbol.arity);
    symbols_.push_back(std::move(symbol));
  }

  std::optional<std::size_t> arity(std::string_view name) const {
    if (auto it = arity_.find(name); it != arity_.end()) return it->second;
    return std::nullopt;
  }

  bool contains(std::string_view name) const { return arity_.find(name) != arity_.end(); }

  const std::vector<Symbol>& symbols() const { return symbols_; }

  std::vector<Symbol> of_arity(std::size_t n) const {
    std::vector<Symbol> out;
    for (const auto& s : symbols_)
      if (s.arity == n) out.push_back(s);
    return out;
  }

  bool has_identity() const { return contains(iota_name); }

  /// The iota-extended signature; idempotent.
  Signature with_identity() const {
    Signature out = *this;
    if (!out.has_identity()) out.add(Symbol{std::string(iota_name), 1});
    return out;
  }

  std::size_t size() const { return symbols_.size(); }

 private:
  std::map<std::string, std::size_t, std::less<>> arity_;
  std::vector<Symbol> symbols_;
};

struct Variable {
  std::string name;

  friend auto operator<=>(const Variable&, const Variable&) = default;
};

/// Path of 1-based child indices; the empty path is the root.
class Position {
 public:
  Position() = default;
  Position(std::initializer_list<std::size_t> idx) : idx_(idx) {}
  explicit Position(std::vector<std::size_t> idx) : idx_(std::move(idx)) {}

  static Position root() { return Position{}; }

  bool is_root() const { return idx_.empty(); }
  std::size_t length() const { return idx_.size(); }
  std::span<const std::size_t> indices() const { return idx_; }
  std::size_t operator[](std::size_t i) const { return idx_[i]; }

  Position child(std::size_t k) const {
    auto copy = idx_;
    copy.push_back(k);
    return Position(std::move(copy));
  }

  Position prefixed(std::size_t k) const {
    std::vector<std::size_t> copy;
    copy.reserve(idx_.size() + 1);
    copy.push_back(k);
    copy.insert(copy.end(), idx_.begin(), idx_.end());
    return Position(std::move(copy));
  }

  /// "e" for the root, otherwise dot-separated decimals.
  std::string to_string() const {
    if (idx_.empty()) return "e";
    std::string out;
    for (std::size_t i = 0; i < idx_.size(); ++i) {
      if (i) out += '.';
      out += std::to_string(idx_[i]);
    }
    return out;
  }

  friend auto operator<=>(const Position&, const Position&) = default;

 private:
  std::vector<std::size_t> idx_;
};

inline std::ostream& operator<<(std::ostream& os, const Position& p) { return os << p.to_string(); }

namespace detail {

inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > std::numeric_limits<std::uint64_t>::max() - b ? std::numeric_limits<std::uint64_t>::max() : a + b;
}

inline std::size_t hash_mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace detail

class Term;

namespace detail {
struct Node;
}

class Term {
 public:
  /// A default-constructed term is empty and only useful as a placeholder.
  Term() = default;

  static Term variable(std::string name);
  static Term variable(const Variable& v) { return variable(v.name); }
  static Term apply(std::string head, std::vector<Term> children);
  static Term constant(std::string name) { return apply(std::move(name), {}); }

  bool empty() const { return node_ == nullptr; }
  bool is_variable() const;
  bool is_constant() const { return !is_variable() && arity() == 0; }
  /// A leaf is a variable or a constant.
  bool is_leaf() const { return arity() == 0; }
  /// Head symbol for applications, variable name for variables.
  const std::string& name() const;
  std::size_t arity() const;
  std::span<const Term> children() const;
  const Term& child(std::size_t one_based) const;

  Symbol head() const { return Symbol{name(), arity()}; }

  std::size_t depth() const;
  /// Leaf positions counted with repetition (saturating).
  std::uint64_t leaf_count() const;
  /// Number of positions of the tree this term denotes (saturating).
  std::uint64_t tree_size() const;
  bool ground() const;
  std::size_t hash() const;

  /// Identity of the shared node; equal ids imply equal terms.
  const void* id() const { return node_.get(); }

  friend bool operator==(const Term& a, const Term& b);
  friend struct detail::Node;

 private:
  explicit Term(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const detail::Node> node_;
};

namespace detail {

struct Node {
  bool is_var = false;
  std::string name;
  std::vector<Term> children;
  std::size_t hash = 0;
  std::size_t depth = 0;
  std::uint64_t leaves = 1;
  std::uint64_t size = 1;
  bool ground = true;

  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  ~Node();
};

}  // namespace detail

inline Term Term::variable(std::string name) {
  if (name.empty()) throw Error(ErrorCode::invalid_signature, "empty variable name");
  auto n = std::make_shared<detail::Node>();
  n->is_var = true;
  n->hash = detail::hash_mix(0x51ed27, std::hash<std::string>{}(name));
  n->name = std::move(name);
  n->ground = false;
  return Term(std::move(n));
}

inline Term Term::apply(std::string head, std::vector<Term> children) {
  if (head.empty()) throw Error(ErrorCode::invalid_signature, "empty symbol name");
  auto n = std::make_shared<detail::Node>();
  std::size_t h = detail::hash_mix(0x7a3b11, std::hash<std::string>{}(head));
  h = detail::hash_mix(h, children.size());
  if (!children.empty()) {
    n->leaves = 0;
    for (const auto& c : children) {
      if (c.empty()) throw Error(ErrorCode::arity_mismatch, "empty child term under '" + head + "'");
      h = detail::hash_mix(h, c.hash());
      n->depth = std::max(n->depth, c.depth() + 1);
      n->leaves = detail::sat_add(n->leaves, c.leaf_count());
      n->size = detail::sat_add(n->size, c.tree_size());
      n->ground = n->ground && c.ground();
    }
  }
  n->hash = h;
  n->name = std::move(head);
  n->children = std::move(children);
  return Term(std::move(n));
}

namespace detail {

/// Releases uniquely owned descendants with a loop, so deep chains do not
/// recurse through shared_ptr destructors.
inline Node::~Node() {
  if (children.empty()) return;
  std::vector<Term> pending = std::move(children);
  while (!pending.empty()) {
    Term t = std::move(pending.back());
    pending.pop_back();
    if (t.node_ && t.node_.use_count() == 1) {
      auto& kids = const_cast<Node&>(*t.node_).children;
      for (auto& k : kids) pending.push_back(std::move(k));
      kids.clear();
    }
  }
}

inline bool same_head(const Node& a, const Node& b) {
  return a.hash == b.hash && a.is_var == b.is_var && a.children.size() == b.children.size() && a.depth == b.depth &&
         a.name == b.name;
}

}  // namespace detail

inline bool Term::is_variable() const { return node_->is_var; }
inline const std::string& Term::name() const { return node_->name; }
inline std::size_t Term::arity() const { return node_->children.size(); }
inline std::span<const Term> Term::children() const { return node_->children; }
inline const Term& Term::child(std::size_t one_based) const { return node_->children.at(one_based - 1); }
inline std::size_t Term::depth() const { return node_->depth; }
inline std::uint64_t Term::leaf_count() const { return node_->leaves; }
inline std::uint64_t Term::tree_size() const { return node_->size; }
inline bool Term::ground() const { return node_->ground; }
inline std::size_t Term::hash() const { return node_->hash; }

inline bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  if (!detail::same_head(*a.node_, *b.node_)) return false;
  // Pairs already scheduled are not compared twice, which keeps this linear on shared DAGs.
  std::set<std::pair<const void*, const void*>> seen;
  std::vector<std::pair<const detail::Node*, const detail::Node*>> stack{{a.node_.get(), b.node_.get()}};
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    for (std::size_t i = 0; i < x->children.size(); ++i) {
      const auto* cx = x->children[i].node_.get();
      const auto* cy = y->children[i].node_.get();
      if (cx == cy) continue;
      if (!detail::same_head(*cx, *cy)) return false;
      if (seen.emplace(cx, cy).second) stack.emplace_back(cx, cy);
    }
  }
  return true;
}

struct TermHash {
  std::size_t operator()(const Term& t) const { return t.hash(); }
};

/// Canonical text: no whitespace, e.g. `f(x,g(y,z))`.
inline void print_term(std::string& out, const Term& t) {
  // Each frame is a term plus the index of the next child to print.
  std::vector<std::pair<const Term*, std::size_t>> stack{{&t, 0}};
  while (!stack.empty()) {
    auto& [cur, next] = stack.back();
    if (next == 0) out += cur->name();
    if (cur->arity() == 0) {
      stack.pop_back();
      continue;
    }
    if (next == cur->arity()) {
      out += ')';
      stack.pop_back();
      continue;
    }
    out += next == 0 ? '(' : ',';
    const Term* child = &cur->children()[next];
    ++next;
    stack.emplace_back(child, 0);
  }
}

inline std::string print_term(const Term& t) {
  std::string out;
  print_term(out, t);
  return out;
}

inline std::ostream& operator<<(std::ostream& os, const Term& t) { return os << print_term(t); }

// ---------------------------------------------------------------------------
// Positions, subterms, replacement

/// Preorder enumeration of every position of `t`.
inline std::vector<Position> positions(const Term& t) {
  std::vector<Position> out;
  std::vector<std::pair<const Term*, Position>> stack{{&t, Position::root()}};
  while (!stack.empty()) {
    auto [node, pos] = std::move(stack.back());
    stack.pop_back();
    auto kids = node->children();
    for (std::size_t i = kids.size(); i-- > 0;) stack.emplace_back(&kids[i], pos.child(i + 1));
    out.push_back(std::move(pos));
  }
  return out;
}

inline bool is_position_of(const Term& t, const Position& p) {
  const Term* cur = &t;
  for (auto k : p.indices()) {
    if (k == 0 || k > cur->arity()) return false;
    cur = &cur->children()[k - 1];
  }
  return true;
}

inline const Term& subterm_at(const Term& t, const Position& p) {
  const Term* cur = &t;
  for (auto k : p.indices()) {
    if (k == 0 || k > cur->arity())
      throw Error(ErrorCode::invalid_position, "position " + p.to_string() + " not in term " + print_term(t));
    cur = &cur->children()[k - 1];
  }
  return *cur;
}

/// s[t]_p; only the path to p is rebuilt.
inline Term replace_at(const Term& s, const Term& t, const Position& p) {
  if (!is_position_of(s, p))
    throw Error(ErrorCode::invalid_position, "position " + p.to_string() + " not in term " + print_term(s));
  std::vector<const Term*> path{&s};
  for (auto k : p.indices()) path.push_back(&path.back()->children()[k - 1]);
  Term acc = t;
  for (std::size_t level = p.length(); level-- > 0;) {
    const Term& parent = *path[level];
    std::vector<Term> kids(parent.children().begin(), parent.children().end());
    kids[p[level] - 1] = std::move(acc);
    acc = Term::apply(parent.name(), std::move(kids));
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Variables and structural measures

inline std::set<Variable> vars(const Term& t) {
  std::set<Variable> out;
  std::unordered_set<const void*> seen;
  std::vector<const Term*> stack{&t};
  while (!stack.empty()) {
    const Term* cur = stack.back();
    stack.pop_back();
    if (cur->ground() || !seen.insert(cur->id()).second) continue;
    if (cur->is_variable()) {
      out.insert(Variable{cur->name()});
      continue;
    }
    for (const auto& c : cur->children()) stack.push_back(&c);
  }
  return out;
}

inline std::size_t depth(const Term& t) { return t.depth(); }
inline std::uint64_t leaf_number(const Term& t) { return t.leaf_count(); }

/// Collects every operator symbol occurring in `t`.
inline std::set<Symbol> symbols_of(const Term& t) {
  std::set<Symbol> out;
  std::unordered_set<const void*> seen;
  std::vector<const Term*> stack{&t};
  while (!stack.empty()) {
    const Term* cur = stack.back();
    stack.pop_back();
    if (!seen.insert(cur->id()).second || cur->is_variable()) continue;
    out.insert(cur->head());
    for (const auto& c : cur->children()) stack.push_back(&c);
  }
  return out;
}

/// Checks every operator of `t` against `sig` and rejects variables named like operators.
inline void check_term(const Term& t, const Signature& sig) {
  std::unordered_set<const void*> seen;
  std::vector<const Term*> stack{&t};
  while (!stack.empty()) {
    const Term* cur = stack.back();
    stack.pop_back();
    if (!seen.insert(cur->id()).second) continue;
    if (cur->is_variable()) {
      if (sig.contains(cur->name()))
        throw Error(ErrorCode::invalid_signature, "variable '" + cur->name() + "' collides with an operator name");
      continue;
    }
    auto ar = sig.arity(cur->name());
    if (!ar) throw Error(ErrorCode::unknown_symbol, "symbol '" + cur->name() + "' not in signature");
    if (*ar != cur->arity())
      throw Error(ErrorCode::arity_mismatch, "symbol '" + cur->name() + "' has arity " + std::to_string(*ar) +
                                                 ", used with " + std::to_string(cur->arity()) + " arguments");
    for (const auto& c : cur->children()) stack.push_back(&c);
  }
}

// ---------------------------------------------------------------------------
// Substitution and matching

/// Finite map from variables to terms; unmapped variables are fixed.
class Substitution {
 public:
  Substitution() = default;
  Substitution(std::initializer_list<std::pair<const Variable, Term>> init) : map_(init) {}

  void bind(Variable v, Term t) { map_.insert_or_assign(std::move(v), std::move(t)); }

  const Term* find(const Variable& v) const {
    auto it = map_.find(v);
    return it == map_.end() ? nullptr : &it->second;
  }
  const Term* find(const std::string& name) const { return find(Variable{name}); }

  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }
  auto begin() const { return map_.begin(); }
  auto end() const { return map_.end(); }

  friend bool operator==(const Substitution&, const Substitution&) = default;

 private:
  std::map<Variable, Term> map_;
};

namespace detail {

inline Term substitute(const Substitution& sigma, const Term& root, std::unordered_map<const void*, Term>& memo) {
  auto leaf_image = [&](const Term& t) -> Term {
    if (t.ground()) return t;
    const Term* image = sigma.find(t.name());
    return image ? *image : t;
  };
  if (root.ground() || root.is_variable()) return leaf_image(root);
  std::vector<std::pair<const Term*, bool>> stack{{&root, false}};
  while (!stack.empty()) {
    auto [t, expanded] = stack.back();
    if (memo.contains(t->id())) {
      stack.pop_back();
      continue;
    }
    if (!expanded) {
      stack.back().second = true;
      for (const auto& c : t->children())
        if (!c.ground() && !c.is_variable() && !memo.contains(c.id())) stack.emplace_back(&c, false);
      continue;
    }
    stack.pop_back();
    std::vector<Term> kids;
    kids.reserve(t->arity());
    bool changed = false;
    for (const auto& c : t->children()) {
      kids.push_back(c.ground() || c.is_variable() ? leaf_image(c) : memo.at(c.id()));
      changed = changed || kids.back().id() != c.id();
    }
    memo.emplace(t->id(), changed ? Term::apply(t->name(), std::move(kids)) : *t);
  }
  return memo.at(root.id());
}

}  // namespace detail

/// Homomorphic extension of `sigma` applied to `t`.
inline Term apply_substitution(const Substitution& sigma, const Term& t) {
  if (sigma.empty()) return t;
  std::unordered_map<const void*, Term> memo;
  return detail::substitute(sigma, t, memo);
}

/// Substitution composition: (first ; then)(x) = then(first(x)).
inline Substitution compose(const Substitution& first, const Substitution& then) {
  Substitution out;
  for (const auto& [v, t] : first) out.bind(v, apply_substitution(then, t));
  for (const auto& [v, t] : then)
    if (!first.find(v)) out.bind(v, t);
  return out;
}

/// Syntactic one-sided matching: returns the minimal sigma with sigma(pattern) = subject.
inline std::optional<Substitution> match(const Term& pattern, const Term& subject) {
  Substitution sigma;
  std::vector<std::pair<const Term*, const Term*>> stack{{&pattern, &subject}};
  while (!stack.empty()) {
    auto [p, s] = stack.back();
    stack.pop_back();
    if (p->is_variable()) {
      if (const Term* bound = sigma.find(p->name())) {
        if (!(*bound == *s)) return std::nullopt;
      } else {
        sigma.bind(Variable{p->name()}, *s);
      }
      continue;
    }
    if (s->is_variable() || p->name() != s->name() || p->arity() != s->arity()) return std::nullopt;
    auto pc = p->children();
    auto sc = s->children();
    for (std::size_t i = pc.size(); i-- > 0;) stack.emplace_back(&pc[i], &sc[i]);
  }
  return sigma;
}

}  // namespace rwd
