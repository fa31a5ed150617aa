#pragma once

// Text format for models and systems (`.rwm`).
//
//   carrier rational                      # rational | float | term | vector(k)
//   signature { a/0, b/0, f/2 }
//   variables { x, y }
//   rule f(x,y) => f(y,f(x,y)) @ e       # positions: e or dot-separated, e.g. 2.1
//   algebra { a = 1  b = 2  f = add(proj(1),mul(2,proj(2))) }
//   initial f(a,b)
//
//   system {
//     dim 2
//     matrix [[1,1],[1,0]]  functional [1,0]      # or: transition { e1 e2 } output e
//     state [1,0]                                 #     recurrence e / mpnn { ... }
//   }
//
// `iota` is reserved and always interpreted as the identity. Whitespace and
// newlines are insignificant; `#` starts a comment. Every problem found is
// reported with its line and column; parsing continues past errors.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rwd/correspondence.hpp"
#include "rwd/dynamics.hpp"
#include "rwd/expr.hpp"
#include "rwd/rewrite.hpp"

namespace rwd {

enum class Severity { error, warning };

struct Diagnostic {
  std::size_t line = 0;
  std::size_t column = 0;
  Severity severity = Severity::error;
  std::string message;

  std::string to_string() const {
    return std::to_string(line) + ":" + std::to_string(column) + ": " +
           (severity == Severity::error ? "error: " : "warning: ") + message;
  }
};

/// Safety bounds for parsed sizes; they keep hostile input from exhausting memory.
struct DslLimits {
  std::size_t max_nesting = 2000;
  std::size_t max_dim = 4096;
  std::size_t max_index = 1'000'000;
};

namespace dsl {

enum class Tok { ident, number, lparen, rparen, lbracket, rbracket, lbrace, rbrace, comma, semicolon, slash,
                 equals, arrow, at, minus, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

struct Failure {
  std::size_t line;
  std::size_t column;
  std::string message;
};

inline std::vector<Token> lex(std::string_view src, std::vector<Diagnostic>& diags) {
  std::vector<Token> out;
  std::size_t line = 1;
  std::size_t col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto is_digit = [&](std::size_t j) { return j < src.size() && src[j] >= '0' && src[j] <= '9'; };
  while (i < src.size()) {
    char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::ident;
      t.text = std::string(src.substr(start, j - start));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (is_digit(i)) {
      std::size_t j = i;
      while (is_digit(j)) ++j;
      while (j + 1 < src.size() && src[j] == '.' && is_digit(j + 1)) {
        ++j;
        while (is_digit(j)) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (is_digit(k)) {
          j = k;
          while (is_digit(j)) ++j;
        }
      }
      if (j + 1 < src.size() && src[j] == '/' && is_digit(j + 1)) {
        ++j;
        while (is_digit(j)) ++j;
      }
      t.kind = Tok::number;
      t.text = std::string(src.substr(start, j - start));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    std::size_t len = 1;
    switch (c) {
      case '(': t.kind = Tok::lparen; break;
      case ')': t.kind = Tok::rparen; break;
      case '[': t.kind = Tok::lbracket; break;
      case ']': t.kind = Tok::rbracket; break;
      case '{': t.kind = Tok::lbrace; break;
      case '}': t.kind = Tok::rbrace; break;
      case ',': t.kind = Tok::comma; break;
      case ';': t.kind = Tok::semicolon; break;
      case '/': t.kind = Tok::slash; break;
      case '@': t.kind = Tok::at; break;
      case '-': t.kind = Tok::minus; break;
      case '=':
        if (i + 1 < src.size() && src[i + 1] == '>') {
          t.kind = Tok::arrow;
          len = 2;
        } else {
          t.kind = Tok::equals;
        }
        break;
      default: {
        unsigned char uc = static_cast<unsigned char>(c);
        std::string shown = uc >= 0x20 && uc < 0x7f ? std::string(1, c) : "byte " + std::to_string(uc);
        diags.push_back({line, col, Severity::error, "unexpected character '" + shown + "'"});
        advance(1);
        continue;
      }
    }
    t.text = std::string(src.substr(i, len));
    advance(len);
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

inline const char* describe(Tok k) {
  switch (k) {
    case Tok::ident: return "identifier";
    case Tok::number: return "number";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::lbrace: return "'{'";
    case Tok::rbrace: return "'}'";
    case Tok::comma: return "','";
    case Tok::semicolon: return "';'";
    case Tok::slash: return "'/'";
    case Tok::equals: return "'='";
    case Tok::arrow: return "'=>'";
    case Tok::at: return "'@'";
    case Tok::minus: return "'-'";
    case Tok::end: return "end of input";
  }
  return "?";
}

/// Recursive-descent cursor over a token range.
class Cursor {
 public:
  Cursor(const std::vector<Token>& toks, std::size_t begin, std::size_t end, const DslLimits& limits)
      : toks_(toks), pos_(begin), end_(end), limits_(limits) {}

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t at = pos_ + ahead;
    return at < end_ ? toks_[at] : toks_[end_ < toks_.size() ? end_ : toks_.size() - 1];
  }
  bool at(Tok k) const { return peek().kind == k; }
  bool at_ident(std::string_view s) const { return at(Tok::ident) && peek().text == s; }
  bool done() const { return pos_ >= end_ || toks_[pos_].kind == Tok::end; }
  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }

  const Token& next() {
    const Token& t = peek();
    if (pos_ < end_) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const Token& t, std::string msg) const { throw Failure{t.line, t.column, std::move(msg)}; }
  [[noreturn]] void fail(std::string msg) const { fail(peek(), std::move(msg)); }

  const Token& expect(Tok k, const char* context) {
    if (!at(k)) fail(std::string("expected ") + describe(k) + " " + context + ", found " + found());
    return next();
  }

  std::string found() const {
    const Token& t = peek();
    if (t.kind == Tok::end) return "end of input";
    return "'" + t.text + "'";
  }

  std::size_t expect_size(const char* what, std::size_t max) {
    const Token& t = expect(Tok::number, what);
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size())
      fail(t, std::string("expected a non-negative integer ") + what + ", found '" + t.text + "'");
    if (v > max) fail(t, std::string(what) + " " + t.text + " exceeds the limit " + std::to_string(max));
    return v;
  }

  Rational number() {
    bool neg = false;
    const Token& first = peek();
    if (at(Tok::minus)) {
      next();
      neg = true;
    }
    const Token& t = expect(Tok::number, "in numeric literal");
    auto q = parse_rational(t.text);
    if (!q) fail(t, "malformed number '" + t.text + "'");
    (void)first;
    return neg ? Rational(-*q) : *q;
  }

  std::vector<Rational> vector() {
    expect(Tok::lbracket, "to open a vector");
    std::vector<Rational> out;
    if (at(Tok::rbracket)) {
      next();
      return out;
    }
    for (;;) {
      out.push_back(number());
      if (out.size() > limits_.max_dim) fail("vector longer than " + std::to_string(limits_.max_dim));
      if (at(Tok::comma)) {
        next();
        continue;
      }
      expect(Tok::rbracket, "to close a vector");
      return out;
    }
  }

  RationalMatrix matrix() {
    expect(Tok::lbracket, "to open a matrix");
    RationalMatrix out;
    for (;;) {
      out.push_back(vector());
      if (out.size() > limits_.max_dim) fail("matrix with more than " + std::to_string(limits_.max_dim) + " rows");
      if (at(Tok::comma)) {
        next();
        continue;
      }
      expect(Tok::rbracket, "to close a matrix");
      break;
    }
    for (const auto& row : out)
      if (row.size() != out.front().size() || row.empty()) fail("matrix rows must be non-empty and equally long");
    return out;
  }

  Expr expr(std::size_t nesting = 0) {
    if (nesting > limits_.max_nesting) fail("expression nested too deeply");
    if (at(Tok::number) || at(Tok::minus)) return Expr::literal(number());
    const Token& head = expect(Tok::ident, "at start of expression");
    const std::string name = head.text;
    expect(Tok::lparen, ("after '" + name + "'").c_str());
    auto close = [&] { expect(Tok::rparen, ("to close '" + name + "'").c_str()); };
    auto args = [&](std::size_t min, std::size_t max) {
      std::vector<Expr> out;
      for (;;) {
        out.push_back(expr(nesting + 1));
        if (at(Tok::comma)) {
          next();
          continue;
        }
        break;
      }
      if (out.size() < min || out.size() > max)
        fail(head, "'" + name + "' takes " + (min == max ? std::to_string(min) : "at least " + std::to_string(min)) +
                       " argument" + (min == 1 && max == 1 ? "" : "s") + ", got " + std::to_string(out.size()));
      close();
      return out;
    };
    constexpr std::size_t many = std::numeric_limits<std::size_t>::max();
    if (name == "proj") {
      std::size_t i = expect_size("projection index", limits_.max_index);
      if (i == 0) fail(head, "projection indices start at 1");
      close();
      return Expr::proj(i);
    }
    if (name == "lit") {
      Rational q = number();
      close();
      return Expr::literal(q);
    }
    if (name == "add") return Expr::add(args(1, many));
    if (name == "mul") return Expr::mul(args(1, many));
    if (name == "tuple") return Expr::tuple(args(1, many));
    if (name == "sub") {
      auto a = args(2, 2);
      return Expr::sub(a[0], a[1]);
    }
    if (name == "neg") return Expr::neg(args(1, 1)[0]);
    if (name == "tanh") return Expr::tanh(args(1, 1)[0]);
    if (name == "compose") {
      auto a = args(2, 2);
      return Expr::compose(a[0], a[1]);
    }
    if (name == "affine") {
      RationalMatrix m = matrix();
      expect(Tok::comma, "between affine matrix and offset");
      std::vector<Rational> b = vector();
      if (b.size() != m.size()) fail(head, "affine offset length differs from the number of matrix rows");
      if (at(Tok::comma)) {
        next();
        Expr in = expr(nesting + 1);
        close();
        return Expr::affine(std::move(m), std::move(b), std::move(in));
      }
      close();
      return Expr::affine(std::move(m), std::move(b));
    }
    fail(head, "unknown interpretation '" + name + "' (expected add, sub, mul, neg, tanh, proj, lit, tuple, "
                                                   "affine or compose)");
  }

  Term term(const Signature& sig, const std::set<Variable>& variables, std::size_t nesting = 0) {
    if (nesting > limits_.max_nesting) fail("term nested too deeply");
    const Token& head = expect(Tok::ident, "at start of term");
    const std::string name = head.text;
    auto arity = sig.arity(name);
    if (!arity && name == iota_name) arity = 1;
    if (!arity) {
      if (variables.contains(Variable{name})) {
        if (at(Tok::lparen)) fail(head, "variable '" + name + "' cannot take arguments");
        return Term::variable(name);
      }
      fail(head, "unknown symbol '" + name + "'");
    }
    std::vector<Term> kids;
    if (at(Tok::lparen)) {
      next();
      for (;;) {
        kids.push_back(term(sig, variables, nesting + 1));
        if (at(Tok::comma)) {
          next();
          continue;
        }
        break;
      }
      expect(Tok::rparen, ("to close '" + name + "'").c_str());
    }
    if (kids.size() != *arity)
      fail(head, "'" + name + "' has arity " + std::to_string(*arity) + " but is applied to " +
                     std::to_string(kids.size()) + " argument" + (kids.size() == 1 ? "" : "s"));
    return Term::apply(name, std::move(kids));
  }

  Position position() {
    const Token& t = next();
    if (t.kind == Tok::ident && t.text == "e") return Position::root();
    if (t.kind != Tok::number) fail(t, "expected a position ('e' or dot-separated indices)");
    std::vector<std::size_t> idx;
    std::string_view text = t.text;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t dot = text.find('.', start);
      std::string_view part = text.substr(start, dot == std::string_view::npos ? text.size() - start : dot - start);
      std::size_t v = 0;
      auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
      if (part.empty() || ec != std::errc() || p != part.data() + part.size())
        fail(t, "malformed position '" + t.text + "'");
      if (v == 0) fail(t, "position indices start at 1");
      if (v > limits_.max_index) fail(t, "position index too large");
      idx.push_back(v);
      if (dot == std::string_view::npos) break;
      start = dot + 1;
    }
    return Position(std::move(idx));
  }

 private:
  const std::vector<Token>& toks_;
  std::size_t pos_;
  std::size_t end_;
  const DslLimits& limits_;
};

inline std::string failure_text(const Failure& f) { return f.message; }

}  // namespace dsl

// ---------------------------------------------------------------------------
// Single-item parsers

inline Term parse_term(std::string_view src, const Signature& sig, const std::set<Variable>& variables,
                       const DslLimits& limits = {}) {
  std::vector<Diagnostic> diags;
  auto toks = dsl::lex(src, diags);
  if (!diags.empty()) throw Error(ErrorCode::parse_error, diags.front().to_string());
  dsl::Cursor cur(toks, 0, toks.size() - 1, limits);
  try {
    Term t = cur.term(sig, variables);
    if (!cur.done()) cur.fail("unexpected " + cur.found() + " after term");
    return t;
  } catch (const dsl::Failure& f) {
    ErrorCode code = ErrorCode::parse_error;
    if (f.message.find("unknown symbol") != std::string::npos) code = ErrorCode::unknown_symbol;
    if (f.message.find("has arity") != std::string::npos) code = ErrorCode::arity_mismatch;
    throw Error(code, std::to_string(f.line) + ":" + std::to_string(f.column) + ": " + f.message);
  }
}

inline Position parse_position(std::string_view src) {
  std::vector<Diagnostic> diags;
  auto toks = dsl::lex(src, diags);
  if (!diags.empty()) throw Error(ErrorCode::parse_error, diags.front().to_string());
  DslLimits limits;
  dsl::Cursor cur(toks, 0, toks.size() - 1, limits);
  try {
    Position p = cur.position();
    if (!cur.done()) cur.fail("unexpected " + cur.found() + " after position");
    return p;
  } catch (const dsl::Failure& f) {
    throw Error(ErrorCode::parse_error, f.message);
  }
}

inline Expr parse_expr(std::string_view src, const DslLimits& limits = {}) {
  std::vector<Diagnostic> diags;
  auto toks = dsl::lex(src, diags);
  if (!diags.empty()) throw Error(ErrorCode::parse_error, diags.front().to_string());
  dsl::Cursor cur(toks, 0, toks.size() - 1, limits);
  try {
    Expr e = cur.expr();
    if (!cur.done()) cur.fail("unexpected " + cur.found() + " after expression");
    return e;
  } catch (const dsl::Failure& f) {
    throw Error(ErrorCode::parse_error, std::to_string(f.line) + ":" + std::to_string(f.column) + ": " + f.message);
  }
}

// ---------------------------------------------------------------------------
// Documents

enum class SystemForm { expressions, linear, recurrence, mpnn };

struct SystemBlock {
  SystemForm form = SystemForm::expressions;
  SystemSpec spec;
  std::vector<Rational> state;
  std::optional<Expr> recurrence_step;
  std::optional<Graph> graph;
  std::optional<MpnnSpec> mpnn;
};

struct ModelFile {
  CarrierKind carrier = CarrierKind::rational;
  std::size_t vector_dim = 0;
  Signature signature;
  std::set<Variable> variables;
  std::optional<RewriteRule> rule;
  std::map<std::string, Expr> algebra;
  std::optional<Term> initial;
  std::optional<SystemBlock> system;

  bool has_model() const { return rule.has_value() || initial.has_value() || !algebra.empty(); }

  ModelSpec model_spec() const {
    ModelSpec m;
    m.signature = signature;
    m.variables = variables;
    m.rule = rule;
    m.algebra.carrier = carrier;
    m.algebra.vector_dim = vector_dim;
    m.algebra.interp = algebra;
    if (initial) m.initial = *initial;
    return m;
  }
};

struct ParseResult {
  ModelFile file;
  std::vector<Diagnostic> diagnostics;

  bool ok() const {
    return std::none_of(diagnostics.begin(), diagnostics.end(),
                        [](const Diagnostic& d) { return d.severity == Severity::error; });
  }
  std::string report() const {
    std::string out;
    for (const auto& d : diagnostics) out += d.to_string() + "\n";
    return out;
  }
};

namespace dsl {

inline const std::set<std::string, std::less<>>& top_keywords() {
  static const std::set<std::string, std::less<>> k{"carrier", "signature", "variables", "rule",
                                                    "algebra", "initial",   "system"};
  return k;
}

/// Highest input index an expression reads from its own input tuple.
inline std::size_t reads(const Expr& e) {
  const auto& n = e.node();
  switch (n.kind) {
    case ExprKind::literal: return 0;
    case ExprKind::proj: return n.index;
    case ExprKind::compose: return reads(n.args[1]);
    case ExprKind::affine: return n.has_input ? reads(n.args[0]) : n.matrix.front().size();
    default: {
      std::size_t m = 0;
      for (const auto& a : n.args) m = std::max(m, reads(a));
      return m;
    }
  }
}

class DocumentParser {
 public:
  DocumentParser(std::string_view src, const DslLimits& limits) : limits_(limits) {
    toks_ = lex(src, result_.diagnostics);
  }

  ParseResult run() {
    split_statements();
    // Declarations first so that statement order does not matter.
    for (const auto& s : statements_)
      if (s.keyword == "carrier" || s.keyword == "signature" || s.keyword == "variables") statement(s);
    check_declarations();
    for (const auto& s : statements_)
      if (s.keyword != "carrier" && s.keyword != "signature" && s.keyword != "variables") statement(s);
    validate();
    std::stable_sort(result_.diagnostics.begin(), result_.diagnostics.end(),
                     [](const Diagnostic& a, const Diagnostic& b) {
                       return std::tie(a.line, a.column) < std::tie(b.line, b.column);
                     });
    return std::move(result_);
  }

 private:
  struct Statement {
    std::string keyword;
    std::size_t begin;
    std::size_t end;
  };

  void error(std::size_t line, std::size_t col, std::string msg) {
    result_.diagnostics.push_back({line, col, Severity::error, std::move(msg)});
  }
  void error(const Token& t, std::string msg) { error(t.line, t.column, std::move(msg)); }
  void warning(const Token& t, std::string msg) {
    result_.diagnostics.push_back({t.line, t.column, Severity::warning, std::move(msg)});
  }

  /// A statement runs from a top-level keyword to the next one outside braces.
  void split_statements() {
    std::size_t i = 0;
    const std::size_t last = toks_.size() - 1;
    while (i < last) {
      const Token& t = toks_[i];
      if (t.kind != Tok::ident || !top_keywords().contains(t.text)) {
        error(t, "expected a statement keyword (carrier, signature, variables, rule, algebra, initial, system), "
                 "found '" + t.text + "'");
        ++i;
        while (i < last && !(toks_[i].kind == Tok::ident && top_keywords().contains(toks_[i].text))) ++i;
        continue;
      }
      std::size_t j = i + 1;
      int depth = 0;
      while (j < last) {
        const Token& u = toks_[j];
        if (u.kind == Tok::lbrace) ++depth;
        if (u.kind == Tok::rbrace) depth = std::max(0, depth - 1);
        if (depth == 0 && u.kind == Tok::ident && top_keywords().contains(u.text)) {
          // A keyword directly following '=' or '(' is an operand, not a new statement.
          const Token& prev = toks_[j - 1];
          if (prev.kind != Tok::equals && prev.kind != Tok::lparen && prev.kind != Tok::comma) break;
        }
        ++j;
      }
      statements_.push_back({t.text, i, j});
      i = j;
    }
  }

  void statement(const Statement& s) {
    Cursor cur(toks_, s.begin, s.end, limits_);
    const Token& kw = cur.next();
    try {
      if (s.keyword == "carrier") return carrier(cur, kw);
      if (s.keyword == "signature") return signature(cur);
      if (s.keyword == "variables") return variables(cur);
      if (s.keyword == "rule") return rule(cur, kw);
      if (s.keyword == "algebra") return algebra(cur);
      if (s.keyword == "initial") return initial(cur, kw);
      if (s.keyword == "system") return system(cur, kw);
    } catch (const Failure& f) {
      error(f.line, f.column, f.message);
    }
  }

  void expect_end(Cursor& cur, const char* what) {
    if (!cur.done()) cur.fail(std::string("unexpected ") + cur.found() + " after " + what);
  }

  void once(const Token& kw, bool& seen) {
    if (seen) throw Failure{kw.line, kw.column, "duplicate '" + kw.text + "' statement"};
    seen = true;
  }

  void carrier(Cursor& cur, const Token& kw) {
    once(kw, seen_carrier_);
    const Token& name = cur.expect(Tok::ident, "naming the carrier");
    auto kind = parse_carrier(name.text);
    if (!kind) cur.fail(name, "unknown carrier '" + name.text + "' (expected rational, float, vector or term)");
    result_.file.carrier = *kind;
    if (*kind == CarrierKind::vector) {
      cur.expect(Tok::lparen, "after 'vector'");
      result_.file.vector_dim = cur.expect_size("vector length", limits_.max_dim);
      if (result_.file.vector_dim == 0) cur.fail(name, "vector carrier needs a positive length");
      cur.expect(Tok::rparen, "to close the vector length");
    }
    expect_end(cur, "carrier");
  }

  /// Runs `item` for each entry of a braced block, recovering from errors at the next line.
  template <class Item>
  void block(Cursor& cur, const char* what, Item item) {
    cur.expect(Tok::lbrace, (std::string("to open ") + what).c_str());
    while (!cur.at(Tok::rbrace)) {
      if (cur.done()) cur.fail(std::string("unterminated ") + what + " block");
      std::size_t start = cur.pos();
      try {
        item();
      } catch (const Failure& f) {
        error(f.line, f.column, f.message);
        std::size_t line = toks_[start].line;
        if (cur.pos() == start) cur.next();
        while (!cur.done() && !cur.at(Tok::rbrace) && cur.peek().line == line) cur.next();
      }
      while (cur.at(Tok::comma) || cur.at(Tok::semicolon)) cur.next();
    }
    cur.next();
    expect_end(cur, what);
  }

  void signature(Cursor& cur) {
    block(cur, "signature", [&] {
      const Token& name = cur.expect(Tok::ident, "naming a symbol");
      cur.expect(Tok::slash, "between symbol and arity");
      std::size_t arity = cur.expect_size("arity", limits_.max_dim);
      try {
        result_.file.signature.add(Symbol{name.text, arity});
      } catch (const Error& e) {
        cur.fail(name, e.what());
      }
    });
  }

  void variables(Cursor& cur) {
    block(cur, "variables", [&] {
      const Token& name = cur.expect(Tok::ident, "naming a variable");
      if (name.text == iota_name) cur.fail(name, "'iota' is reserved");
      if (!result_.file.variables.insert(Variable{name.text}).second)
        cur.fail(name, "variable '" + name.text + "' declared twice");
    });
  }

  void check_declarations() {
    for (const auto& v : result_.file.variables) {
      if (result_.file.signature.contains(v.name)) {
        const Token* where = find_token(v.name);
        error(where ? where->line : 1, where ? where->column : 1,
              "variable '" + v.name + "' collides with an operator of the same name");
      }
    }
  }

  const Token* find_token(const std::string& text) const {
    for (const auto& t : toks_)
      if (t.kind == Tok::ident && t.text == text) return &t;
    return nullptr;
  }

  void rule(Cursor& cur, const Token& kw) {
    once(kw, seen_rule_);
    const Token& lhs_tok = cur.peek();
    Term lhs = cur.term(result_.file.signature, result_.file.variables);
    cur.expect(Tok::arrow, "between the two sides of the rule");
    Term rhs = cur.term(result_.file.signature, result_.file.variables);
    cur.expect(Tok::at, "before the rewrite position");
    Position p = cur.position();
    expect_end(cur, "rule");
    try {
      result_.file.rule = RewriteRule{Identity(lhs, rhs), p};
    } catch (const Error& e) {
      cur.fail(lhs_tok, e.what());
    }
    rule_token_ = lhs_tok;
  }

  void algebra(Cursor& cur) {
    block(cur, "algebra", [&] {
      const Token& name = cur.expect(Tok::ident, "naming the interpreted symbol");
      cur.expect(Tok::equals, "after the symbol name");
      Expr e = cur.expr();
      if (name.text == iota_name) cur.fail(name, "'iota' is always the identity and cannot be interpreted");
      auto arity = result_.file.signature.arity(name.text);
      if (!arity) cur.fail(name, "interpretation for undeclared symbol '" + name.text + "'");
      if (result_.file.carrier != CarrierKind::vector && reads(e) > *arity)
        cur.fail(name, "interpretation of '" + name.text + "' reads input " + std::to_string(reads(e)) +
                           " but the symbol has arity " + std::to_string(*arity));
      if (!result_.file.algebra.emplace(name.text, e).second)
        cur.fail(name, "symbol '" + name.text + "' interpreted twice");
      algebra_tokens_.emplace(name.text, name);
    });
    seen_algebra_ = true;
  }

  void initial(Cursor& cur, const Token& kw) {
    once(kw, seen_initial_);
    initial_token_ = cur.peek();
    if (cur.at(Tok::lbracket)) {
      // A bare state vector belongs to a system; accept it for system files.
      initial_state_ = cur.vector();
    } else {
      result_.file.initial = cur.term(result_.file.signature, result_.file.variables);
    }
    expect_end(cur, "initial term");
  }

  void system(Cursor& cur, const Token& kw) {
    once(kw, seen_system_);
    system_token_ = kw;
    SystemBlock sys;
    std::optional<std::size_t> dim;
    std::optional<RationalMatrix> matrix;
    std::optional<std::vector<Rational>> functional;
    std::optional<std::vector<Expr>> transition;
    std::optional<Expr> output;
    std::optional<Expr> context;
    std::optional<std::vector<Rational>> state;
    std::optional<Expr> recurrence;
    std::optional<Graph> graph;
    std::optional<MpnnSpec> mpnn;

    block(cur, "system", [&] {
      const Token& item = cur.expect(Tok::ident, "naming a system entry");
      const std::string& k = item.text;
      if (k == "dim") {
        dim = cur.expect_size("dimension", limits_.max_dim);
      } else if (k == "matrix") {
        matrix = cur.matrix();
      } else if (k == "functional") {
        functional = cur.vector();
      } else if (k == "transition") {
        std::vector<Expr> parts;
        cur.expect(Tok::lbrace, "to open the transition list");
        while (!cur.at(Tok::rbrace)) {
          if (cur.done()) cur.fail("unterminated transition list");
          parts.push_back(cur.expr());
          while (cur.at(Tok::comma) || cur.at(Tok::semicolon)) cur.next();
        }
        cur.next();
        transition = std::move(parts);
      } else if (k == "output") {
        output = cur.expr();
      } else if (k == "context") {
        context = cur.expr();
      } else if (k == "state") {
        state = cur.vector();
      } else if (k == "recurrence") {
        recurrence = cur.expr();
      } else if (k == "mpnn") {
        mpnn_block(cur, graph, mpnn);
      } else {
        cur.fail(item, "unknown system entry '" + k + "' (expected dim, matrix, functional, transition, output, "
                       "context, state, recurrence or mpnn)");
      }
    });

    auto fail = [&](std::string msg) { throw Failure{kw.line, kw.column, std::move(msg)}; };
    const int forms = (matrix || functional ? 1 : 0) + (transition || output ? 1 : 0) + (recurrence ? 1 : 0) +
                      (mpnn ? 1 : 0);
    if (forms != 1)
      fail("a system needs exactly one of: matrix+functional, transition+output, recurrence, mpnn");
    try {
      if (matrix || functional) {
        if (!matrix || !functional) fail("a linear system needs both 'matrix' and 'functional'");
        sys.form = SystemForm::linear;
        sys.spec = linear_system_spec(*matrix, *functional);
      } else if (transition || output) {
        if (!transition || !output) fail("an expression system needs both 'transition' and 'output'");
        if (!dim) fail("an expression system needs 'dim'");
        sys.form = SystemForm::expressions;
        sys.spec.dim = *dim;
        sys.spec.transition = std::move(*transition);
        sys.spec.output = *output;
      } else if (recurrence) {
        if (!dim) fail("a recurrence system needs 'dim' (its depth)");
        sys.form = SystemForm::recurrence;
        sys.recurrence_step = recurrence;
        sys.spec = recurrence_system(*recurrence, *dim);
      } else {
        sys.form = SystemForm::mpnn;
        sys.graph = graph;
        sys.mpnn = mpnn;
        sys.spec = mpnn_system(*graph, *mpnn);
      }
    } catch (const Error& e) {
      fail(e.what());
    }
    if (dim && *dim != sys.spec.dim)
      fail("'dim " + std::to_string(*dim) + "' disagrees with the system's dimension " +
           std::to_string(sys.spec.dim));
    sys.spec.context = context;
    if (state) sys.state = std::move(*state);
    check_system_shape(sys.spec, kw);
    result_.file.system = std::move(sys);
  }

  void mpnn_block(Cursor& cur, std::optional<Graph>& graph, std::optional<MpnnSpec>& mpnn) {
    Graph g;
    MpnnSpec m;
    bool have_msg = false, have_upd = false, have_read = false;
    const Token& open = cur.peek();
    cur.expect(Tok::lbrace, "to open the mpnn block");
    while (!cur.at(Tok::rbrace)) {
      if (cur.done()) cur.fail("unterminated mpnn block");
      const Token& item = cur.expect(Tok::ident, "naming an mpnn entry");
      const std::string& k = item.text;
      if (k == "vertices") {
        g.vertices = cur.expect_size("vertex count", limits_.max_dim);
      } else if (k == "hidden") {
        m.hidden = cur.expect_size("hidden size", limits_.max_dim);
      } else if (k == "edge_dim") {
        m.edge_dim = cur.expect_size("edge label size", limits_.max_dim);
      } else if (k == "edge") {
        std::size_t a = cur.expect_size("edge endpoint", limits_.max_dim);
        cur.expect(Tok::minus, "between edge endpoints");
        std::size_t b = cur.expect_size("edge endpoint", limits_.max_dim);
        std::vector<Rational> label;
        if (cur.at(Tok::lbracket)) label = cur.vector();
        g.edges.emplace_back(a, b);
        g.labels.push_back(std::move(label));
      } else if (k == "message") {
        m.message = cur.expr();
        have_msg = true;
      } else if (k == "update") {
        m.update = cur.expr();
        have_upd = true;
      } else if (k == "readout") {
        m.readout = cur.expr();
        have_read = true;
      } else {
        cur.fail(item, "unknown mpnn entry '" + k + "'");
      }
      while (cur.at(Tok::comma) || cur.at(Tok::semicolon)) cur.next();
    }
    cur.next();
    if (!have_msg || !have_upd || !have_read) cur.fail(open, "mpnn block needs message, update and readout");
    if (g.edges.size() > limits_.max_dim * 4) cur.fail(open, "too many edges");
    if (g.vertices * m.hidden > limits_.max_dim) cur.fail(open, "mpnn state exceeds the dimension limit");
    graph = std::move(g);
    mpnn = std::move(m);
  }

  void check_system_shape(const SystemSpec& spec, const Token& at) {
    std::vector<double> zeros(spec.dim, 0.0);
    try {
      auto sys = instantiate_system<double>(spec);
      (void)sys.transition(zeros);
      (void)sys.output(zeros);
    } catch (const Error& e) {
      throw Failure{at.line, at.column, std::string("system is malformed: ") + e.what()};
    }
  }

  void validate() {
    auto& f = result_.file;
    if (f.system) {
      if (initial_state_ && f.system->state.empty()) f.system->state = *initial_state_;
      if (f.system->state.empty()) {
        error(system_token_, "system has no initial 'state'");
      } else if (f.system->state.size() != f.system->spec.dim) {
        error(system_token_, "state has " + std::to_string(f.system->state.size()) + " entries, system has " +
                                 std::to_string(f.system->spec.dim));
      }
    }
    if (!f.has_model()) {
      if (!f.system && result_.ok()) error(1, 1, "file declares neither a model nor a system");
      return;
    }
    const Token model_at = rule_token_.value_or(toks_.front());
    if (!f.rule && !seen_rule_) error(model_at, "model has no 'rule'");
    if (!f.initial && !seen_initial_) error(model_at, "model has no 'initial' term");
    if (f.carrier != CarrierKind::term) {
      if (!seen_algebra_) error(model_at, "model has no 'algebra' block");
      std::vector<std::string> missing;
      for (const auto& s : f.signature.symbols())
        if (s.name != iota_name && !f.algebra.contains(s.name)) missing.push_back(s.name + "/" + std::to_string(s.arity));
      if (!missing.empty() && seen_algebra_) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        error(model_at, "algebra does not interpret: " + list);
      }
    }
    if (f.rule) {
      if (!iterability_witness(f.rule->identity)) {
        warning(*rule_token_, "right-hand side is not an instance of the left-hand side: no substitution tau "
                              "with tau(lhs) = rhs exists, so the rule cannot be iterated indefinitely");
      }
      if (f.initial) {
        const Token& it = initial_token_.value_or(model_at);
        if (!f.initial->ground()) {
          error(it, "initial term must be ground");
        } else if (!is_position_of(*f.initial, f.rule->position)) {
          error(it, "rule position " + f.rule->position.to_string() + " does not exist in the initial term");
        } else if (!instance_at(*f.initial, f.rule->lhs(), f.rule->position)) {
          error(it, "initial term is not an instance of the left-hand side at position " +
                        f.rule->position.to_string());
        }
      }
    }
  }

  const DslLimits& limits_;
  std::vector<Token> toks_;
  std::vector<Statement> statements_;
  ParseResult result_;
  bool seen_carrier_ = false, seen_rule_ = false, seen_initial_ = false, seen_system_ = false,
       seen_algebra_ = false;
  std::optional<Token> rule_token_;
  std::optional<Token> initial_token_;
  Token system_token_;
  std::optional<std::vector<Rational>> initial_state_;
  std::map<std::string, Token> algebra_tokens_;
};

}  // namespace dsl

/// Parses and validates a whole `.rwm` document, collecting every diagnostic.
inline ParseResult parse_model(std::string_view src, const DslLimits& limits = {}) {
  return dsl::DocumentParser(src, limits).run();
}

// ---------------------------------------------------------------------------
// Printing

namespace dsl {

inline void print_system(std::string& out, const SystemBlock& sys) {
  out += "system {\n";
  const auto& s = sys.spec;
  switch (sys.form) {
    case SystemForm::linear:
      out += "  matrix ";
      print_matrix(out, s.linear->a);
      out += "\n  functional ";
      print_rational_list(out, s.linear->b);
      out += "\n";
      break;
    case SystemForm::recurrence:
      out += "  dim " + std::to_string(s.dim) + "\n  recurrence " + print_expr(*sys.recurrence_step) + "\n";
      break;
    case SystemForm::mpnn: {
      const auto& g = *sys.graph;
      const auto& m = *sys.mpnn;
      out += "  mpnn {\n    vertices " + std::to_string(g.vertices) + "\n    hidden " + std::to_string(m.hidden) +
             "\n    edge_dim " + std::to_string(m.edge_dim) + "\n";
      for (std::size_t e = 0; e < g.edges.size(); ++e) {
        out += "    edge " + std::to_string(g.edges[e].first) + "-" + std::to_string(g.edges[e].second);
        if (!g.labels[e].empty()) {
          out += ' ';
          print_rational_list(out, g.labels[e]);
        }
        out += "\n";
      }
      out += "    message " + print_expr(m.message) + "\n    update " + print_expr(m.update) + "\n    readout " +
             print_expr(m.readout) + "\n  }\n";
      break;
    }
    case SystemForm::expressions:
      out += "  dim " + std::to_string(s.dim) + "\n  transition {\n";
      for (const auto& e : s.transition) out += "    " + print_expr(e) + "\n";
      out += "  }\n  output " + print_expr(s.output) + "\n";
      break;
  }
  if (s.context) out += "  context " + print_expr(*s.context) + "\n";
  if (!sys.state.empty()) {
    out += "  state ";
    print_rational_list(out, sys.state);
    out += "\n";
  }
  out += "}\n";
}

}  // namespace dsl

/// Canonical text of a document; parse_model(print_model(f)) reproduces f.
inline std::string print_model(const ModelFile& f) {
  std::string out = "carrier ";
  out += to_string(f.carrier);
  if (f.carrier == CarrierKind::vector) out += "(" + std::to_string(f.vector_dim) + ")";
  out += "\n";
  if (f.signature.size()) {
    out += "signature { ";
    bool first = true;
    for (const auto& s : f.signature.symbols()) {
      out += (first ? "" : ", ") + s.name + "/" + std::to_string(s.arity);
      first = false;
    }
    out += " }\n";
  }
  if (!f.variables.empty()) {
    out += "variables { ";
    bool first = true;
    for (const auto& v : f.variables) {
      out += (first ? "" : ", ") + v.name;
      first = false;
    }
    out += " }\n";
  }
  if (f.rule)
    out += "rule " + print_term(f.rule->lhs()) + " => " + print_term(f.rule->rhs()) + " @ " +
           f.rule->position.to_string() + "\n";
  if (!f.algebra.empty()) {
    out += "algebra {\n";
    for (const auto& [name, e] : f.algebra) out += "  " + name + " = " + print_expr(e) + "\n";
    out += "}\n";
  }
  if (f.initial) out += "initial " + print_term(*f.initial) + "\n";
  if (f.system) dsl::print_system(out, *f.system);
  return out;
}

/// A model document realizing `spec` on the given carrier.
inline ModelFile model_file(const ModelSpec& spec, CarrierKind carrier) {
  ModelFile f;
  f.carrier = carrier;
  f.vector_dim = spec.algebra.vector_dim;
  f.signature = spec.signature;
  f.variables = spec.variables;
  f.rule = spec.rule;
  f.algebra = spec.algebra.interp;
  f.initial = spec.initial;
  return f;
}

/// A system document with expression form.
inline ModelFile system_file(const SystemSpec& spec, std::vector<Rational> state, CarrierKind carrier) {
  ModelFile f;
  f.carrier = carrier;
  SystemBlock b;
  b.form = spec.linear ? SystemForm::linear : SystemForm::expressions;
  b.spec = spec;
  b.state = std::move(state);
  f.system = std::move(b);
  return f;
}

}  // namespace rwd
