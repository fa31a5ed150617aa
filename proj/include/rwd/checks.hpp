#pragma once

// Seeded property suites. Each suite draws its cases from a generator seeded
// by (seed, suite name), so suites are independent of the order they run in.

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rwd/correspondence.hpp"
#include "rwd/dsl.hpp"
#include "rwd/random.hpp"
#include "rwd/recurrence.hpp"

namespace rwd::checks {

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t passed = 0;
  /// Smallest failing case seen, if any.
  std::optional<std::string> counterexample;
  double seconds = 0.0;
  /// Cases per law, for suites that check several.
  std::map<std::string, std::size_t> laws;

  bool ok() const { return cases > 0 && passed == cases && !counterexample; }
};

struct CheckConfig {
  std::uint64_t seed = gen::default_seed;
  /// Overrides each suite's default case count.
  std::optional<std::size_t> cases;
  /// Test-only: corrupts the reindex map so that its suite must fail.
  bool inject_mutant = false;
};

inline bool is_prefix(const Position& a, const Position& b) {
  if (a.length() > b.length()) return false;
  for (std::size_t i = 0; i < a.length(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

inline std::uint64_t suite_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
  return seed ^ h;
}

/// Tracks pass/fail and keeps the smallest counterexample by a size measure.
class Tally {
 public:
  explicit Tally(std::string name) { r_.name = std::move(name); }

  void pass() {
    ++r_.cases;
    ++r_.passed;
  }
  void fail(std::uint64_t size, std::string what) {
    ++r_.cases;
    if (!best_size_ || size < *best_size_) {
      best_size_ = size;
      r_.counterexample = std::move(what);
    }
  }
  void check(bool ok, std::uint64_t size, const std::function<std::string()>& what) {
    if (ok) {
      pass();
    } else {
      fail(size, what());
    }
  }
  void check(const std::string& law, bool ok, std::uint64_t size, const std::function<std::string()>& what) {
    ++r_.laws[law];
    check(ok, size, what);
  }
  SuiteResult finish(std::chrono::steady_clock::time_point start) {
    r_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return std::move(r_);
  }

 private:
  SuiteResult r_;
  std::optional<std::uint64_t> best_size_;
};

/// Runs `body` once per case; exceptions count as failures with their message.
template <class Body>
SuiteResult run_cases(const std::string& name, std::uint64_t seed, std::size_t n, Body body) {
  auto start = std::chrono::steady_clock::now();
  gen::Rng rng(suite_seed(seed, name));
  Tally tally(name);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(rng, tally);
    } catch (const std::exception& e) {
      tally.fail(std::numeric_limits<std::uint64_t>::max(), "case " + std::to_string(i) + " threw: " + e.what());
    }
  }
  return tally.finish(start);
}

// ---------------------------------------------------------------------------

/// Positions, substitution and matching laws, and measures against brute force.
inline SuiteResult term_core(std::uint64_t seed, std::size_t n) {
  return run_cases("term_core", seed, n, [](gen::Rng& rng, Tally& tally) {
    Signature sig = gen::random_signature(rng);
    auto pool = gen::variable_pool(3);
    Term t = gen::random_term(rng, sig, pool, 4);
    Term s = gen::random_term(rng, sig, pool, 3);
    auto ps = positions(t);
    const Position& p = gen::pick(rng, ps);

    bool ok = replace_at(t, subterm_at(t, p), p) == t && subterm_at(replace_at(t, s, p), p) == s;

    std::size_t depth = 0;
    std::uint64_t leaves = 0;
    for (const auto& q : ps) {
      depth = std::max(depth, q.length());
      if (subterm_at(t, q).is_leaf()) ++leaves;
    }
    ok = ok && depth == t.depth() && leaves == t.leaf_count() && ps.size() == t.tree_size();

    Substitution sigma = gen::random_ground_substitution(rng, sig, vars(t), 2);
    Term inst = apply_substitution(sigma, t);
    auto m = match(t, inst);
    ok = ok && m && apply_substitution(*m, t) == inst && m->size() == vars(t).size() && inst.ground();

    Substitution wider = sigma;
    wider.bind(Variable{"unused"}, gen::random_ground_term(rng, sig, 2));
    ok = ok && apply_substitution(wider, t) == inst;

    tally.check(ok, t.tree_size(), [&] { return "term " + print_term(t) + " at " + p.to_string(); });
  });
}

/// Rewriting-function laws: well-definedness, surjectivity, injectivity when
/// vars(r) = vars(l), the closed form of iteration, and lift/assemble.
inline SuiteResult rewrite(std::uint64_t seed, std::size_t n) {
  auto result = run_cases("rewrite", seed, n, [](gen::Rng& rng, Tally& tally) {
    Signature sig = gen::random_signature(rng);
    auto pool = gen::variable_pool(3);
    Term l = gen::random_compound(rng, sig, pool, 3);
    std::set<Variable> lv = vars(l);
    std::vector<Variable> lvars(lv.begin(), lv.end());
    Term context = gen::random_ground_term(rng, sig, 3);
    auto ps = positions(context);
    Position p = gen::pick(rng, ps);

    // Surjectivity and well-definedness: any t in T_p^r has a preimage.
    Term r = gen::random_term(rng, sig, lvars, 3, 0.5);
    RewriteRule rule{Identity(l, r), p};
    Term t = replace_at(context, apply_substitution(gen::random_ground_substitution(rng, sig, vars(r), 2), r), p);
    auto sigma = match(r, subterm_at(t, p));
    bool ok = sigma.has_value();
    if (ok) {
      Substitution ext = *sigma;
      for (const auto& v : lv)
        if (!ext.find(v)) ext.bind(v, gen::random_ground_term(rng, sig, 2));
      Term pre = replace_at(t, apply_substitution(ext, l), p);
      ok = instance_at(pre, l, p) && rewrite_at(rule, pre) == t &&
           rewrite_at(rule, pre) == replace_at(pre, apply_substitution(ext, r), p);
    }
    tally.check("surjective", ok, t.tree_size(), [&] {
      return "surjectivity: rule " + print_term(l) + " => " + print_term(r) + " @ " + p.to_string() + " on " +
             print_term(t);
    });

    // Injectivity: vars(r) = vars(l) means the rhs instance pins down the lhs instance.
    // A ground lhs at the root has a single instance, so draw one with variables.
    Term li = l;
    for (int attempt = 0; attempt < 40 && vars(li).empty(); ++attempt) li = gen::random_compound(rng, sig, pool, 3, 1.0);
    std::set<Variable> liv = vars(li);
    std::vector<Variable> livars(liv.begin(), liv.end());
    Term r2;
    for (int attempt = 0; attempt < 40; ++attempt) {
      r2 = gen::random_term(rng, sig, livars, 3, 0.6);
      if (vars(r2) == liv) break;
    }
    if (vars(r2) != liv) r2 = li;
    RewriteRule inj{Identity(li, r2), p};
    // Small generators so that distinct subjects still share most structure.
    Substitution s1 = gen::random_ground_substitution(rng, sig, liv, 1);
    Term a = replace_at(context, apply_substitution(s1, li), p);
    Term b = a;
    for (int attempt = 0; attempt < 20 && a == b; ++attempt) {
      Substitution s2 = s1;
      if (!livars.empty()) s2.bind(gen::pick(rng, livars), gen::random_ground_term(rng, sig, attempt < 10 ? 1 : 2));
      Term context2 = context;
      if (gen::coin(rng, 0.3)) {
        const Position& q = gen::pick(rng, ps);
        if (!is_prefix(q, p) && !is_prefix(p, q)) context2 = replace_at(context, gen::random_ground_term(rng, sig, 1), q);
      }
      b = replace_at(context2, apply_substitution(s2, li), p);
    }
    if (a != b)
      tally.check("injective", rewrite_at(inj, a) != rewrite_at(inj, b), a.tree_size() + b.tree_size(), [&] {
      return "injectivity: rule " + print_term(li) + " => " + print_term(r2) + " maps " + print_term(a) + " and " +
             print_term(b) + " together";
    });

    // Flattening, lifting and assembling.
    Term flat = flatten(gen::random_term(rng, sig, pool, 4));
    LeafTuple lt = lift(flat);
    tally.check("lift_assemble", assemble(lt) == flat && lift(assemble(lt)) == lt && lt.leaves.size() == flat.leaf_count() &&
                    has_uniform_leaf_depth(flat),
                flat.tree_size(), [&] { return "lift/assemble: " + print_term(flat); });
  });
  return result;
}

/// R_p^n(t0) = t0[sigma tau^n (l)]_p for iterable rules, n <= 8.
inline SuiteResult iteration(std::uint64_t seed, std::size_t n) {
  return run_cases("iteration", seed, n, [](gen::Rng& rng, Tally& tally) {
    ModelSpec m = gen::random_iterable_model(rng);
    const auto& rule = *m.rule;
    auto tau = *iterability_witness(rule.identity);
    auto sigma = *match(rule.lhs(), subterm_at(m.initial, rule.position));
    auto its = iterate(rule, m.initial, 8);
    Term cur = rule.lhs();
    bool ok = true;
    for (std::size_t k = 0; k <= 8 && ok; ++k) {
      ok = its[k] == replace_at(m.initial, apply_substitution(sigma, cur), rule.position) &&
           instance_at(its[k], rule.lhs(), rule.position) && its[k].ground();
      cur = apply_substitution(tau, cur);
    }
    tally.check(ok, m.initial.tree_size(), [&] {
      return "rule " + print_term(rule.lhs()) + " => " + print_term(rule.rhs()) + " @ " + rule.position.to_string() +
             " from " + print_term(m.initial);
    });
  });
}

/// cata(alg + iota)(flatten(t)) = cata(alg)(t), exactly on rationals.
inline SuiteResult flatten_preservation(std::uint64_t seed, std::size_t n) {
  return run_cases("flatten", seed, n, [](gen::Rng& rng, Tally& tally) {
    Signature sig = gen::random_signature(rng);
    Term t = gen::random_ground_term(rng, sig, gen::uniform(rng, 0, 5));
    AlgebraSpec spec = gen::random_linear_algebra(rng, sig);
    SigmaAlgebra<Rational> alg(sig);
    for (const auto& [name, e] : spec.interp) alg.interpret(name, e);
    Term f = flatten(t, sig.with_identity());
    Rational lhs = catamorphism(extend_with_identity(alg), f);
    Rational rhs = catamorphism(alg, t);
    tally.check(lhs == rhs && f.depth() == t.depth() && has_uniform_leaf_depth(f), t.tree_size(), [&] {
      return "term " + print_term(t) + ": " + to_string(lhs) + " vs " + to_string(rhs);
    });
  });
}

/// Projected-system outputs equal model outputs exactly, n <= 15.
inline SuiteResult projection(std::uint64_t seed, std::size_t n, std::size_t steps = 15) {
  return run_cases("projection", seed, n, [steps](gen::Rng& rng, Tally& tally) {
    ModelSpec spec = gen::random_iterable_model(rng);
    auto model = instantiate_model<Rational>(spec);
    auto proj = project(model, ProjectOptions{true});
    auto expect = model_outputs(model, steps);
    auto got = proj.outputs(steps);
    bool ok = expect == got && proj.system.dim == flatten(spec.rule->lhs()).leaf_count();
    tally.check(ok, spec.initial.tree_size() + spec.rule->rhs().tree_size(), [&] {
      return "model " + print_term(spec.rule->lhs()) + " => " + print_term(spec.rule->rhs()) + " @ " +
             spec.rule->position.to_string() + " from " + print_term(spec.initial);
    });
  });
}

/// trajectory(project(embed(sys, x0))) = trajectory(sys, x0), exactly, n <= 30.
inline SuiteResult roundtrip(std::uint64_t seed, std::size_t n, std::size_t steps = 30) {
  return run_cases("roundtrip", seed, n, [steps](gen::Rng& rng, Tally& tally) {
    auto c = gen::random_linear_system(rng);
    // Direct matrix-power oracle, independent of the expression evaluator.
    std::vector<Rational> x = c.x0, expect;
    for (std::size_t k = 0; k <= steps; ++k) {
      Rational y = 0;
      for (std::size_t j = 0; j < x.size(); ++j) y += c.b[j] * x[j];
      expect.push_back(y);
      std::vector<Rational> nx(x.size(), Rational(0));
      for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) nx[i] += c.a[i][j] * x[j];
      x = std::move(nx);
    }
    auto model = instantiate_model<Rational>(embed(c.spec, c.x0));
    auto proj = project(model);
    auto got = proj.outputs(steps);
    auto sys = trajectory(instantiate_system<Rational>(c.spec), c.x0, steps).outputs;
    tally.check(got == expect && sys == expect && proj.system.dim == c.spec.dim, c.spec.dim, [&] {
      std::string m;
      print_matrix(m, c.a);
      return "system A=" + m + " dim " + std::to_string(c.spec.dim);
    });
  });
}

/// Product formula against a direct determinant, relative 1e-9, d <= 6.
inline SuiteResult vandermonde(std::uint64_t seed, std::size_t n) {
  return run_cases("vandermonde", seed, n, [](gen::Rng& rng, Tally& tally) {
    std::size_t d = gen::uniform(rng, 1, 6);
    std::vector<double> b, lambda;
    while (lambda.size() < d) {
      double x = gen::uniform_real(rng, -2.0, 2.0);
      if (std::all_of(lambda.begin(), lambda.end(), [&](double y) { return std::abs(x - y) > 0.05; }))
        lambda.push_back(x);
    }
    for (std::size_t i = 0; i < d; ++i) b.push_back(gen::uniform_real(rng, -2.0, 2.0));
    double formula = vandermonde_check(b, lambda);
    double direct = scaled_vandermonde(b, lambda).determinant();
    double rel = std::abs(formula - direct) / std::max(std::abs(formula), std::numeric_limits<double>::min());
    tally.check(rel <= 1e-9, d, [&] {
      return "d=" + std::to_string(d) + " formula " + std::to_string(formula) + " direct " + std::to_string(direct);
    });
  });
}

/// Every leaf of flatten(tau(l)) is the leaf of l that u points to.
inline SuiteResult reindex(std::uint64_t seed, std::size_t n, bool mutant) {
  return run_cases("reindex", seed, n, [mutant](gen::Rng& rng, Tally& tally) {
    Signature sig = gen::random_signature(rng);
    auto pool = gen::variable_pool(3);
    Term l = flatten(gen::random_compound(rng, sig, pool, 3, 1.0));
    std::set<Variable> lv = vars(l);
    std::vector<Variable> lvars(lv.begin(), lv.end());
    Substitution tau;
    for (const auto& v : lvars) tau.bind(v, gen::random_term(rng, sig, lvars, 2, 1.0));
    Term rf = flatten(apply_substitution(tau, l));
    ReindexMap map = variable_reindexing(l, rf, tau);
    auto lhat = lift(l).leaves;
    auto rhat = lift(rf).leaves;
    if (mutant) {
      for (std::size_t i = 0; i + 1 < map.u.size(); ++i)
        if (rhat[i] != rhat[i + 1]) {
          std::swap(map.u[i], map.u[i + 1]);
          break;
        }
    }
    bool ok = map.u.size() == rhat.size() && map.images.size() == lhat.size();
    for (std::size_t i = 0; ok && i < map.u.size(); ++i) ok = rhat[i] == lhat[map.u[i] - 1];
    for (std::size_t j = 0; ok && j < lhat.size(); ++j) ok = map.images[j] == apply_substitution(tau, lhat[j]);
    tally.check(ok, rf.tree_size(), [&] {
      std::string u;
      for (auto x : map.u) u += (u.empty() ? "" : ",") + std::to_string(x);
      return "l=" + print_term(l) + " r'=" + print_term(rf) + " u=(" + u + ")";
    });
  });
}

/// Mutations of a model text: byte edits and token-level damage.
inline std::string mutate(gen::Rng& rng, std::string text) {
  static const std::vector<std::string> noise{"(", ")", "{", "}", "[", "]", ",", "=>", "@", "/", "=", "-",
                                              "iota", "rule", "system", "proj(", "0", "99999999999999999999",
                                              "\xff", "#", "\n", "e", "2.0.1", "affine(", "dim"};
  std::size_t edits = gen::uniform(rng, 1, 4);
  for (std::size_t k = 0; k < edits && !text.empty(); ++k) {
    std::size_t at = gen::uniform(rng, 0, text.size() - 1);
    switch (gen::uniform(rng, 0, 4)) {
      case 0: text.erase(at, gen::uniform(rng, 1, 6)); break;
      case 1: text.insert(at, gen::pick(rng, noise)); break;
      case 2: text[at] = static_cast<char>(gen::uniform(rng, 32, 126)); break;
      case 3: {
        std::size_t len = std::min<std::size_t>(gen::uniform(rng, 1, 12), text.size() - at);
        text.insert(gen::uniform(rng, 0, text.size()), text.substr(at, len));
        break;
      }
      default: text.resize(at); break;
    }
  }
  return text;
}

/// Seed corpus for fuzzing: a root model, a non-root model and a system.
inline std::vector<std::string> fuzz_seeds() {
  return {
      "carrier rational\nsignature { a1/0, a2/0, s0/2, s1/2, s2/2 }\nvariables { v1, v2 }\n"
      "rule s0(v1,v2) => s0(s1(v1,v2),s2(v1,v2)) @ e\n"
      "algebra {\n  a1 = 1\n  a2 = 0\n  s0 = proj(1)\n  s1 = add(proj(1),proj(2))\n  s2 = proj(1)\n}\n"
      "initial s0(a1,a2)\n",
      "carrier rational\nsignature { a/0, b/0, c/0, h/2, s0/2 }\nvariables { x, y }\n"
      "rule s0(x,y) => s0(y,s0(x,y)) @ 2\nalgebra { a = 1 b = 2 c = 3 h = sub(proj(1),proj(2)) "
      "s0 = affine([[1,1/2]],[1]) }\ninitial h(a,s0(b,c))\n",
      "carrier float\nsystem {\n  dim 2\n  transition {\n    tanh(add(proj(1),proj(2)))\n    proj(1)\n  }\n"
      "  output proj(1)\n  state [0.5, -1]\n}\n",
      "carrier float\nsystem {\n  mpnn {\n    vertices 3\n    hidden 1\n    edge 1-2\n    edge 2-3\n"
      "    message proj(2)\n    update add(proj(1),proj(2))\n    readout add(proj(1),proj(2),proj(3))\n  }\n"
      "  state [1, 0, 0]\n}\n",
  };
}

/// Term round-trips, model round-trips and a mutation fuzz over the parser.
inline SuiteResult dsl_suite(std::uint64_t seed, std::size_t n) {
  auto start = std::chrono::steady_clock::now();
  gen::Rng rng(suite_seed(seed, "dsl"));
  Tally tally("dsl");
  for (std::size_t i = 0; i < n; ++i) {
    gen::SignatureShape shape;
    shape.constants = gen::uniform(rng, 1, 4);
    shape.operators = gen::uniform(rng, 1, 5);
    shape.max_arity = gen::uniform(rng, 1, 4);
    Signature sig = gen::random_signature(rng, shape);
    auto pool = gen::variable_pool(3);
    Term t = gen::random_term(rng, sig, pool, gen::uniform(rng, 0, 5));
    if (gen::coin(rng, 0.2)) t = flatten(t);
    std::string text = print_term(t);
    try {
      Term back = parse_term(text, sig, std::set<Variable>(pool.begin(), pool.end()));
      tally.check(back == t && print_term(back) == text, t.tree_size(), [&] { return "term " + text; });
    } catch (const std::exception& e) {
      tally.fail(t.tree_size(), "term " + text + " failed to parse: " + e.what());
    }
  }
  // Printed models must reparse to the same document.
  for (std::size_t i = 0; i < std::max<std::size_t>(n / 100, 1); ++i) {
    ModelSpec spec = gen::random_iterable_model(rng);
    ModelFile f = model_file(spec, CarrierKind::rational);
    std::string text = print_model(f);
    auto back = parse_model(text);
    tally.check(back.ok() && print_model(back.file) == text && back.file.rule->lhs() == spec.rule->lhs() &&
                    back.file.initial == spec.initial,
                text.size(), [&] { return "model did not round-trip:\n" + text + back.report(); });
  }
  // Mutated files: diagnostics, never a crash.
  auto seeds = fuzz_seeds();
  for (std::size_t i = 0; i < std::max<std::size_t>(n / 10, 1); ++i) {
    std::string text = mutate(rng, gen::pick(rng, seeds));
    try {
      auto res = parse_model(text);
      bool positioned = std::all_of(res.diagnostics.begin(), res.diagnostics.end(),
                                    [](const Diagnostic& d) { return d.line >= 1 && d.column >= 1; });
      tally.check(positioned, text.size(), [&] { return "unpositioned diagnostic for:\n" + text; });
    } catch (const std::exception& e) {
      tally.fail(text.size(), std::string("parser threw ") + e.what() + " on:\n" + text);
    }
  }
  return tally.finish(start);
}

// ---------------------------------------------------------------------------

struct Suite {
  std::string name;
  std::size_t default_cases;
  std::function<SuiteResult(const CheckConfig&, std::size_t)> run;
};

inline const std::vector<Suite>& suites() {
  static const std::vector<Suite> all{
      {"term_core", 10000, [](const CheckConfig& c, std::size_t n) { return term_core(c.seed, n); }},
      {"rewrite", 10000, [](const CheckConfig& c, std::size_t n) { return rewrite(c.seed, n); }},
      {"iteration", 500, [](const CheckConfig& c, std::size_t n) { return iteration(c.seed, n); }},
      {"flatten", 1000, [](const CheckConfig& c, std::size_t n) { return flatten_preservation(c.seed, n); }},
      {"projection", 200, [](const CheckConfig& c, std::size_t n) { return projection(c.seed, n); }},
      {"roundtrip", 200, [](const CheckConfig& c, std::size_t n) { return roundtrip(c.seed, n); }},
      {"vandermonde", 1000, [](const CheckConfig& c, std::size_t n) { return vandermonde(c.seed, n); }},
      {"reindex", 1000, [](const CheckConfig& c, std::size_t n) { return reindex(c.seed, n, c.inject_mutant); }},
      {"dsl", 10000, [](const CheckConfig& c, std::size_t n) { return dsl_suite(c.seed, n); }},
  };
  return all;
}

inline const Suite* find_suite(std::string_view name) {
  for (const auto& s : suites())
    if (s.name == name) return &s;
  return nullptr;
}

inline SuiteResult run_suite(const Suite& s, const CheckConfig& cfg) {
  return s.run(cfg, cfg.cases.value_or(s.default_cases));
}

}  // namespace rwd::checks
