#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rwd/checks.hpp"
#include "rwd/correspondence.hpp"
#include "rwd/dsl.hpp"
#include "rwd/random.hpp"

using namespace rwd;

namespace {

std::vector<Rational> R(std::initializer_list<long> xs) {
  std::vector<Rational> out;
  for (long x : xs) out.emplace_back(x);
  return out;
}

SystemSpec fibonacci_system() { return recurrence_system(parse_expr("add(proj(1),proj(2))"), 2); }

Signature plus_sig() {
  Signature s;
  s.add({"one", 0});
  s.add({"z", 0});
  s.add({"plus", 2});
  return s;
}

SigmaAlgebra<Rational> plus_alg() {
  SigmaAlgebra<Rational> alg(plus_sig());
  alg.interpret("one", Expr::literal(1));
  alg.interpret("z", Expr::literal(10));
  alg.interpret("plus", Expr::add({Expr::proj(1), Expr::proj(2)}));
  return alg;
}

}  // namespace

TEST(Embed, FibonacciEndToEnd) {
  auto spec = embed(fibonacci_system(), R({1, 1}));
  auto m = instantiate_model<Rational>(spec);
  auto got = model_outputs(m, 8);
  auto fib = oracle::fibonacci(10);
  // The recurrence state starts at (s_1, s_0) = (1, 1), so outputs begin at s_1.
  for (std::size_t k = 0; k <= 8; ++k) EXPECT_EQ(got[k], Rational(fib[k + 1]));

  auto s11 = R({1, 1});
  EXPECT_EQ(hidden_step(m, std::span<const Rational>(s11)), R({2, 1}));
  auto proj = project(m);
  EXPECT_EQ(proj.system.dim, 2u);
  EXPECT_EQ(proj.outputs(8), got);
}

TEST(Embed, FibonacciFromTheFirstTerm) {
  // State (s_0, s_{-1}) = (1, 0) emits s_0 = 1, then 1, 2, 3, ..., 55.
  auto m = instantiate_model<Rational>(embed(fibonacci_system(), R({1, 0})));
  auto fib = oracle::fibonacci(10);
  auto got = model_outputs(m, 9);
  for (std::size_t k = 0; k <= 9; ++k) EXPECT_EQ(got[k], Rational(fib[k]));
  EXPECT_EQ(got.back(), Rational(55));
}

TEST(Embed, ShapeOfTheConstruction) {
  auto spec = embed(fibonacci_system(), R({1, 0}));
  EXPECT_EQ(print_term(spec.rule->lhs()), "s0(v1,v2)");
  EXPECT_EQ(print_term(spec.rule->rhs()), "s0(s1(v1,v2),s2(v1,v2))");
  EXPECT_TRUE(spec.rule->position.is_root());
  EXPECT_EQ(print_term(spec.initial), "s0(a1,a2)");
  EXPECT_TRUE(spec.signature.has_identity());
  EXPECT_EQ(print_expr(spec.algebra.interp.at("a2")), "0");
}

TEST(Embed, OneDimensionalIdentity) {
  SystemSpec sys;
  sys.dim = 1;
  sys.transition = {Expr::proj(1)};
  sys.output = Expr::proj(1);
  auto m = instantiate_model<Rational>(embed(sys, {Rational(3, 4)}));
  for (const auto& y : model_outputs(m, 6)) EXPECT_EQ(y, Rational(3, 4));
}

TEST(Embed, RandomThreeDimensionalLinearSystems) {
  gen::Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    gen::LinearSystemCase c;
    do c = gen::random_linear_system(rng, 3);
    while (c.a.size() != 3);
    auto m = instantiate_model<Rational>(embed(c.spec, c.x0));
    ASSERT_EQ(model_outputs(m, 20), oracle::linear_outputs(c.a, c.b, c.x0, 20));
    ASSERT_EQ(project(m).system.dim, 3u);
  }
}

TEST(Embed, NumericSystemNeedsSymbolicForm) {
  auto bare = linear_system<Rational>({R({1})}, R({1}));
  EXPECT_THROW(embed(bare, R({1})), Error);
  auto sym = instantiate_system<Rational>(fibonacci_system());
  EXPECT_EQ(model_outputs(embed(sym, R({1, 1})), 3), R({1, 2, 3, 5}));
  EXPECT_THROW(embed(fibonacci_system(), R({1})), Error);
}

TEST(SubstituteIntoContext, CaseSplit) {
  Signature sig;
  for (auto c : {"a", "b", "c"}) sig.add({c, 0});
  sig.add({"f", 2});
  auto T = [&](std::string_view s) { return parse_term(s, sig, {}); };
  EXPECT_EQ(substitute_into_context(T("f(a,b)"), T("c"), Position::root()), T("c"));
  EXPECT_EQ(substitute_into_context(T("f(a,b)"), T("c"), Position({2})), T("f(a,c)"));
  EXPECT_EQ(substitute_into_context(T("f(a,b)"), T("c"), Position({3})), T("c"));
  EXPECT_EQ(substitute_into_context(T("f(a,b)"), T("c"), Position({1, 1})), T("c"));
}

TEST(ContextFunction, Examples) {
  auto alg = plus_alg();
  auto T = [](std::string_view s) { return parse_term(s, plus_sig(), {}); };
  auto id = context_function(alg, T("plus(one,one)"), Position::root());
  EXPECT_EQ(id(Rational(7)), Rational(7));

  auto one_plus = context_function(alg, T("plus(one,one)"), Position({2}));
  for (long x : {-3, 0, 5}) EXPECT_EQ(one_plus(Rational(x)), Rational(1 + x));

  // (1 + x) + cata(z)
  auto nested = context_function(alg, T("plus(plus(one,one),z)"), Position({1, 2}));
  for (long x : {-3, 0, 5}) EXPECT_EQ(nested(Rational(x)), Rational(1 + x + 10));

  EXPECT_THROW(context_function(alg, T("plus(one,one)"), Position({3})), Error);
}

TEST(ContextFunction, ConjugatesCatamorphism) {
  gen::Rng rng(32);
  for (int i = 0; i < 1000; ++i) {
    Signature sig = gen::random_signature(rng);
    auto alg = instantiate_algebra<Rational>(sig, gen::random_linear_algebra(rng, sig));
    Term t = gen::random_ground_term(rng, sig, 4);
    Position p = gen::pick(rng, positions(t));
    Term s = gen::random_ground_term(rng, sig, 3);
    ASSERT_EQ(context_function(alg, t, p)(catamorphism(alg, s)), catamorphism(alg, substitute_into_context(t, s, p)));
  }
}

TEST(Project, NonRootPosition) {
  Signature sig;
  for (auto c : {"a", "b", "c"}) sig.add({c, 0});
  sig.add({"h", 2});
  sig.add({"s0", 2});
  sig.add({"s1", 2});
  sig.add({"s2", 2});
  std::set<Variable> vs{{"v1"}, {"v2"}};
  auto T = [&](std::string_view s) { return parse_term(s, sig, vs); };
  SigmaAlgebra<Rational> alg(sig);
  alg.interpret("a", parse_expr("3"));
  alg.interpret("b", parse_expr("1"));
  alg.interpret("c", parse_expr("-1/2"));
  alg.interpret("h", parse_expr("sub(mul(2,proj(2)),proj(1))"));
  alg.interpret("s0", parse_expr("add(proj(1),mul(3,proj(2)))"));
  alg.interpret("s1", parse_expr("sub(proj(1),proj(2))"));
  alg.interpret("s2", parse_expr("add(proj(1),1/3)"));
  RewriteRule rule{Identity(T("s0(v1,v2)"), T("s0(s1(v1,v2),s2(v2,v1))")), Position({2})};
  RewritingModel<Rational> m(rule, alg, T("h(a,s0(b,c))"));
  auto p = project(m, {.check_repeated_variables = true});
  EXPECT_EQ(p.system.dim, 2u);
  EXPECT_EQ(p.x0, (std::vector<Rational>{1, Rational(-1, 2)}));
  EXPECT_EQ(p.outputs(10), model_outputs(m, 10));
  // alpha at position 2 of h(a, _) is x -> 2x - 3
  EXPECT_EQ(p.context(Rational(5)), Rational(7));

  // The rewritten subterm put back into t0 gives the full iterate.
  RewriteStream stream(m.rule(), m.initial());
  for (int n = 0; n < 6; ++n) {
    Term at_p = subterm_at(stream.current(), m.rule().position);
    EXPECT_EQ(substitute_into_context(m.initial(), at_p, m.rule().position), stream.current());
    stream.advance();
  }
}

TEST(Project, RootContextIsIdentityAndTermCarrierIsTheIterate) {
  Signature sig;
  for (auto c : {"a", "b"}) sig.add({c, 0});
  sig.add({"p", 2});
  std::set<Variable> vs{{"x"}, {"y"}};
  auto T = [&](std::string_view s) { return parse_term(s, sig, vs); };
  RewriteRule rule{Identity(T("p(x,y)"), T("p(y,p(x,y))")), Position::root()};
  RewritingModel<Term> m(rule, term_algebra(sig), T("p(a,b)"));
  auto its = iterate(rule, T("p(a,b)"), 4);
  for (std::size_t n = 0; n <= 4; ++n) EXPECT_EQ(model_output(m, n), its[n]);
  auto proj = project(m);
  EXPECT_EQ(proj.system.dim, 2u);
  EXPECT_EQ(proj.context(T("a")), T("a"));
  EXPECT_EQ(proj.outputs(4), std::vector<Term>(its.begin(), its.end()));
}

TEST(Project, RepeatedVariablesAndFlattening) {
  // l = f(x, g(x, y)) has leaves at different depths; x repeats.
  Signature sig;
  sig.add({"a", 0});
  sig.add({"b", 0});
  sig.add({"f", 2});
  sig.add({"g", 2});
  std::set<Variable> vs{{"x"}, {"y"}};
  auto T = [&](std::string_view s) { return parse_term(s, sig, vs); };
  SigmaAlgebra<Rational> alg(sig);
  alg.interpret("a", parse_expr("2"));
  alg.interpret("b", parse_expr("-1"));
  alg.interpret("f", parse_expr("sub(proj(1),mul(1/2,proj(2)))"));
  alg.interpret("g", parse_expr("add(proj(1),mul(proj(1),proj(2)))"));
  RewriteRule rule{Identity(T("f(x,g(x,y))"), T("f(g(y,x),g(g(y,x),f(x,y)))")), Position::root()};
  RewritingModel<Rational> m(rule, alg, T("f(g(a,b),g(g(a,b),a))"));
  auto p = project(m, {.check_repeated_variables = true});
  EXPECT_EQ(p.system.dim, 3u);
  EXPECT_EQ(p.outputs(8), model_outputs(m, 8));
}

TEST(Project, RejectsNonIterableRules) {
  Signature sig;
  sig.add({"a", 0});
  sig.add({"f", 2});
  sig.add({"g", 1});
  std::set<Variable> vs{{"x"}, {"y"}};
  auto T = [&](std::string_view s) { return parse_term(s, sig, vs); };
  SigmaAlgebra<Rational> alg(sig);
  alg.interpret("a", parse_expr("1"));
  alg.interpret("f", parse_expr("add(proj(1),proj(2))"));
  alg.interpret("g", parse_expr("proj(1)"));
  try {
    RewritingModel<Rational> m(RewriteRule{Identity(T("f(x,y)"), T("g(x)")), Position::root()}, alg, T("f(a,a)"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_iterable);
  }
}

TEST(ProjectSymbolic, AgreesWithNumericProjection) {
  gen::Rng rng(33);
  for (int i = 0; i < 200; ++i) {
    ModelSpec spec = gen::random_iterable_model(rng);
    auto model = instantiate_model<Rational>(spec);
    auto sym = project_symbolic<Rational>(spec);
    auto sys = instantiate_system<Rational>(sym.system);
    ASSERT_EQ(trajectory(sys, sym.x0, 10).outputs, model_outputs(model, 10)) << print_term(spec.initial);
  }
}

TEST(ProjectSymbolic, RecoversTheEmbeddedSystem) {
  gen::Rng rng(34);
  for (int i = 0; i < 100; ++i) {
    auto c = gen::random_linear_system(rng);
    auto sym = project_symbolic<Rational>(embed(c.spec, c.x0));
    EXPECT_EQ(sym.system.dim, c.a.size());
    EXPECT_EQ(sym.x0, c.x0);
    ASSERT_EQ(trajectory(instantiate_system<Rational>(sym.system), sym.x0, 30).outputs,
              oracle::linear_outputs(c.a, c.b, c.x0, 30));
  }
}

TEST(Suites, ProjectionAndRoundTrip) {
  auto p = checks::projection(gen::default_seed, 200);
  EXPECT_TRUE(p.ok()) << p.counterexample.value_or("");
  EXPECT_EQ(p.cases, 200u);
  auto r = checks::roundtrip(gen::default_seed, 200);
  EXPECT_TRUE(r.ok()) << r.counterexample.value_or("");
}
