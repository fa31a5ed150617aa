#include <gtest/gtest.h>

#include "rwd/checks.hpp"
#include "rwd/dsl.hpp"
#include "rwd/rewrite.hpp"

using namespace rwd;

namespace {

const Signature& sig() {
  static const Signature s = [] {
    Signature s;
    for (auto c : {"a", "b", "c", "d", "t1", "t2", "t3", "t4"}) s.add({c, 0});
    for (auto f : {"f", "p", "h", "g1", "g2"}) s.add({f, 2});
    s.add({"g", 1});
    return s;
  }();
  return s;
}

Term T(std::string_view src) {
  static const std::set<Variable> vs{{"x"}, {"y"}, {"z"}, {"x1"}, {"x2"}};
  return parse_term(src, sig(), vs);
}

RewriteRule rule(std::string_view l, std::string_view r, Position p = Position::root()) {
  return RewriteRule{Identity(T(l), T(r)), std::move(p)};
}

}  // namespace

TEST(Identity, Invariants) {
  EXPECT_THROW(Identity(T("f(x,y)"), T("f(x,z)")), Error);
  EXPECT_THROW(Identity(T("x"), T("x")), Error);
  EXPECT_NO_THROW(Identity(T("f(x,y)"), T("g(x)")));
}

TEST(InstanceAt, Examples) {
  EXPECT_TRUE(instance_at(T("p(a,p(b,c))"), T("p(x,y)"), Position::root()));
  EXPECT_TRUE(instance_at(T("p(t1,p(p(t2,t3),t4))"), T("p(x,y)"), Position({2, 1})));
  EXPECT_FALSE(instance_at(T("a"), T("f(x,y)"), Position::root()));
  EXPECT_FALSE(instance_at(T("a"), T("f(x,y)"), Position({1})));
}

TEST(RewriteAt, AssociativityExamples) {
  auto at_root = rule("f(x,f(y,z))", "f(f(x,y),z)");
  Term t = T("f(a,f(g(b),f(c,d)))");
  EXPECT_EQ(rewrite_at(at_root, t), T("f(f(a,g(b)),f(c,d))"));
  auto at_two = rule("f(x,f(y,z))", "f(f(x,y),z)", Position({2}));
  EXPECT_EQ(rewrite_at(at_two, t), T("f(a,f(f(g(b),c),d))"));
}

TEST(RewriteAt, PairExampleAtDeepPosition) {
  auto r = rule("p(x,y)", "p(y,p(x,y))", Position({2, 1}));
  EXPECT_EQ(rewrite_at(r, T("p(t1,p(p(t2,t3),t4))")), T("p(t1,p(p(t3,p(t2,t3)),t4))"));
}

TEST(RewriteAt, NoMatchNamesThePosition) {
  auto r = rule("f(x,f(y,z))", "f(f(x,y),z)", Position({2}));
  try {
    rewrite_at(r, T("f(a,b)"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_match);
    EXPECT_NE(std::string(e.what()).find("position 2"), std::string::npos) << e.what();
  }
}

TEST(Iterability, Witnesses) {
  auto tau = iterability_witness(Identity(T("p(x,y)"), T("p(y,p(x,y))")));
  ASSERT_TRUE(tau);
  EXPECT_EQ(*tau->find("x"), T("y"));
  EXPECT_EQ(*tau->find("y"), T("p(x,y)"));
  EXPECT_FALSE(iterability_witness(Identity(T("f(x,y)"), T("g(x)"))));
  auto id = iterability_witness(Identity(T("f(x,y)"), T("f(x,y)")));
  ASSERT_TRUE(id);
  EXPECT_EQ(apply_substitution(*id, T("f(x,y)")), T("f(x,y)"));
}

TEST(Iterate, PairRule) {
  auto its = iterate(rule("p(x,y)", "p(y,p(x,y))"), T("p(a,b)"), 2);
  ASSERT_EQ(its.size(), 3u);
  EXPECT_EQ(its[1], T("p(b,p(a,b))"));
  EXPECT_EQ(its[2], T("p(p(a,b),p(b,p(a,b)))"));
  EXPECT_EQ(iterate(rule("p(x,y)", "p(y,p(x,y))"), T("p(a,b)"), 0), std::vector<Term>{T("p(a,b)")});
}

TEST(Iterate, RequiresWitness) {
  try {
    iterate(rule("f(x,f(y,z))", "f(f(x,y),z)"), T("f(a,f(b,c))"), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_iterable);
  }
}

TEST(RewriteStream, FollowsNonIterableRulesUntilStuck) {
  RewriteStream s(rule("f(x,f(y,z))", "f(f(x,y),z)"), T("f(a,f(g(b),f(c,d)))"));
  s.advance();
  EXPECT_EQ(s.current(), T("f(f(a,g(b)),f(c,d))"));
  s.advance();
  EXPECT_EQ(s.current(), T("f(f(f(a,g(b)),c),d)"));
  EXPECT_THROW(s.advance(), Error);
  EXPECT_EQ(s.step(), 2u);
}

TEST(Collision, NonInjectiveWhenRhsDropsVariables) {
  auto r = rule("f(x,y)", "g(x)");
  // R(f(x,y)) = R(f(x,x)) = g(x).
  EXPECT_EQ(rewrite_at(r, T("f(x,y)")), T("g(x)"));
  EXPECT_EQ(rewrite_at(r, T("f(x,x)")), T("g(x)"));
  EXPECT_NE(T("f(x,y)"), T("f(x,x)"));
}

TEST(Flatness, Predicates) {
  EXPECT_FALSE(is_flat(T("f(x,p(y,z))")));
  EXPECT_TRUE(is_flat(T("f(p(x,y),h(z,x))")));
  EXPECT_TRUE(is_flat(T("x")));
  EXPECT_TRUE(is_flat(T("f(a,p(y,z))")));
  EXPECT_FALSE(has_uniform_leaf_depth(T("f(a,p(y,z))")));
}

TEST(Flatten, Examples) {
  EXPECT_THROW(flatten(T("f(x,c)"), sig()), Error);
  Signature ext = sig().with_identity();
  EXPECT_EQ(print_term(flatten(T("f(p(f(x,c),y),x)"), ext)), "f(p(f(x,c),iota(y)),iota(iota(x)))");
  EXPECT_EQ(flatten(T("f(p(a,b),p(c,d))"), ext), T("f(p(a,b),p(c,d))"));
  EXPECT_EQ(print_term(flatten(T("f(x,p(y,z))"), ext)), "f(iota(x),p(y,z))");
  EXPECT_EQ(print_term(flatten(T("f(a,p(y,z))"))), "f(iota(a),p(y,z))");
}

TEST(Lift, ExamplesAndErrors) {
  Term flat = flatten(T("f(p(f(x,c),y),x)"));
  LeafTuple lt = lift(flat);
  EXPECT_EQ(lt.leaves, (std::vector<Term>{T("x"), T("c"), T("y"), T("x")}));
  EXPECT_EQ(print_term(lt.skeleton), "f(p(f(#1,#2),iota(#3)),iota(iota(#4)))");
  EXPECT_EQ(assemble(lt), flat);

  LeafTuple single = lift(T("x"));
  EXPECT_EQ(single.leaves, std::vector<Term>{T("x")});
  EXPECT_EQ(lift(T("f(p(a,b),p(c,d))")).leaves, (std::vector<Term>{T("a"), T("b"), T("c"), T("d")}));
  EXPECT_THROW(lift(T("f(x,p(y,z))")), Error);

  LeafTuple swapped = lt;
  swapped.leaves = {T("a"), T("c"), T("b"), T("a")};
  EXPECT_EQ(print_term(assemble(swapped)), "f(p(f(a,c),iota(b)),iota(iota(a)))");

  LeafTuple hole{Term::variable(hole_name(1)), {T("a")}};
  EXPECT_EQ(assemble(hole), T("a"));
  hole.leaves.push_back(T("b"));
  EXPECT_THROW(assemble(hole), Error);
}

TEST(Reindex, Examples) {
  Term l = T("f(x1,x2)");
  Substitution tau;
  tau.bind({"x1"}, T("g1(x1,x2)"));
  tau.bind({"x2"}, T("g2(x1,x2)"));
  Term r = flatten(apply_substitution(tau, l));
  EXPECT_EQ(variable_reindexing(l, r, tau).u, (std::vector<std::size_t>{1, 2, 1, 2}));

  Substitution tau2;
  tau2.bind({"x1"}, T("g1(x1,x2)"));
  Term r2 = flatten(apply_substitution(tau2, l));
  EXPECT_EQ(print_term(r2), "f(g1(x1,x2),iota(x2))");
  EXPECT_EQ(variable_reindexing(l, r2, tau2).u, (std::vector<std::size_t>{1, 2, 2}));

  EXPECT_EQ(variable_reindexing(l, l, Substitution{}).u, (std::vector<std::size_t>{1, 2}));
}

TEST(Reindex, UnmappableConstant) {
  Term l = T("f(x1,x2)");
  Substitution tau;
  tau.bind({"x1"}, T("a"));
  try {
    variable_reindexing(l, flatten(apply_substitution(tau, l)), tau);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unmappable_leaf);
  }
}

TEST(Properties, SeededSuites) {
  for (auto* run : {&checks::rewrite, &checks::term_core}) {
    auto r = (*run)(gen::default_seed, 2000);
    EXPECT_TRUE(r.ok()) << r.name << ": " << r.counterexample.value_or("");
  }
  auto it = checks::iteration(gen::default_seed, 200);
  EXPECT_TRUE(it.ok()) << it.counterexample.value_or("");
  auto rx = checks::reindex(gen::default_seed, 500, false);
  EXPECT_TRUE(rx.ok()) << rx.counterexample.value_or("");
  auto mutant = checks::reindex(gen::default_seed, 500, true);
  EXPECT_FALSE(mutant.ok());
  EXPECT_TRUE(mutant.counterexample.has_value());
}
