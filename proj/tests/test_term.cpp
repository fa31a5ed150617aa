#include <gtest/gtest.h>

#include "rwd/dsl.hpp"
#include "rwd/random.hpp"
#include "rwd/term.hpp"

using namespace rwd;

namespace {

Signature sig_fgh() {
  Signature s;
  for (auto c : {"a", "b", "c", "d"}) s.add({c, 0});
  s.add({"f", 2});
  s.add({"g", 1});
  s.add({"h", 2});
  return s;
}

Term T(std::string_view src) {
  static const Signature sig = sig_fgh();
  static const std::set<Variable> vs{{"x"}, {"y"}, {"z"}, {"x2"}, {"y2"}};
  return parse_term(src, sig, vs);
}

Term X(std::string n) { return Term::variable(std::move(n)); }

}  // namespace

TEST(Signature, RejectsOverloadsAndBadIota) {
  Signature s;
  s.add({"f", 2});
  EXPECT_THROW(s.add({"f", 1}), Error);
  EXPECT_THROW(s.add({"f", 2}), Error);
  EXPECT_THROW(s.add({"iota", 2}), Error);
  EXPECT_THROW(s.add({"", 0}), Error);
  s.add({"iota", 1});
  EXPECT_TRUE(s.has_identity());
  EXPECT_EQ(s.with_identity().size(), s.size());
}

TEST(Position, RenderingAndOrder) {
  EXPECT_EQ(Position::root().to_string(), "e");
  EXPECT_EQ(Position({2, 1}).to_string(), "2.1");
  EXPECT_EQ(Position({12, 3}).to_string(), "12.3");
  EXPECT_EQ(Position::root().child(2).child(1), Position({2, 1}));
  EXPECT_EQ(Position({1}).prefixed(2), Position({2, 1}));
}

TEST(Term, MeasuresOnSmallCases) {
  EXPECT_EQ(T("f(x,g(y))").depth(), 2u);
  EXPECT_EQ(T("f(x,g(y))").leaf_count(), 2u);
  EXPECT_EQ(T("a").depth(), 0u);
  EXPECT_EQ(T("a").leaf_count(), 1u);
  EXPECT_EQ(T("f(f(a,b),f(c,d))").leaf_count(), 4u);
  EXPECT_TRUE(T("f(a,g(b))").ground());
  EXPECT_FALSE(T("f(a,g(x))").ground());
}

TEST(Term, PositionsArePreorder) {
  auto ps = positions(T("f(g(a),b)"));
  std::vector<std::string> got;
  for (const auto& p : ps) got.push_back(p.to_string());
  EXPECT_EQ(got, (std::vector<std::string>{"e", "1", "1.1", "2"}));
}

TEST(Term, SubtermAndReplace) {
  Term t = T("f(a,f(g(b),f(c,d)))");
  EXPECT_EQ(subterm_at(t, Position({2, 1})), T("g(b)"));
  EXPECT_EQ(subterm_at(t, Position::root()), t);
  EXPECT_THROW(subterm_at(t, Position({3})), Error);
  EXPECT_THROW(subterm_at(t, Position({1, 1})), Error);
  EXPECT_EQ(replace_at(t, T("c"), Position({2, 1})), T("f(a,f(c,f(c,d)))"));
  EXPECT_EQ(replace_at(t, T("c"), Position::root()), T("c"));
  try {
    subterm_at(t, Position({2, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_position);
  }
}

TEST(Term, ReplaceSharesUntouchedSubtrees) {
  Term t = T("f(f(a,b),f(c,d))");
  Term u = replace_at(t, T("a"), Position({2, 2}));
  EXPECT_EQ(u.child(1).id(), t.child(1).id());
}

TEST(Substitution, HomomorphicExtension) {
  Substitution s;
  s.bind({"x"}, T("a"));
  s.bind({"y"}, T("g(b)"));
  EXPECT_EQ(apply_substitution(s, T("f(x,y)")), T("f(a,g(b))"));
  EXPECT_EQ(apply_substitution(Substitution{}, T("f(x,y)")), T("f(x,y)"));

  Substitution s2;
  s2.bind({"x"}, T("f(x2,y2)"));
  EXPECT_EQ(apply_substitution(s2, T("h(x,x)")), T("h(f(x2,y2),f(x2,y2))"));
}

TEST(Substitution, ComposeAppliesFirstThenSecond) {
  Substitution first, then;
  first.bind({"x"}, T("g(y)"));
  then.bind({"y"}, T("a"));
  Substitution both = compose(first, then);
  Term t = T("f(x,y)");
  EXPECT_EQ(apply_substitution(both, t), apply_substitution(then, apply_substitution(first, t)));
}

TEST(Match, ExamplesAndFailures) {
  auto m = match(T("f(x,y)"), T("f(a,g(b))"));
  ASSERT_TRUE(m);
  EXPECT_EQ(apply_substitution(*m, T("f(x,y)")), T("f(a,g(b))"));
  EXPECT_EQ(m->size(), 2u);

  EXPECT_FALSE(match(T("f(x,x)"), T("f(a,b)")));
  EXPECT_TRUE(match(T("f(x,x)"), T("f(g(a),g(a))")));
  EXPECT_FALSE(match(T("f(x,y)"), T("h(a,b)")));

  auto any = match(X("x"), T("f(a,g(c))"));
  ASSERT_TRUE(any);
  EXPECT_EQ(*any->find("x"), T("f(a,g(c))"));
}

TEST(Match, SoundAndCompleteOnGeneratedInstances) {
  gen::Rng rng(7);
  auto pool = gen::variable_pool(3);
  for (int i = 0; i < 10000; ++i) {
    Signature sig = gen::random_signature(rng);
    Term l = gen::random_term(rng, sig, pool, 4);
    Substitution sigma = gen::random_ground_substitution(rng, sig, vars(l), 3);
    Term t = apply_substitution(sigma, l);
    auto m = match(l, t);
    ASSERT_TRUE(m) << print_term(l) << " vs " << print_term(t);
    ASSERT_EQ(apply_substitution(*m, l), t);
    ASSERT_EQ(m->size(), vars(l).size());
  }
}

TEST(Term, MeasuresMatchBruteForce) {
  gen::Rng rng(11);
  auto pool = gen::variable_pool(2);
  for (int i = 0; i < 2000; ++i) {
    Signature sig = gen::random_signature(rng);
    Term t = gen::random_term(rng, sig, pool, 5);
    std::size_t depth = 0, leaves = 0;
    for (const auto& p : positions(t)) {
      depth = std::max(depth, p.length());
      if (subterm_at(t, p).is_leaf()) ++leaves;
    }
    ASSERT_EQ(depth, t.depth());
    ASSERT_EQ(leaves, t.leaf_count());
  }
}

TEST(Term, DeepChainsDoNotOverflowTheStack) {
  Term t = T("a");
  for (int i = 0; i < 200000; ++i) t = Term::apply("g", {t});
  EXPECT_EQ(t.depth(), 200000u);
  Substitution s;
  EXPECT_EQ(apply_substitution(s, t), t);
  EXPECT_TRUE(match(t, t));
  // Positions store their whole path, so enumerating them is quadratic in depth.
  Term shallow = T("a");
  for (int i = 0; i < 2000; ++i) shallow = Term::apply("g", {shallow});
  EXPECT_EQ(positions(shallow).size(), 2001u);
}

TEST(Term, SharedDagHasSaturatingCounts) {
  Term t = T("a");
  for (int i = 0; i < 100; ++i) t = Term::apply("f", {t, t});
  EXPECT_EQ(t.depth(), 100u);
  EXPECT_EQ(t.leaf_count(), std::numeric_limits<std::uint64_t>::max());
  Term u = T("a");
  for (int i = 0; i < 100; ++i) u = Term::apply("f", {u, u});
  EXPECT_EQ(t, u);
}

TEST(Term, CheckAgainstSignature) {
  Signature sig = sig_fgh();
  EXPECT_NO_THROW(check_term(T("f(a,g(x))"), sig));
  EXPECT_THROW(check_term(Term::apply("f", {T("a")}), sig), Error);
  EXPECT_THROW(check_term(Term::constant("q"), sig), Error);
}
