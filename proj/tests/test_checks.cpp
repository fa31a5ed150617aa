#include <gtest/gtest.h>

#include "rwd/checks.hpp"

using namespace rwd;

TEST(Registry, NamesAndDefaults) {
  std::vector<std::string> names;
  for (const auto& s : checks::suites()) names.push_back(s.name);
  EXPECT_EQ(names, (std::vector<std::string>{"term_core", "rewrite", "iteration", "flatten", "projection", "roundtrip",
                                             "vandermonde", "reindex", "dsl"}));
  ASSERT_NE(checks::find_suite("projection"), nullptr);
  EXPECT_GE(checks::find_suite("projection")->default_cases, 200u);
  EXPECT_GE(checks::find_suite("rewrite")->default_cases, 10000u);
  EXPECT_EQ(checks::find_suite("nope"), nullptr);
}

TEST(Registry, EverySuitePassesOnSmallRuns) {
  checks::CheckConfig cfg;
  cfg.cases = 25;
  for (const auto& s : checks::suites()) {
    auto r = checks::run_suite(s, cfg);
    EXPECT_TRUE(r.ok()) << s.name << ": " << r.counterexample.value_or("");
    EXPECT_GE(r.cases, 25u) << s.name;
  }
}

TEST(Registry, SameSeedSameOutcome) {
  for (auto seed : {1ull, 77ull}) {
    auto a = checks::rewrite(seed, 300);
    auto b = checks::rewrite(seed, 300);
    EXPECT_EQ(a.cases, b.cases);
    EXPECT_EQ(a.laws, b.laws);
  }
  auto x = checks::reindex(5, 300, true);
  auto y = checks::reindex(5, 300, true);
  EXPECT_EQ(x.passed, y.passed);
  EXPECT_EQ(x.counterexample, y.counterexample);
}

TEST(Registry, RewriteLawCounts) {
  auto r = checks::rewrite(gen::default_seed, 10000);
  EXPECT_TRUE(r.ok()) << r.counterexample.value_or("");
  EXPECT_GE(r.laws["surjective"], 10000u);
  EXPECT_GE(r.laws["injective"], 10000u);
}

TEST(Mutant, ReindexSuiteFailsWithSmallCounterexample) {
  checks::CheckConfig cfg;
  cfg.cases = 200;
  cfg.inject_mutant = true;
  auto r = checks::run_suite(*checks::find_suite("reindex"), cfg);
  EXPECT_FALSE(r.ok());
  ASSERT_TRUE(r.counterexample);
  EXPECT_NE(r.counterexample->find("u=("), std::string::npos) << *r.counterexample;
  EXPECT_LT(r.passed, r.cases);
}

TEST(Tally, KeepsTheSmallestCounterexample) {
  checks::Tally t("demo");
  t.pass();
  t.fail(9, "nine");
  t.fail(3, "three");
  t.fail(5, "five");
  auto r = t.finish(std::chrono::steady_clock::now());
  EXPECT_EQ(r.cases, 4u);
  EXPECT_EQ(r.passed, 1u);
  EXPECT_EQ(r.counterexample, "three");
  EXPECT_FALSE(r.ok());
}

TEST(RunCases, ExceptionsAreFailures) {
  auto r = checks::run_cases("throws", 1, 3, [](gen::Rng&, checks::Tally&) { throw Error(ErrorCode::no_match, "boom"); });
  EXPECT_EQ(r.cases, 3u);
  EXPECT_EQ(r.passed, 0u);
  EXPECT_NE(r.counterexample->find("boom"), std::string::npos);
}

TEST(Mutate, ProducesDifferentTextDeterministically) {
  gen::Rng a(3), b(3);
  auto seed = checks::fuzz_seeds().front();
  int changed = 0;
  for (int i = 0; i < 100; ++i) {
    auto x = checks::mutate(a, seed);
    EXPECT_EQ(x, checks::mutate(b, seed));
    changed += x != seed;
  }
  EXPECT_GT(changed, 90);
}
