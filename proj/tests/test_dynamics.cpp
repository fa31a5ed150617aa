#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rwd/dsl.hpp"
#include "rwd/random.hpp"
#include "rwd/recurrence.hpp"

using namespace rwd;

namespace {

std::vector<Rational> R(std::initializer_list<long> xs) {
  std::vector<Rational> out;
  for (long x : xs) out.emplace_back(x);
  return out;
}

}  // namespace

TEST(Trajectory, FibonacciMatrix) {
  auto sys = instantiate_system<Rational>(linear_system_spec({R({1, 1}), R({1, 0})}, R({1, 0})));
  auto t = trajectory(sys, R({1, 1}), 4);
  auto fib = oracle::fibonacci(6);
  ASSERT_EQ(t.outputs.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(t.outputs[k], Rational(fib[k + 1]));
}

TEST(Trajectory, TrivialCases) {
  auto id = instantiate_system<Rational>(linear_system_spec({R({1, 0}), R({0, 1})}, R({2, 3})));
  auto t = trajectory(id, R({1, -1}), 6, true);
  for (const auto& y : t.outputs) EXPECT_EQ(y, Rational(-1));
  EXPECT_EQ(t.hidden.size(), 7u);
  EXPECT_EQ(trajectory(id, R({4, 0}), 0).outputs, R({8}));
  try {
    trajectory(id, R({1}), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
}

TEST(Trajectory, SemigroupProperty) {
  gen::Rng rng(21);
  for (int i = 0; i < 300; ++i) {
    auto c = gen::random_linear_system(rng);
    auto sys = instantiate_system<Rational>(c.spec);
    std::size_t n = gen::uniform(rng, 0, 8), m = gen::uniform(rng, 0, 8);
    auto whole = trajectory(sys, c.x0, n + m);
    auto head = trajectory(sys, c.x0, n, true);
    auto tail = trajectory(sys, head.hidden.back(), m);
    ASSERT_EQ(std::vector<Rational>(whole.outputs.begin() + static_cast<std::ptrdiff_t>(n), whole.outputs.end()),
              tail.outputs);
  }
}

TEST(Trajectory, MatchesMatrixPowers) {
  gen::Rng rng(22);
  for (int i = 0; i < 300; ++i) {
    auto c = gen::random_linear_system(rng);
    ASSERT_EQ(trajectory(instantiate_system<Rational>(c.spec), c.x0, 12).outputs,
              oracle::linear_outputs(c.a, c.b, c.x0, 12));
  }
}

TEST(FromRecurrence, Fibonacci) {
  auto [sys, y0] = from_recurrence<Rational>([](std::span<const Rational> x) { return x[0] + x[1]; }, R({1, 1}));
  EXPECT_EQ(y0, R({1, 1}));
  EXPECT_EQ(trajectory(sys, y0, 4).outputs, R({1, 2, 3, 5, 8}));
}

TEST(FromRecurrence, IdentityAndEmpty) {
  auto [sys, y0] = from_recurrence<Rational>([](std::span<const Rational> x) { return x[0]; }, R({7}));
  EXPECT_EQ(trajectory(sys, y0, 3).outputs, R({7, 7, 7, 7}));
  EXPECT_THROW(from_recurrence<Rational>([](std::span<const Rational> x) { return x[0]; }, {}), Error);
}

TEST(FromRecurrence, OrdersStateMostRecentFirst) {
  auto [sys, y0] = from_recurrence<Rational>([](std::span<const Rational> x) { return x[0] - x[2]; }, R({1, 2, 3}));
  EXPECT_EQ(y0, R({3, 2, 1}));
  // s_3 = s_2 - s_0 = 2, s_4 = s_3 - s_1 = 0
  EXPECT_EQ(trajectory(sys, y0, 2).outputs, R({3, 2, 0}));
}

TEST(FromRecurrence, SquaresFromPolynomialConstruction) {
  auto rr = polynomial_recurrence(R({0, 0, 1}));
  EXPECT_EQ(rr.depth, 2u);
  std::vector<Rational> squares;
  for (long n = 0; n <= 8; ++n) squares.emplace_back(n * n);
  EXPECT_EQ(unroll(rr, 8), squares);
  auto [sys, y0] = to_system(rr);
  auto t = trajectory(sys, y0, 7).outputs;
  EXPECT_EQ(t, std::vector<Rational>(squares.begin() + 1, squares.end()));
}

TEST(FromRecurrence, AgreesWithUnrollOnRandomLinearSteps) {
  gen::Rng rng(23);
  for (int i = 0; i < 1000; ++i) {
    std::size_t d = gen::uniform(rng, 1, 5);
    std::vector<Rational> coeffs;
    for (std::size_t j = 0; j <= d; ++j) coeffs.push_back(gen::small_rational(rng, -2, 2) / 2);
    RecurrenceRelation<Rational> rr;
    rr.depth = d;
    rr.step = [coeffs](std::span<const Rational> x) {
      Rational acc = coeffs[0];
      for (std::size_t j = 0; j < x.size(); ++j) acc += coeffs[j + 1] * x[j];
      return acc;
    };
    for (std::size_t j = 0; j < d; ++j) rr.inits.push_back(gen::small_rational(rng));
    const std::size_t n = 15;
    auto direct = unroll(rr, n + d - 1);
    auto [sys, y0] = to_system(rr);
    ASSERT_EQ(trajectory(sys, y0, n).outputs, std::vector<Rational>(direct.begin() + static_cast<std::ptrdiff_t>(d - 1), direct.end()));
  }
}

TEST(RecurrenceSystem, SymbolicFibonacci) {
  auto spec = recurrence_system(parse_expr("add(proj(1),proj(2))"), 2);
  auto t = trajectory(instantiate_system<Rational>(spec), R({1, 1}), 5);
  EXPECT_EQ(t.outputs, R({1, 2, 3, 5, 8, 13}));
  EXPECT_THROW(recurrence_system(parse_expr("proj(1)"), 0), Error);
}

TEST(LinearSystem, IdentityAndCompanion) {
  auto id = linear_system<double>({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {1, 0, 0});
  for (double y : trajectory(id, {2.5, 1, 1}, 5).outputs) EXPECT_EQ(y, 2.5);

  auto comp = linear_system<double>({{0, 1}, {1, 1}}, {1, 0});
  auto fib = oracle::fibonacci(12);
  auto t = trajectory(comp, {1, 1}, 10).outputs;
  for (std::size_t k = 0; k <= 10; ++k) EXPECT_EQ(t[k], static_cast<double>(fib[k]));

  EXPECT_THROW(linear_system<double>({{1, 0}}, {1, 0}), Error);
  EXPECT_THROW(linear_system_spec({R({1, 0}), R({0, 1})}, R({1})), Error);
}

TEST(LinearSystem, RotationSamplesCosine) {
  const double theta = 0.3;
  auto rot = linear_system<double>({{std::cos(theta), -std::sin(theta)}, {std::sin(theta), std::cos(theta)}}, {1, 0});
  auto t = trajectory(rot, {1, 0}, 100).outputs;
  for (std::size_t k = 0; k <= 100; ++k) EXPECT_NEAR(t[k], std::cos(theta * static_cast<double>(k)), 1e-12);
}

TEST(Mpnn, SingleVertexWithoutEdgesIsConstant) {
  Graph g;
  g.vertices = 1;
  MpnnSpec spec;
  spec.hidden = 2;
  spec.message = parse_expr("tuple(proj(3),proj(4))");
  spec.update = parse_expr("tuple(proj(1),proj(2))");
  spec.readout = parse_expr("add(proj(1),proj(2))");
  auto sys = instantiate_system<Rational>(mpnn_system(g, spec));
  EXPECT_EQ(trajectory(sys, R({3, 4}), 5).outputs, R({7, 7, 7, 7, 7, 7}));
}

TEST(Mpnn, TwoVertexPath) {
  Graph g;
  g.vertices = 2;
  g.edges = {{1, 2}};
  g.labels = {{}};
  MpnnSpec spec;
  spec.message = parse_expr("proj(2)");
  spec.update = parse_expr("add(proj(1),proj(2))");
  spec.readout = parse_expr("add(proj(1),proj(2))");
  auto sys = instantiate_system<Rational>(mpnn_system(g, spec));

  // Direct per-vertex simulation.
  Rational h1 = 1, h2 = 0;
  std::vector<Rational> expect;
  for (int t = 0; t <= 6; ++t) {
    expect.push_back(h1 + h2);
    Rational m1 = h2, m2 = h1;
    h1 += m1;
    h2 += m2;
  }
  EXPECT_EQ(trajectory(sys, R({1, 0}), 6).outputs, expect);
  EXPECT_EQ(expect[1], Rational(2));
}

TEST(Mpnn, LinearTriangleMatchesDenseMatrix) {
  Graph g;
  g.vertices = 3;
  g.edges = {{1, 2}, {2, 3}, {1, 3}};
  g.labels = {{Rational(1)}, {Rational(2)}, {Rational(-1)}};
  MpnnSpec spec;
  spec.edge_dim = 1;
  // M(h_v, h_w, e) = h_v/2 - h_w + e/3; U(h, m) = 2h + m; R = h1 - h3
  spec.message = parse_expr("affine([[1/2,-1,1/3]],[0])");
  spec.update = parse_expr("affine([[2,1]],[0])");
  spec.readout = parse_expr("sub(proj(1),proj(3))");
  auto sys = instantiate_system<Rational>(mpnn_system(g, spec));

  // Affine form h' = A h + c with A = 2I + (1/2) D - Adj and c_v = (1/3) sum of incident labels.
  Rational half(1, 2), third(1, 3);
  RationalMatrix a = {{2 + 2 * half, -1, -1}, {-1, 2 + 2 * half, -1}, {-1, -1, 2 + 2 * half}};
  std::vector<Rational> c = {third * 0, third * 3, third * 1};
  std::vector<Rational> h = R({1, -2, 1});
  std::vector<Rational> expect;
  for (int t = 0; t <= 8; ++t) {
    expect.push_back(h[0] - h[2]);
    std::vector<Rational> next(3);
    for (int i = 0; i < 3; ++i) {
      next[i] = c[i];
      for (int j = 0; j < 3; ++j) next[i] += a[i][j] * h[j];
    }
    h = next;
  }
  EXPECT_EQ(trajectory(sys, R({1, -2, 1}), 8).outputs, expect);
}

TEST(Mpnn, MatchesPerVertexSimulator) {
  gen::Rng rng(24);
  for (int i = 0; i < 100; ++i) {
    auto c = gen::random_mpnn(rng);
    auto sys = instantiate_system<double>(mpnn_system(c.graph, c.spec));
    auto got = trajectory(sys, oracle::to_double(c.h0), 10).outputs;
    auto want = oracle::mpnn(c, 10);
    for (std::size_t k = 0; k <= 10; ++k) ASSERT_NEAR(got[k], want[k], 1e-9) << "case " << i << " step " << k;
  }
}

TEST(Mpnn, ShapeErrors) {
  Graph g;
  g.vertices = 2;
  g.edges = {{1, 3}};
  g.labels = {{}};
  MpnnSpec spec;
  spec.message = parse_expr("proj(2)");
  spec.update = parse_expr("add(proj(1),proj(2))");
  spec.readout = parse_expr("proj(1)");
  EXPECT_THROW(mpnn_system(g, spec), Error);
  g.edges = {{1, 2}};
  spec.update = parse_expr("proj(3)");
  EXPECT_THROW(mpnn_system(g, spec), Error);
  spec.update = parse_expr("tuple(proj(1),proj(2))");
  EXPECT_THROW(mpnn_system(g, spec), Error);
}
