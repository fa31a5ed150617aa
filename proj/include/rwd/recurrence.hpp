#pragma once

// Recurrence relations, time-delay embeddings, reduction of linear cartesian
// systems to linear recurrences and least-squares recurrence fitting.
//
// Coefficient order throughout: s_k = c_1 s_{k-1} + ... + c_d s_{k-d} (+ c_0).

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwd/dynamics.hpp"

namespace rwd {

template <class C>
struct RecurrenceRelation {
  std::size_t depth = 1;
  /// Reads (s_{n-1}, ..., s_{n-d}).
  std::function<C(std::span<const C>)> step;
  /// s_0 .. s_{d-1}.
  std::vector<C> inits;
};

/// s_0 .. s_n.
template <class C>
std::vector<C> unroll(const RecurrenceRelation<C>& rr, std::size_t n) {
  if (rr.inits.size() != rr.depth)
    throw Error(ErrorCode::dimension_mismatch, "recurrence of depth " + std::to_string(rr.depth) + " has " +
                                                   std::to_string(rr.inits.size()) + " initial values");
  std::vector<C> s(rr.inits.begin(), rr.inits.end());
  if (n + 1 <= s.size()) {
    s.resize(n + 1);
    return s;
  }
  std::vector<C> window(rr.depth);
  while (s.size() < n + 1) {
    for (std::size_t i = 0; i < rr.depth; ++i) window[i] = s[s.size() - 1 - i];
    s.push_back(rr.step(std::span<const C>(window)));
  }
  return s;
}

template <class C>
std::pair<CartesianDynamicalSystem<C>, State<C>> to_system(const RecurrenceRelation<C>& rr) {
  return from_recurrence<C>(rr.step, rr.inits);
}

namespace detail {

/// Exact Gaussian elimination; throws when the system is singular.
inline std::vector<Rational> solve_exact(RationalMatrix a, std::vector<Rational> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    while (piv < n && a[piv][col] == 0) ++piv;
    if (piv == n) throw Error(ErrorCode::dimension_mismatch, "singular linear system");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      Rational factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

inline Rational eval_poly(const std::vector<Rational>& coeffs, const Rational& x) {
  Rational acc = 0;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
  return acc;
}

}  // namespace detail

/// For p of degree k >= 1 (coefficients low to high), finds b_0..b_k with
/// b_0 + b_1 p(n-1) + ... + b_k p(n-k) = n, so that s_n = p(b_0 + sum b_i s_{n-i})
/// is a depth-k recurrence with initial values p(0)..p(k-1).
inline RecurrenceRelation<Rational> polynomial_recurrence(std::vector<Rational> p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
  if (p.size() < 2) throw Error(ErrorCode::dimension_mismatch, "polynomial must have degree at least one");
  const std::size_t k = p.size() - 1;
  // Two degree-k polynomials agreeing at k+1 points are equal.
  RationalMatrix a(k + 1, std::vector<Rational>(k + 1));
  std::vector<Rational> rhs(k + 1);
  for (std::size_t row = 0; row <= k; ++row) {
    Rational n(static_cast<long long>(k + row));
    a[row][0] = 1;
    for (std::size_t i = 1; i <= k; ++i) a[row][i] = detail::eval_poly(p, n - Rational(static_cast<long long>(i)));
    rhs[row] = n;
  }
  auto coeffs = detail::solve_exact(std::move(a), std::move(rhs));

  RecurrenceRelation<Rational> rr;
  rr.depth = k;
  rr.step = [p, coeffs](std::span<const Rational> x) {
    Rational n = coeffs[0];
    for (std::size_t i = 1; i < coeffs.size(); ++i) n += coeffs[i] * x[i - 1];
    return detail::eval_poly(p, n);
  };
  for (std::size_t i = 0; i < k; ++i) rr.inits.push_back(detail::eval_poly(p, Rational(static_cast<long long>(i))));
  return rr;
}

struct LinearRecurrence {
  /// c_1 .. c_d.
  std::vector<double> coefficients;
  std::optional<double> constant;

  std::size_t depth() const { return coefficients.size(); }

  double next(std::span<const double> recent_first) const {
    double acc = constant.value_or(0.0);
    for (std::size_t i = 0; i < coefficients.size(); ++i) acc += coefficients[i] * recent_first[i];
    return acc;
  }

  RecurrenceRelation<double> with_inits(std::vector<double> inits) const {
    RecurrenceRelation<double> rr;
    rr.depth = depth();
    rr.step = [self = *this](std::span<const double> x) { return self.next(x); };
    rr.inits = std::move(inits);
    return rr;
  }
};

/// Continues `history` (oldest first, at least depth values) for `steps` more values.
inline std::vector<double> predict(const LinearRecurrence& rec, std::span<const double> history, std::size_t steps) {
  const std::size_t d = rec.depth();
  if (history.size() < d) throw Error(ErrorCode::sequence_too_short, "history shorter than the recurrence depth");
  std::vector<double> s(history.end() - static_cast<std::ptrdiff_t>(d), history.end());
  std::vector<double> out;
  std::vector<double> window(d);
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t i = 0; i < d; ++i) window[i] = s[s.size() - 1 - i];
    s.push_back(rec.next(window));
    out.push_back(s.back());
  }
  return out;
}

template <class C>
struct DelayEmbedding {
  /// windows[j] = (s_n, s_{n-1}, ..., s_{n-d}) for n = d + j.
  std::vector<std::vector<C>> windows;
};

template <class C>
DelayEmbedding<C> delay_embedding(std::span<const C> seq, std::size_t d) {
  if (seq.size() <= d)
    throw Error(ErrorCode::sequence_too_short, "sequence of length " + std::to_string(seq.size()) +
                                                   " has no window of depth " + std::to_string(d));
  DelayEmbedding<C> out;
  for (std::size_t n = d; n < seq.size(); ++n) {
    std::vector<C> w;
    w.reserve(d + 1);
    for (std::size_t i = 0; i <= d; ++i) w.push_back(seq[n - i]);
    out.windows.push_back(std::move(w));
  }
  return out;
}

/// x -> (b(x), b(G x), ..., b(G^{d-1} x)).
template <class C>
std::function<State<C>(std::span<const C>)> phi_map(const CartesianDynamicalSystem<C>& sys) {
  return [sys](std::span<const C> x) {
    State<C> out;
    State<C> y(x.begin(), x.end());
    for (std::size_t k = 0; k < sys.dim; ++k) {
      out.push_back(sys.output(y));
      if (k + 1 < sys.dim) y = sys.transition(y);
    }
    return out;
  };
}

/// Rows b, bA, ..., bA^{d-1}.
inline Eigen::MatrixXd phi_matrix(const Eigen::MatrixXd& a, const Eigen::RowVectorXd& b) {
  const Eigen::Index d = a.rows();
  if (a.cols() != d || b.size() != d) throw Error(ErrorCode::dimension_mismatch, "phi needs square A and |b| = d");
  Eigen::MatrixXd phi(d, d);
  Eigen::RowVectorXd row = b;
  for (Eigen::Index k = 0; k < d; ++k) {
    phi.row(k) = row;
    row = row * a;
  }
  return phi;
}

/// sigma_max / sigma_min; infinite for a singular matrix.
inline double condition_number(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return std::numeric_limits<double>::infinity();
  double lo = s(s.size() - 1);
  return lo == 0.0 ? std::numeric_limits<double>::infinity() : s(0) / lo;
}

/// Reject phi when sigma_min < threshold * sigma_max.
inline constexpr double default_singularity_threshold = 1e-10;

struct Reduction {
  LinearRecurrence recurrence;
  double condition = 0;
};

/// s_k = b A^d phi^{-1} (s_{k-d}, ..., s_{k-1}); absent when phi is numerically singular.
inline std::optional<Reduction> reduce_linear(const Eigen::MatrixXd& a, const Eigen::RowVectorXd& b,
                                              double threshold = default_singularity_threshold) {
  const Eigen::Index d = a.rows();
  Eigen::MatrixXd phi = phi_matrix(a, b);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0 || s(d - 1) < threshold * s(0)) return std::nullopt;
  Eigen::RowVectorXd target = b;
  for (Eigen::Index k = 0; k < d; ++k) target = target * a;
  // w phi = b A^d, with w_j multiplying s_{k-d+j}.
  Eigen::VectorXd w = phi.transpose().partialPivLu().solve(target.transpose());
  Reduction out;
  out.condition = s(0) / s(d - 1);
  out.recurrence.coefficients.resize(static_cast<std::size_t>(d));
  for (Eigen::Index i = 1; i <= d; ++i) out.recurrence.coefficients[static_cast<std::size_t>(i - 1)] = w(d - i);
  return out;
}

inline Eigen::MatrixXd to_eigen(const RationalMatrix& m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.empty() ? 0 : m[0].size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_double(m[i][j]);
  return out;
}

inline Eigen::RowVectorXd to_eigen_row(const std::vector<Rational>& v) {
  Eigen::RowVectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = to_double(v[i]);
  return out;
}

inline Eigen::MatrixXd to_eigen(const std::vector<std::vector<double>>& m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.empty() ? 0 : m[0].size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j];
  return out;
}

inline Eigen::RowVectorXd to_eigen_row(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// (prod b_j) * prod_{i<j} (lambda_j - lambda_i).
inline double vandermonde_check(std::span<const double> b, std::span<const double> lambda) {
  if (b.size() != lambda.size()) throw Error(ErrorCode::dimension_mismatch, "b and eigenvalue lists differ in length");
  double acc = 1.0;
  for (double bj : b) acc *= bj;
  for (std::size_t j = 0; j < lambda.size(); ++j)
    for (std::size_t i = 0; i < j; ++i) acc *= lambda[j] - lambda[i];
  return acc;
}

/// The matrix with rows (b_j lambda_j^k), k = 0..d-1, whose determinant the product formula gives.
inline Eigen::MatrixXd scaled_vandermonde(std::span<const double> b, std::span<const double> lambda) {
  const auto d = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double p = 1.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      m(k, j) = b[static_cast<std::size_t>(j)] * p;
      p *= lambda[static_cast<std::size_t>(j)];
    }
  }
  return m;
}

struct RecurrenceFit {
  LinearRecurrence recurrence;
  /// Max absolute error over the fitting windows.
  double residual = 0;
  double condition = 0;
  std::size_t rank = 0;
  bool rank_deficient = false;
};

/// Least squares over the delay embedding of depth d.
inline RecurrenceFit fit_linear_recurrence(std::span<const double> seq, std::size_t d, bool with_constant = false) {
  if (d == 0) throw Error(ErrorCode::dimension_mismatch, "depth must be at least one");
  if (seq.size() < 2 * d + 1)
    throw Error(ErrorCode::sequence_too_short, "fitting depth " + std::to_string(d) + " needs at least " +
                                                   std::to_string(2 * d + 1) + " values, got " +
                                                   std::to_string(seq.size()));
  auto emb = delay_embedding(seq, d);
  const auto rows = static_cast<Eigen::Index>(emb.windows.size());
  const auto cols = static_cast<Eigen::Index>(d + (with_constant ? 1 : 0));
  Eigen::MatrixXd x(rows, cols);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& w = emb.windows[static_cast<std::size_t>(r)];
    y(r) = w[0];
    for (std::size_t i = 1; i <= d; ++i) x(r, static_cast<Eigen::Index>(i - 1)) = w[i];
    if (with_constant) x(r, cols - 1) = 1.0;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double tol = std::max(rows, cols) * std::numeric_limits<double>::epsilon() * (s.size() ? s(0) : 0.0);
  svd.setThreshold(s.size() && s(0) > 0 ? tol / s(0) : 0.0);
  Eigen::VectorXd c = svd.solve(y);

  RecurrenceFit out;
  out.recurrence.coefficients.assign(c.data(), c.data() + d);
  if (with_constant) out.recurrence.constant = c(cols - 1);
  out.rank = static_cast<std::size_t>(svd.rank());
  out.rank_deficient = out.rank < static_cast<std::size_t>(cols);
  double lo = s.size() ? s(s.size() - 1) : 0.0;
  out.condition = lo > 0 ? s(0) / lo : std::numeric_limits<double>::infinity();
  out.residual = (x * c - y).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace rwd
