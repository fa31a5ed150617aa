#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "rwd/error.hpp"

namespace rwd {

/// Arbitrary-precision rational, always normalized to lowest terms.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline std::string to_string(const Rational& q) {
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

/// Exact conversion; every finite double is a dyadic rational.
inline Rational exact_rational(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::inexpressible, "non-finite float has no rational form");
  int exp = 0;
  double mant = std::frexp(x, &exp);
  // 53 bits of mantissa become an integer.
  auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  exp -= 53;
  Rational q{BigInt(scaled)};
  if (exp > 0) {
    q *= Rational(BigInt(1) << exp);
  } else if (exp < 0) {
    q /= Rational(BigInt(1) << (-exp));
  }
  return q;
}

/// Parses `12`, `-3/4`, `0.25`, `1.5e-3` exactly. Returns nullopt on malformed text.
inline std::optional<Rational> parse_rational(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    i = 1;
  }
  auto digits = [&](std::size_t& pos) {
    std::size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    return std::string(text.substr(start, pos - start));
  };
  std::string whole = digits(i);
  if (whole.empty()) return std::nullopt;
  Rational value{BigInt(whole)};
  if (i < text.size() && text[i] == '/') {
    ++i;
    std::string den = digits(i);
    if (den.empty() || i != text.size()) return std::nullopt;
    BigInt d(den);
    if (d == 0) return std::nullopt;
    value /= Rational(d);
    return negative ? Rational(-value) : value;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    std::string frac = digits(i);
    if (frac.empty()) return std::nullopt;
    BigInt scale = 1;
    for (std::size_t k = 0; k < frac.size(); ++k) scale *= 10;
    value += Rational(BigInt(frac), scale);
  }
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool neg_exp = false;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
      neg_exp = text[i] == '-';
      ++i;
    }
    std::string e = digits(i);
    if (e.empty() || e.size() > 4) return std::nullopt;
    BigInt scale = 1;
    for (int k = 0, n = std::stoi(e); k < n; ++k) scale *= 10;
    if (neg_exp) {
      value /= Rational(scale);
    } else {
      value *= Rational(scale);
    }
  }
  if (i != text.size()) return std::nullopt;
  return negative ? Rational(-value) : value;
}

}  // namespace rwd
