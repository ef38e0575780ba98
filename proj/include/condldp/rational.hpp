#pragma once

// Exact arithmetic mode. Probabilities in this mode are big rationals, so
// identities that hold algebraically (kernel disintegration, normalization)
// hold with residual exactly zero. Entropy-valued quantities stay in double
// mode: logarithms of rationals are irrational.

#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "condldp/errors.hpp"

namespace condldp {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// Parses a plain decimal string ("0.4", "-1.25e-2", "3") into an exact
// rational. This is the exact-mode JSON number format: decimal text maps to
// the rational it denotes with no binary rounding step.
inline Rational rational_from_decimal(const std::string& text) {
  if (text.empty()) throw argument_error("rational_from_decimal: empty string");
  std::size_t pos = 0;
  bool negative = false;
  if (text[pos] == '+' || text[pos] == '-') {
    negative = text[pos] == '-';
    ++pos;
  }
  BigInt mantissa = 0;
  long frac_digits = 0;
  bool any_digit = false, seen_dot = false;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (c >= '0' && c <= '9') {
      mantissa = mantissa * 10 + (c - '0');
      if (seen_dot) ++frac_digits;
      any_digit = true;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else if (c == 'e' || c == 'E') {
      break;
    } else {
      throw argument_error("rational_from_decimal: bad character in '" + text + "'");
    }
  }
  long exponent = 0;
  if (pos < text.size()) {  // at 'e' / 'E'
    ++pos;
    bool exp_neg = false;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
      exp_neg = text[pos] == '-';
      ++pos;
    }
    if (pos >= text.size()) throw argument_error("rational_from_decimal: bad exponent in '" + text + "'");
    for (; pos < text.size(); ++pos) {
      char c = text[pos];
      if (c < '0' || c > '9') throw argument_error("rational_from_decimal: bad exponent in '" + text + "'");
      exponent = exponent * 10 + (c - '0');
    }
    if (exp_neg) exponent = -exponent;
  }
  if (!any_digit) throw argument_error("rational_from_decimal: no digits in '" + text + "'");

  long net = exponent - frac_digits;
  BigInt num = mantissa, den = 1;
  if (net >= 0) {
    for (long i = 0; i < net; ++i) num *= 10;
  } else {
    for (long i = 0; i < -net; ++i) den *= 10;
  }
  Rational r(num, den);
  return negative ? -r : r;
}

// Accepts either the canonical fraction form "p/q" or decimal text.
inline Rational rational_from_string(const std::string& text) {
  std::size_t slash = text.find('/');
  if (slash == std::string::npos) return rational_from_decimal(text);
  Rational num = rational_from_decimal(text.substr(0, slash));
  Rational den = rational_from_decimal(text.substr(slash + 1));
  if (den == 0) throw argument_error("rational_from_string: zero denominator in '" + text + "'");
  if (denominator(num) != 1 || denominator(den) != 1)
    throw argument_error("rational_from_string: fraction parts must be integers in '" + text + "'");
  return num / den;
}

inline double rational_to_double(const Rational& r) { return r.convert_to<double>(); }

// Canonical text form "p/q" (or "p" when q = 1); inverse-stable for reports.
inline std::string rational_to_string(const Rational& r) {
  std::string num = numerator(r).str();
  if (denominator(r) == 1) return num;
  return num + "/" + denominator(r).str();
}

inline BigInt factorial_big(long n) {
  BigInt f = 1;
  for (long i = 2; i <= n; ++i) f *= i;
  return f;
}

// r^k for integer k >= 0.
inline Rational rational_pow(const Rational& r, long k) {
  Rational acc = 1;
  for (long i = 0; i < k; ++i) acc *= r;
  return acc;
}

}  // namespace condldp
