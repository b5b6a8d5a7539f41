#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/gmp.hpp>

namespace testspace {

using Rational = boost::multiprecision::mpq_rational;
using Integer = boost::multiprecision::mpz_int;

/// Dense exact vector.
using RationalVector = std::vector<Rational>;

/// Parses "p/q", "p", or a finite decimal such as "-0.125" or "1e-3".
Rational parse_rational(std::string_view text);

/// Canonical "p/q" form ("p" when the denominator is 1).
std::string to_string(const Rational& value);

double to_double(const Rational& value);

/// Exact conversion; every finite double is a dyadic rational.
Rational from_double(double value);

Rational ipow(const Rational& base, unsigned exponent);

/// 2^exponent for any integer exponent.
Rational pow2(int exponent);

inline Rational abs_value(const Rational& value) { return value < 0 ? Rational(-value) : value; }

/// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace testspace
