#include "testspace/rational.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "testspace/error.hpp"

namespace testspace {

namespace {

Integer parse_integer(std::string_view text) {
  if (text.empty()) throw Error(ErrorKind::validation, "empty integer literal");
  std::size_t start = (text.front() == '-' || text.front() == '+') ? 1 : 0;
  if (start == text.size()) throw Error(ErrorKind::validation, "malformed integer '" + std::string(text) + "'");
  for (std::size_t i = start; i < text.size(); ++i) {
    if (text[i] < '0' || text[i] > '9') {
      throw Error(ErrorKind::validation, "malformed integer '" + std::string(text) + "'");
    }
  }
  const bool negative = text.front() == '-';
  std::string_view body = text.substr(start);
  while (body.size() > 1 && body.front() == '0') body.remove_prefix(1);
  // Leading zeros would otherwise select octal.
  Integer value{std::string(body)};
  return negative ? Integer(-value) : value;
}

Rational parse_decimal(std::string_view text) {
  std::string_view mantissa = text;
  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = text.substr(0, e);
    auto exp_text = text.substr(e + 1);
    if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exponent);
    if (ec != std::errc() || ptr != exp_text.data() + exp_text.size()) {
      throw Error(ErrorKind::validation, "malformed exponent in '" + std::string(text) + "'");
    }
  }
  std::string digits;
  long fraction_digits = 0;
  bool seen_point = false;
  for (char c : mantissa) {
    if (c == '.') {
      if (seen_point) throw Error(ErrorKind::validation, "malformed decimal '" + std::string(text) + "'");
      seen_point = true;
    } else {
      digits.push_back(c);
      if (seen_point) ++fraction_digits;
    }
  }
  Rational value(parse_integer(digits));
  long shift = exponent - fraction_digits;
  Integer ten_power = 1;
  for (long i = 0; i < std::labs(shift); ++i) ten_power *= 10;
  return shift >= 0 ? Rational(value * ten_power) : Rational(value / ten_power);
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) throw Error(ErrorKind::validation, "empty rational literal");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Integer num = parse_integer(text.substr(0, slash));
    Integer den = parse_integer(text.substr(slash + 1));
    if (den == 0) throw Error(ErrorKind::validation, "zero denominator in '" + std::string(text) + "'");
    return Rational(num, den);
  }
  if (text.find_first_of(".eE") != std::string_view::npos) return parse_decimal(text);
  return Rational(parse_integer(text));
}

std::string to_string(const Rational& value) { return value.str(); }

double to_double(const Rational& value) { return value.convert_to<double>(); }

Rational from_double(double value) {
  if (!std::isfinite(value)) throw Error(ErrorKind::validation, "non-finite value cannot be made exact");
  return Rational(value);
}

Rational ipow(const Rational& base, unsigned exponent) {
  Rational result = 1;
  Rational factor = base;
  while (exponent != 0) {
    if (exponent & 1U) result *= factor;
    exponent >>= 1U;
    if (exponent != 0) factor *= factor;
  }
  return result;
}

Rational pow2(int exponent) {
  Integer p = 1;
  p <<= static_cast<unsigned>(std::abs(exponent));
  return exponent >= 0 ? Rational(p) : Rational(Integer(1), p);
}

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

}  // namespace testspace
