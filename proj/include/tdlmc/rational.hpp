#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/rational.hpp>

namespace tdlmc {

using Rational = boost::rational<std::int64_t>;

/// Prints `3` for integers and `5/2` otherwise.
std::string to_string(const Rational& r);

/// Parses `-3`, `7` or `5/2`. Throws std::invalid_argument on malformed input.
Rational parse_rational(std::string_view text);

inline Rational floor_of(const Rational& r)
{
  std::int64_t q = r.numerator() / r.denominator();
  if (r.numerator() % r.denominator() != 0 && r.numerator() < 0)
    --q;
  return Rational(q);
}

inline bool is_integer(const Rational& r) { return r.denominator() == 1; }

} // namespace tdlmc
