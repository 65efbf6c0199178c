#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

namespace krf {

/// Exact rational number used by all intersection-theory code.
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;

/// Parses "p", "p/q", "-p/q" (surrounding blanks allowed). Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

/// Canonical "p/q" form; integers are printed without the denominator.
std::string to_string(const Rational& value);

double to_double(const Rational& value);

}  // namespace krf
