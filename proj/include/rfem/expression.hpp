#pragma once

#include "rfem/geometry.hpp"

#include <functional>
#include <string>

namespace rfem {

/// Compiles an expression in the coefficient mini-language to a callable.
/// Supported: numbers, x, y, pi, + - * / ^ and parentheses, the functions
/// sin, cos, exp, sqrt, abs, and ifpos(s, a, b) which evaluates a where
/// s > 0 and b elsewhere (piecewise by sign, e.g. ifpos(y, ..., ...)).
/// Throws ConfigError with the offending position on malformed input.
std::function<double(const Vec2&)> compile_expression(const std::string& text);

} // namespace rfem
