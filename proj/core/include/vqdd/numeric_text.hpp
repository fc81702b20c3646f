#pragma once

#include <string>
#include <string_view>

namespace vqdd {

/// Decimal rendering with 17 significant digits; round-trips any finite
/// double exactly.
std::string format_double(double value);

/// Same, but guarantees a decimal point ("10.0" rather than "10"), the
/// convention VNN-LIB files use.
std::string format_double_decimal(double value);

/// Strict decimal parse: the whole token must be consumed. Returns false for
/// anything that is not a plain finite decimal constant.
bool try_parse_double(std::string_view token, double& out);

}  // namespace vqdd
