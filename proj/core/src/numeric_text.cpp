#include "vqdd/numeric_text.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace vqdd {

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string format_double_decimal(double value) {
    std::string text = format_double(value);
    if (text.find_first_of(".eE") == std::string::npos) text += ".0";
    return text;
}

bool try_parse_double(std::string_view token, double& out) {
    if (token.empty()) return false;
    const char first = token.front();
    if (!(first == '+' || first == '-' || first == '.' || (first >= '0' && first <= '9')))
        return false;
    std::string owned(token);
    char* end = nullptr;
    const double value = std::strtod(owned.c_str(), &end);
    if (end != owned.c_str() + owned.size()) return false;
    if (!std::isfinite(value)) return false;
    out = value;
    return true;
}

}  // namespace vqdd
