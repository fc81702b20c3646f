#pragma once

#include <string>
#include <string_view>

#include "vqdd/property.hpp"

namespace vqdd {

/// Parses a property from VNN-LIB text. Supported fragment: `declare-const`
/// of `X_i`/`Y_i` reals, input bounds as variable-vs-constant asserts, output
/// constraints as linear inequalities over the `Y_i`, optionally grouped in
/// one `(or (and ...) ...)` assert, and the `(assert false)` sentinel for an
/// empty output region. Throws ParseError with source position on anything
/// outside the fragment.
Property parse_vnnlib(std::string_view text);

/// Deterministic VNN-LIB rendering; parse_vnnlib(emit_vnnlib(p)) is
/// semantically equal to p.
std::string emit_vnnlib(const Property& property);

}  // namespace vqdd
