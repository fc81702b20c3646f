#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vqdd {

/// Node of an s-expression tree. Atoms keep their raw token text; positions
/// are 1-based.
struct Sexpr {
    bool is_list = false;
    std::string atom;
    std::vector<Sexpr> items;
    int line = 1;
    int column = 1;

    bool is_atom() const { return !is_list; }
};

/// Parses a sequence of top-level s-expressions. `;` starts a comment that
/// runs to the end of the line. Throws ParseError on malformed input.
std::vector<Sexpr> parse_sexprs(std::string_view text);

}  // namespace vqdd
