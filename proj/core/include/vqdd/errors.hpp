#pragma once

#include <stdexcept>
#include <string>

namespace vqdd {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// A vector or file handed to an operation has the wrong arity or content.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// A network, layer or property violates a structural invariant.
class InvalidModelError : public Error {
public:
    using Error::Error;
};

/// A simplification step cannot be applied at the requested position.
class InvalidStepError : public Error {
public:
    using Error::Error;
};

/// An ONNX graph uses an operator or structure outside the supported subset.
class UnsupportedModelError : public Error {
public:
    using Error::Error;
};

/// Text input that does not conform to the expected grammar. Carries the
/// 1-based source position of the offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& message, int line, int column)
        : Error(message + " (line " + std::to_string(line) + ", column " +
                std::to_string(column) + ")"),
          line_(line),
          column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace vqdd
