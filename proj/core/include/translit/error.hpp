#pragma once

#include <stdexcept>
#include <string>

namespace translit {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ArgumentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    size_t line;
    ParseError(size_t line_, const std::string &what)
        : std::runtime_error("line " + std::to_string(line_) + ": " + what), line(line_) {}
};

struct EncodingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VocabularyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a CTC target cannot be emitted in the available frames.
struct InfeasibleTargetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace translit
