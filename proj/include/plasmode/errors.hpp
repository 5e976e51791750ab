#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace plasmode {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid user input: bad arguments, violated preconditions, malformed config.
// The CLI maps these to exit code 1.
struct InvalidArgument : Error {
    using Error::Error;
};

// Filesystem problems: missing input, unwritable output.
struct IoError : Error {
    using Error::Error;
};

// A cell of a tabular input failed to parse. row/column are 1-based
// positions in the file (the header is row 1).
struct ParseError : Error {
    std::size_t row;
    std::size_t column;
    ParseError(std::size_t row_, std::size_t column_, const std::string& what_)
        : Error("parse error at row " + std::to_string(row_) + ", column " +
                std::to_string(column_) + ": " + what_),
          row(row_),
          column(column_) {}
};

// Numerical failure: singular systems, degenerate kernels, non-finite input.
struct NumericError : Error {
    using Error::Error;
};

// An iterative solver hit its iteration cap before reaching its tolerance.
struct ConvergenceError : Error {
    long iterations;
    double last_change;
    ConvergenceError(long iterations_, double last_change_, const std::string& what_)
        : Error(what_ + " (iterations=" + std::to_string(iterations_) +
                ", last change=" + std::to_string(last_change_) + ")"),
          iterations(iterations_),
          last_change(last_change_) {}
};

// Mismatched shapes between related objects (fit vs. data, truth vs. fit).
struct DimensionMismatch : Error {
    using Error::Error;
};

}  // namespace plasmode
