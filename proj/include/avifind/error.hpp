#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace avifind {

// Base class for recoverable pipeline errors. Precondition violations
// (bad parameters, dimension mismatches) throw std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// File could not be opened or decoded.
class IoError : public Error {
public:
    using Error::Error;
};

// A serialized vocabulary or index file violates its format.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what, std::size_t line = 0)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

// Image too small for the requested operation.
class TooSmallError : public Error {
public:
    using Error::Error;
};

// No usable contour: the edge map holds fewer than two pixels.
class NoContourError : public Error {
public:
    using Error::Error;
};

}  // namespace avifind
