#pragma once

#include <stdexcept>
#include <string>

namespace morder {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// The chain has no unique stationary law.
class ReducibleChain : public Error {
public:
    using Error::Error;
};

// Malformed model, path, config or counts file.
class ParseError : public Error {
public:
    using Error::Error;
};

// A file or directory could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace morder
