#pragma once

#include <stdexcept>
#include <string>

namespace capture {

// Base of every error thrown by the library. Subclasses name the failure
// category so callers can branch on it without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class InvalidModel : public Error {
public:
    using Error::Error;
};

class BehindCamera : public Error {
public:
    using Error::Error;
};

class MissingFile : public Error {
public:
    using Error::Error;
};

class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

class CorruptData : public Error {
public:
    using Error::Error;
};

class InvalidStart : public Error {
public:
    using Error::Error;
};

} // namespace capture
