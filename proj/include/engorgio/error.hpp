#pragma once

#include <stdexcept>
#include <string>

namespace engorgio {

// Root of every error the library throws. Callers that only care about
// "something in engorgio failed" can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// A documented precondition of an operation was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// NaN or Inf appeared where only finite values are allowed.
class NumericError : public Error {
public:
    using Error::Error;
};

class TokenizeError : public Error {
public:
    using Error::Error;
};

class ContextOverflowError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace engorgio
