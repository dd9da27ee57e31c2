#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace weaklabel {

// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent input data. The CLI maps these to exit code 3.
class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DomainError : public DataError {
public:
    using DataError::DataError;
};

class DuplicateError : public DataError {
public:
    using DataError::DataError;
};

class DimensionError : public DataError {
public:
    using DataError::DataError;
};

class EmptyMatrixError : public DataError {
public:
    using DataError::DataError;
};

class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

class InfeasibleError : public DataError {
public:
    using DataError::DataError;
};

class PreconditionError : public DataError {
public:
    using DataError::DataError;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

// Non-finite objective or weights during optimization. Exit code 4.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace weaklabel
