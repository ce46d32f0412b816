#pragma once

#include <stdexcept>
#include <string>

namespace nids {

// Malformed input: bad CSV line, unknown label, unreadable file content.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Semantically invalid data or artifact: schema mismatch, missing class,
// dimension mismatch, precondition violations.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure during optimization (NaN loss and the like).
class TrainError : public std::runtime_error {
public:
    explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nids
