#pragma once

#include <stdexcept>
#include <string>

namespace wordcause {

// Error taxonomy, mapped to CLI exit codes:
//   ConfigError -> 1 (usage / bad configuration)
//   DataError   -> 2 (malformed or inconsistent input data)
//   anything else, including InternalError -> 3 (broken invariant)
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class InternalError : public Error {
public:
    using Error::Error;
};

// Remote replacement service could not be reached (transport failure or
// timeout). Carries the endpoint and how many attempts were made.
class NetworkError : public Error {
public:
    NetworkError(std::string endpoint, int attempts, const std::string& detail)
        : Error("replacement service " + endpoint + " unreachable after " +
                std::to_string(attempts) + " attempt(s): " + detail),
          endpoint_(std::move(endpoint)),
          attempts_(attempts) {}

    const std::string& endpoint() const { return endpoint_; }
    int attempts() const { return attempts_; }

private:
    std::string endpoint_;
    int attempts_;
};

// Remote replacement service answered, but not in the agreed wire format.
class ProtocolError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace wordcause
