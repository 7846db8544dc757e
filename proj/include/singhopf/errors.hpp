#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace singhopf {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ParameterMismatch : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class NoEquilibrium : public Error {
public:
    using Error::Error;
};

class DegenerateContinuum : public Error {
public:
    using Error::Error;
};

class NoSaddleNode : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

/// Newton failure; carries the last iterate when there is one.
class NotConverged : public Error {
public:
    using Error::Error;
    NotConverged(const std::string& what, std::array<double, 3> last) : Error(what), last_iterate(last) {}
    std::array<double, 3> last_iterate{};
};

class NoReturn : public Error {
public:
    using Error::Error;
};

class BracketError : public Error {
public:
    using Error::Error;
};

class DegenerateB : public Error {
public:
    using Error::Error;
};

class NoHit : public Error {
public:
    using Error::Error;
};

/// Continuation could not proceed; the reason names the stopping condition.
class CurveTerminated : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& key, const std::string& what)
        : Error(what), key_(key) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace singhopf
