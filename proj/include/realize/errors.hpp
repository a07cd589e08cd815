#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace realize {

// Root of every error raised by the library. Each subclass names one failure
// mode from the public contract so callers can dispatch on type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RankDeficient : public Error { using Error::Error; };
class RankMismatch : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class UnknownExample : public Error { using Error::Error; };
class UnknownIdentifier : public Error { using Error::Error; };
class NotRealizable : public Error { using Error::Error; };
class NoOutputDefined : public Error { using Error::Error; };
class UnsupportedStructure : public Error { using Error::Error; };
class InconsistentInitialData : public Error { using Error::Error; };
class PlanInfeasible : public Error { using Error::Error; };
class NotMechanicalForm : public Error { using Error::Error; };
class NotAffine : public Error { using Error::Error; };
class ProjectorNotConstant : public Error { using Error::Error; };
class NotControllable : public Error { using Error::Error; };
class SolveFailed : public Error { using Error::Error; };

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class NonFiniteState : public Error {
public:
    NonFiniteState(const std::string& what, double time)
        : Error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

}  // namespace realize
