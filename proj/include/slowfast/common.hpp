#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace slowfast {

using Vec = std::vector<double>;

/// Upper bound on slow and fast dimensions. Hot loops use fixed-size
/// scratch buffers of this capacity.
inline constexpr int kMaxDim = 4;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnknownSystemError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A trajectory produced a non-finite state.
class SimulationBlowup : public Error {
public:
    SimulationBlowup(const std::string& what, long step)
        : Error(what), step_(step) {}
    [[nodiscard]] long step() const { return step_; }

private:
    long step_;
};

/// An iterative solver did not reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    [[nodiscard]] double residual() const { return residual_; }

private:
    double residual_;
};

/// Minimum-action problem started from a path with an infinite-rate segment.
class InfeasiblePathError : public Error {
public:
    InfeasiblePathError(const std::string& what, int segment)
        : Error(what), segment_(segment) {}
    [[nodiscard]] int segment() const { return segment_; }

private:
    int segment_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

}  // namespace slowfast
