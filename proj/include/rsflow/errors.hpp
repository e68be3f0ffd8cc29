#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rsflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter or input violates a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A metric fails one of its structural invariants (positivity, pole closure, ...).
class InvalidMetric : public Error {
public:
    using Error::Error;
};

/// Two objects that must live on the same grid do not.
class GridMismatch : public Error {
public:
    using Error::Error;
};

/// The sphere radius dropped below the floor at an interior node.
class DegenerateGeometry : public Error {
public:
    DegenerateGeometry(std::size_t node, double psi)
        : Error("degenerate geometry: psi=" + std::to_string(psi) + " below floor at node " +
                std::to_string(node)),
          node_(node), psi_(psi) {}
    std::size_t node() const noexcept { return node_; }
    double psi() const noexcept { return psi_; }

private:
    std::size_t node_;
    double psi_;
};

/// Time stepping could not produce a valid metric even after repeated step halving.
class SingularBreakdown : public Error {
public:
    using Error::Error;
};

/// A neck cannot be capped off (e.g. it sits too close to a pole on both sides).
class MalformedNeck : public Error {
public:
    using Error::Error;
};

/// The input of a verification routine does not satisfy its stated precondition.
class PreconditionFailed : public Error {
public:
    using Error::Error;
};

}  // namespace rsflow
