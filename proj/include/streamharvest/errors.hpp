#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace streamharvest {

/// Malformed input: wrong dimensions, invalid rates, inconsistent groupings.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input outside the domain where an operation is defined (e.g. extinction
/// where a positive equilibrium is required).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Operation only defined for a special case (e.g. homogeneous patches).
class UnsupportedCaseError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Iterative method failed. Carries the best iterate seen, when there is one,
/// and the time or parameter value at which the failure happened.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, Eigen::VectorXd best = {},
                            double where = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(what), best_(std::move(best)), where_(where) {}

    const Eigen::VectorXd& best_iterate() const noexcept { return best_; }
    double where() const noexcept { return where_; }

private:
    Eigen::VectorXd best_;
    double where_;
};

/// Scenario file rejected; the message names the key and line.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Output could not be written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace streamharvest
