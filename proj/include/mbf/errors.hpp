#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mbf {

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Base for failures that originate in the numerics rather than in the inputs.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Fewer than d+1 points in a local PCA neighbourhood.
class DegenerateNeighborhood : public NumericalError {
public:
    DegenerateNeighborhood(std::size_t point, std::size_t found, std::size_t needed);
    std::size_t point() const noexcept { return point_; }

private:
    std::size_t point_;
};

class SolverError : public NumericalError {
public:
    SolverError(const std::string& what, double rcond, double residual);
    double rcond() const noexcept { return rcond_; }
    double residual() const noexcept { return residual_; }

private:
    double rcond_;
    double residual_;
};

class NumericalDivergence : public NumericalError {
public:
    NumericalDivergence(const std::string& what, std::size_t iteration);
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

// A caller broke an operation's documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace mbf
