#pragma once

#include <Eigen/Dense>

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace biotstab {

using Vec = Eigen::VectorXd;
using DenseMat = Eigen::MatrixXd;

/// Thrown on invalid arguments, inconsistent shapes, or contract violations.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a linear solve fails (singularity, loss of definiteness, ...).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative solve did not reach the requested tolerance within the budget.
class NonConvergence : public SolverError {
public:
    NonConvergence(const std::string& what, double achieved, int iterations)
        : SolverError(what), achieved_residual(achieved), iterations(iterations) {}
    double achieved_residual;
    int iterations;
};

// Verbosity from BIOTSTAB_LOG (0 = quiet, 1 = progress, 2 = chatty).
inline int log_level()
{
    static const int level = [] {
        const char* env = std::getenv("BIOTSTAB_LOG");
        return env ? std::atoi(env) : 0;
    }();
    return level;
}

} // namespace biotstab
