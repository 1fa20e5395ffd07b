#pragma once

#include <stdexcept>
#include <string>

namespace fbsde {

// ==================================================================
// Error taxonomy
// ==================================================================
//
// All library failures are thrown as one of the types below so the CLI
// can map them onto its exit-code contract (2 = configuration problem,
// 3 = a solver that ran but failed to converge).

/// Bad user-supplied configuration: grid bounds, mesh counts, config
/// file keys, malformed numbers.  CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A function the library was asked to evaluate produced a non-finite
/// value (payoff, driver, analytic solution, kernel CDF).
struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

/// Model-level inconsistency discovered at run time, e.g. a state where
/// the diffusion coefficient turns negative during Monte Carlo
/// simulation.
struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solver (per-cell implicit solve, outer Picard loop)
/// exceeded its iteration budget.  CLI exit code 3.
struct SolveError : std::runtime_error {
    explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fbsde
