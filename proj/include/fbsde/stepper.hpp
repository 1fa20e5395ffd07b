#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fbsde/grid.hpp"
#include "fbsde/semigroup.hpp"

namespace fbsde {

struct ProblemSpec; // defined in fbsde/problems.hpp

// ==================================================================
// Backward sweep: the three schemes
// ==================================================================
//
// With v^N the projected terminal condition, each scheme marches
// k = N-1 .. 0:
//
//   explicit:  v^k = P (v^{k+1} - dt * gbar(t_{k+1}, ., v^{k+1}))
//              w^k = sigma * D v^{k+1}            (central difference)
//   hybrid:    w^k = sigma * D v^{k+1};  per cell j solve
//              v^k_j + dt * gbar_j(t_k, v^k_j, w^k_j) = (P v^{k+1})_j
//   implicit:  as hybrid but w^k = sigma * D v^k, closed by an outer
//              Picard loop (freeze w, solve cells, refresh w).
//
// gbar_j is the cell average in x of g(t, x, y, z) with (y, z) held at
// the cell values; for drivers without explicit x-dependence this is a
// single evaluation at the cell center.

/// The driver g(t, x, y, z) plus the structural facts schemes and
/// property tests rely on.
struct Driver {
    std::function<double(double t, double x, double y, double z)> g;

    bool depends_on_z = true;
    /// When false, gbar collapses to one evaluation per cell (the
    /// x-average of a function constant in x is itself).
    bool depends_on_x = true;

    /// Optional analytic partial derivative dg/dy for Newton solves.
    std::function<double(double t, double x, double y, double z)> gy;

    /// Global Lipschitz constant in (y, z), when one exists.
    std::optional<double> lipschitz_L;
    /// One-sided monotonicity constant: dg/dy >= gamma (gamma may be
    /// negative; drivers like y^3 have gamma but no global L).
    std::optional<double> monotone_gamma;
};

enum class Algorithm { explicit_, hybrid, implicit };
enum class InnerSolver { fixed_point, newton };
enum class GradientScheme { central, upwind };

struct SolverConfig {
    Algorithm algorithm = Algorithm::hybrid;
    InnerSolver inner = InnerSolver::fixed_point;
    double tol = 1e-12;     // max-norm update tolerance, inner solves
    int max_iter = 100;     // inner iteration budget
    GradientScheme gradient_scheme = GradientScheme::central;
    double outer_tol = 1e-10; // Picard loop of the implicit scheme
    int outer_max_iter = 50;
    int quad_order = 5;     // x-quadrature order for gbar and payoffs
};

/// Per-run iteration statistics.
struct StepStats {
    int max_inner_iterations = 0;
    int max_outer_iterations = 0;
};

/// The full backward solution: v[k] approximates the value field at
/// t_k, w[k] the sigma-weighted gradient field; (y0, z0) are the
/// interpolated readings at (t=0, x0).
struct SolutionSurface {
    std::vector<CellField> v;
    std::vector<CellField> w;
    double y0 = 0.0;
    double z0 = 0.0;
    StepStats stats;
};

// ------------------------------------------------------------------
// Building blocks
// ------------------------------------------------------------------

/// Projected terminal condition (cell averages of the payoff, with
/// kink-split quadrature).
CellField terminal_coefficients(const std::function<double(double)>& phi,
                                const SpatialGrid& grid, int quad_order = 5,
                                const std::vector<double>& kinks = {});

/// w_j = sigma_j * (u_{j+1} - u_{j-1}) / (2h) in the interior, with
/// first-order one-sided differences in the two wall cells.  The
/// upwind variant uses the backward difference (forward in cell 0).
CellField gradient(const CellField& field, const std::vector<double>& sigma_at_centers,
                   GradientScheme scheme = GradientScheme::central);

CellField step_explicit(const TransitionMatrix& P, const CellField& v_next,
                        const Driver& driver, double t_next, double dt,
                        int quad_order = 5);

std::pair<CellField, CellField> step_hybrid(const TransitionMatrix& P,
                                            const CellField& v_next, const Driver& driver,
                                            const std::vector<double>& sigma_at_centers,
                                            double t_k, double dt, const SolverConfig& cfg,
                                            StepStats* stats = nullptr);

std::pair<CellField, CellField> step_implicit(const TransitionMatrix& P,
                                              const CellField& v_next, const Driver& driver,
                                              const std::vector<double>& sigma_at_centers,
                                              double t_k, double dt, const SolverConfig& cfg,
                                              StepStats* stats = nullptr);

/// Full backward sweep for a problem on the given grids, using the
/// supplied transition matrix.  The explicit algorithm requires a
/// z-independent driver (ConfigError otherwise); inner nonconvergence
/// surfaces as SolveError annotated with the step index.
SolutionSurface solve_backward(const ProblemSpec& problem, const SpatialGrid& sgrid,
                               const TimeGrid& tgrid, const TransitionMatrix& P,
                               const SolverConfig& cfg);

// ------------------------------------------------------------------
// Standalone one-step operators (property-test objects)
// ------------------------------------------------------------------

/// Explicit operator T(dt)v = v - dt * g(t, ., v), applied cell-wise
/// at cell centers; no semigroup involved.
CellField t_operator_explicit(double dt, double t, const CellField& field,
                              const Driver& driver);

/// Implicit operator: the unique u with u + dt * g(t, ., u) = v,
/// solved per cell by the configured scalar method.
CellField t_operator_implicit(double dt, double t, const CellField& field,
                              const Driver& driver, const SolverConfig& cfg);

} // namespace fbsde
