#pragma once

#include <optional>
#include <vector>

#include "fbsde/problems.hpp"
#include "fbsde/stepper.hpp"

namespace fbsde {

// ==================================================================
// Error metrics, convergence orders, independent oracles
// ==================================================================

/// One mesh row of a convergence study.
struct ErrorRow {
    double h = 0.0;
    double dt = 0.0;
    double e_v = 0.0;  // relative sup-in-time L2 error of the value field
    double e_y0 = 0.0; // relative error of Y_0
    double e_z0 = 0.0; // relative error of Z_0
};

struct ErrorReport {
    std::vector<ErrorRow> rows;
    double order_v = 0.0;
    double order_y0 = 0.0;
    double order_z0 = 0.0;
};

/// Relative errors of the extracted (y0, z0) against the problem's
/// exact (Y0, Z0).  If a reference magnitude is below 1e-14 the
/// absolute error is substituted and flagged.
struct PointErrors {
    double e_y0 = 0.0;
    double e_z0 = 0.0;
    bool y0_absolute = false;
    bool z0_absolute = false;
};

/// E_h = max_k ||v_h^k - P_h v(t_k)|| / max_k ||P_h v(t_k)||, where
/// P_h v(t_k) is the cell-averaged analytic solution and both norms run
/// over the cells of the *stated* domain only (the padded extension is
/// a numerical device, not part of the problem).  Requires an analytic
/// solution.
double relative_l2_error(const SolutionSurface& surface, const ProblemSpec& problem,
                         const SpatialGrid& sgrid, const TimeGrid& tgrid);

PointErrors point_errors(const SolutionSurface& surface, const ProblemSpec& problem);

/// Least-squares slope of log(error) against log(h).
double convergence_order(const std::vector<std::pair<double, double>>& h_and_error);

/// One-step consistency defect at step k: the L2 norm (stated domain)
/// of  P_h v(t_k) - P * T(dt) P_h v(t_{k+1})  with T the explicit (or,
/// optionally, implicit) driver operator and the analytic v.  Summed
/// over k it bounds the scheme's consistency error; it must vanish
/// under refinement.
double truncation_defect(const ProblemSpec& problem, const SpatialGrid& sgrid,
                         const TimeGrid& tgrid, const TransitionMatrix& P, int k,
                         bool implicit_form = false, const SolverConfig& cfg = {});

/// Independent brute-force solver for tiny instances (<= 5 cells,
/// <= 3 steps): the backward recursions expanded literally with scalar
/// loops over a dense matrix, sharing no code with the stepper module.
/// Panics (ConfigError) on larger inputs to keep it an oracle, not an
/// implementation.
SolutionSurface brute_force_surface(const ProblemSpec& problem, const SpatialGrid& sgrid,
                                    const TimeGrid& tgrid,
                                    const std::vector<std::vector<double>>& dense_P,
                                    const SolverConfig& cfg);

} // namespace fbsde
