#include "fbsde/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "fbsde/errors.hpp"
#include "fbsde/math.hpp"
#include "fbsde/problems.hpp"

namespace fbsde {

CellField terminal_coefficients(const std::function<double(double)>& phi,
                                const SpatialGrid& grid, int quad_order,
                                const std::vector<double>& kinks) {
    return project(phi, grid, quad_order, kinks);
}

CellField gradient(const CellField& field, const std::vector<double>& sigma_at_centers,
                   GradientScheme scheme) {
    const int n = field.size();
    if (n < 3) throw ConfigError("gradient: need at least 3 cells");
    if (static_cast<int>(sigma_at_centers.size()) != n)
        throw ConfigError("gradient: sigma vector size mismatch");
    const double h = field.grid.h;
    CellField out;
    out.grid = field.grid;
    out.values.resize(n);
    const auto& u = field.values;
    if (scheme == GradientScheme::central) {
        for (int j = 1; j < n - 1; ++j)
            out.values[j] = sigma_at_centers[j] * (u[j + 1] - u[j - 1]) / (2.0 * h);
    } else {
        // upwind: backward difference (forward in the first cell, below)
        for (int j = 1; j < n - 1; ++j)
            out.values[j] = sigma_at_centers[j] * (u[j] - u[j - 1]) / h;
    }
    out.values[0] = sigma_at_centers[0] * (u[1] - u[0]) / h;
    out.values[n - 1] = sigma_at_centers[n - 1] * (u[n - 1] - u[n - 2]) / h;
    return out;
}

// ------------------------------------------------------------------
// Driver cell averages
// ------------------------------------------------------------------

namespace {

/// Cell average of x -> g(t, x, y, z) over cell j.  Collapses to a
/// single center evaluation for drivers without x-dependence.
double gbar(const Driver& d, double t, const SpatialGrid& grid, int j, double y, double z,
            const QuadRule& rule) {
    if (!d.depends_on_x) return d.g(t, grid.center(j), y, z);
    const double mid = grid.center(j);
    const double half = 0.5 * grid.h;
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.x.size(); ++q)
        acc += rule.w[q] * d.g(t, mid + half * rule.x[q], y, z);
    return 0.5 * acc;
}

/// Cell average of dg/dy, analytic when provided, else a central
/// difference of gbar itself.
double gbar_dy(const Driver& d, double t, const SpatialGrid& grid, int j, double y, double z,
               const QuadRule& rule) {
    if (d.gy) {
        if (!d.depends_on_x) return d.gy(t, grid.center(j), y, z);
        const double mid = grid.center(j);
        const double half = 0.5 * grid.h;
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.x.size(); ++q)
            acc += rule.w[q] * d.gy(t, mid + half * rule.x[q], y, z);
        return 0.5 * acc;
    }
    const double delta = 1e-7 * std::max(1.0, std::abs(y));
    return (gbar(d, t, grid, j, y + delta, z, rule) - gbar(d, t, grid, j, y - delta, z, rule)) /
           (2.0 * delta);
}

struct CellSolveResult {
    double y = 0.0;
    int iterations = 0;
    bool converged = true;
    double residual = 0.0;
};

/// Solve y + dt * gbar_j(t, y, z) = rhs for one cell.
CellSolveResult solve_cell(const Driver& d, double t, const SpatialGrid& grid, int j,
                           double rhs, double z, double y_start, double dt,
                           const SolverConfig& cfg, const QuadRule& rule) {
    CellSolveResult res;
    double y = y_start;
    if (cfg.inner == InnerSolver::fixed_point) {
        for (int it = 1; it <= cfg.max_iter; ++it) {
            const double y_new = rhs - dt * gbar(d, t, grid, j, y, z, rule);
            const double delta = std::abs(y_new - y);
            y = y_new;
            res.iterations = it;
            if (delta <= cfg.tol) {
                res.y = y;
                return res;
            }
        }
    } else {
        for (int it = 1; it <= cfg.max_iter; ++it) {
            const double F = y + dt * gbar(d, t, grid, j, y, z, rule) - rhs;
            const double Fp = 1.0 + dt * gbar_dy(d, t, grid, j, y, z, rule);
            if (std::abs(Fp) < 1e-12) {
                res.converged = false;
                res.residual = F;
                res.y = y;
                return res;
            }
            const double step = F / Fp;
            y -= step;
            res.iterations = it;
            if (std::abs(step) <= cfg.tol) {
                res.y = y;
                return res;
            }
        }
    }
    res.converged = false;
    res.y = y;
    res.residual = y + dt * gbar(d, t, grid, j, y, z, rule) - rhs;
    return res;
}

/// Per-cell implicit solve across the whole field; throws SolveError on
/// the first nonconverged cell after the parallel region completes.
CellField solve_all_cells(const Driver& d, double t, const CellField& rhs,
                          const CellField& w, const CellField& y_start, double dt,
                          const SolverConfig& cfg, int* max_iterations) {
    const int n = rhs.size();
    const QuadRule& rule = gauss_legendre(cfg.quad_order);
    CellField out;
    out.grid = rhs.grid;
    out.values.resize(n);
    int worst_iters = 0;
    int bad_cell = -1;
    double bad_residual = 0.0;

#pragma omp parallel
    {
        int local_worst = 0;
        int local_bad = -1;
        double local_res = 0.0;
#pragma omp for schedule(static) nowait
        for (int j = 0; j < n; ++j) {
            CellSolveResult r = solve_cell(d, t, rhs.grid, j, rhs.values[j], w.values[j],
                                           y_start.values[j], dt, cfg, rule);
            out.values[j] = r.y;
            local_worst = std::max(local_worst, r.iterations);
            if (!r.converged && local_bad < 0) {
                local_bad = j;
                local_res = r.residual;
            }
        }
#pragma omp critical
        {
            worst_iters = std::max(worst_iters, local_worst);
            if (local_bad >= 0 && (bad_cell < 0 || local_bad < bad_cell)) {
                bad_cell = local_bad;
                bad_residual = local_res;
            }
        }
    }
    if (bad_cell >= 0)
        throw SolveError("inner solver did not converge in cell " + std::to_string(bad_cell) +
                         " (residual " + std::to_string(bad_residual) + ")");
    if (max_iterations) *max_iterations = std::max(*max_iterations, worst_iters);
    return out;
}

} // namespace

// ------------------------------------------------------------------
// Steps
// ------------------------------------------------------------------

CellField step_explicit(const TransitionMatrix& P, const CellField& v_next,
                        const Driver& driver, double t_next, double dt, int quad_order) {
    if (driver.depends_on_z)
        throw ConfigError("step_explicit: driver depends on z; use hybrid or implicit");
    const QuadRule& rule = gauss_legendre(quad_order);
    CellField staged;
    staged.grid = v_next.grid;
    staged.values.resize(v_next.size());
    const int n = v_next.size();
#pragma omp parallel for schedule(static)
    for (int j = 0; j < n; ++j)
        staged.values[j] =
            v_next.values[j] - dt * gbar(driver, t_next, v_next.grid, j, v_next.values[j], 0.0, rule);
    for (int j = 0; j < n; ++j)
        if (!std::isfinite(staged.values[j]))
            throw EvalError("step_explicit: non-finite driver value at t = " + std::to_string(t_next) +
                            ", cell " + std::to_string(j));
    return apply(P, staged);
}

std::pair<CellField, CellField> step_hybrid(const TransitionMatrix& P, const CellField& v_next,
                                            const Driver& driver,
                                            const std::vector<double>& sigma_at_centers,
                                            double t_k, double dt, const SolverConfig& cfg,
                                            StepStats* stats) {
    CellField w = gradient(v_next, sigma_at_centers, cfg.gradient_scheme);
    CellField rhs = apply(P, v_next);
    int iters = 0;
    CellField v = solve_all_cells(driver, t_k, rhs, w, v_next, dt, cfg, &iters);
    if (stats) stats->max_inner_iterations = std::max(stats->max_inner_iterations, iters);
    return {std::move(v), std::move(w)};
}

std::pair<CellField, CellField> step_implicit(const TransitionMatrix& P, const CellField& v_next,
                                              const Driver& driver,
                                              const std::vector<double>& sigma_at_centers,
                                              double t_k, double dt, const SolverConfig& cfg,
                                              StepStats* stats) {
    CellField rhs = apply(P, v_next);
    int iters = 0;

    if (!driver.depends_on_z) {
        // The gradient has no influence on the solve: one outer pass is
        // exact, and the returned w is the gradient of the solution
        // itself (the implicit scheme's own difference rule).
        CellField w0 = gradient(v_next, sigma_at_centers, cfg.gradient_scheme);
        CellField v = solve_all_cells(driver, t_k, rhs, w0, v_next, dt, cfg, &iters);
        CellField w = gradient(v, sigma_at_centers, cfg.gradient_scheme);
        if (stats) {
            stats->max_inner_iterations = std::max(stats->max_inner_iterations, iters);
            stats->max_outer_iterations = std::max(stats->max_outer_iterations, 1);
        }
        return {std::move(v), std::move(w)};
    }

    // Picard on the z-coupling: freeze w at the current iterate's
    // gradient, solve every cell, refresh.
    CellField v_cur = v_next;
    CellField w = gradient(v_cur, sigma_at_centers, cfg.gradient_scheme);
    for (int outer = 1; outer <= cfg.outer_max_iter; ++outer) {
        w = gradient(v_cur, sigma_at_centers, cfg.gradient_scheme);
        CellField v_new = solve_all_cells(driver, t_k, rhs, w, v_cur, dt, cfg, &iters);
        double delta = 0.0;
        for (int j = 0; j < v_new.size(); ++j)
            delta = std::max(delta, std::abs(v_new.values[j] - v_cur.values[j]));
        v_cur = std::move(v_new);
        if (stats) {
            stats->max_inner_iterations = std::max(stats->max_inner_iterations, iters);
            stats->max_outer_iterations = std::max(stats->max_outer_iterations, outer);
        }
        if (delta <= cfg.outer_tol) {
            w = gradient(v_cur, sigma_at_centers, cfg.gradient_scheme);
            return {std::move(v_cur), std::move(w)};
        }
    }
    char tol_buf[32];
    std::snprintf(tol_buf, sizeof(tol_buf), "%g", cfg.outer_tol);
    throw SolveError("step_implicit: outer Picard loop did not reach tolerance " +
                     std::string(tol_buf) + " in " + std::to_string(cfg.outer_max_iter) +
                     " iterations (needs dt*|g_z|*sigma/h < 1 to contract)");
}

// ------------------------------------------------------------------
// Full sweep
// ------------------------------------------------------------------

SolutionSurface solve_backward(const ProblemSpec& problem, const SpatialGrid& sgrid,
                               const TimeGrid& tgrid, const TransitionMatrix& P,
                               const SolverConfig& cfg) {
    if (cfg.algorithm == Algorithm::explicit_ && problem.driver.depends_on_z)
        throw ConfigError("solve_backward: explicit algorithm requires a z-independent driver");
    const int N = tgrid.n_steps;
    const std::vector<double> sig_c = sigma_at_centers(problem.kernel, sgrid);

    SolutionSurface s;
    s.v.resize(N + 1);
    s.w.resize(N + 1);
    s.v[N] = terminal_coefficients(problem.payoff, sgrid, cfg.quad_order, problem.kinks);
    s.w[N] = gradient(s.v[N], sig_c, cfg.gradient_scheme);

    for (int k = N - 1; k >= 0; --k) {
        try {
            switch (cfg.algorithm) {
                case Algorithm::explicit_:
                    s.v[k] = step_explicit(P, s.v[k + 1], problem.driver, tgrid.t(k + 1), tgrid.dt,
                                           cfg.quad_order);
                    s.w[k] = gradient(s.v[k + 1], sig_c, cfg.gradient_scheme);
                    break;
                case Algorithm::hybrid: {
                    auto [v, w] = step_hybrid(P, s.v[k + 1], problem.driver, sig_c, tgrid.t(k),
                                              tgrid.dt, cfg, &s.stats);
                    s.v[k] = std::move(v);
                    s.w[k] = std::move(w);
                    break;
                }
                case Algorithm::implicit: {
                    auto [v, w] = step_implicit(P, s.v[k + 1], problem.driver, sig_c, tgrid.t(k),
                                                tgrid.dt, cfg, &s.stats);
                    s.v[k] = std::move(v);
                    s.w[k] = std::move(w);
                    break;
                }
            }
        } catch (const SolveError& e) {
            throw SolveError(std::string(e.what()) + " at step k = " + std::to_string(k));
        }
    }
    s.y0 = interpolate(s.v[0], problem.x0);
    s.z0 = interpolate(s.w[0], problem.x0);
    return s;
}

// ------------------------------------------------------------------
// Standalone T operators
// ------------------------------------------------------------------

CellField t_operator_explicit(double dt, double t, const CellField& field,
                              const Driver& driver) {
    if (driver.depends_on_z)
        throw ConfigError("t_operator_explicit: driver must be z-independent");
    CellField out;
    out.grid = field.grid;
    out.values.resize(field.size());
    for (int j = 0; j < field.size(); ++j) {
        const double y = field.values[j];
        out.values[j] = y - dt * driver.g(t, field.grid.center(j), y, 0.0);
    }
    return out;
}

CellField t_operator_implicit(double dt, double t, const CellField& field,
                              const Driver& driver, const SolverConfig& cfg) {
    const int n = field.size();
    CellField out;
    out.grid = field.grid;
    out.values.resize(n);
    const QuadRule& rule = gauss_legendre(cfg.quad_order);
    Driver pointwise = driver;
    pointwise.depends_on_x = false; // T operators act pointwise at centers
    for (int j = 0; j < n; ++j) {
        CellSolveResult r = solve_cell(pointwise, t, field.grid, j, field.values[j], 0.0,
                                       field.values[j], dt, cfg, rule);
        if (!r.converged)
            throw SolveError("t_operator_implicit: no convergence in cell " + std::to_string(j));
        out.values[j] = r.y;
    }
    return out;
}

} // namespace fbsde
