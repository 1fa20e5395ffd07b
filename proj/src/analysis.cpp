#include "fbsde/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fbsde/errors.hpp"
#include "fbsde/math.hpp"

namespace fbsde {

namespace {

/// Windowed L2 norm over the stated domain: cells whose centers lie in
/// (problem.lo, problem.hi].
double windowed_norm(const std::vector<double>& values, const SpatialGrid& g, double lo,
                     double hi) {
    double acc = 0.0;
    for (int j = 0; j < g.n_cells; ++j) {
        const double c = g.center(j);
        if (c > lo && c <= hi) acc += values[j] * values[j];
    }
    return std::sqrt(acc * g.h);
}

/// Cell averages of the analytic value field at time t, over the cells
/// of the computational grid.  At the terminal time the payoff (with
/// kink splits) is used, because the analytic pricing formulas reduce
/// to it there anyway and the kink needs split quadrature.
CellField project_analytic(const ProblemSpec& problem, const SpatialGrid& g, double t,
                           double T) {
    if (t >= T) return project(problem.payoff, g, 5, problem.kinks);
    const auto& v = problem.analytic->v;
    return project([&](double x) { return v(t, x); }, g, 5);
}

} // namespace

double relative_l2_error(const SolutionSurface& surface, const ProblemSpec& problem,
                         const SpatialGrid& sgrid, const TimeGrid& tgrid) {
    if (!problem.analytic)
        throw ConfigError("relative_l2_error: problem has no analytic solution");
    const int N = tgrid.n_steps;
    double max_err = 0.0;
    double max_ref = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : max_err, max_ref)
    for (int k = 0; k <= N; ++k) {
        CellField ref = project_analytic(problem, sgrid, tgrid.t(k), problem.T);
        std::vector<double> diff(ref.values.size());
        for (std::size_t j = 0; j < diff.size(); ++j)
            diff[j] = surface.v[k].values[j] - ref.values[j];
        max_err = std::max(max_err, windowed_norm(diff, sgrid, problem.lo, problem.hi));
        max_ref = std::max(max_ref, windowed_norm(ref.values, sgrid, problem.lo, problem.hi));
    }
    if (max_ref == 0.0) throw ConfigError("relative_l2_error: analytic reference is zero");
    return max_err / max_ref;
}

PointErrors point_errors(const SolutionSurface& surface, const ProblemSpec& problem) {
    if (!problem.Y0 || !problem.Z0)
        throw ConfigError("point_errors: problem lacks exact (Y0, Z0)");
    PointErrors e;
    const double y_ref = *problem.Y0;
    const double z_ref = *problem.Z0;
    if (std::abs(y_ref) < 1e-14) {
        e.e_y0 = std::abs(surface.y0 - y_ref);
        e.y0_absolute = true;
    } else {
        e.e_y0 = std::abs(surface.y0 - y_ref) / std::abs(y_ref);
    }
    if (std::abs(z_ref) < 1e-14) {
        e.e_z0 = std::abs(surface.z0 - z_ref);
        e.z0_absolute = true;
    } else {
        e.e_z0 = std::abs(surface.z0 - z_ref) / std::abs(z_ref);
    }
    return e;
}

double convergence_order(const std::vector<std::pair<double, double>>& h_and_error) {
    if (h_and_error.size() < 2)
        throw ConfigError("convergence_order: need at least two (h, error) rows");
    for (std::size_t i = 1; i < h_and_error.size(); ++i)
        if (!(h_and_error[i].first < h_and_error[i - 1].first))
            throw ConfigError("convergence_order: mesh widths must be strictly decreasing");
    for (const auto& [h, e] : h_and_error)
        if (!(e > 0.0)) throw ConfigError("convergence_order: errors must be strictly positive");
    return log_log_slope(h_and_error);
}

double truncation_defect(const ProblemSpec& problem, const SpatialGrid& sgrid,
                         const TimeGrid& tgrid, const TransitionMatrix& P, int k,
                         bool implicit_form, const SolverConfig& cfg) {
    if (!problem.analytic) throw ConfigError("truncation_defect: analytic solution required");
    if (k < 0 || k >= tgrid.n_steps) throw ConfigError("truncation_defect: step index out of range");
    const double dt = tgrid.dt;
    const double t_k = tgrid.t(k);
    const double t_next = tgrid.t(k + 1);

    CellField v_next = project_analytic(problem, sgrid, t_next, problem.T);
    CellField v_now = project_analytic(problem, sgrid, t_k, problem.T);
    // The z argument of the driver is fed with the analytic
    // sigma-weighted gradient (cell-averaged), the natural lift of the
    // one-step consistency residual to z-dependent drivers.
    const auto& vx = problem.analytic->vx;
    CellField w_next = project(
        [&](double x) { return problem.kernel.sigma_at(x) * vx(t_next, x); }, sgrid, 5);

    const QuadRule& rule = gauss_legendre(cfg.quad_order);
    const Driver& d = problem.driver;
    CellField staged;
    staged.grid = sgrid;
    staged.values.resize(sgrid.n_cells);
    if (!implicit_form) {
        for (int j = 0; j < sgrid.n_cells; ++j) {
            double g_avg;
            if (!d.depends_on_x) {
                g_avg = d.g(t_next, sgrid.center(j), v_next.values[j], w_next.values[j]);
            } else {
                const double mid = sgrid.center(j), half = 0.5 * sgrid.h;
                double acc = 0.0;
                for (std::size_t q = 0; q < rule.x.size(); ++q)
                    acc += rule.w[q] *
                           d.g(t_next, mid + half * rule.x[q], v_next.values[j], w_next.values[j]);
                g_avg = 0.5 * acc;
            }
            staged.values[j] = v_next.values[j] - dt * g_avg;
        }
    } else {
        // Implicit form solves u + dt g(t_k, ., u, z) = v(t_{k+1}) with
        // z frozen at the analytic gradient, cell by cell.
        staged = v_next;
        for (int j = 0; j < sgrid.n_cells; ++j) {
            double u = v_next.values[j];
            for (int it = 0; it < cfg.max_iter; ++it) {
                double g_val;
                if (!d.depends_on_x) {
                    g_val = d.g(t_k, sgrid.center(j), u, w_next.values[j]);
                } else {
                    const double mid = sgrid.center(j), half = 0.5 * sgrid.h;
                    double acc = 0.0;
                    for (std::size_t q = 0; q < rule.x.size(); ++q)
                        acc += rule.w[q] * d.g(t_k, mid + half * rule.x[q], u, w_next.values[j]);
                    g_val = 0.5 * acc;
                }
                const double u_new = v_next.values[j] - dt * g_val;
                const double delta = std::abs(u_new - u);
                u = u_new;
                if (delta <= cfg.tol) break;
            }
            staged.values[j] = u;
        }
    }
    CellField transported = apply(P, staged);
    std::vector<double> diff(static_cast<std::size_t>(sgrid.n_cells));
    for (int j = 0; j < sgrid.n_cells; ++j) diff[j] = v_now.values[j] - transported.values[j];
    return windowed_norm(diff, sgrid, problem.lo, problem.hi);
}

// ------------------------------------------------------------------
// Brute-force oracle
// ------------------------------------------------------------------
//
// Everything below is deliberately plain: dense loops, bisection for
// scalar roots, no shared helpers with the stepper.  It exists so the
// production path can be checked against an implementation too simple
// to be wrong in the same way.

namespace {

double brute_cell_average(const std::function<double(double)>& f, double a, double b) {
    // Composite Simpson with a fixed fine partition; exact for cubics,
    // which is all the randomized tiny instances use.
    const int m = 64; // panels
    const double w = (b - a) / m;
    double acc = f(a) + f(b);
    for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * w);
    return acc * w / 3.0 / (b - a);
}

double brute_scalar_root(const std::function<double(double)>& F, double guess) {
    // Expand a bracket around the guess until the sign changes, then
    // bisect to near machine precision.
    double lo = guess - 1.0, hi = guess + 1.0;
    double flo = F(lo), fhi = F(hi);
    for (int grow = 0; grow < 80 && flo * fhi > 0.0; ++grow) {
        lo -= (guess == 0.0 ? 1.0 : std::abs(guess) + 1.0);
        hi += (guess == 0.0 ? 1.0 : std::abs(guess) + 1.0);
        flo = F(lo);
        fhi = F(hi);
    }
    if (flo * fhi > 0.0) throw SolveError("brute_scalar_root: no bracket found");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = F(mid);
        if (fm == 0.0 || hi - lo < 1e-15 * (1.0 + std::abs(mid))) return mid;
        if (flo * fm <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

SolutionSurface brute_force_surface(const ProblemSpec& problem, const SpatialGrid& sgrid,
                                    const TimeGrid& tgrid,
                                    const std::vector<std::vector<double>>& dense_P,
                                    const SolverConfig& cfg) {
    const int n = sgrid.n_cells;
    const int N = tgrid.n_steps;
    if (n > 5 || N > 3)
        throw ConfigError("brute_force_surface: oracle restricted to <= 5 cells and <= 3 steps");
    if (static_cast<int>(dense_P.size()) != n)
        throw ConfigError("brute_force_surface: matrix size mismatch");
    const double h = sgrid.h;
    const double dt = tgrid.dt;

    std::vector<double> sig(n);
    for (int j = 0; j < n; ++j) sig[j] = problem.kernel.sigma_at(sgrid.center(j));

    auto matvec = [&](const std::vector<double>& u) {
        std::vector<double> out(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) out[i] += dense_P[i][j] * u[j];
        return out;
    };
    auto grad = [&](const std::vector<double>& u) {
        std::vector<double> w(n);
        for (int j = 1; j < n - 1; ++j) w[j] = sig[j] * (u[j + 1] - u[j - 1]) / (2.0 * h);
        w[0] = sig[0] * (u[1] - u[0]) / h;
        w[n - 1] = sig[n - 1] * (u[n - 1] - u[n - 2]) / h;
        return w;
    };
    const auto& g = problem.driver.g;

    SolutionSurface s;
    s.v.resize(N + 1);
    s.w.resize(N + 1);
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j)
        v[j] = brute_cell_average(problem.payoff, sgrid.left_edge(j), sgrid.right_edge(j));

    auto to_field = [&](const std::vector<double>& u) {
        CellField f;
        f.grid = sgrid;
        f.values = u;
        return f;
    };
    s.v[N] = to_field(v);
    s.w[N] = to_field(grad(v));

    for (int k = N - 1; k >= 0; --k) {
        const double t_k = tgrid.t(k);
        const double t_next = tgrid.t(k + 1);
        std::vector<double> w_k(n), v_k(n);
        if (cfg.algorithm == Algorithm::explicit_) {
            std::vector<double> staged(n);
            for (int j = 0; j < n; ++j)
                staged[j] = v[j] - dt * g(t_next, sgrid.center(j), v[j], 0.0);
            v_k = matvec(staged);
            w_k = grad(v);
        } else if (cfg.algorithm == Algorithm::hybrid) {
            w_k = grad(v);
            const std::vector<double> rhs = matvec(v);
            for (int j = 0; j < n; ++j) {
                const double c = sgrid.center(j), z = w_k[j], b = rhs[j];
                v_k[j] = brute_scalar_root(
                    [&](double y) { return y + dt * g(t_k, c, y, z) - b; }, v[j]);
            }
        } else {
            const std::vector<double> rhs = matvec(v);
            std::vector<double> cur = v;
            for (int outer = 0; outer < 200; ++outer) {
                w_k = grad(cur);
                std::vector<double> next(n);
                for (int j = 0; j < n; ++j) {
                    const double c = sgrid.center(j), z = w_k[j], b = rhs[j];
                    next[j] = brute_scalar_root(
                        [&](double y) { return y + dt * g(t_k, c, y, z) - b; }, cur[j]);
                }
                double delta = 0.0;
                for (int j = 0; j < n; ++j) delta = std::max(delta, std::abs(next[j] - cur[j]));
                cur = next;
                if (delta <= 1e-14) break;
            }
            v_k = cur;
            w_k = grad(v_k);
        }
        v = v_k;
        s.v[k] = to_field(v_k);
        s.w[k] = to_field(w_k);
    }

    // Literal center-anchored linear interpolation at x0.
    const double x0 = problem.x0;
    auto read_at = [&](const std::vector<double>& u) {
        if (x0 <= sgrid.center(0)) return u[0];
        if (x0 >= sgrid.center(n - 1)) return u[n - 1];
        for (int j = 0; j < n - 1; ++j) {
            const double a = sgrid.center(j), b2 = sgrid.center(j + 1);
            if (x0 >= a && x0 <= b2) {
                const double t = (x0 - a) / (b2 - a);
                return (1.0 - t) * u[j] + t * u[j + 1];
            }
        }
        return u[n - 1];
    };
    s.y0 = read_at(s.v[0].values);
    s.z0 = read_at(s.w[0].values);
    return s;
}

} // namespace fbsde
