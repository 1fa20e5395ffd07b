#include "fbsde/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fbsde/errors.hpp"
#include "fbsde/math.hpp"

namespace fbsde {

int SpatialGrid::locate(double x) const {
    // Cells are left-open/right-closed, so an exact edge belongs to the
    // cell on its left.  ceil handles that directly: for x = lo + m*h
    // exactly, ceil(m) - 1 = m - 1.
    double t = (x - lo) / h;
    int j = static_cast<int>(std::ceil(t)) - 1;
    return std::clamp(j, 0, n_cells - 1);
}

SpatialGrid build_spatial_grid(double lo, double hi, int n_cells) {
    if (!(lo < hi)) throw ConfigError("build_spatial_grid: need lo < hi, got [" +
                                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
    if (n_cells < 2) throw ConfigError("build_spatial_grid: need n_cells >= 2, got " +
                                       std::to_string(n_cells));
    SpatialGrid g;
    g.lo = lo;
    g.hi = hi;
    g.n_cells = n_cells;
    g.h = (hi - lo) / n_cells;
    return g;
}

TimeGrid build_time_grid(double horizon, int n_steps) {
    if (!(horizon > 0.0)) throw ConfigError("build_time_grid: horizon must be positive");
    if (n_steps < 1) throw ConfigError("build_time_grid: need n_steps >= 1");
    TimeGrid t;
    t.horizon = horizon;
    t.n_steps = n_steps;
    t.dt = horizon / n_steps;
    return t;
}

namespace {

/// Average of f over [a, b] by a mapped Gauss-Legendre rule.
double cell_average(const std::function<double(double)>& f, double a, double b,
                    const QuadRule& rule) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (std::size_t g = 0; g < rule.x.size(); ++g) acc += rule.w[g] * f(mid + half * rule.x[g]);
    return 0.5 * acc; // weights sum to 2
}

} // namespace

CellField project(const std::function<double(double)>& f, const SpatialGrid& grid,
                  int quad_order) {
    return project(f, grid, quad_order, {});
}

CellField project(const std::function<double(double)>& f, const SpatialGrid& grid,
                  int quad_order, const std::vector<double>& breaks) {
    const QuadRule& rule = gauss_legendre(quad_order);
    CellField out;
    out.grid = grid;
    out.values.resize(grid.n_cells);

#pragma omp parallel for schedule(static)
    for (int j = 0; j < grid.n_cells; ++j) {
        const double a = grid.left_edge(j);
        const double b = grid.right_edge(j);
        // Split the cell at any interior break point so each quadrature
        // panel sees a smooth integrand.
        double acc = 0.0;
        double seg_lo = a;
        bool plain = true;
        for (double brk : breaks) {
            if (brk > a && brk < b) {
                acc += cell_average(f, seg_lo, brk, rule) * (brk - seg_lo);
                seg_lo = brk;
                plain = false;
            }
        }
        double value = plain ? cell_average(f, a, b, rule)
                             : (acc + cell_average(f, seg_lo, b, rule) * (b - seg_lo)) / (b - a);
        out.values[j] = value;
    }
    for (int j = 0; j < grid.n_cells; ++j)
        if (!std::isfinite(out.values[j]))
            throw EvalError("project: non-finite integrand average in cell " + std::to_string(j) +
                            " near x = " + std::to_string(grid.center(j)));
    return out;
}

double interpolate(const CellField& field, double x) {
    const SpatialGrid& g = field.grid;
    if (!(x > g.lo && x <= g.hi))
        throw ConfigError("interpolate: x = " + std::to_string(x) + " outside (" +
                          std::to_string(g.lo) + ", " + std::to_string(g.hi) + "]");
    const double first_center = g.center(0);
    const double last_center = g.center(g.n_cells - 1);
    if (x <= first_center) return field.values[0];
    if (x >= last_center) return field.values[g.n_cells - 1];
    // x sits between centers j and j+1.
    int j = static_cast<int>(std::floor((x - first_center) / g.h));
    j = std::clamp(j, 0, g.n_cells - 2);
    double cj = g.center(j);
    if (x < cj) { --j; cj = g.center(j); }          // floating-point guard
    else if (x > cj + g.h) { ++j; cj = g.center(j); }
    const double t = (x - cj) / g.h;
    return (1.0 - t) * field.values[j] + t * field.values[j + 1];
}

double l2_norm(const CellField& field) {
    double acc = 0.0;
    for (double v : field.values) acc += v * v;
    return std::sqrt(acc * field.grid.h);
}

} // namespace fbsde
