#pragma once

#include <functional>
#include <vector>

namespace fbsde {

// ==================================================================
// Spatial and temporal partitions, cell fields, projection
// ==================================================================
//
// The state axis is cut into uniform half-open cells
//     I_j = (lo + j*h, lo + (j+1)*h],   j = 0 .. n_cells-1,
// and every spatial quantity is represented by its vector of cell
// averages (a CellField).  The normalized-indicator coefficients used
// in the underlying derivation relate to these values by
// alpha_j = value_j * sqrt(h); we store values only, never both.

struct SpatialGrid {
    double lo = 0.0;
    double hi = 0.0;
    int n_cells = 0;
    double h = 0.0; // (hi - lo) / n_cells

    double center(int j) const { return lo + (j + 0.5) * h; }
    double left_edge(int j) const { return lo + j * h; }
    double right_edge(int j) const { return lo + (j + 1) * h; }

    /// Index of the cell containing x under the half-open convention
    /// (left-exclusive, right-inclusive), clamped to valid range.
    /// Exact for cell centers and for points that are exact edges.
    int locate(double x) const;
};

/// Uniform time partition of [0, T]: t_k = k * dt, dt = T / n_steps.
struct TimeGrid {
    double horizon = 0.0;
    int n_steps = 0;
    double dt = 0.0;

    double t(int k) const { return k * dt; }
};

/// Vector of per-cell values tagged with its grid.
struct CellField {
    SpatialGrid grid;
    std::vector<double> values;

    int size() const { return static_cast<int>(values.size()); }
    double& operator[](int j) { return values[j]; }
    double operator[](int j) const { return values[j]; }
};

// ------------------------------------------------------------------
// Constructors and operations
// ------------------------------------------------------------------

/// Build a uniform grid.  Throws ConfigError for lo >= hi or
/// n_cells < 2.
SpatialGrid build_spatial_grid(double lo, double hi, int n_cells);

TimeGrid build_time_grid(double horizon, int n_steps);

/// Cell-average projection: values[j] = (1/h) * integral of f over I_j,
/// by Gauss-Legendre quadrature of the given order (default 5).
/// Throws EvalError (naming the cell) if f returns a non-finite value.
CellField project(const std::function<double(double)>& f, const SpatialGrid& grid,
                  int quad_order = 5);

/// Same, but the quadrature splits any cell containing one of the given
/// break points, so piecewise-smooth integrands (kinked payoffs) are
/// still integrated to quadrature accuracy on each smooth piece.
CellField project(const std::function<double(double)>& f, const SpatialGrid& grid,
                  int quad_order, const std::vector<double>& breaks);

/// Piecewise-linear interpolation anchored at cell centers; constant
/// within half a cell of either wall.  Throws ConfigError for x
/// outside (lo, hi].
double interpolate(const CellField& field, double x);

/// Discrete L2 norm: sqrt(sum_j values[j]^2 * h).
double l2_norm(const CellField& field);

} // namespace fbsde
