#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fbsde/grid.hpp"

namespace fbsde {

// ==================================================================
// The discrete transition semigroup
// ==================================================================
//
// For a time-homogeneous Ito diffusion dX = b(X)dt + s(X)dB with
// transition density p(dt, x, y), the scheme's central object is the
// cell-to-cell transition matrix
//
//     P_ij = (1/h) * double-integral over I_i x I_j of p(dt, x, y),
//
// i.e. the probability of landing in cell j after one step of length
// dt, averaged over a uniform start in cell i.  Rows are nonnegative
// with mass <= 1; mass below 1 is exactly the probability of leaving
// the truncated state interval (plus a provably tiny banding drop).

enum class KernelKind { brownian, geometric, empirical };

struct TransitionKernel {
    KernelKind kind = KernelKind::brownian;

    // Parameters of the analytic kinds.  For brownian: dX = b dt + sigma dB.
    // For geometric: dX = mu X dt + sigma X dB (b stores mu).
    double b = 0.0;
    double sigma = 1.0;

    // Coefficient functions of the empirical (Monte Carlo) kind.
    std::function<double(double)> sde_b;
    std::function<double(double)> sde_sigma;
    int substeps = 1;

    static TransitionKernel brownian_kernel(double b, double sigma);
    static TransitionKernel geometric_kernel(double mu, double sigma);
    static TransitionKernel empirical_kernel(std::function<double(double)> b,
                                             std::function<double(double)> sigma,
                                             int substeps = 1);

    bool is_analytic() const { return kind != KernelKind::empirical; }

    /// Transition CDF F(dt, x, y) = P(X_dt <= y | X_0 = x) for the
    /// analytic kinds.  The geometric kernel returns 0 for y <= 0.
    double cdf(double dt, double x, double y) const;

    /// Transition density (analytic kinds).
    double density(double dt, double x, double y) const;

    /// Diffusion coefficient at a state point (all kinds).
    double sigma_at(double x) const;
    /// Drift coefficient at a state point (all kinds).
    double drift_at(double x) const;
};

/// Banded nonnegative transition matrix.  Storage is row-ragged: row i
/// holds columns [col_lo[i], col_lo[i] + row_len[i]).  `band` records
/// the maximum half-bandwidth over rows; every entry outside a row's
/// stored range is identically zero by construction.
struct TransitionMatrix {
    int n = 0;
    double dt = 0.0;
    int band = 0;
    std::vector<int> col_lo;
    std::vector<int> row_len;
    std::vector<std::size_t> offset; // offset[i] = start of row i in entries
    std::vector<double> entries;
    std::vector<double> row_mass;

    double entry(int i, int j) const {
        if (j < col_lo[i] || j >= col_lo[i] + row_len[i]) return 0.0;
        return entries[offset[i] + static_cast<std::size_t>(j - col_lo[i])];
    }
};

// ------------------------------------------------------------------
// Assembly
// ------------------------------------------------------------------

/// Assemble P by quadrature against the analytic kernel.  The inner
/// integral over the destination cell I_j is exact — a difference of
/// transition CDFs at the cell edges — and the outer average over the
/// source cell I_i uses Gauss-Legendre of order 5.  Columns whose
/// displacement from the row's drifted center exceeds the radius at
/// which the kernel tail mass falls below band_eps are dropped.
/// Quadrature noise down to -1e-13 is clamped to zero; anything more
/// negative would indicate a kernel bug and throws.
TransitionMatrix assemble_density(const TransitionKernel& kernel, const SpatialGrid& grid,
                                  double dt, double band_eps = 1e-10);

/// Assemble P by stratified Monte Carlo for the empirical kernel:
/// samples_per_cell paths per row, started uniformly inside the source
/// cell (stratified into strata_per_cell sub-intervals), advanced by
/// Euler-Maruyama with the kernel's substeps, and tallied by
/// destination cell.  All randomness is counter-based on
/// (seed, row, sample), so results are bit-identical for a fixed seed
/// regardless of threading.  Encountering sigma(x) < 0 throws
/// ModelError (sigma == 0 is legal: frozen or purely deterministic
/// dynamics).
TransitionMatrix assemble_mc(const TransitionKernel& kernel, const SpatialGrid& grid,
                             double dt, int samples_per_cell, int strata_per_cell,
                             std::uint64_t seed);

/// Banded matrix-vector product: (P u)_i = sum_j P_ij u_j.
CellField apply(const TransitionMatrix& P, const CellField& field);

/// 1 - row_mass per row: the per-row probability mass lost to domain
/// truncation (and, negligibly, band truncation).
std::vector<double> mass_deficit(const TransitionMatrix& P);

/// Semigroup-property diagnostic: assembles P(dt) and P(2 dt) on the
/// given grid and returns the maximum row L1 norm of P(dt)^2 - P(2 dt)
/// over interior rows — rows whose one- and two-step supports stay off
/// the walls.  Wall rows are excluded: there the difference is the gap
/// between two-step and one-shot exit probabilities, an O(1)
/// truncation effect that mass_deficit reports and that refinement
/// cannot shrink.  The interior defect decreases under h-refinement;
/// used as a property test only.
double chapman_kolmogorov_defect(const TransitionKernel& kernel, const SpatialGrid& grid,
                                 double dt);

/// Scale every row to unit mass (rows with zero mass are left as-is).
/// Off by default everywhere: the deficit is the domain-truncation
/// error the scheme deliberately tolerates.  This exists for
/// sensitivity studies only.
TransitionMatrix renormalize_rows(TransitionMatrix P);

/// Build a TransitionMatrix from a dense row-major matrix (test and
/// oracle helper; stores every entry, band = n-1).
TransitionMatrix transition_from_dense(const std::vector<std::vector<double>>& dense,
                                       double dt);

/// Debug dump: header line "n,dt,band", then one "i,j,value" line per
/// stored entry.
void dump_matrix(const TransitionMatrix& P, const std::string& path);

} // namespace fbsde
