#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace fbsde {

// ==================================================================
// Small numerical utilities shared across modules
// ==================================================================

/// Standard normal CDF, absolute error below 1e-15 (delegates to the C
/// library's erfc, which is correctly rounded to a few ulp).
double normal_cdf(double x);

/// Standard normal density.
double normal_pdf(double x);

/// Quantile-style helper: returns q > 0 such that normal_cdf(-q) = p,
/// for p in (0, 0.5).  Used to convert a tail-mass threshold into a
/// bandwidth radius measured in standard deviations.  Newton iteration
/// on the CDF; accurate to ~1e-12 which is far more than band sizing
/// needs.
double normal_upper_quantile(double p);

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
/// Computed once per order by Newton iteration on the Legendre
/// polynomial and cached; exact (to roundoff) for polynomials of
/// degree <= 2n-1.
struct QuadRule {
    std::vector<double> x; // nodes in (-1, 1)
    std::vector<double> w; // positive weights summing to 2
};
const QuadRule& gauss_legendre(int order);

/// Least-squares slope of log(y) against log(x).  Inputs must be
/// strictly positive; this is the convergence-order estimator.
double log_log_slope(const std::vector<std::pair<double, double>>& xy);

// ------------------------------------------------------------------
// Counter-based random streams (Monte Carlo kernel assembly)
// ------------------------------------------------------------------
//
// Every random number is a pure function of (seed, row, sample,
// counter), so Monte Carlo assembly is bit-for-bit reproducible no
// matter how work is scheduled across threads.

/// SplitMix64 finalizer: a high-quality 64-bit mixing function.
std::uint64_t mix64(std::uint64_t z);

/// Uniform double in [0, 1) from a (seed, row, sample, counter) tuple.
double counter_uniform(std::uint64_t seed, std::uint64_t row, std::uint64_t sample,
                       std::uint64_t counter);

/// Standard normal draw from consecutive counters (Box-Muller on two
/// counter uniforms; the cosine branch only, one normal per call, so
/// the stream layout stays trivially indexable).
double counter_normal(std::uint64_t seed, std::uint64_t row, std::uint64_t sample,
                      std::uint64_t counter);

} // namespace fbsde
