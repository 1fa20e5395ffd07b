#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fbsde/grid.hpp"
#include "fbsde/math.hpp"
#include "fbsde/semigroup.hpp"
#include "fbsde/stepper.hpp"

namespace fbsde {

// ==================================================================
// Benchmark problems and analytic oracles
// ==================================================================

/// Closed-form reference solution: the value function v(t, x) and its
/// space derivative vx(t, x).  The z-field oracle is sigma(x)*vx.
struct AnalyticSolution {
    std::function<double(double t, double x)> v;
    std::function<double(double t, double x)> vx;
};

/// A decoupled Markovian FBSDE on a truncated state interval:
///   dX = b dt + s dB  (kernel),  X_0 = x0
///   dY = g(t, X, Y, Z) dt + Z dB,  Y_T = payoff(X_T).
struct ProblemSpec {
    std::string name;
    TransitionKernel kernel;
    Driver driver;
    std::function<double(double)> payoff;
    std::vector<double> kinks; // payoff break points, for cell-split quadrature
    double T = 1.0;
    double lo = 0.0;
    double hi = 1.0;
    double x0 = 0.0;
    std::optional<AnalyticSolution> analytic;
    /// Exact (Y_0, Z_0) at (0, x0) when known in closed form.
    std::optional<double> Y0;
    std::optional<double> Z0;
};

/// Market data for the differential-rates pricing family.
struct MarketParams {
    double mu = 0.0;    // drift of the traded asset, per year
    double sigma = 0.0; // volatility, per sqrt(year)
    double r = 0.0;     // lending rate
    double R = 0.0;     // borrowing rate
    double T = 0.0;     // horizon, years
    double x0 = 0.0;    // spot
    double K = 0.0;     // strike
    double K1 = 0.0;    // lower strike (combinations)
    double K2 = 0.0;    // upper strike (combinations)
};

enum class PayoffKind { straddle, call, call_combination };

// ------------------------------------------------------------------
// Problem constructors
// ------------------------------------------------------------------

/// Oscillatory benchmark with known solution v = sin(pi(x+t)/2) + 1 on
/// (-4, 4), T = 2, driven by a bounded rational driver depending on
/// both y and z.  (Y0, Z0) = (1, pi/2).
ProblemSpec example1();

/// Nonlinear pricing with a borrowing rate R >= lending rate r:
/// geometric(mu, sigma) forward and driver
///   g = r y + ((mu - r)/sigma) z + (R - r) min(y - z/sigma, 0).
/// Straddle payoff |x - K| (analytic attached iff r == R), plain call
/// max(x - K, 0) (analytic: Black-Scholes at rate R), or the two-strike
/// call combination max(x-K1,0) - 2 max(x-K2,0) (no closed form).
ProblemSpec differential_rates(const MarketParams& params, PayoffKind payoff_kind);

/// Cubic-driver benchmark: locally Lipschitz, maximal monotone in y
/// with gamma = -pi^2/8; same analytic solution as example1.
ProblemSpec example3();

/// Default market data: straddle benchmark (mu=.05, sigma=.2, r=R=.01,
/// T=2, x0=K=1, domain (0, 3.5)).
MarketParams straddle_params();
/// Default market data: call benchmark (mu=R=.06, sigma=.2, r=.04,
/// T=2, x0=K=1, domain (0, 4)).
MarketParams call_params();
/// Default market data: two-strike call combination (mu=.05, sigma=.2,
/// r=.01, R=.06, T=.25, x0=1, K1=.95, K2=1.05, domain (0, 4)); its
/// widely used reference price is 0.0295.
MarketParams combination_params();

/// Look up a benchmark problem by CLI name: example1, straddle, call,
/// call_combination, example3.  Throws ConfigError for unknown names.
ProblemSpec make_problem(const std::string& name);

// ------------------------------------------------------------------
// Black-Scholes oracles
// ------------------------------------------------------------------

/// Straddle price and sigma*x*delta at (t, x), discounting at rate r.
/// For t >= T returns the payoff limit.
std::pair<double, double> black_scholes_straddle(const MarketParams& p, double t, double x);

/// Call price and sigma*x*delta at (t, x), discounting at the
/// borrowing rate R (the always-borrowing regime of the differential
/// rates model makes R the pricing rate for a long call).
std::pair<double, double> black_scholes_call(const MarketParams& p, double t, double x);

// ------------------------------------------------------------------
// Computational-domain policy
// ------------------------------------------------------------------

/// Number of diffusion standard deviations by which the computational
/// grid extends beyond the stated domain.  The stated interval is
/// where solutions are read and errors measured; the padding absorbs
/// the boundary layer created by truncating the state space, keeping
/// it several standard deviations away from every reported value.
inline constexpr double kDefaultPadSigmas = 5.0;

/// Cap on the multiplicative (log-space) pad of geometric kernels.
/// Unlike the additive case, sigma(x) = sigma*x keeps growing across
/// the pad, and the wall cells feed a one-sided gradient back into the
/// driver with per-step gain (dt/h)*lambda*sigma(hi_c); past 1 that
/// compounds into a wall instability.  3.5 log-sigmas keeps the gain
/// near 0.75 for the benchmark configurations while every reported
/// cell stays >= 8 standard deviations inside the wall.
inline constexpr double kGeometricPadSigmas = 3.5;

/// Build the computational grid for a problem at mesh width h: the
/// stated domain extended by pad_sigmas * sigma * sqrt(T) (additively
/// on both sides for additive kernels; multiplicatively on the right
/// only for the geometric kernel, whose natural left wall is 0).  The
/// extension is a whole number of cells, so stated-domain edges remain
/// cell edges.
SpatialGrid padded_grid(const ProblemSpec& problem, double h,
                        double pad_sigmas = kDefaultPadSigmas);

/// Diffusion coefficient sampled at every cell center (the sigma
/// vector consumed by gradient()).
std::vector<double> sigma_at_centers(const TransitionKernel& kernel,
                                     const SpatialGrid& grid);

} // namespace fbsde
