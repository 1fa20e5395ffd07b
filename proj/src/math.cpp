#include "fbsde/math.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace fbsde {

double normal_cdf(double x) {
    // 0.5 * erfc(-x / sqrt(2)); erfc is accurate to a few ulp and, in
    // contrast to the 1 - Phi(-x) route, keeps full relative accuracy
    // in both tails.
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

double normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double normal_upper_quantile(double p) {
    if (!(p > 0.0 && p < 0.5)) throw std::invalid_argument("normal_upper_quantile: p must be in (0, 0.5)");
    // Start from the asymptotic sqrt(-2 log p) and polish with Newton
    // on log Phi(-q) = log p.  Working on the logarithm keeps the step
    //   q += log(Phi(-q)/p) * Phi(-q)/pdf(q)
    // O(1/q)-sized in the far tail, where plain Newton on Phi(-q) - p
    // overshoots to the wrong side of the root and then creeps back.
    double q = std::sqrt(-2.0 * std::log(p));
    for (int it = 0; it < 12; ++it) {
        double tail = normal_cdf(-q);
        double step = std::log(tail / p) * tail / normal_pdf(q);
        q += step;
        if (std::abs(step) < 1e-14 * (1.0 + q)) break;
    }
    return q;
}

const QuadRule& gauss_legendre(int order) {
    if (order < 1 || order > 64) throw std::invalid_argument("gauss_legendre: order out of range [1, 64]");
    static std::map<int, QuadRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    // Nodes are roots of the Legendre polynomial P_n, found by Newton
    // from the Chebyshev-like initial guess; weights via the standard
    // 2 / ((1 - x^2) P_n'(x)^2) formula.
    QuadRule rule;
    const int n = order;
    rule.x.resize(n);
    rule.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            // Evaluate P_n(x) and P_n'(x) by the three-term recurrence.
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.x[i] = -x; // ascending order
        rule.x[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.w[i] = w;
        rule.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.x[n / 2] = 0.0;
    auto [pos, _] = cache.emplace(order, std::move(rule));
    return pos->second;
}

double log_log_slope(const std::vector<std::pair<double, double>>& xy) {
    if (xy.size() < 2) throw std::invalid_argument("log_log_slope: need at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : xy) {
        if (!(x > 0.0) || !(y > 0.0))
            throw std::invalid_argument("log_log_slope: inputs must be strictly positive");
        double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double m = static_cast<double>(xy.size());
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

static std::uint64_t counter_word(std::uint64_t seed, std::uint64_t row, std::uint64_t sample,
                                  std::uint64_t counter) {
    // Feed the tuple through the mixer in a chain; each link is a
    // bijection of the accumulated state, so distinct tuples cannot
    // collide by construction of the chaining order.
    std::uint64_t s = mix64(seed);
    s = mix64(s ^ (row * 0x9e3779b97f4a7c15ull));
    s = mix64(s ^ (sample * 0xc2b2ae3d27d4eb4full));
    s = mix64(s ^ (counter * 0x165667b19e3779f9ull));
    return s;
}

double counter_uniform(std::uint64_t seed, std::uint64_t row, std::uint64_t sample,
                       std::uint64_t counter) {
    // 53-bit mantissa in [0, 1).
    return static_cast<double>(counter_word(seed, row, sample, counter) >> 11) * 0x1.0p-53;
}

double counter_normal(std::uint64_t seed, std::uint64_t row, std::uint64_t sample,
                      std::uint64_t counter) {
    // Box-Muller cosine branch on counters (2c, 2c+1); u1 is nudged
    // away from 0 so the log stays finite.
    double u1 = counter_uniform(seed, row, sample, 2 * counter);
    double u2 = counter_uniform(seed, row, sample, 2 * counter + 1);
    u1 = u1 + 0x1.0p-54;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

} // namespace fbsde
