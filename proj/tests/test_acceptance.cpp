// ==================================================================
// Acceptance harness: one pass/fail line per criterion
// ==================================================================
//
// Self-contained main (no test framework): each criterion prints one
// [PASS]/[FAIL] line with its measured quantities, and the process
// exit code is the number of failed criteria.  The reference error
// levels quoted below are frozen results for these exact benchmark
// configurations; factor bands (rather than digit matches) absorb the
// method's constant-level freedom, since the reference runs do not pin
// every discretization knob.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fbsde/analysis.hpp"
#include "fbsde/cli.hpp"
#include "fbsde/errors.hpp"
#include "fbsde/grid.hpp"
#include "fbsde/math.hpp"
#include "fbsde/problems.hpp"
#include "fbsde/semigroup.hpp"
#include "fbsde/stepper.hpp"

using namespace fbsde;

namespace {

int failures = 0;

void record(const std::string& desc, bool ok, const std::string& qoi) {
    std::printf("%s %s (%s)\n", ok ? "[PASS]" : "[FAIL]", desc.c_str(), qoi.c_str());
    if (!ok) ++failures;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

// Mirror of the batch driver's solver-selection rule: fixed point when
// the declared Lipschitz bound guarantees contraction at this dt,
// Newton otherwise.
SolverConfig solver_for(const ProblemSpec& p, Algorithm algo, double dt) {
    SolverConfig cfg;
    cfg.algorithm = algo;
    cfg.inner = (p.driver.lipschitz_L && *p.driver.lipschitz_L * dt < 0.5)
                    ? InnerSolver::fixed_point
                    : InnerSolver::newton;
    return cfg;
}

struct SweepRow {
    double h = 0.0, dt = 0.0;
    double E = 0.0, ey = 0.0, ez = 0.0;
    double y0 = 0.0, z0 = 0.0;
};

/// One full solve at mesh width h; errors only when an oracle exists.
SweepRow run_mesh(const ProblemSpec& p, double h, double dt, Algorithm algo) {
    SweepRow row;
    row.h = h;
    row.dt = dt;
    auto g = padded_grid(p, h);
    auto t = build_time_grid(p.T, static_cast<int>(std::lround(p.T / dt)));
    auto P = assemble_density(p.kernel, g, t.dt);
    auto cfg = solver_for(p, algo, t.dt);
    auto s = solve_backward(p, g, t, P, cfg);
    row.y0 = s.y0;
    row.z0 = s.z0;
    if (p.analytic) row.E = relative_l2_error(s, p, g, t);
    if (p.Y0) {
        auto e = point_errors(s, p);
        row.ey = e.e_y0;
        row.ez = e.e_z0;
    }
    return row;
}

double fit_order(const std::vector<SweepRow>& rows, double SweepRow::*member) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) pts.push_back({r.h, r.*member});
    return convergence_order(pts);
}

bool in_band(double v, double lo, double hi) { return v >= lo && v <= hi; }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string cfg_file(const std::string& tag, const std::string& body) {
    std::string path = "/tmp/fbsde_acc_" + tag + ".cfg";
    std::ofstream out(path, std::ios::trunc);
    out << body;
    return path;
}

// ------------------------------------------------------------------
// Criterion 1: oscillatory benchmark, joint h = dt refinement
// ------------------------------------------------------------------

void criterion1() {
    const double t_start = now_seconds();
    const std::vector<double> meshes = {0.08, 0.04, 0.02, 0.01, 0.005, 0.0025};
    // Frozen reference error levels at h = dt for this benchmark; the
    // run must land within a factor of 2 of every level.
    const double refE[] = {0.1305, 0.0654, 0.0327, 0.0163, 0.0082, 0.0041};
    const double refY[] = {0.1445, 0.0714, 0.0355, 0.0177, 0.0088, 0.0044};
    const double refZ[] = {0.0649, 0.0346, 0.0178, 0.0090, 0.0046, 0.0023};

    auto p = make_problem("example1");
    std::vector<SweepRow> rows;
    bool factors_ok = true;
    double worst_lo = 10.0, worst_hi = 0.0;
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        auto r = run_mesh(p, meshes[i], meshes[i], Algorithm::hybrid);
        rows.push_back(r);
        for (auto [got, ref] : {std::pair{r.E, refE[i]}, {r.ey, refY[i]}, {r.ez, refZ[i]}}) {
            double f = got / ref;
            worst_lo = std::min(worst_lo, f);
            worst_hi = std::max(worst_hi, f);
            if (!(f >= 0.5 && f <= 2.0)) factors_ok = false;
        }
        std::printf("  c1 h=%g  E=%.6f  e_y0=%.6f  e_z0=%.6f\n", r.h, r.E, r.ey, r.ez);
    }
    double oE = fit_order(rows, &SweepRow::E);
    double oy = fit_order(rows, &SweepRow::ey);
    double oz = fit_order(rows, &SweepRow::ez);
    double elapsed = now_seconds() - t_start;

    bool ok = in_band(oE, 0.85, 1.15) && in_band(oy, 0.85, 1.15) && in_band(oz, 0.85, 1.15) &&
              factors_ok && elapsed <= 120.0;
    record("criterion 1: oscillatory benchmark first-order convergence", ok,
           "orders E/y/z = " + num(oE) + "/" + num(oy) + "/" + num(oz) + "; reference factors in [" +
               num(worst_lo) + ", " + num(worst_hi) + "]; " + num(elapsed) + " s");
}

// ------------------------------------------------------------------
// Criterion 2: straddle under equal rates
// ------------------------------------------------------------------

void criterion2() {
    const std::vector<double> meshes = {0.04, 0.02, 0.01, 0.005, 0.0025, 0.00125};
    auto p = make_problem("straddle");
    std::vector<SweepRow> rows;
    for (double h : meshes) {
        // dt = 2h keeps the time-step error balanced against the cell
        // error for this kernel while halving the sweep cost.
        rows.push_back(run_mesh(p, h, 2.0 * h, Algorithm::hybrid));
        std::printf("  c2 h=%g  e_y0=%.7f  y0=%.7f\n", h, rows.back().ey, rows.back().y0);
    }
    const auto& fin = rows.back();
    double oy = fit_order(rows, &SweepRow::ey);
    // "Agrees with 0.2233 to three decimals" pinned as |y0 - 0.2233|
    // <= 5e-4 (a half-unit in the third decimal).
    bool ok = fin.ey <= 0.002 && std::fabs(fin.y0 - 0.2233) <= 5e-4 && in_band(oy, 0.85, 1.15);
    record("criterion 2: straddle value accuracy and order", ok,
           "e_y0 = " + num(fin.ey) + "; y0 = " + num(fin.y0) + "; order = " + num(oy));
}

// ------------------------------------------------------------------
// Criterion 3: call under differential rates
// ------------------------------------------------------------------

void criterion3() {
    const std::vector<double> meshes = {0.04, 0.02, 0.01, 0.005, 0.0025, 0.00125};
    auto p = make_problem("call");
    std::vector<SweepRow> rows;
    for (double h : meshes) {
        // dt = h/2: the value surface is kinked at the strike, and the
        // finer time step keeps both point errors on their first-order
        // trend down to the finest mesh.
        rows.push_back(run_mesh(p, h, 0.5 * h, Algorithm::hybrid));
        std::printf("  c3 h=%g  e_y0=%.7f  e_z0=%.7f\n", h, rows.back().ey, rows.back().ez);
    }
    const auto& fin = rows.back();
    double oy = fit_order(rows, &SweepRow::ey);
    double oz = fit_order(rows, &SweepRow::ez);
    bool ok = fin.ey <= 0.006 && fin.ez <= 0.004 && in_band(oy, 0.85, 1.15) &&
              in_band(oz, 0.85, 1.15);
    record("criterion 3: differential-rates call accuracy and orders", ok,
           "e_y0 = " + num(fin.ey) + "; e_z0 = " + num(fin.ez) + "; orders y/z = " + num(oy) + "/" +
               num(oz));
}

// ------------------------------------------------------------------
// Criterion 4: two-strike call combination, single fine mesh
// ------------------------------------------------------------------

void criterion4() {
    auto p = make_problem("call_combination");
    const double h = 1.0 / 1024.0;
    auto r = run_mesh(p, h, 2.0 * h, Algorithm::hybrid);
    bool ok = r.y0 >= 0.0294 && r.y0 <= 0.0296;
    record("criterion 4: call-combination value in its reference band", ok,
           "y0 = " + num(r.y0) + " vs [0.0294, 0.0296]");
}

// ------------------------------------------------------------------
// Criterion 5: domain saturation study for the call
// ------------------------------------------------------------------

void criterion5() {
    const double h = 0.00125;
    std::vector<double> errs;
    for (double M : {4.0, 5.0, 6.0}) {
        auto p = make_problem("call");
        p.hi = M; // widen the stated interval; oracle and x0 unchanged
        auto r = run_mesh(p, h, 0.5 * h, Algorithm::hybrid);
        errs.push_back(r.ey);
        std::printf("  c5 M=%g  e_y0=%.9f\n", M, r.ey);
    }
    // Past M = 5 the truncated tail is numerically invisible at the
    // money; e_y0(4) itself sits within 15% of its reference level.
    double gap56 = std::fabs(errs[1] - errs[2]);
    double rel4 = std::fabs(errs[0] - 0.002732) / 0.002732;
    bool ok = gap56 <= 1e-5 && rel4 <= 0.15;
    record("criterion 5: computational-domain saturation", ok,
           "|e(5)-e(6)| = " + num(gap56) + "; e(4) off reference by " + num(100.0 * rel4) + "%");
}

// ------------------------------------------------------------------
// Criterion 6: cubic-driver benchmark
// ------------------------------------------------------------------

void criterion6() {
    const std::vector<double> meshes = {0.04, 0.02, 0.01, 0.005, 0.0025, 0.00125};
    auto p = make_problem("example3");
    std::vector<SweepRow> rows;
    for (double h : meshes) {
        rows.push_back(run_mesh(p, h, h, Algorithm::hybrid));
        std::printf("  c6 h=%g  E=%.7f  e_y0=%.7f  e_z0=%.7f\n", h, rows.back().E,
                    rows.back().ey, rows.back().ez);
    }
    double oE = fit_order(rows, &SweepRow::E);
    double oy = fit_order(rows, &SweepRow::ey);
    double oz = fit_order(rows, &SweepRow::ez);
    double factor = rows.back().E / 0.002518;
    bool ok = in_band(oE, 0.85, 1.15) && in_band(oy, 0.85, 1.15) && in_band(oz, 0.85, 1.15) &&
              factor >= 0.5 && factor <= 2.0;
    record("criterion 6: cubic-driver benchmark orders and level", ok,
           "orders E/y/z = " + num(oE) + "/" + num(oy) + "/" + num(oz) + "; E factor = " +
               num(factor));
}

// ------------------------------------------------------------------
// Criterion 7: property suites
// ------------------------------------------------------------------

bool property_matrix_bounds(std::string& note) {
    // 50 randomized (kernel, grid, dt) draws: entries nonnegative, row
    // mass <= 1 + 1e-8.
    std::mt19937_64 rng(20240817);
    auto uni = [&](double a, double b) {
        return a + (b - a) * std::generate_canonical<double, 53>(rng);
    };
    int checked = 0;
    for (int draw = 0; draw < 50; ++draw) {
        TransitionKernel kern;
        SpatialGrid grid;
        if (draw % 2 == 0) {
            kern = TransitionKernel::brownian_kernel(uni(-1.0, 1.0), uni(0.3, 2.0));
            double lo = uni(-5.0, 0.0);
            grid = build_spatial_grid(lo, lo + uni(1.0, 8.0), 20 + static_cast<int>(uni(0, 380)));
        } else {
            kern = TransitionKernel::geometric_kernel(uni(-0.2, 0.3), uni(0.05, 0.5));
            grid = build_spatial_grid(0.0, uni(1.0, 6.0), 20 + static_cast<int>(uni(0, 380)));
        }
        auto P = assemble_density(kern, grid, uni(1e-3, 0.2));
        for (int i = 0; i < P.n; ++i) {
            if (P.row_mass[i] > 1.0 + 1e-8) {
                note = "row mass " + num(P.row_mass[i]) + " on draw " + std::to_string(draw);
                return false;
            }
            for (int j = P.col_lo[i]; j < P.col_lo[i] + P.row_len[i]; ++j)
                if (P.entry(i, j) < 0.0) {
                    note = "negative entry on draw " + std::to_string(draw);
                    return false;
                }
        }
        ++checked;
    }
    note = std::to_string(checked) + " draws clean";
    return true;
}

bool property_ck_defect(std::string& note) {
    auto bw = TransitionKernel::brownian_kernel(0.0, 1.0);
    double b1 = chapman_kolmogorov_defect(bw, build_spatial_grid(-4.0, 4.0, 200), 0.04);
    double b2 = chapman_kolmogorov_defect(bw, build_spatial_grid(-4.0, 4.0, 400), 0.02);
    double b3 = chapman_kolmogorov_defect(bw, build_spatial_grid(-4.0, 4.0, 800), 0.01);
    // Geometric kernel probed away from its degenerate corner at 0,
    // where the sub-cell kernel width stalls the measure.
    auto geo = TransitionKernel::geometric_kernel(0.06, 0.2);
    double g1 = chapman_kolmogorov_defect(geo, build_spatial_grid(0.5, 3.5, 600), 0.005);
    double g2 = chapman_kolmogorov_defect(geo, build_spatial_grid(0.5, 3.5, 1200), 0.0025);
    double g3 = chapman_kolmogorov_defect(geo, build_spatial_grid(0.5, 3.5, 2400), 0.00125);
    note = "brownian " + num(b1) + " > " + num(b2) + " > " + num(b3) + "; geometric " + num(g1) +
           " > " + num(g2) + " > " + num(g3);
    return b1 > b2 && b2 > b3 && g1 > g2 && g2 > g3;
}

bool property_lipschitz(std::string& note) {
    // 100 random field pairs; explicit bound (1 + L dt) with an
    // L-Lipschitz driver, implicit bound (1 + 2|gamma| dt) with a
    // monotone cubic (the sharp constant is 1/(1 - |gamma| dt)).
    std::mt19937_64 rng(77);
    auto uni = [&](double a, double b) {
        return a + (b - a) * std::generate_canonical<double, 53>(rng);
    };
    const double L = 2.0, gamma = -0.4;
    Driver lip;
    lip.g = [](double, double, double y, double) { return 2.0 * std::sin(y); };
    lip.depends_on_z = false;
    lip.depends_on_x = false;
    Driver mono;
    mono.g = [](double, double, double y, double) { return y * y * y - 0.4 * y; };
    mono.gy = [](double, double, double y, double) { return 3.0 * y * y - 0.4; };
    mono.depends_on_z = false;
    mono.depends_on_x = false;
    SolverConfig ncfg;
    ncfg.inner = InnerSolver::newton;
    ncfg.tol = 1e-13;

    double worst_exp = 0.0, worst_imp = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        int n = 10 + static_cast<int>(uni(0, 90));
        auto g = build_spatial_grid(-1.0, 1.0, n);
        CellField u{g, {}}, v{g, {}};
        u.values.resize(n);
        v.values.resize(n);
        for (int j = 0; j < n; ++j) {
            u.values[j] = uni(-2.0, 2.0);
            v.values[j] = uni(-2.0, 2.0);
        }
        double dt = uni(0.01, 0.1);
        CellField du{g, std::vector<double>(n)}, dT{g, std::vector<double>(n)};
        for (int j = 0; j < n; ++j) du.values[j] = u[j] - v[j];

        auto a = t_operator_explicit(dt, 0.0, u, lip);
        auto b = t_operator_explicit(dt, 0.0, v, lip);
        for (int j = 0; j < n; ++j) dT.values[j] = a[j] - b[j];
        worst_exp = std::max(worst_exp, l2_norm(dT) / ((1.0 + L * dt) * l2_norm(du)));

        auto c = t_operator_implicit(dt, 0.0, u, mono, ncfg);
        auto d = t_operator_implicit(dt, 0.0, v, mono, ncfg);
        for (int j = 0; j < n; ++j) dT.values[j] = c[j] - d[j];
        worst_imp =
            std::max(worst_imp, l2_norm(dT) / ((1.0 + 2.0 * std::fabs(gamma) * dt) * l2_norm(du)));
    }
    note = "worst explicit ratio " + num(worst_exp) + ", worst implicit ratio " + num(worst_imp);
    return worst_exp <= 1.0 + 1e-12 && worst_imp <= 1.0 + 1e-12;
}

bool property_tri_equality(std::string& note) {
    // Zero driver: all three algorithms reduce to repeated application
    // of P, so the v-surfaces must agree bit for bit.  (The w-surfaces
    // legitimately differ: each scheme reads its gradient from its own
    // time level.)
    auto p = make_problem("example1");
    p.driver.g = [](double, double, double, double) { return 0.0; };
    p.driver.depends_on_z = false;
    p.driver.depends_on_x = false;
    p.driver.lipschitz_L = 0.0;
    const double h = 0.05;
    auto g = padded_grid(p, h);
    auto t = build_time_grid(p.T, 40);
    auto P = assemble_density(p.kernel, g, t.dt);
    SolutionSurface s[3];
    int idx = 0;
    for (auto algo : {Algorithm::explicit_, Algorithm::hybrid, Algorithm::implicit})
        s[idx++] = solve_backward(p, g, t, P, solver_for(p, algo, t.dt));
    for (int k = 0; k <= t.n_steps; ++k)
        for (int j = 0; j < g.n_cells; ++j)
            if (s[0].v[k].values[j] != s[1].v[k].values[j] ||
                s[1].v[k].values[j] != s[2].v[k].values[j]) {
                note = "mismatch at k=" + std::to_string(k) + " j=" + std::to_string(j);
                return false;
            }
    note = std::to_string(t.n_steps + 1) + " levels x " + std::to_string(g.n_cells) +
           " cells bitwise equal";
    return true;
}

bool property_brute_oracle(std::string& note) {
    // 100 randomized tiny instances (<= 5 cells, <= 3 steps) solved
    // both by the production sweep and by the literal-recursion oracle;
    // every level and the (y0, z0) readings must agree to 1e-12.
    std::mt19937_64 rng(4242);
    auto uni = [&](double a, double b) {
        return a + (b - a) * std::generate_canonical<double, 53>(rng);
    };
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const Algorithm algo = (rep % 3 == 0)   ? Algorithm::explicit_
                               : (rep % 3 == 1) ? Algorithm::hybrid
                                                : Algorithm::implicit;
        const int n = 3 + static_cast<int>(uni(0, 3));    // 3..5 cells
        const int steps = 1 + static_cast<int>(uni(0, 3)); // 1..3 steps
        ProblemSpec p;
        p.name = "tiny";
        p.kernel = TransitionKernel::brownian_kernel(0.0, 1.0);
        const double a_coef = uni(-0.8, 0.8);
        double b_coef = (algo == Algorithm::explicit_) ? 0.0 : uni(-0.8, 0.8);
        p.T = uni(0.1, 0.4);
        const double dt = p.T / steps;
        const double h = 1.0 / n;
        if (algo == Algorithm::implicit) {
            // Keep the outer Picard gain dt |g_z| sigma / h under 1/2.
            double cap = 0.5 * h / dt;
            b_coef = std::clamp(b_coef, -cap, cap);
        }
        p.driver.g = [a_coef, b_coef](double, double, double y, double z) {
            return a_coef * y + b_coef * z;
        };
        p.driver.depends_on_z = algo != Algorithm::explicit_;
        p.driver.depends_on_x = false;
        p.driver.lipschitz_L = std::fabs(a_coef) + std::fabs(b_coef);
        const double c0 = uni(-1, 1), c1 = uni(-1, 1), c2 = uni(-1, 1), c3 = uni(-1, 1);
        p.payoff = [c0, c1, c2, c3](double x) { return c0 + x * (c1 + x * (c2 + x * c3)); };
        p.lo = 0.0;
        p.hi = 1.0;
        p.x0 = uni(0.2, 0.8);

        std::vector<std::vector<double>> dense(n, std::vector<double>(n));
        for (int i = 0; i < n; ++i) {
            double sum = 0.0;
            for (int j = 0; j < n; ++j) {
                dense[i][j] = uni(0.05, 1.0);
                sum += dense[i][j];
            }
            double mass = uni(0.85, 1.0);
            for (int j = 0; j < n; ++j) dense[i][j] *= mass / sum;
        }

        auto grid = build_spatial_grid(0.0, 1.0, n);
        auto tg = build_time_grid(p.T, steps);
        SolverConfig cfg;
        cfg.algorithm = algo;
        cfg.inner = InnerSolver::fixed_point; // dt (|a|+|b|) < 0.5 by construction
        cfg.tol = 1e-14;
        cfg.outer_tol = 1e-13;
        cfg.outer_max_iter = 200;

        auto oracle = brute_force_surface(p, grid, tg, dense, cfg);
        auto prod = solve_backward(p, grid, tg, transition_from_dense(dense, tg.dt), cfg);
        for (int k = 0; k <= steps; ++k)
            for (int j = 0; j < n; ++j)
                worst = std::max(worst, std::fabs(oracle.v[k].values[j] - prod.v[k].values[j]));
        worst = std::max(worst, std::fabs(oracle.y0 - prod.y0));
        worst = std::max(worst, std::fabs(oracle.z0 - prod.z0));
    }
    note = "worst |oracle - production| = " + num(worst);
    return worst <= 1e-12;
}

bool property_mc_agreement(std::string& note) {
    // Monte Carlo assembly vs quadrature assembly at 1e5 samples per
    // cell.  Per-entry tolerance: five binomial standard errors plus a
    // three-count cushion for the Poisson-regime tail cells, where a
    // single landing sample is many nominal standard errors.
    auto g = build_spatial_grid(-1.0, 1.0, 40);
    const double dt = 0.04;
    const int n = 100000;
    auto exact = assemble_density(TransitionKernel::brownian_kernel(0.1, 0.5), g, dt);
    auto kern = TransitionKernel::empirical_kernel([](double) { return 0.1; },
                                                   [](double) { return 0.5; }, 1);
    auto mc = assemble_mc(kern, g, dt, n, n, 318);
    double worst = 0.0;
    int offenders = 0;
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j) {
            double p = exact.entry(i, j);
            double se = std::sqrt(p * (1.0 - p) / n);
            double dev = std::fabs(mc.entry(i, j) - p);
            if (dev > 5.0 * se + 3.0 / n) ++offenders;
            if (se > 0.0) worst = std::max(worst, dev / se);
        }
    note = "worst deviation " + num(worst) + " SE; offenders " + std::to_string(offenders);
    return offenders == 0;
}

void criterion7() {
    std::string notes[6];
    bool ok0 = property_matrix_bounds(notes[0]);
    std::printf("  c7 matrix bounds: %s\n", notes[0].c_str());
    bool ok1 = property_ck_defect(notes[1]);
    std::printf("  c7 semigroup defect: %s\n", notes[1].c_str());
    bool ok2 = property_lipschitz(notes[2]);
    std::printf("  c7 one-step Lipschitz: %s\n", notes[2].c_str());
    bool ok3 = property_tri_equality(notes[3]);
    std::printf("  c7 zero-driver equality: %s\n", notes[3].c_str());
    bool ok4 = property_brute_oracle(notes[4]);
    std::printf("  c7 brute-force oracle: %s\n", notes[4].c_str());
    bool ok5 = property_mc_agreement(notes[5]);
    std::printf("  c7 Monte Carlo agreement: %s\n", notes[5].c_str());
    bool ok = ok0 && ok1 && ok2 && ok3 && ok4 && ok5;
    int passed = ok0 + ok1 + ok2 + ok3 + ok4 + ok5;
    record("criterion 7: structural property suites", ok,
           std::to_string(passed) + "/6 sub-suites clean");
}

// ------------------------------------------------------------------
// Criterion 8: byte-identical CSVs on rerun
// ------------------------------------------------------------------

void criterion8() {
    bool ok = true;
    std::string detail;

    auto compare_rerun = [&](const std::string& tag, const std::string& body,
                             const std::vector<std::string>& args_tail,
                             const std::vector<std::string>& files) {
        for (const char* side : {"a", "b"}) {
            auto cfg = cfg_file(tag + "_" + side,
                                body + "outdir = /tmp/fbsde_acc_out_" + tag + "_" + side + "\n");
            std::vector<std::string> args = args_tail;
            args.insert(args.begin() + 1, {"--config", cfg});
            if (cli_main(args) != 0) {
                ok = false;
                detail += tag + ": nonzero exit; ";
                return;
            }
        }
        for (const auto& f : files) {
            auto a = slurp("/tmp/fbsde_acc_out_" + tag + "_a/" + f);
            auto b = slurp("/tmp/fbsde_acc_out_" + tag + "_b/" + f);
            if (a.empty() || a != b) {
                ok = false;
                detail += tag + "/" + f + " differs; ";
            }
        }
    };

    compare_rerun("run", "problem = straddle\nalgorithm = hybrid\nh = 0.05\ndt = 0.1\n",
                  {"run"}, {"summary.csv", "surface.csv"});
    compare_rerun("mc",
                  "problem = example1\nalgorithm = hybrid\nh = 0.08\ndt = 0.08\n"
                  "kernel = mc\nmc_samples = 4000\nseed = 7\n",
                  {"run"}, {"summary.csv", "surface.csv"});
    compare_rerun("conv", "problem = example1\nalgorithm = hybrid\n",
                  {"convergence", "--meshes", "0.08,0.04"}, {"convergence.csv"});
    if (detail.empty()) detail = "3 commands, 5 files byte-identical";
    record("criterion 8: deterministic CSV reruns", ok, detail);
}

} // namespace

int main() {
    std::printf("==== acceptance harness ====\n");
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    std::printf("==== %d criterion(s) failed ====\n", failures);
    return failures;
}
