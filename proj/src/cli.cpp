#include "fbsde/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "fbsde/analysis.hpp"
#include "fbsde/errors.hpp"
#include "fbsde/problems.hpp"

namespace fbsde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ------------------------------------------------------------------
// Deterministic CSV formatting
// ------------------------------------------------------------------
//
// std::to_chars emits the shortest decimal string that round-trips,
// independent of locale and environment — the byte-identical-rerun
// guarantee rests on this.

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

std::string fmt(long long v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::ofstream open_csv(const std::string& outdir, const std::string& name) {
    std::filesystem::create_directories(outdir);
    const auto path = std::filesystem::path(outdir) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open output file: " + path.string());
    return out;
}

// ------------------------------------------------------------------
// Config parsing
// ------------------------------------------------------------------

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError("key '" + key + "': cannot parse number '" + value + "'");
    return v;
}

long long parse_integer(const std::string& key, const std::string& value) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError("key '" + key + "': cannot parse integer '" + value + "'");
    return v;
}

} // namespace

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": key '" + key +
                              "' has no value");
        if (key == "problem") {
            cfg.problem = value;
        } else if (key == "algorithm") {
            cfg.algorithm = value;
        } else if (key == "h") {
            cfg.h = parse_double(key, value);
        } else if (key == "dt") {
            cfg.dt = parse_double(key, value);
        } else if (key == "n_cells") {
            cfg.n_cells = static_cast<int>(parse_integer(key, value));
        } else if (key == "n_steps") {
            cfg.n_steps = static_cast<int>(parse_integer(key, value));
        } else if (key == "lo") {
            cfg.lo = parse_double(key, value);
        } else if (key == "hi") {
            cfg.hi = parse_double(key, value);
        } else if (key == "kernel") {
            cfg.kernel = value;
        } else if (key == "mc_samples") {
            cfg.mc_samples = static_cast<int>(parse_integer(key, value));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_integer(key, value));
        } else if (key == "tol") {
            cfg.tol = parse_double(key, value);
        } else if (key == "max_iter") {
            cfg.max_iter = static_cast<int>(parse_integer(key, value));
        } else if (key == "outdir") {
            cfg.outdir = value;
        } else {
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" +
                              key + "'");
        }
    }
    if (cfg.problem.empty()) throw ConfigError("config is missing the 'problem' key");
    return cfg;
}

namespace {

// ------------------------------------------------------------------
// Shared run machinery
// ------------------------------------------------------------------

ProblemSpec configured_problem(const RunConfig& cfg) {
    ProblemSpec p = make_problem(cfg.problem);
    if (cfg.lo) p.lo = *cfg.lo;
    if (cfg.hi) p.hi = *cfg.hi;
    if (!(p.lo < p.hi)) throw ConfigError("domain override requires lo < hi");
    return p;
}

double resolve_h(const RunConfig& cfg, const ProblemSpec& p) {
    if (cfg.h && cfg.n_cells) throw ConfigError("set exactly one of 'h' and 'n_cells', not both");
    if (cfg.h) {
        if (!(*cfg.h > 0.0)) throw ConfigError("key 'h': must be positive");
        return *cfg.h;
    }
    if (cfg.n_cells) {
        if (*cfg.n_cells < 1) throw ConfigError("key 'n_cells': must be >= 1");
        return (p.hi - p.lo) / *cfg.n_cells;
    }
    throw ConfigError("set exactly one of 'h' and 'n_cells'");
}

double resolve_dt(const RunConfig& cfg, const ProblemSpec& p, double h) {
    double dt;
    if (cfg.dt && cfg.n_steps)
        throw ConfigError("set at most one of 'dt' and 'n_steps'");
    if (cfg.dt) {
        dt = *cfg.dt;
    } else if (cfg.n_steps) {
        if (*cfg.n_steps < 1) throw ConfigError("key 'n_steps': must be >= 1");
        dt = p.T / *cfg.n_steps;
    } else {
        dt = h; // default time step equals the mesh width
    }
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
    if (dt > p.T + 1e-12) throw ConfigError("time step exceeds the horizon T");
    return dt;
}

SolverConfig make_solver_config(const RunConfig& cfg, const ProblemSpec& p, double dt) {
    SolverConfig sc;
    if (cfg.algorithm) {
        if (*cfg.algorithm == "explicit") {
            sc.algorithm = Algorithm::explicit_;
        } else if (*cfg.algorithm == "hybrid") {
            sc.algorithm = Algorithm::hybrid;
        } else if (*cfg.algorithm == "implicit") {
            sc.algorithm = Algorithm::implicit;
        } else {
            throw ConfigError("key 'algorithm': unknown value '" + *cfg.algorithm +
                              "' (expected explicit | hybrid | implicit)");
        }
    }
    // Fixed point needs a contraction; use it only when a declared
    // Lipschitz constant guarantees dt*L < 1/2, otherwise Newton.
    if (p.driver.lipschitz_L && *p.driver.lipschitz_L * dt < 0.5) {
        sc.inner = InnerSolver::fixed_point;
    } else {
        sc.inner = InnerSolver::newton;
    }
    if (cfg.tol) {
        if (!(*cfg.tol > 0.0)) throw ConfigError("key 'tol': must be positive");
        sc.tol = *cfg.tol;
    }
    if (cfg.max_iter) {
        if (*cfg.max_iter < 1) throw ConfigError("key 'max_iter': must be >= 1");
        sc.max_iter = *cfg.max_iter;
    }
    return sc;
}

struct RunResult {
    SpatialGrid sgrid;
    TimeGrid tgrid;
    SolutionSurface surface;
    double e_y0 = kNaN;
    double e_z0 = kNaN;
    double E_h = kNaN;
    double mass_deficit_max = 0.0;
};

RunResult run_once(const RunConfig& cfg, const ProblemSpec& p, double h, double dt) {
    RunResult r;
    int n_steps = static_cast<int>(std::llround(p.T / dt));
    if (n_steps < 1) n_steps = 1;
    r.tgrid = build_time_grid(p.T, n_steps);
    r.sgrid = padded_grid(p, h);

    TransitionMatrix P;
    if (cfg.kernel == "analytic") {
        P = assemble_density(p.kernel, r.sgrid, r.tgrid.dt);
    } else if (cfg.kernel == "mc") {
        if (cfg.mc_samples < 1) throw ConfigError("key 'mc_samples': must be >= 1");
        TransitionKernel base = p.kernel;
        // More Euler substeps for state-dependent coefficients, where a
        // single step carries an O(dt) discretization bias.
        const int substeps = (base.kind == KernelKind::brownian) ? 1 : 16;
        TransitionKernel emp = TransitionKernel::empirical_kernel(
            [base](double x) { return base.drift_at(x); },
            [base](double x) { return base.sigma_at(x); }, substeps);
        P = assemble_mc(emp, r.sgrid, r.tgrid.dt, cfg.mc_samples, cfg.mc_samples, cfg.seed);
    } else {
        throw ConfigError("key 'kernel': unknown value '" + cfg.kernel +
                          "' (expected analytic | mc)");
    }
    for (double d : mass_deficit(P)) r.mass_deficit_max = std::max(r.mass_deficit_max, d);

    const SolverConfig sc = make_solver_config(cfg, p, r.tgrid.dt);
    r.surface = solve_backward(p, r.sgrid, r.tgrid, P, sc);

    if (p.Y0 && p.Z0) {
        const PointErrors pe = point_errors(r.surface, p);
        r.e_y0 = pe.e_y0;
        r.e_z0 = pe.e_z0;
    }
    if (p.analytic) r.E_h = relative_l2_error(r.surface, p, r.sgrid, r.tgrid);
    return r;
}

void write_summary(const RunConfig& cfg, const RunResult* r, bool converged) {
    std::ofstream out = open_csv(cfg.outdir, "summary.csv");
    out << "y0,z0,e_y0,e_z0,E_h,mass_deficit_max,iterations_max,converged\n";
    if (r) {
        const int iters =
            std::max(r->surface.stats.max_inner_iterations, r->surface.stats.max_outer_iterations);
        out << fmt(r->surface.y0) << ',' << fmt(r->surface.z0) << ',' << fmt(r->e_y0) << ','
            << fmt(r->e_z0) << ',' << fmt(r->E_h) << ',' << fmt(r->mass_deficit_max) << ','
            << fmt(static_cast<long long>(iters)) << ',' << (converged ? "true" : "false")
            << '\n';
    } else {
        out << "nan,nan,nan,nan,nan,nan,0," << (converged ? "true" : "false") << '\n';
    }
}

void write_surface(const RunConfig& cfg, const RunResult& r) {
    std::ofstream out = open_csv(cfg.outdir, "surface.csv");
    out << "k,t,j,x_center,v,w\n";
    const int N = r.tgrid.n_steps;
    for (int k = 0; k <= N; ++k) {
        const std::string t_str = fmt(r.tgrid.t(k));
        for (int j = 0; j < r.sgrid.n_cells; ++j) {
            out << fmt(static_cast<long long>(k)) << ',' << t_str << ','
                << fmt(static_cast<long long>(j)) << ',' << fmt(r.sgrid.center(j)) << ','
                << fmt(r.surface.v[k].values[j]) << ',' << fmt(r.surface.w[k].values[j]) << '\n';
        }
    }
}

std::vector<double> default_meshes(const std::string& problem) {
    if (problem == "example1") return {0.08, 0.04, 0.02, 0.01, 0.005, 0.0025};
    if (problem == "straddle") return {0.08, 0.04, 0.02, 0.01, 0.005};
    if (problem == "call") return {0.08, 0.04, 0.02, 0.01, 0.005};
    if (problem == "call_combination")
        return {1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512, 1.0 / 1024};
    if (problem == "example3") return {0.04, 0.02, 0.01, 0.005, 0.0025, 0.00125};
    throw ConfigError("no default mesh sequence for problem '" + problem + "'");
}

std::vector<double> parse_number_list(const std::string& flag, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        out.push_back(parse_double(flag, tok));
    }
    return out;
}

} // namespace

int cmd_run(const RunConfig& cfg) {
    const ProblemSpec p = configured_problem(cfg);
    const double h = resolve_h(cfg, p);
    const double dt = resolve_dt(cfg, p, h);
    try {
        const RunResult r = run_once(cfg, p, h, dt);
        write_surface(cfg, r);
        write_summary(cfg, &r, true);
        return 0;
    } catch (const SolveError& e) {
        std::cerr << "solver did not converge: " << e.what() << "\n";
        write_summary(cfg, nullptr, false);
        return 3;
    }
}

int cmd_convergence(const RunConfig& cfg, std::vector<double> meshes) {
    const ProblemSpec p = configured_problem(cfg);
    if (meshes.empty()) meshes = default_meshes(cfg.problem);
    if (meshes.size() < 2) throw ConfigError("convergence study needs at least two meshes");
    std::sort(meshes.begin(), meshes.end(), std::greater<>());
    for (std::size_t i = 1; i < meshes.size(); ++i)
        if (!(meshes[i] < meshes[i - 1]))
            throw ConfigError("mesh widths must be distinct");
    for (double h : meshes)
        if (!(h > 0.0)) throw ConfigError("mesh widths must be positive");

    // When the config pins both h and dt, their ratio is carried across
    // the whole refinement sequence; otherwise dt tracks h.
    const double ratio = (cfg.h && cfg.dt) ? (*cfg.dt / *cfg.h) : 1.0;

    std::vector<ErrorRow> rows;
    for (double h : meshes) {
        const double dt = std::min(ratio * h, p.T);
        const RunResult r = run_once(cfg, p, h, dt);
        rows.push_back({h, r.tgrid.dt, r.E_h, r.e_y0, r.e_z0});
    }

    auto fit = [&](auto pick) {
        std::vector<std::pair<double, double>> pts;
        for (const ErrorRow& row : rows) {
            const double e = pick(row);
            if (!std::isfinite(e) || e <= 0.0) return kNaN;
            pts.push_back({row.h, e});
        }
        return convergence_order(pts);
    };
    const double order_v = fit([](const ErrorRow& r) { return r.e_v; });
    const double order_y = fit([](const ErrorRow& r) { return r.e_y0; });
    const double order_z = fit([](const ErrorRow& r) { return r.e_z0; });

    std::ofstream out = open_csv(cfg.outdir, "convergence.csv");
    out << "h,dt,E_h,e_y0,e_z0\n";
    for (const ErrorRow& row : rows)
        out << fmt(row.h) << ',' << fmt(row.dt) << ',' << fmt(row.e_v) << ',' << fmt(row.e_y0)
            << ',' << fmt(row.e_z0) << '\n';
    out << "order,," << fmt(order_v) << ',' << fmt(order_y) << ',' << fmt(order_z) << '\n';
    return 0;
}

int cmd_domain_study(const RunConfig& cfg, std::vector<double> domains) {
    if (domains.empty()) throw ConfigError("domain study needs at least one domain bound M");
    ProblemSpec p = configured_problem(cfg);
    if (p.kernel.kind != KernelKind::geometric)
        throw ConfigError("domain study applies to geometric-kernel problems only");
    if (!p.Y0 || !p.Z0)
        throw ConfigError("domain study requires a problem with exact (Y0, Z0)");
    double strike_max = 0.0;
    for (double k : p.kinks) strike_max = std::max(strike_max, k);
    for (double M : domains)
        if (!(M > strike_max))
            throw ConfigError("every domain bound M must exceed the largest strike");

    const double h = resolve_h(cfg, p);
    const double dt = resolve_dt(cfg, p, h);

    std::ofstream out = open_csv(cfg.outdir, "domain_study.csv");
    out << "M,e_y0,e_z0\n";
    for (double M : domains) {
        ProblemSpec q = p;
        q.hi = M;
        const RunResult r = run_once(cfg, q, h, dt);
        out << fmt(M) << ',' << fmt(r.e_y0) << ',' << fmt(r.e_z0) << '\n';
    }
    return 0;
}

int cli_main(const std::vector<std::string>& args) {
#ifdef _OPENMP
    if (const char* env = std::getenv("FBSDE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
#endif

    CLI::App app{"Cell-partition semigroup solver for decoupled Markovian FBSDEs"};
    app.require_subcommand(1);

    std::string config_path;
    std::string meshes_text;
    std::string domains_text;

    CLI::App* run = app.add_subcommand("run", "Single solve; writes surface.csv and summary.csv");
    run->add_option("--config", config_path, "Config file (key = value lines)")->required();

    CLI::App* conv =
        app.add_subcommand("convergence", "Refinement study; writes convergence.csv");
    conv->add_option("--config", config_path, "Config file (key = value lines)")->required();
    conv->add_option("--meshes", meshes_text,
                     "Comma-separated mesh widths (default: the problem's standard sequence)");

    CLI::App* dom =
        app.add_subcommand("domain-study", "Vary the domain bound; writes domain_study.csv");
    dom->add_option("--config", config_path, "Config file (key = value lines)")->required();
    dom->add_option("--domains", domains_text, "Comma-separated upper bounds M")->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const RunConfig cfg = parse_config(config_path);
        if (run->parsed()) return cmd_run(cfg);
        if (conv->parsed())
            return cmd_convergence(cfg, meshes_text.empty()
                                            ? std::vector<double>{}
                                            : parse_number_list("--meshes", meshes_text));
        if (dom->parsed()) return cmd_domain_study(cfg, parse_number_list("--domains", domains_text));
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return 2;
    } catch (const SolveError& e) {
        std::cerr << "solver did not converge: " << e.what() << "\n";
        return 3;
    } catch (const EvalError& e) {
        std::cerr << "evaluation error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace fbsde
