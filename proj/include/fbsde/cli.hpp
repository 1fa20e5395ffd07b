#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fbsde {

// ==================================================================
// Batch CLI: config files, runs, CSV emission
// ==================================================================
//
// Config files are flat `key = value` lines, UTF-8, with `#` comments.
// Recognized keys (any other key is a hard error):
//   problem, algorithm, h, dt, n_cells, n_steps, lo, hi, kernel,
//   mc_samples, seed, tol, max_iter, outdir
//
// Exit codes: 0 success, 2 configuration error, 3 solver
// nonconvergence (summary.csv still written with converged=false).

struct RunConfig {
    std::string problem;
    std::optional<std::string> algorithm; // explicit | hybrid | implicit
    std::optional<double> h;
    std::optional<int> n_cells;
    std::optional<double> dt;
    std::optional<int> n_steps;
    std::optional<double> lo;
    std::optional<double> hi;
    std::string kernel = "analytic"; // analytic | mc
    int mc_samples = 10000;
    std::uint64_t seed = 0;
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::string outdir = ".";
};

/// Parse a config file; throws ConfigError naming the offending key or
/// line on any problem.
RunConfig parse_config(const std::string& path);

/// Single solve: writes surface.csv (k,t,j,x_center,v,w) and
/// summary.csv (y0,z0,e_y0,e_z0,E_h,mass_deficit_max,iterations_max,
/// converged) into outdir.
int cmd_run(const RunConfig& cfg);

/// One solve per mesh width; writes convergence.csv
/// (h,dt,E_h,e_y0,e_z0) plus a final order row.  When the config give
/// both h and dt, their ratio is preserved across meshes; otherwise
/// dt = h.  An empty mesh list falls back to the problem's standard
/// refinement sequence.
int cmd_convergence(const RunConfig& cfg, std::vector<double> meshes);

/// Reruns a geometric-kernel problem with stated domain (0, M) for
/// each M; writes domain_study.csv (M,e_y0,e_z0).
int cmd_domain_study(const RunConfig& cfg, std::vector<double> domains);

/// Full argv-level entry point (also used in-process by tests):
///   fbsde run|convergence|domain-study --config <path>
///         [--meshes h1,h2,...] [--domains M1,M2,...]
/// Applies FBSDE_THREADS if set.  Returns the process exit code.
int cli_main(const std::vector<std::string>& args);

} // namespace fbsde
