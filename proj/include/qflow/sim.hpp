#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qflow/config.hpp"
#include "qflow/diagnostics.hpp"
#include "qflow/io.hpp"
#include "qflow/solver.hpp"

namespace qflow {

extern const char* const kVersion;

/// Initial-data builder spec (builder name + parameters + seed).
struct InitSpec {
    std::string builder = "circle_map";  // circle_map | perturbed_circle_map |
                                         // perturbed_constant | constant
    int m = 1;
    int axis = 0;
    double amplitude = 0.0;
    std::uint64_t seed = 0;
    bool has_seed = false;
    Vec3 dir = {0.0, 0.0, 1.0};

    DirectorField build(const Grid& g) const;
};

struct MonotonicitySpec {
    bool enabled = true;
    std::optional<double> t0;          // default 0.8 * t_end
    double r_lo_frac = 0.40;           // ladder within (0, sqrt(t0)/2)
    double r_hi_frac = 0.99;
    int count = 6;
};

struct RunConfig {
    MaterialParams material;
    Grid grid;
    InitSpec init;
    SolverConfig solver;
    MonotonicitySpec monotonicity;
    double gap_tol = 1e-6;
    double eps0_frac = 0.05;  // near-N radius as a fraction of s+
    std::string out_dir = "out";
    int snapshot_stride = 5;  // write every k-th stored snapshot; 0 = none

    static RunConfig from_config(const Config& cfg);
    Config to_config() const;
};

struct RunResult {
    RunConfig cfg;
    StoredRun run;                        // snapshots at diagnostics cadence
    std::vector<DiagnosticsRecord> records;
    std::vector<MonotonicityRow> monotonicity;
    std::vector<MonotonicityAccumulator::Row> monotonicity_detail;
    double dt = 0.0;
};

/// Time loop: diagnostics sampled on the snapshot cadence, monotonicity
/// accumulated every step when enabled.
RunResult run_simulation(const RunConfig& cfg);

/// Write manifest.cfg, diagnostics.csv, monotonicity.csv and QFLD1 snapshots.
void write_run_artifacts(const RunResult& res, const std::string& out_dir);

struct SweepSpec {
    RunConfig base;
    std::vector<double> eps_ladder;  // strictly decreasing, size >= 2
    bool compare_harmonic = true;

    static SweepSpec from_config(const Config& cfg);
};

struct SweepRow {
    double eps = 0.0;
    double sup_distN_T = 0.0;
    double bulk_fB_T = 0.0;           // int f~_B dx at T
    double tangent_residual_T = 0.0;
    double director_gap_L2 = 0.0;     // vs directly-solved harmonic flow
};

struct SweepResult {
    std::vector<SweepRow> rows;
    // least-squares slopes of log(metric) against log(eps)
    double slope_dist = 0.0, slope_bulk = 0.0, slope_tangent = 0.0, slope_gap = 0.0;
};

SweepResult run_sweep(const SweepSpec& spec, const std::string& out_dir);
void write_sweep_artifacts(const SweepResult& res, const std::string& out_dir);

/// Merge diagnostics of compatible runs (same grid, any eps) into one table
/// plus gnuplot-style per-metric plot data. Throws ConfigError on grid
/// mismatch.
void report_runs(const std::vector<std::string>& run_dirs, const std::string& out_dir);

/// Directly-solved harmonic map flow from the same initial director, run to
/// (L1/Gamma) * t_end: the director flow is unit-normalized while the
/// Q-flow diffuses at rate L1/Gamma, so the clocks differ by that factor.
DirectorField solve_harmonic_reference(const RunConfig& cfg);

/// Sign-invariant L2 distance min(||a-b||, ||a+b||) over the box.
double director_gap_L2(const DirectorField& a, const DirectorField& b);

}  // namespace qflow
