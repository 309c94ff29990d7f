#include "qflow/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace qflow {

const char* const kVersion = "0.1.0";

namespace fs = std::filesystem;

DirectorField InitSpec::build(const Grid& g) const {
    if (builder == "circle_map") return initial_circle_map(g, m, axis);
    if (builder == "perturbed_circle_map") {
        if (amplitude != 0.0 && !has_seed)
            throw ConfigError("init.seed required when init.amplitude > 0");
        return initial_perturbed_circle_map(g, m, axis, amplitude, seed);
    }
    if (builder == "perturbed_constant") {
        if (amplitude != 0.0 && !has_seed)
            throw ConfigError("init.seed required when init.amplitude > 0");
        return initial_perturbed_constant(g, amplitude, seed, dir);
    }
    if (builder == "constant") return initial_constant(g, dir);
    throw ConfigError("unknown init.builder '" + builder + "'");
}

namespace {

Vec3 parse_vec3(const std::string& s) {
    Vec3 v{};
    std::istringstream ss(s);
    std::string tok;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(ss, tok, ','))
            throw ConfigError("expected three comma-separated numbers, got '" + s + "'");
        v[i] = std::strtod(tok.c_str(), nullptr);
    }
    return v;
}

std::string vec3_str(const Vec3& v) {
    return format_g17(v[0]) + "," + format_g17(v[1]) + "," + format_g17(v[2]);
}

}  // namespace

RunConfig RunConfig::from_config(const Config& cfg) {
    RunConfig rc;
    rc.material.a = cfg.get_double("material.a", 1.0);
    rc.material.b = cfg.get_double("material.b", 1.0);
    rc.material.c = cfg.get_double("material.c", 1.0);
    rc.material.L1 = cfg.get_double("material.L1", 1.0);
    rc.material.Gamma = cfg.get_double("material.Gamma", 1.0);
    rc.material.eps = cfg.get_double("material.eps", 1e-2);
    rc.material.validate();

    const int dim = static_cast<int>(cfg.get_int("grid.dim", 2));
    std::array<std::size_t, 3> n = {1, 1, 1};
    std::array<double, 3> len = {0, 0, 0};
    const char* nk[3] = {"grid.nx", "grid.ny", "grid.nz"};
    const char* lk[3] = {"grid.lx", "grid.ly", "grid.lz"};
    for (int a = 0; a < dim; ++a) {
        n[a] = static_cast<std::size_t>(cfg.get_int(nk[a], 64));
        len[a] = cfg.get_double(lk[a], 1.0);
    }
    rc.grid = Grid(dim, n, len);

    rc.init.builder = cfg.get_string("init.builder", "circle_map");
    rc.init.m = static_cast<int>(cfg.get_int("init.m", 1));
    rc.init.axis = static_cast<int>(cfg.get_int("init.axis", 0));
    rc.init.amplitude = cfg.get_double("init.amplitude", 0.0);
    rc.init.has_seed = cfg.has("init.seed");
    if (rc.init.has_seed) rc.init.seed = cfg.get_seed("init.seed");
    if (cfg.has("init.dir")) rc.init.dir = parse_vec3(cfg.get_string("init.dir"));

    const std::string dts = cfg.get_string("solver.dt", "auto");
    rc.solver.dt = (dts == "auto") ? 0.0 : std::strtod(dts.c_str(), nullptr);
    if (dts != "auto" && !(rc.solver.dt > 0.0))
        throw ConfigError("solver.dt must be 'auto' or a positive number");
    rc.solver.scheme = scheme_from_string(cfg.get_string("solver.scheme", "strang-split"));
    rc.solver.t_end = cfg.get_double("solver.t_end", 0.1);
    rc.solver.snapshot_dt = cfg.get_double("solver.snapshot_dt", 1e-3);
    rc.solver.drift_correction = cfg.get_bool("solver.drift_correction", false);
    if (!(rc.solver.t_end > 0.0)) throw ConfigError("solver.t_end must be > 0");
    if (!(rc.solver.snapshot_dt > 0.0)) throw ConfigError("solver.snapshot_dt must be > 0");

    rc.monotonicity.enabled = cfg.get_bool("monotonicity.enabled", true);
    if (cfg.has("monotonicity.t0")) rc.monotonicity.t0 = cfg.get_double("monotonicity.t0");
    rc.monotonicity.r_lo_frac = cfg.get_double("monotonicity.r_lo_frac", 0.40);
    rc.monotonicity.r_hi_frac = cfg.get_double("monotonicity.r_hi_frac", 0.99);
    rc.monotonicity.count = static_cast<int>(cfg.get_int("monotonicity.count", 6));

    rc.gap_tol = cfg.get_double("diag.gap_tol", 1e-6);
    rc.eps0_frac = cfg.get_double("diag.eps0_frac", 0.05);
    rc.out_dir = cfg.get_string("output.dir", "out");
    rc.snapshot_stride = static_cast<int>(cfg.get_int("output.snapshot_stride", 5));

    const auto unread = cfg.unread_keys();
    std::vector<std::string> unknown;
    for (const auto& k : unread)
        if (k.rfind("sweep.", 0) != 0 && k.rfind("manifest.", 0) != 0) unknown.push_back(k);
    if (!unknown.empty()) {
        std::string msg = "unknown config key(s):";
        for (const auto& k : unknown) msg += " '" + k + "'";
        throw ConfigError(msg);
    }
    return rc;
}

Config RunConfig::to_config() const {
    Config cfg;
    cfg.set("material.a", format_g17(material.a));
    cfg.set("material.b", format_g17(material.b));
    cfg.set("material.c", format_g17(material.c));
    cfg.set("material.L1", format_g17(material.L1));
    cfg.set("material.Gamma", format_g17(material.Gamma));
    cfg.set("material.eps", format_g17(material.eps));
    cfg.set("grid.dim", std::to_string(grid.dim));
    const char* nk[3] = {"grid.nx", "grid.ny", "grid.nz"};
    const char* lk[3] = {"grid.lx", "grid.ly", "grid.lz"};
    for (int a = 0; a < grid.dim; ++a) {
        cfg.set(nk[a], std::to_string(grid.n[a]));
        cfg.set(lk[a], format_g17(grid.length[a]));
    }
    cfg.set("init.builder", init.builder);
    cfg.set("init.m", std::to_string(init.m));
    cfg.set("init.axis", std::to_string(init.axis));
    cfg.set("init.amplitude", format_g17(init.amplitude));
    if (init.has_seed) cfg.set("init.seed", std::to_string(init.seed));
    cfg.set("init.dir", vec3_str(init.dir));
    cfg.set("solver.dt", solver.dt > 0.0 ? format_g17(solver.dt) : "auto");
    cfg.set("solver.scheme", scheme_name(solver.scheme));
    cfg.set("solver.t_end", format_g17(solver.t_end));
    cfg.set("solver.snapshot_dt", format_g17(solver.snapshot_dt));
    cfg.set("solver.drift_correction", solver.drift_correction ? "on" : "off");
    cfg.set("monotonicity.enabled", monotonicity.enabled ? "on" : "off");
    if (monotonicity.t0) cfg.set("monotonicity.t0", format_g17(*monotonicity.t0));
    cfg.set("monotonicity.r_lo_frac", format_g17(monotonicity.r_lo_frac));
    cfg.set("monotonicity.r_hi_frac", format_g17(monotonicity.r_hi_frac));
    cfg.set("monotonicity.count", std::to_string(monotonicity.count));
    cfg.set("diag.gap_tol", format_g17(gap_tol));
    cfg.set("diag.eps0_frac", format_g17(eps0_frac));
    cfg.set("output.dir", out_dir);
    cfg.set("output.snapshot_stride", std::to_string(snapshot_stride));
    return cfg;
}

RunResult run_simulation(const RunConfig& cfg) {
    RunResult res;
    res.cfg = cfg;
    res.run.grid = cfg.grid;
    res.run.params = cfg.material;

    const DirectorField n0 = cfg.init.build(cfg.grid);
    QField q = initial_from_director(n0, cfg.material);
    QFlowStepper stepper(cfg.grid, cfg.material, cfg.solver);
    // land exactly on t_end
    const long nsteps = std::lround(std::ceil(cfg.solver.t_end / stepper.dt() - 1e-12));
    const double dt = cfg.solver.t_end / static_cast<double>(nsteps);
    SolverConfig adj = cfg.solver;
    adj.dt = dt;
    QFlowStepper run_stepper(cfg.grid, cfg.material, adj);
    res.dt = dt;

    std::optional<MonotonicityAccumulator> mono;
    if (cfg.monotonicity.enabled) {
        const double t0 = cfg.monotonicity.t0.value_or(0.8 * cfg.solver.t_end);
        const double rmax = 0.5 * std::sqrt(t0);
        std::vector<double> ladder;
        for (int i = 0; i < cfg.monotonicity.count; ++i) {
            const double f = cfg.monotonicity.count == 1
                                 ? cfg.monotonicity.r_lo_frac
                                 : cfg.monotonicity.r_lo_frac +
                                       (cfg.monotonicity.r_hi_frac - cfg.monotonicity.r_lo_frac) *
                                           i / (cfg.monotonicity.count - 1);
            ladder.push_back(f * rmax);
        }
        ParabolicPoint z0;
        for (int a = 0; a < cfg.grid.dim; ++a) z0.x[a] = 0.5 * cfg.grid.length[a];
        z0.t = t0;
        mono.emplace(cfg.grid, cfg.material, z0, ladder);
    }

    std::vector<double> density;
    const auto observe = [&](const QField& f) {
        if (!mono) return;
        energy_density(f, cfg.material, density);
        mono->observe(f.time, density);
    };

    double cum = 0.0;
    res.run.snapshots.push_back(q);
    res.records.push_back(make_record(q, nullptr, cfg.material, cum, cfg.gap_tol));
    observe(q);

    long next_sample = 1;
    for (long s = 1; s <= nsteps; ++s) {
        run_stepper.step(q);
        observe(q);
        const bool sample_due =
            q.time + 1e-12 >= static_cast<double>(next_sample) * cfg.solver.snapshot_dt;
        if (sample_due || s == nsteps) {
            const QField& prev = res.run.snapshots.back();
            DiagnosticsRecord rec = make_record(q, &prev, cfg.material, cum, cfg.gap_tol);
            cum = rec.cum_dtQ_sq;
            res.records.push_back(rec);
            res.run.snapshots.push_back(q);
            while (q.time + 1e-12 >=
                   static_cast<double>(next_sample) * cfg.solver.snapshot_dt)
                ++next_sample;
        }
    }

    if (mono) {
        res.monotonicity_detail = mono->rows();
        for (const auto& d : res.monotonicity_detail) {
            MonotonicityRow row;
            row.z0 = mono->z0();
            row.R = d.R;
            row.Phi = d.Phi;
            row.Psi = d.Psi;
            res.monotonicity.push_back(row);
        }
    }
    return res;
}

void write_run_artifacts(const RunResult& res, const std::string& out_dir) {
    fs::create_directories(out_dir);
    Config manifest = res.cfg.to_config();
    manifest.set("output.dir", out_dir);
    manifest.set("manifest.version", kVersion);
    manifest.set("manifest.config_hash",
                 std::to_string(res.cfg.to_config().hash()));
    std::ofstream mf(out_dir + "/manifest.cfg");
    mf << manifest.canonical();

    write_diagnostics_csv(out_dir + "/diagnostics.csv", res.records);
    if (!res.monotonicity.empty())
        write_monotonicity_csv(out_dir + "/monotonicity.csv", res.monotonicity);

    if (res.cfg.snapshot_stride > 0) {
        for (std::size_t i = 0; i < res.run.snapshots.size();
             i += static_cast<std::size_t>(res.cfg.snapshot_stride)) {
            char name[32];
            std::snprintf(name, sizeof name, "snap_%06zu.qfld", i);
            write_qfld(out_dir + "/" + name, res.run.snapshots[i], res.cfg.material);
        }
    }
}

SweepSpec SweepSpec::from_config(const Config& cfg) {
    SweepSpec spec;
    spec.base = RunConfig::from_config(cfg);
    const double first = cfg.get_double("sweep.eps_first", spec.base.material.eps);
    const double ratio = cfg.get_double("sweep.ratio", 0.5);
    const long long count = cfg.get_int("sweep.count", 3);
    spec.compare_harmonic = cfg.get_bool("sweep.compare_harmonic", true);
    if (cfg.has("sweep.eps_ladder")) {
        std::istringstream ss(cfg.get_string("sweep.eps_ladder"));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || !(v > 0.0))
                throw ConfigError("sweep.eps_ladder: bad entry '" + tok + "'");
            spec.eps_ladder.push_back(v);
        }
    } else {
        if (!(ratio > 0.0 && ratio < 1.0))
            throw ConfigError("sweep.ratio must lie in (0,1)");
        double e = first;
        for (long long i = 0; i < count; ++i) {
            spec.eps_ladder.push_back(e);
            e *= ratio;
        }
    }
    if (spec.eps_ladder.size() < 2)
        throw ConfigError("sweep ladder must contain at least 2 values");
    for (std::size_t i = 1; i < spec.eps_ladder.size(); ++i)
        if (!(spec.eps_ladder[i] < spec.eps_ladder[i - 1]))
            throw ConfigError("sweep ladder must be strictly decreasing");
    return spec;
}

DirectorField solve_harmonic_reference(const RunConfig& cfg) {
    DirectorField n = cfg.init.build(cfg.grid);
    const double t_end = (cfg.material.L1 / cfg.material.Gamma) * cfg.solver.t_end;
    SolverConfig hcfg;
    hcfg.dt = 0.0;
    HarmonicMapStepper stepper(cfg.grid, hcfg);
    const long nsteps = std::lround(std::ceil(t_end / stepper.dt() - 1e-12));
    if (nsteps <= 0) return n;
    SolverConfig adj;
    adj.dt = t_end / static_cast<double>(nsteps);
    HarmonicMapStepper run_stepper(cfg.grid, adj);
    for (long s = 0; s < nsteps; ++s) run_stepper.step(n);
    return n;
}

double director_gap_L2(const DirectorField& a, const DirectorField& b) {
    if (!a.grid.compatible(b.grid)) throw InvalidInput("director_gap_L2: grid mismatch");
    const double vol = a.grid.cell_volume();
    double dm = 0.0, dp = 0.0;
    for (std::size_t i = 0; i < a.cells(); ++i) {
        const Vec3 u = a.at(i), v = b.at(i);
        const Vec3 m = {u[0] - v[0], u[1] - v[1], u[2] - v[2]};
        const Vec3 p = {u[0] + v[0], u[1] + v[1], u[2] + v[2]};
        dm += dot(m, m) * vol;
        dp += dot(p, p) * vol;
    }
    return std::sqrt(std::min(dm, dp));
}

SweepResult run_sweep(const SweepSpec& spec, const std::string& out_dir) {
    SweepResult result;
    std::optional<DirectorField> href;
    for (std::size_t i = 0; i < spec.eps_ladder.size(); ++i) {
        RunConfig rc = spec.base;
        rc.material.eps = spec.eps_ladder[i];
        rc.out_dir = out_dir + "/eps_" + std::to_string(i);
        RunResult rr;
        try {
            rr = run_simulation(rc);
        } catch (const Error& err) {
            throw Error("sweep member eps = " + format_g17(rc.material.eps) +
                        " failed: " + err.what());
        }
        write_run_artifacts(rr, rc.out_dir);

        SweepRow row;
        row.eps = rc.material.eps;
        const DiagnosticsRecord& last = rr.records.back();
        row.sup_distN_T = last.sup_distN;
        row.bulk_fB_T = last.E_bulk * rc.material.eps * rc.material.Gamma;
        row.tangent_residual_T = last.tangent_residual;
        if (spec.compare_harmonic) {
            if (!href) href = solve_harmonic_reference(rc);
            const DirectorField lifted =
                lift_director(rr.run.snapshots.back(), rc.material, rc.gap_tol);
            row.director_gap_L2 = director_gap_L2(lifted, *href);
        } else {
            row.director_gap_L2 = std::numeric_limits<double>::quiet_NaN();
        }
        result.rows.push_back(row);
    }

    const auto slope = [&](auto metric) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (const auto& r : result.rows) {
            const double m = metric(r);
            if (!(m > 0.0)) return std::numeric_limits<double>::quiet_NaN();
            const double x = std::log(r.eps), y = std::log(m);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };
    result.slope_dist = slope([](const SweepRow& r) { return r.sup_distN_T; });
    result.slope_bulk = slope([](const SweepRow& r) { return r.bulk_fB_T; });
    result.slope_tangent = slope([](const SweepRow& r) { return r.tangent_residual_T; });
    result.slope_gap = slope([](const SweepRow& r) { return r.director_gap_L2; });
    return result;
}

void write_sweep_artifacts(const SweepResult& res, const std::string& out_dir) {
    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/sweep_report.csv");
        out << "eps,sup_distN_T,bulk_fB_T,tangent_residual_T,director_gap_L2\n";
        for (const auto& r : res.rows)
            out << format_g17(r.eps) << ',' << format_g17(r.sup_distN_T) << ','
                << format_g17(r.bulk_fB_T) << ',' << format_g17(r.tangent_residual_T)
                << ',' << format_g17(r.director_gap_L2) << '\n';
    }
    {
        std::ofstream out(out_dir + "/sweep_slopes.csv");
        out << "metric,slope\n";
        out << "sup_distN_T," << format_g17(res.slope_dist) << '\n';
        out << "bulk_fB_T," << format_g17(res.slope_bulk) << '\n';
        out << "tangent_residual_T," << format_g17(res.slope_tangent) << '\n';
        out << "director_gap_L2," << format_g17(res.slope_gap) << '\n';
    }
}

void report_runs(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (run_dirs.empty()) throw ConfigError("report: no run directories given");
    struct Entry {
        std::string dir;
        Config manifest;
        std::vector<DiagnosticsRecord> rows;
        double eps = 0.0;
    };
    std::vector<Entry> entries;
    for (const auto& d : run_dirs) {
        Entry e;
        e.dir = d;
        e.manifest = Config::parse_file(d + "/manifest.cfg");
        e.rows = read_diagnostics_csv(d + "/diagnostics.csv");
        e.eps = e.manifest.get_double("material.eps");
        entries.push_back(std::move(e));
    }
    const auto grid_keys = {"grid.dim", "grid.nx", "grid.ny", "grid.nz",
                            "grid.lx",  "grid.ly", "grid.lz"};
    for (std::size_t i = 1; i < entries.size(); ++i) {
        for (const char* k : grid_keys) {
            const std::string a = entries[0].manifest.get_string(k, "");
            const std::string b = entries[i].manifest.get_string(k, "");
            if (a != b)
                throw ConfigError("report: incompatible grids ('" + entries[0].dir +
                                  "' vs '" + entries[i].dir + "', key " + k + ")");
        }
    }

    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/report.csv");
        out << "run_id,eps,time,E_total,E_dirichlet,E_bulk,sup_absQ,sup_distN,"
               "cum_dtQ_sq,tangent_residual,lambda_L2,lambda_sup\n";
        for (std::size_t i = 0; i < entries.size(); ++i)
            for (const auto& r : entries[i].rows)
                out << i << ',' << format_g17(entries[i].eps) << ',' << format_g17(r.time)
                    << ',' << format_g17(r.E_total) << ',' << format_g17(r.E_dirichlet)
                    << ',' << format_g17(r.E_bulk) << ',' << format_g17(r.sup_absQ) << ','
                    << format_g17(r.sup_distN) << ',' << format_g17(r.cum_dtQ_sq) << ','
                    << format_g17(r.tangent_residual) << ',' << format_g17(r.lambda_L2)
                    << ',' << format_g17(r.lambda_sup) << '\n';
    }
    const auto plot = [&](const std::string& name, auto getter) {
        std::ofstream out(out_dir + "/plot_" + name + ".dat");
        for (std::size_t i = 0; i < entries.size(); ++i) {
            out << "# run " << i << " dir " << entries[i].dir << " eps "
                << format_g17(entries[i].eps) << '\n';
            for (const auto& r : entries[i].rows)
                out << format_g17(r.time) << ' ' << format_g17(getter(r)) << '\n';
            out << "\n\n";
        }
    };
    plot("E_total", [](const DiagnosticsRecord& r) { return r.E_total; });
    plot("sup_distN", [](const DiagnosticsRecord& r) { return r.sup_distN; });
    plot("tangent_residual", [](const DiagnosticsRecord& r) { return r.tangent_residual; });
}

}  // namespace qflow
