#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qflow/config.hpp"
#include "qflow/kernels.hpp"
#include "qflow/sim.hpp"
#include "qflow/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssert = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBlowup = 3;

int cmd_verify(const std::string& suite) {
    const auto results = qflow::verify_suite(suite);
    bool all_pass = true;
    for (const auto& r : results) {
        std::cout << qflow::format_check(r) << "\n";
        all_pass = all_pass && r.pass;
    }
    std::cout << (all_pass ? "verify: all checks passed" : "verify: FAILURES above")
              << " (" << results.size() << " checks, kernels="
              << qflow::kernels::backend_name(qflow::kernels::active()) << ")\n";
    return all_pass ? kExitOk : kExitAssert;
}

qflow::Config load_with_overrides(const std::string& path, const std::string& out_override,
                                  const std::string& seed_override) {
    qflow::Config cfg = qflow::Config::parse_file(path);
    if (!out_override.empty()) cfg.set("output.dir", out_override);
    if (!seed_override.empty()) cfg.set("init.seed", seed_override);
    return cfg;
}

int cmd_run(const std::string& path, const std::string& out_override,
            const std::string& seed_override) {
    const qflow::Config cfg = load_with_overrides(path, out_override, seed_override);
    const qflow::RunConfig rc = qflow::RunConfig::from_config(cfg);
    const qflow::RunResult res = qflow::run_simulation(rc);
    qflow::write_run_artifacts(res, rc.out_dir);
    std::cout << "run: " << res.records.size() << " samples, dt = " << res.dt
              << ", wrote " << rc.out_dir << "\n";
    return kExitOk;
}

int cmd_sweep(const std::string& path, const std::string& out_override,
              const std::string& seed_override) {
    const qflow::Config cfg = load_with_overrides(path, out_override, seed_override);
    qflow::SweepSpec spec = qflow::SweepSpec::from_config(cfg);
    const std::string out_dir = out_override.empty() ? spec.base.out_dir : out_override;
    const qflow::SweepResult res = qflow::run_sweep(spec, out_dir);
    qflow::write_sweep_artifacts(res, out_dir);
    std::cout << "sweep: " << res.rows.size() << " members, slopes: dist "
              << res.slope_dist << ", bulk " << res.slope_bulk << ", tangent "
              << res.slope_tangent << ", gap " << res.slope_gap << "; wrote " << out_dir
              << "\n";
    return kExitOk;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out_override) {
    const std::string out_dir = out_override.empty() ? "report_out" : out_override;
    qflow::report_runs(dirs, out_dir);
    std::cout << "report: merged " << dirs.size() << " run(s) into " << out_dir << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qflow - relaxed Landau-de Gennes Q-tensor gradient flow at desk scale"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    int nthreads = 1;
    std::string out_override, seed_override;
    app.add_option("--threads", nthreads, "worker threads for cell loops");
    app.add_option("--out", out_override, "override the output directory");
    app.add_option("--seed", seed_override, "override init.seed");

    std::string suite = "all";
    auto* verify = app.add_subcommand("verify", "run property suites");
    verify->add_option("suite", suite, "algebra|manifold|lemma23|lemma24|solver|all");

    std::string run_cfg;
    auto* run = app.add_subcommand("run", "run one simulation from a config file");
    run->add_option("config", run_cfg, "config file")->required();

    std::string sweep_cfg;
    auto* sweep = app.add_subcommand("sweep", "run an epsilon sweep from a spec file");
    sweep->add_option("spec", sweep_cfg, "sweep spec file")->required();

    std::vector<std::string> report_dirs;
    auto* report = app.add_subcommand("report", "merge diagnostics of finished runs");
    report->add_option("dirs", report_dirs, "run directories")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    qflow::set_threads(nthreads);
    try {
        if (verify->parsed()) return cmd_verify(suite);
        if (run->parsed()) return cmd_run(run_cfg, out_override, seed_override);
        if (sweep->parsed()) return cmd_sweep(sweep_cfg, out_override, seed_override);
        if (report->parsed()) return cmd_report(report_dirs, out_override);
    } catch (const qflow::BlowupError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBlowup;
    } catch (const qflow::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const qflow::UnknownSuite& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const qflow::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAssert;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAssert;
    }
    return kExitUsage;
}
