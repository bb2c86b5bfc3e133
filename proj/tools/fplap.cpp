// Batch front-end: solve, identities, exponent, harnack, suite.

#include "fplap/acceptance.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { ok = 0, validation = 1, nonconvergence = 2, criterion = 3 };

struct Common {
    std::string config;
    std::string out = ".";
    int threads = 0;
    std::optional<std::uint64_t> seed;
};

struct Run {
    std::string command;
    fplap::ExperimentConfig cfg;
    fs::path out;

    json provenance() const { return {{"command", command}, {"config", fplap::to_json(cfg)}}; }
};

struct Solved {
    fplap::FracParams params;
    fplap::SolveReport report;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config, "JSON configuration document")->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--threads", c.threads, "worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", c.seed, "seed for randomized inputs");
}

fplap::DiscreteFunction source_on(const fplap::ExperimentConfig& cfg, const fplap::Grid& g)
{
    return fplap::DiscreteFunction::interpolate(g, [&](double x) { return cfg.source(x); });
}

fplap::SolveReport solve_with(const fplap::ExperimentConfig& cfg, const fplap::FracParams& params)
{
    const fplap::Grid g = fplap::Grid::make(cfg.a, cfg.b, cfg.n);
    const fplap::StiffnessQuadrature sq = fplap::assemble(g, params, cfg.fem);
    return fplap::solve_dirichlet(source_on(cfg, g), sq, cfg.solver);
}

/// The configured input file, or one inline solve per sweep pair.
std::vector<Solved> gather(const Run& run)
{
    std::vector<Solved> out;
    if (run.cfg.input) {
        fplap::SolutionFile file = fplap::read_solution(*run.cfg.input);
        fplap::SolveReport rep;
        rep.solution = std::move(file.u);
        rep.converged = true;
        rep.message = "read from " + *run.cfg.input;
        out.push_back({file.params, std::move(rep)});
        return out;
    }
    for (double s : run.cfg.sweep_s)
        for (double p : run.cfg.sweep_p) {
            const fplap::FracParams fp = fplap::FracParams::make(1, s, p);
            std::printf("solving s=%g p=%g n=%d\n", s, p, run.cfg.n);
            std::fflush(stdout);
            out.push_back({fp, solve_with(run.cfg, fp)});
            if (!out.back().report.converged)
                std::printf("  warning: %s\n", out.back().report.message.c_str());
        }
    return out;
}

int cmd_solve(const Run& run)
{
    const fplap::ExperimentConfig& cfg = run.cfg;
    const fplap::SolveReport rep = solve_with(cfg, cfg.params);
    fplap::write_solution(run.out / "solution.txt", rep.solution, cfg.params);

    fplap::CsvTable table({"s", "p", "n", "converged", "iterations", "final_energy", "grad_sup_norm", "tolerance",
                           "u_max", "message"},
                          run.provenance());
    table.row() << cfg.params.s << cfg.params.p << cfg.n << rep.converged << rep.iterations << rep.final_energy
                << rep.grad_sup_norm << rep.tolerance << rep.solution.values.lpNorm<Eigen::Infinity>() << rep.message;
    table.save(run.out / "report.csv");
    std::printf("converged=%s iterations=%d energy=%.12g |grad|=%.3e (threshold %.3e)\n",
                rep.converged ? "true" : "false", rep.iterations, rep.final_energy, rep.grad_sup_norm, rep.tolerance);
    if (!rep.converged) {
        fplap::write_error(run.out / "error.json", "non-convergence", rep.message, Exit::nonconvergence,
                           run.provenance());
        return Exit::nonconvergence;
    }
    return Exit::ok;
}

int cmd_identities(const Run& run)
{
    fplap::CsvTable table({"s", "p", "halfline_value", "halfline_split_err", "halfline_pass", "halfspace_value",
                           "halfspace_err", "halfspace_pass", "pieces_err", "pieces_pass", "psi_max", "psi_pass",
                           "tail_err", "tail_pass", "additivity_err", "additivity_pass", "scaling_err",
                           "scaling_pass", "all_pass"},
                          run.provenance());
    int failures = 0;
    for (double s : run.cfg.sweep_s)
        for (double p : run.cfg.sweep_p) {
            const fplap::IdentityRow r = fplap::identity_row(fplap::FracParams::make(1, s, p), run.cfg.pv);
            table.row() << s << p << r.halfline_value << r.halfline_split_err << r.halfline_pass
                        << r.halfspace_value << r.halfspace_err << r.halfspace_pass << r.pieces_err << r.pieces_pass
                        << r.psi_max << r.psi_pass << r.tail_err << r.tail_pass << r.additivity_err
                        << r.additivity_pass << r.scaling_err << r.scaling_pass << r.all_pass();
            failures += !r.all_pass();
            std::printf("%s s=%g p=%g halfline %.2e/%.2e halfspace %.2e pieces %.2e psi %.3f tail %.2e "
                        "additivity %.2e scaling %.2e\n",
                        r.all_pass() ? "PASS" : "FAIL", s, p, r.halfline_value, r.halfline_split_err,
                        r.halfspace_err, r.pieces_err, r.psi_max, r.tail_err, r.additivity_err, r.scaling_err);
        }
    table.save(run.out / "identities.csv");
    if (failures) {
        fplap::write_error(run.out / "error.json", "check-failure",
                           std::to_string(failures) + " identity rows failed", Exit::criterion, run.provenance());
        return Exit::criterion;
    }
    return Exit::ok;
}

int cmd_exponent(const Run& run)
{
    const fplap::ExperimentConfig& cfg = run.cfg;
    const std::vector<Solved> sols = gather(run);
    fplap::CsvTable table({"s", "p", "n", "converged", "boundary_exponent", "boundary_intercept", "boundary_r2",
                           "boundary_samples", "boundary_excluded", "holder_exponent", "holder_r2",
                           "holder_samples", "holder_defined"},
                          run.provenance());
    for (const Solved& sol : sols) {
        const fplap::DiscreteFunction& u = sol.report.solution;
        const fplap::ExponentFit b = fplap::boundary_exponent(u, cfg.boundary_window);
        const double center = 0.5 * (u.grid.a + u.grid.b);
        const fplap::OscillationProfile prof =
            fplap::oscillation_profile(u, center, cfg.osc_radius.value_or(0.5 * u.grid.length()), cfg.levels);
        const fplap::ExponentFit h = fplap::holder_fit(prof);
        table.row() << sol.params.s << sol.params.p << u.grid.n << sol.report.converged << b.exponent << b.intercept
                    << b.r_squared << b.samples << b.excluded << h.exponent << h.r_squared << h.samples
                    << h.defined;
        std::printf("s=%g p=%g boundary exponent %.4f (r2 %.4f)  interior holder fit %.4f (r2 %.4f)\n",
                    sol.params.s, sol.params.p, b.exponent, b.r_squared, h.exponent, h.r_squared);
    }
    table.save(run.out / "exponents.csv");
    return Exit::ok;
}

int cmd_harnack(const Run& run)
{
    const fplap::ExperimentConfig& cfg = run.cfg;
    const std::vector<Solved> sols = gather(run);
    fplap::CsvTable table({"s", "p", "n", "converged", "center", "R", "K", "inf_quarter", "annulus_mean", "tail_neg",
                           "sup_ball", "K_term", "sigma_emp", "supersolution", "supersolution_defect"},
                          run.provenance());
    for (const Solved& sol : sols) {
        const fplap::DiscreteFunction& u = sol.report.solution;
        const fplap::StiffnessQuadrature sq = fplap::assemble(u.grid, sol.params, cfg.fem);
        std::vector<double> centers = cfg.centers, radii = cfg.radii;
        if (centers.empty())
            centers.push_back(0.5 * (u.grid.a + u.grid.b));
        if (radii.empty())
            radii.push_back(0.25 * u.grid.length());
        for (double c : centers)
            for (double R : radii) {
                const fplap::HarnackReport h = fplap::harnack_report(u, c, R, cfg.K, sol.params, cfg.pv, &sq);
                table.row() << sol.params.s << sol.params.p << u.grid.n << sol.report.converged << c << R << cfg.K
                            << h.inf_quarter << h.annulus_mean << h.tail_neg << h.sup_ball << h.K_term
                            << h.sigma_emp << h.supersolution << h.supersolution_defect;
                std::printf("s=%g p=%g center=%g R=%g sigma_emp=%.4f supersolution=%s\n", sol.params.s,
                            sol.params.p, c, R, h.sigma_emp, h.supersolution ? "yes" : "no");
            }
    }
    table.save(run.out / "harnack.csv");
    return Exit::ok;
}

int cmd_suite(const Run& run)
{
    fplap::SuiteContext ctx{run.cfg.suite, run.cfg.seed, run.cfg.fem, run.cfg.pv};
    fplap::CsvTable table({"id", "criterion", "passed", "tag", "summary"}, run.provenance());
    std::string details;
    const auto results = fplap::run_suite(ctx, [&](const fplap::CriterionResult& r) {
        std::printf("%s %2d %-26s %s%s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.summary.c_str(),
                    r.tag.empty() ? "" : (" [" + r.tag + "]").c_str());
        std::fflush(stdout);
        table.row() << r.id << r.name << r.passed << r.tag << r.summary;
        details += "## " + std::to_string(r.id) + " " + r.name + "\n";
        for (const std::string& line : r.notes)
            details += line + "\n";
    });
    table.save(run.out / "suite.csv");
    std::ofstream(run.out / "suite_details.txt") << details;
    int failed = 0;
    for (const auto& r : results)
        failed += !r.passed;
    std::printf("%zu criteria, %d failed\n", results.size(), failed);
    if (failed) {
        fplap::write_error(run.out / "error.json", "criterion-failure", std::to_string(failed) + " criteria failed",
                           Exit::criterion, run.provenance());
        return Exit::criterion;
    }
    return Exit::ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fractional p-Laplacian Dirichlet solver and regularity experiments"};
    app.require_subcommand(1);
    Common common;
    std::map<std::string, std::function<int(const Run&)>> handlers{{"solve", cmd_solve},
                                                                     {"identities", cmd_identities},
                                                                     {"exponent", cmd_exponent},
                                                                     {"harnack", cmd_harnack},
                                                                     {"suite", cmd_suite}};
    const std::map<std::string, std::string> help{
        {"solve", "minimize the discrete energy and write the nodal solution"},
        {"identities", "half-line, half-space and nonlocal identity checks per (s, p)"},
        {"exponent", "boundary and interior exponent fits"},
        {"harnack", "weak Harnack ball statistics"},
        {"suite", "run the acceptance criteria"}};
    for (const auto& [name, text] : help)
        add_common(app.add_subcommand(name, text), common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return Exit::validation;
    }

    Run run;
    run.command = app.get_subcommands().front()->get_name();
    run.out = common.out;
    try {
        fs::create_directories(run.out);
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return Exit::validation;
    }

    try {
        run.cfg = common.config.empty() ? fplap::parse_config(json::object()) : fplap::load_config(common.config);
        if (common.seed)
            run.cfg.seed = *common.seed;
        fplap::set_num_threads(common.threads);
        return handlers.at(run.command)(run);
    } catch (const fplap::DomainError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        fplap::write_error(run.out / "error.json", "validation", e.what(), Exit::validation, run.provenance());
        return Exit::validation;
    } catch (const fplap::ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << '\n';
        fplap::write_error(run.out / "error.json", "non-convergence", e.what(), Exit::nonconvergence,
                           run.provenance());
        return Exit::nonconvergence;
    }
}
