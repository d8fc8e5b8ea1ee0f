// lz — command-line front end: reproducible sweeps, fits, constraint
// verification, series comparisons, and SSH edge-transfer scans.

#include "lz/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out;
    int threads{1};
    std::optional<double> rel_tol, abs_tol, window_tol, t_window;
    std::optional<int> max_doublings;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--out", out, "output file path");
        cmd->add_option("--threads", threads, "worker threads for grid points");
        cmd->add_option("--rel-tol", rel_tol, "solver relative tolerance");
        cmd->add_option("--abs-tol", abs_tol, "solver absolute tolerance");
        cmd->add_option("--window-tol", window_tol, "window-doubling tolerance");
        cmd->add_option("--t-window", t_window, "explicit half-window (default AUTO)");
        cmd->add_option("--max-doublings", max_doublings, "window doubling limit");
    }

    // Config first, then flags override.
    lz::cli::RunConfig merged() const {
        lz::cli::RunConfig cfg;
        if (!config_path.empty())
            cfg = lz::cli::config_from_json(lz::io::load_json_file(config_path));
        if (!out.empty()) cfg.out = out;
        if (threads > 1) cfg.threads = threads;
        if (rel_tol) cfg.solver.rel_tol = *rel_tol;
        if (abs_tol) cfg.solver.abs_tol = *abs_tol;
        if (window_tol) cfg.solver.window_tol = *window_tol;
        if (t_window) cfg.solver.t_window = *t_window;
        if (max_doublings) cfg.solver.max_doublings = *max_doublings;
        cfg.solver.validate();
        return cfg;
    }
};

std::vector<double> parse_beta_list(const std::string& csv) {
    std::vector<double> betas;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const std::size_t pos = csv.find(',', start);
        const std::string tok =
            csv.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        if (!tok.empty()) betas.push_back(lz::io::parse_double(tok));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return betas;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lz — multistate Landau-Zener scattering toolkit"};
    app.require_subcommand(1);

    CommonFlags sweep_flags, fit_flags, verify_flags, series_flags, ssh_flags;

    auto* sweep = app.add_subcommand("sweep", "propagate over a log-β grid, write CSV");
    sweep_flags.attach(sweep);
    std::optional<double> sweep_bmin, sweep_bmax;
    std::optional<int> sweep_points;
    sweep->add_option("--beta-min", sweep_bmin, "grid lower endpoint");
    sweep->add_option("--beta-max", sweep_bmax, "grid upper endpoint");
    sweep->add_option("--points", sweep_points, "grid size");

    auto* fit = app.add_subcommand("fit", "fit a model family to a sweep CSV");
    std::string fit_model, fit_data, fit_target = "s33";
    fit->add_option("--model", fit_model, "s33-two-exp | s33-four-param | s32-three-param")
        ->required();
    fit->add_option("--data", fit_data, "sweep CSV produced by `lz sweep`")->required();
    fit->add_option("--target", fit_target, "s33 | abs_s32");
    fit->add_option("--out", fit_flags.out, "write the fit report JSON here");

    auto* verify = app.add_subcommand("verify", "single-β propagation + constraint report");
    verify_flags.attach(verify);
    std::optional<double> verify_beta;
    double verify_tol = 1e-3;
    verify->add_option("--beta", verify_beta, "override β from the config");
    verify->add_option("--tol", verify_tol, "max allowed constraint residual");

    auto* series = app.add_subcommand("series", "diabatic series vs numerics CSV");
    series_flags.attach(series);
    std::string series_betas = "50,100,200,400";
    series->add_option("--beta-list", series_betas, "comma-separated β values");

    auto* ssh = app.add_subcommand("ssh", "edge-transfer sweep of the 5-site chain");
    ssh_flags.attach(ssh);
    int ssh_sites = 5;
    double ssh_bmin = 1e-2, ssh_bmax = 10.0;
    int ssh_points = 25;
    ssh->add_option("--sites", ssh_sites, "chain length (5 supported)");
    ssh->add_option("--beta-min", ssh_bmin, "grid lower endpoint");
    ssh->add_option("--beta-max", ssh_bmax, "grid upper endpoint");
    ssh->add_option("--points", ssh_points, "grid size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return lz::cli::kUsage;
    }

    try {
        if (sweep->parsed()) {
            lz::cli::RunConfig cfg = sweep_flags.merged();
            if (!cfg.grid) cfg.grid = lz::SweepGrid{};
            if (sweep_bmin) cfg.grid->beta_min = *sweep_bmin;
            if (sweep_bmax) cfg.grid->beta_max = *sweep_bmax;
            if (sweep_points) cfg.grid->n_points = *sweep_points;
            return lz::cli::cmd_sweep(std::move(cfg));
        }
        if (fit->parsed())
            return lz::cli::cmd_fit(fit_model, fit_data, fit_target, fit_flags.out);
        if (verify->parsed())
            return lz::cli::cmd_verify(verify_flags.merged(), verify_tol, verify_beta);
        if (series->parsed())
            return lz::cli::cmd_series(series_flags.merged(), parse_beta_list(series_betas));
        if (ssh->parsed()) {
            lz::SweepGrid grid{ssh_bmin, ssh_bmax, ssh_points};
            return lz::cli::cmd_ssh(ssh_flags.merged(), ssh_sites, grid);
        }
    } catch (const lz::IntegrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lz::cli::kNoConverge;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lz::cli::kUsage;
    }
    return lz::cli::kUsage;
}
