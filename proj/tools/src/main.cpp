#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include <fmt/format.h>

#include "trimfmr/error.hpp"
#include "trimfmr_app/commands.hpp"
#include "trimfmr_app/config.hpp"

using trimfmr::app::Json;

namespace {

struct Flags {
    std::string data;
    std::optional<std::string> response;
    std::optional<std::size_t> m;
    std::optional<std::string> penalty;
    std::optional<double> lambda;
    std::optional<std::string> lambda_grid;
    std::optional<double> alpha;
    bool select_alpha = false;
    bool refit_alpha = false;
    std::optional<double> a;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    std::optional<std::string> out_dir;
    std::optional<std::string> config;
    std::optional<std::size_t> kfold;
    std::optional<std::size_t> mccv;
    std::optional<std::size_t> mccv_reps;
    std::optional<std::string> methods;
    std::optional<std::size_t> n_boot;
    std::optional<std::string> criterion;
};

std::vector<double> parse_doubles(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw trimfmr::ConfigError(fmt::format("{}: '{}' is not a number", flag, item));
        }
    }
    return out;
}

std::vector<std::string> parse_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

Json flags_json(const std::string& command, const Flags& f) {
    Json j;
    j["command"] = command;
    if (!f.data.empty()) j["data"] = f.data;
    if (f.response) j["response"] = *f.response;
    if (f.m) j["m"] = *f.m;
    if (f.penalty) j["penalty"] = *f.penalty;
    if (f.lambda) j["lambda"] = *f.lambda;
    if (f.lambda_grid) j["lambda_grid"] = parse_doubles(*f.lambda_grid, "--lambda-grid");
    if (f.alpha) j["alpha"] = *f.alpha;
    if (f.select_alpha) j["select_alpha"] = true;
    if (f.a) j["a"] = *f.a;
    if (f.seed) j["seed"] = *f.seed;
    if (f.threads) j["threads"] = *f.threads;
    if (f.out_dir) j["out_dir"] = *f.out_dir;
    if (f.kfold) j["cv"]["kfold"] = *f.kfold;
    if (f.mccv) j["cv"]["mccv_d"] = *f.mccv;
    if (f.mccv_reps) j["cv"]["mccv_reps"] = *f.mccv_reps;
    if (f.refit_alpha) j["cv"]["refit_alpha"] = true;
    if (f.methods) {
        const auto tags = parse_list(*f.methods);
        if (command == "simulate") j["study"]["methods"] = tags;
        else j["cv"]["methods"] = tags;
    }
    if (f.n_boot) j["alpha_select"]["n_boot"] = *f.n_boot;
    if (f.criterion) j["alpha_select"]["criterion"] = *f.criterion;
    return j;
}

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--m", f.m, "Number of mixture components");
    cmd->add_option("--penalty", f.penalty, "lasso, scad or mcp");
    auto* lambda = cmd->add_option("--lambda", f.lambda, "Fixed tuning parameter");
    auto* grid = cmd->add_option("--lambda-grid", f.lambda_grid, "Comma-separated lambda grid for BIC selection");
    lambda->excludes(grid);
    cmd->add_option("--a", f.a, "Concavity constant for SCAD/MCP");
    cmd->add_option("--seed", f.seed, "Master random seed");
    cmd->add_option("--threads", f.threads, "Worker threads (default: TRIMFMR_THREADS or all cores)");
    cmd->add_option("--out-dir", f.out_dir, "Output directory");
    cmd->add_option("--config", f.config, "JSON config file; its values override flags");
}

void add_data(CLI::App* cmd, Flags& f) {
    cmd->add_option("data", f.data, "Input CSV with a header row")->required();
    cmd->add_option("--response", f.response, "Name of the response column");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust variable selection for mixtures of linear regressions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", trimfmr::app::kVersion);
    Flags f;

    auto* fit = app.add_subcommand("fit", "Fit the trimmed penalized mixture to a CSV file");
    add_data(fit, f);
    add_common(fit, f);
    auto* alpha = fit->add_option("--alpha", f.alpha, "Trimming proportion");
    auto* sel = fit->add_flag("--select-alpha", f.select_alpha, "Choose the trimming proportion by bootstrap");
    alpha->excludes(sel);
    fit->add_option("--n-boot", f.n_boot, "Bootstrap samples per alpha (with --select-alpha)");

    auto* simulate = app.add_subcommand("simulate", "Run the simulation study");
    add_common(simulate, f);
    simulate->add_option("--alpha", f.alpha, "Trimming proportion of the trimmed methods");
    simulate->add_option("--methods", f.methods, "Comma-separated method tags (ml, ms, mmcp, mtl, mts, mtmcp)");

    auto* select = app.add_subcommand("select-alpha", "Bootstrap selection of the trimming proportion");
    add_data(select, f);
    add_common(select, f);
    select->add_option("--n-boot", f.n_boot, "Bootstrap samples per alpha");
    select->add_option("--criterion", f.criterion, "max_diagonal or max_eigenvalue");

    auto* cv = app.add_subcommand("cv", "Cross-validated prediction error per method");
    add_data(cv, f);
    add_common(cv, f);
    cv->add_option("--alpha", f.alpha, "Trimming proportion of the trimmed methods");
    auto* kfold = cv->add_option("--kfold", f.kfold, "Number of folds");
    auto* mccv = cv->add_option("--mccv", f.mccv, "Monte-Carlo CV hold-out size d");
    cv->add_option("--mccv-reps", f.mccv_reps, "Monte-Carlo CV repetitions");
    kfold->excludes(mccv);
    cv->add_flag("--refit-alpha", f.refit_alpha, "Choose alpha by bootstrap inside every training split");
    cv->add_option("--n-boot", f.n_boot, "Bootstrap samples per alpha (with --refit-alpha)");
    cv->add_option("--methods", f.methods, "Comma-separated method tags");

    std::string manifest;
    std::optional<std::string> rerun_out;
    auto* rerun = app.add_subcommand("rerun", "Repeat a run from its manifest.json");
    rerun->add_option("manifest", manifest, "Path to manifest.json")->required();
    rerun->add_option("--out-dir", rerun_out, "Output directory (default: <manifest dir>/rerun)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        trimfmr::app::RunConfig cfg;
        if (rerun->parsed()) {
            cfg = trimfmr::app::config_from_manifest(manifest);
            cfg.out_dir = rerun_out.value_or((std::filesystem::path(manifest).parent_path() / "rerun").string());
        } else {
            CLI::App* cmd = app.get_subcommands().front();
            cfg = trimfmr::app::resolve_config(flags_json(cmd->get_name(), f), f.config,
                                               std::getenv("TRIMFMR_THREADS"));
        }
        const auto result = trimfmr::app::run_command(cfg);
        std::cout << fmt::format("wrote {} files to {}\n", result.outputs.size() + 1, cfg.out_dir);
        return result.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return trimfmr::app::exit_code_for(e);
    }
}
