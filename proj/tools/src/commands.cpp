#include "trimfmr_app/commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "trimfmr/cross_validation.hpp"
#include "trimfmr/error.hpp"
#include "trimfmr/mixture.hpp"
#include "trimfmr_app/csv.hpp"

namespace trimfmr::app {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

void write_file(const RunConfig& cfg, RunResult& result, const std::string& name, const std::string& contents) {
    const fs::path path = fs::path(cfg.out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    out << contents;
    result.outputs.push_back(name);
}

std::string coefficients_csv(const MixtureParams& theta, const std::vector<std::string>& covariates) {
    std::ostringstream out;
    out << "component,proportion,variance,intercept";
    for (const auto& c : covariates) out << "," << c;
    out << "\n";
    for (Eigen::Index j = 0; j < theta.coefficients.cols(); ++j) {
        fmt::print(out, "{},{},{}", j + 1, theta.proportions(j), theta.variances(j));
        for (Eigen::Index k = 0; k < theta.coefficients.rows(); ++k) fmt::print(out, ",{}", theta.coefficients(k, j));
        out << "\n";
    }
    return out.str();
}

std::string retained_csv(const Dataset& data, const TrimmedFit& fit) {
    const Vector dens = row_log_densities(data, fit.theta);
    std::vector<std::uint8_t> kept(data.rows(), 0);
    for (const auto i : fit.retained) kept[i] = 1;
    std::ostringstream out;
    out << "row,retained,log_density\n";
    for (std::size_t i = 0; i < data.rows(); ++i) {
        fmt::print(out, "{},{},{}\n", i + 1, kept[i], dens(static_cast<Eigen::Index>(i)));
    }
    return out.str();
}

std::string trace_csv(const std::vector<double>& trace) {
    std::ostringstream out;
    out << "step,objective\n";
    for (std::size_t s = 0; s < trace.size(); ++s) fmt::print(out, "{},{}\n", s, trace[s]);
    return out.str();
}

std::string alpha_csv(const AlphaSelectReport& report) {
    std::ostringstream out;
    write_alpha_report_csv(out, report);
    return out.str();
}

std::string curve_csv(const AlphaSelectReport& report) {
    std::ostringstream out;
    out << "alpha,lambda,trimmed_objective\n";
    for (const auto& s : report.scores) fmt::print(out, "{},{},{}\n", s.alpha, s.lambda, s.reference_objective);
    return out.str();
}

std::uint64_t fingerprint(const Partition& splits) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& s : splits) {
        mix(s.size());
        for (const auto i : s) mix(i);
    }
    return h;
}

}  // namespace

RunResult cmd_fit(const RunConfig& cfg) {
    RunResult result;
    const CsvData csv = read_csv(cfg.data, cfg.response);
    double alpha = cfg.alpha;
    if (cfg.select_alpha) {
        const AlphaSelectReport report = select_alpha(csv.data, cfg.m, cfg.alpha_config());
        alpha = report.chosen_alpha;
        write_file(cfg, result, "alpha_report.csv", alpha_csv(report));
        write_file(cfg, result, "trimmed_likelihood_curve.csv", curve_csv(report));
    }
    const auto grid = cfg.effective_lambda_grid();
    const TrimmedFit fit = fit_trimmed(csv.data, cfg.m, cfg.penalty_spec(), cfg.trim_spec(alpha), cfg.em_controls(), grid);
    write_file(cfg, result, "coefficients.csv", coefficients_csv(fit.theta, csv.covariates));
    write_file(cfg, result, "retained.csv", retained_csv(csv.data, fit));
    write_file(cfg, result, "objective_trace.csv", trace_csv(fit.trimmed_objective_trace));
    std::ostringstream summary;
    summary << "alpha,lambda,objective,retained,outer_iterations,converged\n";
    fmt::print(summary, "{},{},{},{},{},{}\n", alpha, fit.lambda, fit.objective, fit.retained.size(),
               fit.outer_iterations, fit.converged ? 1 : 0);
    write_file(cfg, result, "fit_summary.csv", summary.str());
    result.extra["alpha_used"] = alpha;
    result.extra["lambda_selected"] = fit.lambda;
    return result;
}

RunResult cmd_select_alpha(const RunConfig& cfg) {
    RunResult result;
    const CsvData csv = read_csv(cfg.data, cfg.response);
    const AlphaSelectReport report = select_alpha(csv.data, cfg.m, cfg.alpha_config());
    write_file(cfg, result, "alpha_report.csv", alpha_csv(report));
    write_file(cfg, result, "trimmed_likelihood_curve.csv", curve_csv(report));
    result.extra["chosen_alpha"] = report.chosen_alpha;
    result.extra["criterion"] = to_string(report.criterion);
    return result;
}

RunResult cmd_cv(const RunConfig& cfg) {
    RunResult result;
    const CsvData csv = read_csv(cfg.data, cfg.response);
    const std::size_t n = csv.data.rows();
    const bool kfold = cfg.cv.kfold.has_value();
    const Partition splits = kfold ? kfold_partition(n, *cfg.cv.kfold, cfg.seed)
                                   : mccv_splits(n, *cfg.cv.mccv_d, cfg.cv.mccv_reps, cfg.seed);
    std::ostringstream out;
    out << "method,scheme,mspe,held_out_rows,splits_used,splits_skipped\n";
    const std::string scheme = kfold ? fmt::format("kfold{}", *cfg.cv.kfold)
                                     : fmt::format("mccv_d{}_r{}", *cfg.cv.mccv_d, cfg.cv.mccv_reps);
    for (const auto& tag : cfg.cv.methods) {
        const CvResult r = cross_validate(csv.data, cfg.m, cfg.method(tag), splits);
        fmt::print(out, "{},{},{},{},{},{}\n", tag, scheme, r.mspe, r.held_out_rows, r.splits_used, r.splits_skipped);
    }
    write_file(cfg, result, "cv.csv", out.str());
    result.extra["shared_splits"] = true;
    result.extra["split_seed"] = cfg.seed;
    result.extra["partition_fingerprint"] = fmt::format("{:016x}", fingerprint(splits));
    return result;
}

RunResult cmd_simulate(const RunConfig& cfg) {
    RunResult result;
    const StudySummary summary = run_study(cfg.study_config());
    std::ostringstream out;
    write_summary_csv(out, summary);
    write_file(cfg, result, "summary.csv", out.str());
    for (const auto& t : study_tables(summary)) write_file(cfg, result, t.name, t.csv);
    std::size_t failures = 0;
    std::size_t empty_cells = 0;
    for (const auto& r : summary.rows) {
        failures += r.summary.failures;
        if (r.summary.replications == 0) ++empty_cells;
    }
    result.extra["failed_replications"] = failures;
    result.extra["cells_without_results"] = empty_cells;
    if (empty_cells > 0) result.exit_code = 4;
    return result;
}

RunResult run_command(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    const std::string started = utc_now();
    RunResult result;
    if (cfg.command == "fit") result = cmd_fit(cfg);
    else if (cfg.command == "simulate") result = cmd_simulate(cfg);
    else if (cfg.command == "select-alpha") result = cmd_select_alpha(cfg);
    else if (cfg.command == "cv") result = cmd_cv(cfg);
    else throw ConfigError("command: unknown command '" + cfg.command + "'");

    Json manifest;
    manifest["tool"] = "trimfmr";
    manifest["version"] = kVersion;
    manifest["command"] = cfg.command;
    manifest["seed"] = cfg.seed;
    manifest["started_at"] = started;
    manifest["finished_at"] = utc_now();
    manifest["config"] = to_json(cfg);
    manifest["outputs"] = result.outputs;
    manifest["results"] = result.extra;
    std::ofstream out(fs::path(cfg.out_dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
    return result;
}

RunConfig config_from_manifest(const std::string& manifest_path) {
    const Json m = load_json_file(manifest_path);
    if (!m.is_object() || !m.contains("config")) {
        throw ConfigError(fmt::format("{}: not a run manifest (missing 'config')", manifest_path));
    }
    RunConfig cfg = from_json(m.at("config"));
    cfg.validate();
    return cfg;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const DataError*>(&e)) return 3;
    if (dynamic_cast<const NumericalError*>(&e)) return 4;
    if (dynamic_cast<const DomainError*>(&e)) return 2;
    return 1;
}

}  // namespace trimfmr::app
