#include "trimfmr_app/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "trimfmr/error.hpp"
#include "trimfmr/parallel.hpp"

namespace trimfmr::app {

namespace {

// Reads typed fields out of a JSON object and rejects keys nobody asked for.
class Fields {
public:
    Fields(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(fmt::format("{}: expected an object", where()));
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!obj_.contains(key) || obj_.at(key).is_null()) return;
        try {
            out = obj_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(fmt::format("{}: invalid value {}", name(key), obj_.at(key).dump()));
        }
    }

    template <typename T>
    void get_optional(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        if (!obj_.contains(key) || obj_.at(key).is_null()) return;
        T v{};
        get(key, v);
        out = v;
    }

    template <typename T, typename Parse>
    void get_enum(const char* key, T& out, Parse parse) {
        std::string s;
        get(key, s);
        if (s.empty()) return;
        try {
            out = parse(s);
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("{}: {}", name(key), e.what()));
        }
    }

    Fields sub(const char* key) {
        seen_.insert(key);
        static const Json empty = Json::object();
        if (!obj_.contains(key) || obj_.at(key).is_null()) return Fields(empty, name(key));
        return Fields(obj_.at(key), name(key));
    }

    void finish() const {
        for (const auto& [k, v] : obj_.items()) {
            if (!seen_.count(k)) throw ConfigError(fmt::format("{}: unknown field", name(k)));
        }
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string where() const { return path_.empty() ? "config" : path_; }
    const Json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

PenaltyScaling parse_scaling(const std::string& s) {
    if (s == "retained") return PenaltyScaling::Retained;
    if (s == "full") return PenaltyScaling::Full;
    throw ConfigError("expected 'retained' or 'full', got '" + s + "'");
}

PredictionRule parse_prediction(const std::string& s) {
    if (s == "mixture_mean") return PredictionRule::MixtureMean;
    if (s == "max_proportion") return PredictionRule::MaxProportion;
    throw ConfigError("expected 'mixture_mean' or 'max_proportion', got '" + s + "'");
}

template <typename T>
Json opt(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

}  // namespace

PenaltySpec RunConfig::penalty_spec() const {
    return PenaltySpec::make(penalty, lambda.value_or(0.0), a.value_or(default_concavity(penalty)));
}

std::vector<double> RunConfig::effective_lambda_grid() const {
    if (lambda) return {*lambda};
    return lambda_grid;
}

EmControls RunConfig::em_controls() const {
    EmControls c = em;
    c.rng_seed = seed;
    return c;
}

TrimSpec RunConfig::trim_spec(double alpha_value) const {
    TrimSpec t = trim;
    t.alpha = alpha_value;
    return t;
}

AlphaSelectConfig RunConfig::alpha_config() const {
    AlphaSelectConfig c = alpha_select;
    c.rng_seed = seed;
    c.penalty = penalty_spec();
    c.lambda_grid = effective_lambda_grid();
    c.trim = trim;
    c.controls = em_controls();
    c.threads = threads;
    return c;
}

MethodConfig RunConfig::method(const std::string& tag) const {
    MethodConfig mc = method_from_tag(tag);
    mc.penalty = PenaltySpec::make(mc.penalty.family, 0.0,
                                   mc.penalty.family == penalty && a ? *a : default_concavity(mc.penalty.family));
    mc.lambda_grid = effective_lambda_grid();
    mc.trim = trim_spec(alpha);
    mc.controls = em_controls();
    mc.prediction = cv.prediction;
    if (cv.refit_alpha && mc.estimator == Estimator::Trimmed) mc.alpha_search = alpha_config();
    return mc;
}

StudyConfig RunConfig::study_config() const {
    StudyConfig s;
    s.models.clear();
    for (const auto& m : study.models) s.models.push_back(parse_model_id(m));
    s.pi1 = study.pi1;
    s.rho.clear();
    for (const auto& r : study.rho) s.rho.push_back(parse_correlation(r));
    s.n = study.n;
    s.alpha0 = study.alpha0;
    s.replications = study.replications;
    for (const auto& t : study.methods) s.methods.push_back(method(t));
    s.master_seed = seed;
    s.threads = threads;
    return s;
}

void RunConfig::validate() const {
    const auto wrap = [](const char* field, auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("{}: {}", field, e.what()));
        } catch (const DomainError& e) {
            throw ConfigError(fmt::format("{}: {}", field, e.what()));
        }
    };
    if (m < 1) throw ConfigError("m: must be >= 1");
    if (threads < 1) throw ConfigError("threads: must be >= 1");
    wrap("penalty", [&] { penalty_spec().validate(); });
    wrap("lambda_grid", [&] {
        const auto g = effective_lambda_grid();
        if (g.empty()) throw ConfigError("must not be empty");
        for (const double v : g) {
            if (!(v >= 0.0)) throw ConfigError("values must be >= 0");
        }
    });
    wrap("alpha", [&] { trim_spec(alpha).validate(); });
    wrap("em", [&] { em.validate(); });
    if (command == "select-alpha" || select_alpha) wrap("alpha_select", [&] { alpha_config().validate(); });
    if (command == "cv") {
        if (cv.kfold && cv.mccv_d) throw ConfigError("cv: kfold and mccv_d are mutually exclusive");
        if (!cv.kfold && !cv.mccv_d) throw ConfigError("cv: one of kfold or mccv_d is required");
        if (cv.methods.empty()) throw ConfigError("cv.methods: at least one method is required");
        wrap("cv.methods", [&] {
            for (const auto& t : cv.methods) method_from_tag(t);
        });
        if (cv.refit_alpha) wrap("alpha_select", [&] { alpha_config().validate(); });
    }
    if (command == "simulate") {
        wrap("study.methods", [&] {
            for (const auto& t : study.methods) method_from_tag(t);
        });
        wrap("study", [&] { study_config().validate(); });
    }
    if ((command == "fit" || command == "select-alpha" || command == "cv")) {
        if (data.empty()) throw ConfigError("data: a CSV path is required");
        if (response.empty()) throw ConfigError("response: the response column is required (--response)");
    }
}

Json to_json(const RunConfig& c) {
    Json j;
    j["command"] = c.command;
    j["data"] = c.data;
    j["response"] = c.response;
    j["m"] = c.m;
    j["penalty"] = std::string(to_string(c.penalty));
    j["a"] = opt(c.a);
    j["lambda"] = opt(c.lambda);
    j["lambda_grid"] = c.lambda_grid;
    j["alpha"] = c.alpha;
    j["select_alpha"] = c.select_alpha;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["out_dir"] = c.out_dir;
    j["em"] = {{"max_iter", c.em.max_iter},
               {"tol", c.em.tol},
               {"n_starts", c.em.n_starts},
               {"warmup_iter", c.em.warmup_iter},
               {"monotonicity_assert", c.em.monotonicity_assert},
               {"monotonicity_tol", c.em.monotonicity_tol}};
    j["trim"] = {{"outer_tol", c.trim.outer_tol},
                 {"max_outer", c.trim.max_outer},
                 {"penalty_n", c.trim.scaling == PenaltyScaling::Retained ? "retained" : "full"},
                 {"retune_lambda", c.trim.retune_lambda}};
    const auto& as = c.alpha_select;
    j["alpha_select"] = {{"grid", as.grid},
                         {"n_boot", as.n_boot},
                         {"criterion", to_string(as.criterion)},
                         {"boot_starts", as.boot_starts},
                         {"refit_lambda", as.refit_lambda},
                         {"include_intercepts", as.include_intercepts},
                         {"max_failure_share", as.max_failure_share}};
    j["cv"] = {{"kfold", opt(c.cv.kfold)},
               {"mccv_d", opt(c.cv.mccv_d)},
               {"mccv_reps", c.cv.mccv_reps},
               {"methods", c.cv.methods},
               {"prediction", c.cv.prediction == PredictionRule::MixtureMean ? "mixture_mean" : "max_proportion"},
               {"refit_alpha", c.cv.refit_alpha}};
    j["study"] = {{"models", c.study.models},   {"pi1", c.study.pi1},
                  {"rho", c.study.rho},         {"n", c.study.n},
                  {"alpha0", c.study.alpha0},   {"replications", c.study.replications},
                  {"methods", c.study.methods}};
    return j;
}

RunConfig from_json(const Json& j) {
    RunConfig c;
    Fields f(j, "");
    f.get("command", c.command);
    f.get("data", c.data);
    f.get("response", c.response);
    f.get("m", c.m);
    f.get_enum("penalty", c.penalty, [](const std::string& s) { return parse_penalty_family(s); });
    f.get_optional("a", c.a);
    f.get_optional("lambda", c.lambda);
    f.get("lambda_grid", c.lambda_grid);
    f.get("alpha", c.alpha);
    f.get("select_alpha", c.select_alpha);
    f.get("seed", c.seed);
    f.get("threads", c.threads);
    f.get("out_dir", c.out_dir);
    {
        Fields e = f.sub("em");
        e.get("max_iter", c.em.max_iter);
        e.get("tol", c.em.tol);
        e.get("n_starts", c.em.n_starts);
        e.get("warmup_iter", c.em.warmup_iter);
        e.get("monotonicity_assert", c.em.monotonicity_assert);
        e.get("monotonicity_tol", c.em.monotonicity_tol);
        e.finish();
    }
    {
        Fields t = f.sub("trim");
        t.get("outer_tol", c.trim.outer_tol);
        t.get("max_outer", c.trim.max_outer);
        t.get_enum("penalty_n", c.trim.scaling, parse_scaling);
        t.get("retune_lambda", c.trim.retune_lambda);
        t.finish();
    }
    {
        Fields a = f.sub("alpha_select");
        auto& as = c.alpha_select;
        a.get("grid", as.grid);
        a.get("n_boot", as.n_boot);
        a.get_enum("criterion", as.criterion, parse_dispersion_criterion);
        a.get("boot_starts", as.boot_starts);
        a.get("refit_lambda", as.refit_lambda);
        a.get("include_intercepts", as.include_intercepts);
        a.get("max_failure_share", as.max_failure_share);
        a.finish();
    }
    {
        Fields v = f.sub("cv");
        v.get_optional("kfold", c.cv.kfold);
        v.get_optional("mccv_d", c.cv.mccv_d);
        v.get("mccv_reps", c.cv.mccv_reps);
        v.get("methods", c.cv.methods);
        v.get_enum("prediction", c.cv.prediction, parse_prediction);
        v.get("refit_alpha", c.cv.refit_alpha);
        v.finish();
    }
    {
        Fields s = f.sub("study");
        s.get("models", c.study.models);
        s.get("pi1", c.study.pi1);
        s.get("rho", c.study.rho);
        s.get("n", c.study.n);
        s.get("alpha0", c.study.alpha0);
        s.get("replications", c.study.replications);
        s.get("methods", c.study.methods);
        s.finish();
        for (const auto& m : c.study.models) {
            try {
                parse_model_id(m);
            } catch (const ConfigError& e) {
                throw ConfigError(fmt::format("study.models: {}", e.what()));
            }
        }
        for (const auto& r : c.study.rho) {
            try {
                parse_correlation(r);
            } catch (const ConfigError& e) {
                throw ConfigError(fmt::format("study.rho: {}", e.what()));
            }
        }
    }
    f.finish();
    return c;
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("{}: invalid JSON: {}", path, e.what()));
    }
}

RunConfig resolve_config(const Json& flags, const std::optional<std::string>& config_path, const char* threads_env) {
    Json merged = to_json(RunConfig{});
    merged["threads"] = default_threads();
    if (threads_env && *threads_env) {
        std::size_t t = 0;
        const std::string s(threads_env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), t);
        if (ec != std::errc() || ptr != s.data() + s.size() || t < 1) {
            throw ConfigError("TRIMFMR_THREADS: expected a positive integer, got '" + s + "'");
        }
        merged["threads"] = t;
    }
    merged.merge_patch(flags);
    if (config_path) {
        Json file = load_json_file(*config_path);
        if (!file.is_object()) throw ConfigError(fmt::format("{}: expected a JSON object", *config_path));
        // The command comes from the invocation, not the file.
        file.erase("command");
        merged.merge_patch(file);
    }
    RunConfig cfg = from_json(merged);
    cfg.validate();
    return cfg;
}

}  // namespace trimfmr::app
