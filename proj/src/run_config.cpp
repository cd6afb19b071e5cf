#include "tdval/run_config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "tdval/errors.hpp"

namespace tdval {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
    }
}

template <typename T>
void read_if(const json& j, const char* key, T& target) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("bad value for '{}': {}", key, e.what()));
    }
}

}  // namespace

ValuationConfig default_method_config(Method method) {
    ValuationConfig c;
    c.method = method;
    c.lambda = 1.0;
    c.p = (method == Method::tds_improved || method == Method::ms_tds) ? 1.5 : 1.0;
    c.num_permutations = 200;
    c.normalize_by_max_gap = true;
    return c;
}

std::vector<ValuationConfig> default_method_suite() {
    std::vector<ValuationConfig> suite;
    for (Method m : {Method::loo, Method::beta, Method::tmc, Method::tds, Method::tds_improved, Method::ms_tds}) {
        auto c = default_method_config(m);
        if (m == Method::beta) c.beta = {1.0, 16.0};
        if (m == Method::ms_tds) c.scales = {1.0, 7.0, 30.0};
        suite.push_back(c);
    }
    return suite;
}

json to_json(const ValuationConfig& c) {
    json j{{"method", to_string(c.method)},
           {"lambda", c.lambda},
           {"p", c.p},
           {"alpha", c.alpha},
           {"scales", c.scales},
           {"epsilon", c.epsilon},
           {"num_permutations", c.num_permutations},
           {"truncation_tol", c.truncation_tol},
           {"beta_a", c.beta.a},
           {"beta_b", c.beta.b},
           {"normalize_by_max_gap", c.normalize_by_max_gap},
           {"share_scale_seeds", c.share_scale_seeds}};
    j["normalize_scale"] = c.normalize_scale ? json(*c.normalize_scale) : json(nullptr);
    return j;
}

ValuationConfig method_from_json(const json& j) {
    reject_unknown_keys(j,
                        {"method", "lambda", "p", "alpha", "scales", "epsilon", "num_permutations",
                         "truncation_tol", "beta_a", "beta_b", "normalize_scale", "normalize_by_max_gap",
                         "share_scale_seeds"},
                        "method entry");
    if (!j.contains("method")) throw ConfigError("method entry needs a 'method' name");
    auto c = default_method_config(parse_method(j.at("method").get<std::string>()));
    read_if(j, "lambda", c.lambda);
    read_if(j, "p", c.p);
    read_if(j, "alpha", c.alpha);
    read_if(j, "scales", c.scales);
    read_if(j, "epsilon", c.epsilon);
    read_if(j, "num_permutations", c.num_permutations);
    read_if(j, "truncation_tol", c.truncation_tol);
    read_if(j, "beta_a", c.beta.a);
    read_if(j, "beta_b", c.beta.b);
    read_if(j, "normalize_by_max_gap", c.normalize_by_max_gap);
    read_if(j, "share_scale_seeds", c.share_scale_seeds);
    if (j.contains("normalize_scale") && !j.at("normalize_scale").is_null()) {
        c.normalize_scale = j.at("normalize_scale").get<double>();
    }
    return c;
}

json to_json(const RunConfig& c) {
    json dataset = json::object();
    if (c.dataset.csv) dataset["csv"] = c.dataset.csv->string();
    if (c.dataset.t_ref) dataset["t_ref"] = *c.dataset.t_ref;
    if (c.dataset.drift) {
        const auto& d = *c.dataset.drift;
        dataset["drift"] = json{{"n_samples", d.n_samples},     {"feature_dim", d.feature_dim},
                                {"num_classes", d.num_classes}, {"drift_kind", to_string(d.drift_kind)},
                                {"drift_magnitude", d.drift_magnitude}, {"time_span", d.time_span},
                                {"seed", d.seed}};
    }
    json methods = json::array();
    for (const auto& m : c.methods) methods.push_back(to_json(m));
    json experiment = json::object();
    if (c.noise) {
        experiment["noise"] = json{{"fraction", c.noise->fraction}, {"auc_mode", to_string(c.noise->auc_mode)}};
    }
    if (c.removal) {
        experiment["removal"] =
            json{{"step_fraction", c.removal->step_fraction}, {"max_fraction", c.removal->max_fraction}};
    }
    return json{{"dataset", dataset},
                {"split", {{"train_frac", c.train_frac}}},
                {"utility",
                 {{"classifier", to_string(c.utility.classifier)},
                  {"metric", to_string(c.utility.metric)},
                  {"learning_rate", c.utility.lr.learning_rate},
                  {"epochs", c.utility.lr.epochs},
                  {"l2", c.utility.lr.l2}}},
                {"methods", methods},
                {"experiment", experiment},
                {"seeds", c.seeds},
                {"output_dir", c.output_dir.string()}};
}

RunConfig run_config_from_json(const json& j) {
    reject_unknown_keys(j, {"dataset", "split", "utility", "methods", "experiment", "seeds", "output_dir",
                            "permutations_used"},
                        "run config");
    RunConfig c;
    try {
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            reject_unknown_keys(d, {"csv", "drift", "t_ref"}, "dataset");
            if (d.contains("csv")) c.dataset.csv = d.at("csv").get<std::string>();
            if (d.contains("t_ref") && !d.at("t_ref").is_null()) c.dataset.t_ref = d.at("t_ref").get<double>();
            if (d.contains("drift")) {
                const auto& g = d.at("drift");
                reject_unknown_keys(g, {"n_samples", "feature_dim", "num_classes", "drift_kind", "drift_magnitude",
                                        "time_span", "seed"},
                                    "dataset.drift");
                DriftSpec spec;
                read_if(g, "n_samples", spec.n_samples);
                read_if(g, "feature_dim", spec.feature_dim);
                read_if(g, "num_classes", spec.num_classes);
                if (g.contains("drift_kind")) spec.drift_kind = parse_drift_kind(g.at("drift_kind").get<std::string>());
                read_if(g, "drift_magnitude", spec.drift_magnitude);
                read_if(g, "time_span", spec.time_span);
                read_if(g, "seed", spec.seed);
                c.dataset.drift = spec;
            }
        }
        if (j.contains("split")) {
            reject_unknown_keys(j.at("split"), {"train_frac"}, "split");
            read_if(j.at("split"), "train_frac", c.train_frac);
        }
        if (j.contains("utility")) {
            const auto& u = j.at("utility");
            reject_unknown_keys(u, {"classifier", "metric", "learning_rate", "epochs", "l2"}, "utility");
            if (u.contains("classifier")) c.utility.classifier = parse_classifier(u.at("classifier").get<std::string>());
            if (u.contains("metric")) c.utility.metric = parse_metric(u.at("metric").get<std::string>());
            read_if(u, "learning_rate", c.utility.lr.learning_rate);
            read_if(u, "epochs", c.utility.lr.epochs);
            read_if(u, "l2", c.utility.lr.l2);
        }
        if (j.contains("methods")) {
            for (const auto& m : j.at("methods")) c.methods.push_back(method_from_json(m));
        }
        if (j.contains("experiment")) {
            const auto& e = j.at("experiment");
            reject_unknown_keys(e, {"noise", "removal"}, "experiment");
            if (e.contains("noise")) {
                reject_unknown_keys(e.at("noise"), {"fraction", "auc_mode"}, "experiment.noise");
                NoiseExperiment noise;
                read_if(e.at("noise"), "fraction", noise.fraction);
                if (e.at("noise").contains("auc_mode")) {
                    noise.auc_mode = parse_auc_mode(e.at("noise").at("auc_mode").get<std::string>());
                }
                c.noise = noise;
            }
            if (e.contains("removal")) {
                reject_unknown_keys(e.at("removal"), {"step_fraction", "max_fraction"}, "experiment.removal");
                RemovalExperiment removal;
                read_if(e.at("removal"), "step_fraction", removal.step_fraction);
                read_if(e.at("removal"), "max_fraction", removal.max_fraction);
                c.removal = removal;
            }
        }
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed run config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config {} is not valid JSON: {}", path.string(), e.what()));
    }
    return run_config_from_json(j);
}

void validate(const RunConfig& c) {
    if (!c.dataset.csv && !c.dataset.drift) throw ConfigError("no dataset source (csv path or drift spec)");
    if (c.dataset.csv && c.dataset.drift) throw ConfigError("dataset source must be either csv or drift, not both");
    if (c.dataset.drift) validate(*c.dataset.drift);
    if (!(c.train_frac > 0.0 && c.train_frac < 1.0)) throw ConfigError("train_frac must lie in (0, 1)");
    validate(c.utility);
    if (c.methods.empty()) throw ConfigError("at least one method required");
    for (const auto& m : c.methods) validate(m);
    if (c.seeds.empty()) throw ConfigError("at least one seed required");
    if (c.noise && !(c.noise->fraction > 0.0 && c.noise->fraction < 1.0)) {
        throw ConfigError("noise fraction must lie in (0, 1)");
    }
    if (c.removal) removal_grid(c.removal->step_fraction, c.removal->max_fraction);
}

TimedDataset load_dataset(const DatasetSource& source) {
    if (source.csv) return load_csv(*source.csv, source.t_ref);
    if (source.drift) return generate_drift(*source.drift);
    throw ConfigError("no dataset source (csv path or drift spec)");
}

std::string describe(const DatasetSource& source) {
    if (source.csv) return source.csv->filename().string();
    if (source.drift) {
        const auto& d = *source.drift;
        return fmt::format("drift(kind={}, magnitude={}, n={}, d={}, classes={}, span={}, seed={})",
                           to_string(d.drift_kind), d.drift_magnitude, d.n_samples, d.feature_dim,
                           d.num_classes, d.time_span, d.seed);
    }
    return "none";
}

}  // namespace tdval
