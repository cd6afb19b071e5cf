#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tdval/commands.hpp"
#include "tdval/errors.hpp"

using namespace tdval;

namespace {

struct MethodFlags {
    std::vector<std::string> names;
    double lambda = 1.0;
    double p = 1.0;
    double alpha = 1.0;
    std::vector<double> scales;
    double epsilon = 1e-6;
    std::size_t num_permutations = 200;
    double truncation = 0.0;
    double beta_a = 1.0;
    double beta_b = 1.0;
    double normalize_scale = 1.0;
    bool raw_gaps = false;
    bool share_scale_seeds = false;
};

struct RunFlags {
    std::string config;
    std::string data;
    double t_ref = 0.0;
    double train_frac = 0.8;
    std::string classifier;
    std::string metric;
    double learning_rate = 0.1;
    std::size_t epochs = 100;
    double l2 = 1e-3;
    std::vector<std::uint64_t> seeds;
    std::string out;
    double noise_fraction = 0.1;
    std::string auc_mode;
    double step = 0.05;
    double max = 0.5;
    MethodFlags method;
};

bool given(const CLI::App* app, const std::string& name) { return app->count(name) > 0; }

void add_run_options(CLI::App* app, RunFlags& f, bool single_method) {
    app->add_option("--config", f.config, "JSON run config");
    app->add_option("--data", f.data, "dataset CSV (replaces the config's dataset source)");
    app->add_option("--t-ref", f.t_ref, "reference time for the CSV dataset");
    app->add_option("--train-frac", f.train_frac, "leading fraction of the time axis used for training");
    app->add_option("--classifier", f.classifier, "logistic_regression | gaussian_nb");
    app->add_option("--metric", f.metric, "accuracy | brier | cross_entropy");
    app->add_option("--lr", f.learning_rate, "logistic regression learning rate");
    app->add_option("--epochs", f.epochs, "logistic regression epochs");
    app->add_option("--l2", f.l2, "logistic regression L2 penalty");
    app->add_option("--seed", f.seeds, "one or more seeds");
    app->add_option("--out", f.out, "output directory");
    if (single_method) {
        app->add_option("--method", f.method.names, "valuation method")->expected(1);
    } else {
        app->add_option("--methods", f.method.names, "valuation methods (default: the six-method suite)")
            ->delimiter(',');
    }
    app->add_option("--lambda", f.method.lambda, "decay coefficient");
    app->add_option("--p", f.method.p, "power of the time gap");
    app->add_option("--alpha", f.method.alpha, "post-scale of improved TDS");
    app->add_option("--scales", f.method.scales, "multi-scale granularities, e.g. 1,7,30")->delimiter(',');
    app->add_option("--epsilon", f.method.epsilon, "fusion stabilizer");
    app->add_option("--m", f.method.num_permutations, "permutations");
    app->add_option("--truncation", f.method.truncation, "TMC truncation tolerance (0 = off)");
    app->add_option("--beta-a", f.method.beta_a, "Beta-Shapley a");
    app->add_option("--beta-b", f.method.beta_b, "Beta-Shapley b");
    app->add_option("--normalize-scale", f.method.normalize_scale, "divide time gaps by this value");
    app->add_flag("--raw-gaps", f.method.raw_gaps, "do not normalize time gaps by the largest gap");
    app->add_flag("--share-scale-seeds", f.method.share_scale_seeds, "reuse one seed across MS-TDS scales");
}

void apply_method_flags(const CLI::App* app, const MethodFlags& f, ValuationConfig& c) {
    if (given(app, "--lambda")) c.lambda = f.lambda;
    if (given(app, "--p")) c.p = f.p;
    if (given(app, "--alpha")) c.alpha = f.alpha;
    if (given(app, "--scales")) c.scales = f.scales;
    if (given(app, "--epsilon")) c.epsilon = f.epsilon;
    if (given(app, "--m")) c.num_permutations = f.num_permutations;
    if (given(app, "--truncation")) c.truncation_tol = f.truncation;
    if (given(app, "--beta-a")) c.beta.a = f.beta_a;
    if (given(app, "--beta-b")) c.beta.b = f.beta_b;
    if (given(app, "--normalize-scale")) c.normalize_scale = f.normalize_scale;
    if (f.raw_gaps) c.normalize_by_max_gap = false;
    if (f.share_scale_seeds) c.share_scale_seeds = true;
}

RunConfig build_config(const CLI::App* app, const RunFlags& f, bool default_suite) {
    RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
    if (given(app, "--data")) {
        c.dataset.csv = f.data;
        c.dataset.drift.reset();
    }
    if (given(app, "--t-ref")) c.dataset.t_ref = f.t_ref;
    if (given(app, "--train-frac")) c.train_frac = f.train_frac;
    if (given(app, "--classifier")) c.utility.classifier = parse_classifier(f.classifier);
    if (given(app, "--metric")) c.utility.metric = parse_metric(f.metric);
    if (given(app, "--lr")) c.utility.lr.learning_rate = f.learning_rate;
    if (given(app, "--epochs")) c.utility.lr.epochs = f.epochs;
    if (given(app, "--l2")) c.utility.lr.l2 = f.l2;
    if (given(app, "--seed")) c.seeds = f.seeds;
    if (given(app, "--out")) c.output_dir = f.out;

    if (!f.method.names.empty()) {
        c.methods.clear();
        for (const auto& name : f.method.names) c.methods.push_back(default_method_config(parse_method(name)));
    } else if (c.methods.empty() && default_suite) {
        c.methods = default_method_suite();
    }
    for (auto& m : c.methods) apply_method_flags(app, f.method, m);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal data valuation: scoring and benchmarks"};
    app.require_subcommand(1);
    unsigned jobs = 0;
    app.add_option("--jobs", jobs, "worker threads (0 = logical CPU count)")->capture_default_str();

    GenDataOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic drifting dataset");
    std::string drift_kind = "abrupt";
    gen_cmd->add_option("--n", gen.spec.n_samples, "samples")->capture_default_str();
    gen_cmd->add_option("--dim", gen.spec.feature_dim, "feature dimension")->capture_default_str();
    gen_cmd->add_option("--classes", gen.spec.num_classes, "number of classes")->capture_default_str();
    gen_cmd->add_option("--drift", drift_kind, "none | abrupt | gradual | periodic")->capture_default_str();
    gen_cmd->add_option("--magnitude", gen.spec.drift_magnitude, "drift magnitude")->capture_default_str();
    gen_cmd->add_option("--span", gen.spec.time_span, "time span")->capture_default_str();
    gen_cmd->add_option("--seed", gen.spec.seed, "generator seed")->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "output CSV")->required();
    gen_cmd->add_option("--jobs", jobs, "ignored; accepted for uniformity");

    RunFlags value_flags, noise_flags, removal_flags;
    auto* value_cmd = app.add_subcommand("value", "score every training sample with one method");
    add_run_options(value_cmd, value_flags, true);
    value_cmd->add_option("--jobs", jobs, "worker threads");

    auto* noise_cmd = app.add_subcommand("noise-bench", "noise detection AUC benchmark");
    add_run_options(noise_cmd, noise_flags, false);
    noise_cmd->add_option("--noise-fraction", noise_flags.noise_fraction, "fraction of flipped labels");
    noise_cmd->add_option("--auc-mode", noise_flags.auc_mode, "continuous | median_threshold");
    noise_cmd->add_option("--jobs", jobs, "worker threads");

    auto* removal_cmd = app.add_subcommand("removal-bench", "high-value removal benchmark");
    add_run_options(removal_cmd, removal_flags, false);
    removal_cmd->add_option("--step", removal_flags.step, "removal step fraction");
    removal_cmd->add_option("--max", removal_flags.max, "largest removed fraction");
    removal_cmd->add_option("--jobs", jobs, "worker threads");

    OracleOptions oracle;
    std::string oracle_csv, oracle_val, oracle_classifier, oracle_metric;
    auto* oracle_cmd = app.add_subcommand("oracle", "exact Shapley values for a small dataset");
    oracle_cmd->add_option("csv", oracle_csv, "dataset CSV (N <= cap)");
    oracle_cmd->add_option("--val", oracle_val, "validation CSV (default: the input itself)");
    oracle_cmd->add_option("--fixture", oracle.fixture, "built-in utility instead of a CSV: symmetric-pair");
    oracle_cmd->add_option("--cap", oracle.cap, "largest N accepted")->capture_default_str();
    oracle_cmd->add_option("--tmc-m", oracle.tmc_permutations, "permutations of the TMC comparison (0 = skip)")
        ->capture_default_str();
    oracle_cmd->add_option("--seed", oracle.seed, "TMC seed")->capture_default_str();
    oracle_cmd->add_option("--classifier", oracle_classifier, "logistic_regression | gaussian_nb");
    oracle_cmd->add_option("--metric", oracle_metric, "accuracy | brier | cross_entropy");
    oracle_cmd->add_option("--jobs", jobs, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (gen_cmd->parsed()) {
            gen.spec.drift_kind = parse_drift_kind(drift_kind);
            validate(gen.spec);
            return cmd_gen_data(gen, std::cout, std::cerr);
        }
        if (value_cmd->parsed()) {
            auto config = build_config(value_cmd, value_flags, false);
            return cmd_value(config, jobs, std::cout, std::cerr);
        }
        if (noise_cmd->parsed()) {
            auto config = build_config(noise_cmd, noise_flags, true);
            if (noise_flags.config.empty() && !config.noise) config.noise.emplace();
            if (given(noise_cmd, "--noise-fraction") || given(noise_cmd, "--auc-mode")) {
                if (!config.noise) config.noise.emplace();
                if (given(noise_cmd, "--noise-fraction")) config.noise->fraction = noise_flags.noise_fraction;
                if (given(noise_cmd, "--auc-mode")) config.noise->auc_mode = parse_auc_mode(noise_flags.auc_mode);
            }
            return cmd_noise_bench(config, jobs, std::cout, std::cerr);
        }
        if (removal_cmd->parsed()) {
            auto config = build_config(removal_cmd, removal_flags, true);
            if (removal_flags.config.empty() && !config.removal) config.removal.emplace();
            if (given(removal_cmd, "--step") || given(removal_cmd, "--max")) {
                if (!config.removal) config.removal.emplace();
                if (given(removal_cmd, "--step")) config.removal->step_fraction = removal_flags.step;
                if (given(removal_cmd, "--max")) config.removal->max_fraction = removal_flags.max;
            }
            return cmd_removal_bench(config, jobs, std::cout, std::cerr);
        }
        if (oracle_cmd->parsed()) {
            if (!oracle_csv.empty()) oracle.csv = oracle_csv;
            if (!oracle_val.empty()) oracle.val = oracle_val;
            if (!oracle_classifier.empty()) oracle.utility.classifier = parse_classifier(oracle_classifier);
            if (!oracle_metric.empty()) oracle.utility.metric = parse_metric(oracle_metric);
            return cmd_oracle(oracle, jobs, std::cout, std::cerr);
        }
    } catch (const std::exception& e) {
        return report_failure(e, std::cerr);
    }
    return kExitValidation;
}
