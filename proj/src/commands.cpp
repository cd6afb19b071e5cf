#include "tdval/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "tdval/errors.hpp"
#include "tdval/evaluation.hpp"
#include "tdval/valuation.hpp"

namespace tdval {

int report_failure(const std::exception& e, std::ostream& err) {
    err << "error: " << e.what() << '\n';
    return dynamic_cast<const ValidationError*>(&e) ? kExitValidation : kExitRuntime;
}

namespace {

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
    }
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << contents;
    if (!out) throw IoError("failed writing " + path.string());
}

std::string format_vector(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{:.6g}", i ? ", " : "", v[i]);
    return s + "]";
}

struct PreparedData {
    TimedDataset train;
    TimedDataset val;
};

PreparedData prepare(const RunConfig& config) {
    const auto ds = load_dataset(config.dataset);
    auto split = temporal_split(ds, config.train_frac);
    const auto scaler = Standardizer::fit(split.train);
    return {scaler.apply(split.train), scaler.apply(split.val)};
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        return report_failure(e, err);
    }
}

BenchmarkOptions bench_options(const RunConfig& config, unsigned jobs) {
    BenchmarkOptions options;
    options.train_frac = config.train_frac;
    options.dataset_name = describe(config.dataset);
    options.jobs = jobs;
    if (config.noise) options.auc_mode = config.noise->auc_mode;
    return options;
}

}  // namespace

int cmd_gen_data(const GenDataOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto ds = generate_drift(options.spec);
        save_csv(ds, options.out);
        const auto times = ds.timestamps();
        const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
        out << fmt::format("wrote {}: N={} d={} num_classes={} time_span={:.6g}\n", options.out.string(), ds.size(),
                           ds.feature_dim(), ds.num_classes(), *hi - *lo);
        return int{kExitOk};
    });
}

int cmd_value(const RunConfig& config, unsigned jobs, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        validate(config);
        if (config.methods.size() != 1) throw ConfigError("value runs exactly one method");
        auto method = config.methods.front();
        method.seed = config.seeds.front();

        const auto data = prepare(config);
        const auto scores = value(data.train, data.val, config.utility, method, jobs);

        ensure_directory(config.output_dir);
        std::ostringstream csv;
        write_scores_csv(csv, data.train, scores);
        write_file(config.output_dir / "scores.csv", csv.str());

        RunConfig sidecar = config;
        sidecar.seeds = {method.seed};
        if (sidecar.dataset.csv) sidecar.dataset.csv = std::filesystem::absolute(*sidecar.dataset.csv);
        auto j = to_json(sidecar);
        j["permutations_used"] = scores.permutations_used;
        write_file(config.output_dir / "scores.json", j.dump(2) + "\n");

        const auto ranking = argsort_descending(scores.values);
        const std::size_t shown = std::min<std::size_t>(10, ranking.size());
        out << fmt::format("{} on {} training samples ({} permutations)\n", to_string(method.method),
                           data.train.size(), scores.permutations_used);
        out << "top samples:\n";
        for (std::size_t r = 0; r < shown; ++r) {
            const auto i = ranking[r];
            out << fmt::format("  #{:<5} t={:<12.6g} value={:.6g}\n", i, data.train.timestamp(i), scores.values[i]);
        }
        out << "bottom samples:\n";
        for (std::size_t r = ranking.size() - shown; r < ranking.size(); ++r) {
            const auto i = ranking[r];
            out << fmt::format("  #{:<5} t={:<12.6g} value={:.6g}\n", i, data.train.timestamp(i), scores.values[i]);
        }
        out << fmt::format("wrote {}\n", (config.output_dir / "scores.csv").string());
        return int{kExitOk};
    });
}

int cmd_noise_bench(const RunConfig& config, unsigned jobs, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        validate(config);
        if (!config.noise) throw ConfigError("noise-bench needs an experiment.noise block (or --noise-fraction)");
        const auto ds = load_dataset(config.dataset);
        const auto report = run_noise_benchmark(ds, config.utility, label_methods(config.methods),
                                                config.noise->fraction, config.seeds, bench_options(config, jobs));
        ensure_directory(config.output_dir);
        std::ostringstream table, csv;
        write_report_table(table, report);
        write_report_csv(csv, report);
        write_file(config.output_dir / "noise_report.txt", table.str());
        write_file(config.output_dir / "noise_report.csv", csv.str());
        out << table.str();
        return int{kExitOk};
    });
}

int cmd_removal_bench(const RunConfig& config, unsigned jobs, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        validate(config);
        if (!config.removal) {
            throw ConfigError("removal-bench needs an experiment.removal block (or --step/--max)");
        }
        const auto ds = load_dataset(config.dataset);
        const auto report = run_removal_benchmark(ds, config.utility, label_methods(config.methods),
                                                  config.removal->step_fraction, config.removal->max_fraction,
                                                  config.seeds, bench_options(config, jobs));
        ensure_directory(config.output_dir);
        std::ostringstream table, csv, curves;
        write_report_table(table, report);
        write_report_csv(csv, report);
        write_curve_csv(curves, report);
        write_file(config.output_dir / "removal_report.txt", table.str());
        write_file(config.output_dir / "removal_report.csv", csv.str());
        write_file(config.output_dir / "removal_curves.csv", curves.str());
        out << table.str();
        return int{kExitOk};
    });
}

int cmd_oracle(const OracleOptions& options, unsigned jobs, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (options.cap > kExactShapleyCap) {
            throw ConfigError(fmt::format("cap may not exceed {}", kExactShapleyCap));
        }
        std::size_t n = 0;
        SubsetUtility utility;
        std::optional<PreparedData> data;
        if (options.fixture == "symmetric-pair") {
            // U({}) = 0, U({a}) = U({b}) = 0.5, U({a, b}) = 1
            n = 2;
            utility = [](std::span<const std::size_t> s) { return 0.5 * static_cast<double>(s.size()); };
        } else if (!options.fixture.empty()) {
            throw ConfigError("unknown fixture '" + options.fixture + "' (expected symmetric-pair)");
        } else {
            if (!options.csv) throw ConfigError("oracle needs a dataset CSV or --fixture");
            const auto train = load_csv(*options.csv);
            if (train.size() > options.cap) {
                throw SizeError(fmt::format("exact Shapley is capped at N <= {} (input has N = {})", options.cap,
                                            train.size()));
            }
            const auto val = options.val ? load_csv(*options.val) : train;
            if (val.feature_dim() != train.feature_dim()) throw ShapeError("validation feature dimension differs");
            const auto scaler = Standardizer::fit(train);
            data.emplace(PreparedData{scaler.apply(train), scaler.apply(val)});
            n = train.size();
            utility = make_subset_utility(options.utility, data->train, data->val);
        }
        if (n > options.cap) throw SizeError(fmt::format("exact Shapley is capped at N <= {}", options.cap));

        const auto exact = exact_shapley(n, utility, jobs);
        const double total = std::accumulate(exact.values.begin(), exact.values.end(), 0.0);
        const double gap = std::abs(total - (exact.full_utility - exact.empty_utility));
        const bool efficient = gap <= 1e-9;

        out << fmt::format("N = {}  ({} subsets, {} orderings)\n", n, std::size_t{1} << n, exact.permutations);
        out << fmt::format("U(D) = {:.6g}  U(empty) = {:.6g}\n", exact.full_utility, exact.empty_utility);
        out << "phi (Shapley)              = " << format_vector(exact.values) << '\n';
        out << "phi (first credit dropped) = " << format_vector(exact.first_credit_dropped) << '\n';
        out << fmt::format("efficiency: sum(phi) = {:.12g}, U(D) - U(empty) = {:.12g} -> {}\n", total,
                           exact.full_utility - exact.empty_utility, efficient ? "PASS" : "FAIL");

        if (options.tmc_permutations > 0) {
            PermutationOptions perm;
            perm.num_permutations = options.tmc_permutations;
            perm.seed = options.seed;
            perm.jobs = jobs;
            const std::vector<double> ones(n, 1.0);
            const auto tmc = permutation_values(n, utility, ones, perm);
            double max_dev = 0.0;
            double mean_dev = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dev = std::abs(tmc[i] - exact.first_credit_dropped[i]);
                max_dev = std::max(max_dev, dev);
                mean_dev += dev / static_cast<double>(n);
            }
            out << "phi (tmc)                  = " << format_vector(tmc) << '\n';
            out << fmt::format("tmc deviation vs first-credit-dropped (M = {}, seed = {}): max {:.6g}, mean {:.6g}\n",
                               options.tmc_permutations, options.seed, max_dev, mean_dev);
        }
        return efficient ? int{kExitOk} : int{kExitRuntime};
    });
}

}  // namespace tdval
