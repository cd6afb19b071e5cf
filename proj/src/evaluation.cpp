#include "tdval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "tdval/errors.hpp"

namespace tdval {

std::string to_string(AucMode mode) {
    return mode == AucMode::continuous ? "continuous" : "median_threshold";
}

AucMode parse_auc_mode(const std::string& name) {
    if (name == "continuous") return AucMode::continuous;
    if (name == "median_threshold" || name == "median") return AucMode::median_threshold;
    throw ConfigError("unknown AUC mode '" + name + "' (expected continuous|median_threshold)");
}

std::string to_string(RemovalOrder order) {
    switch (order) {
        case RemovalOrder::descending_value: return "descending_value";
        case RemovalOrder::ascending_value: return "ascending_value";
        case RemovalOrder::random: return "random";
    }
    return "descending_value";
}

std::string model_tag(Classifier c) { return c == Classifier::logistic_regression ? "LR" : "NB"; }

// --- noise AUC ------------------------------------------------------------------

namespace {

// Mann-Whitney AUC of `score` for positives (mask true) versus negatives,
// computed from midranks so ties contribute 1/2 per pair.
double mann_whitney_auc(std::span<const double> score, const NoiseMask& mask) {
    const std::size_t n = score.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && score[order[j + 1]] == score[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mid;
        i = j + 1;
    }
    double pos_rank_sum = 0.0;
    double pos = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask.flags[i]) {
            pos_rank_sum += rank[i];
            pos += 1.0;
        }
    }
    const double neg = static_cast<double>(n) - pos;
    return (pos_rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

}  // namespace

double noise_auc(std::span<const double> values, const NoiseMask& mask, AucMode mode) {
    if (values.size() != mask.size()) throw ShapeError("score and mask lengths differ");
    const std::size_t flipped = mask.count();
    if (flipped == 0 || flipped == mask.size()) {
        throw UndefinedMetricError("noise AUC needs both flipped and clean samples");
    }
    std::vector<double> score(values.size());
    if (mode == AucMode::continuous) {
        for (std::size_t i = 0; i < values.size(); ++i) score[i] = -values[i];
    } else {
        std::vector<double> sorted(values.begin(), values.end());
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        for (std::size_t i = 0; i < values.size(); ++i) score[i] = values[i] < median ? 1.0 : 0.0;
    }
    return mann_whitney_auc(score, mask);
}

// --- removal ----------------------------------------------------------------------

double weighted_drop(std::span<const double> performance, bool flip_sign) {
    if (performance.empty()) throw SizeError("weighted drop of an empty sequence");
    const double a0 = performance.front();
    const std::size_t steps = performance.size();  // T + 1 terms
    double total = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
        const double ak = k < performance.size() ? performance[k] : 0.0;
        total += (a0 - ak) / static_cast<double>(k);
    }
    return flip_sign ? -total : total;
}

std::vector<double> removal_grid(double step_fraction, double max_fraction) {
    if (!(step_fraction > 0.0) || !(step_fraction <= max_fraction) || !(max_fraction < 1.0)) {
        throw RangeError(fmt::format("removal grid needs 0 < step ({}) <= max ({}) < 1", step_fraction,
                                     max_fraction));
    }
    const auto steps = static_cast<std::size_t>(std::floor(max_fraction / step_fraction + 1e-9));
    std::vector<double> grid(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) grid[k] = static_cast<double>(k) * step_fraction;
    return grid;
}

std::vector<std::size_t> removal_order(std::span<const double> values, RemovalOrder order,
                                       std::uint64_t seed) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    switch (order) {
        case RemovalOrder::descending_value:
            std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] > values[b]; });
            break;
        case RemovalOrder::ascending_value:
            std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
            break;
        case RemovalOrder::random: {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              0x72656d6fU};
            std::mt19937_64 rng(seq);
            std::shuffle(idx.begin(), idx.end(), rng);
            break;
        }
    }
    return idx;
}

std::map<Metric, RemovalCurve> removal_curves(const TimedDataset& train, const TimedDataset& val,
                                              const UtilitySpec& spec, std::span<const double> values,
                                              double step_fraction, double max_fraction,
                                              RemovalOrder order, std::uint64_t seed) {
    const std::size_t n = train.size();
    if (values.size() != n) throw ShapeError("one value per training sample required");
    const auto grid = removal_grid(step_fraction, max_fraction);
    const auto ranking = removal_order(values, order, seed);

    std::map<Metric, RemovalCurve> curves;
    for (Metric m : {Metric::accuracy, Metric::brier, Metric::cross_entropy}) {
        curves[m] = RemovalCurve{grid, {}, m, order};
    }
    std::vector<bool> removed(n, false);
    std::size_t removed_count = 0;
    for (double fraction : grid) {
        const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
        if (target >= n) {
            throw RangeError(fmt::format("removing {:.3f} of {} samples empties the training set", fraction, n));
        }
        while (removed_count < target) removed[ranking[removed_count++]] = true;

        std::vector<std::size_t> kept;
        kept.reserve(n - removed_count);
        for (std::size_t i = 0; i < n; ++i) {
            if (!removed[i]) kept.push_back(i);
        }
        const auto model = fit(spec, train.subset(kept), val.num_classes());
        const auto probs = model.predict_proba(features_of(val));
        for (auto& [metric, curve] : curves) curve.performance.push_back(score(metric, probs, val.labels()));
    }
    return curves;
}

RemovalCurve removal_curve(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                           std::span<const double> values, double step_fraction, double max_fraction,
                           RemovalOrder order, std::uint64_t seed) {
    auto curves = removal_curves(train, val, spec, values, step_fraction, max_fraction, order, seed);
    return std::move(curves.at(spec.metric));
}

// --- reports ------------------------------------------------------------------------

std::vector<BenchmarkMethod> label_methods(const std::vector<ValuationConfig>& configs) {
    std::vector<BenchmarkMethod> out;
    std::map<std::string, int> seen;
    for (const auto& config : configs) {
        std::string label = to_string(config.method);
        const int count = ++seen[label];
        if (count > 1) label += fmt::format("#{}", count);
        out.push_back({label, config});
    }
    return out;
}

double MethodResult::mean(const std::string& metric) const {
    const auto& v = per_seed.at(metric);
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double MethodResult::stddev(const std::string& metric) const {
    const auto& v = per_seed.at(metric);
    if (v.size() < 2) return 0.0;
    const double mu = mean(metric);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

const MethodResult& EvalReport::method(const std::string& label) const {
    for (const auto& m : methods) {
        if (m.label == label) return m;
    }
    throw ConfigError("no method labelled '" + label + "' in report");
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_benchmark_inputs(const std::vector<BenchmarkMethod>& methods,
                            const std::vector<std::uint64_t>& seeds) {
    if (methods.empty()) throw ConfigError("benchmark needs at least one method");
    if (seeds.empty()) throw ConfigError("benchmark needs at least one seed");
    for (const auto& m : methods) validate(m.config);
}

EvalReport make_report(std::string experiment, const UtilitySpec& spec,
                       const std::vector<BenchmarkMethod>& methods, const std::vector<std::uint64_t>& seeds,
                       const BenchmarkOptions& options) {
    EvalReport report;
    report.experiment = std::move(experiment);
    report.dataset = options.dataset_name;
    report.model = model_tag(spec.classifier);
    report.seeds = seeds;
    for (const auto& m : methods) {
        MethodResult r;
        r.label = m.label;
        for (const auto& key : kReportMetrics) r.per_seed[key] = {};
        report.methods.push_back(std::move(r));
    }
    return report;
}

TemporalSplit standardized_split(const TimedDataset& ds, double train_frac) {
    auto split = temporal_split(ds, train_frac);
    const auto scaler = Standardizer::fit(split.train);
    return {scaler.apply(split.train), scaler.apply(split.val)};
}

ValuationConfig seeded(const ValuationConfig& config, std::uint64_t seed) {
    ValuationConfig c = config;
    c.seed = seed;
    return c;
}

}  // namespace

EvalReport run_noise_benchmark(const TimedDataset& ds, const UtilitySpec& spec,
                               const std::vector<BenchmarkMethod>& methods, double noise_fraction,
                               const std::vector<std::uint64_t>& seeds, const BenchmarkOptions& options) {
    check_benchmark_inputs(methods, seeds);
    validate(spec);
    if (!(noise_fraction > 0.0 && noise_fraction < 1.0)) {
        throw RangeError("noise benchmark needs a noise fraction in (0, 1)");
    }
    auto report = make_report("noise", spec, methods, seeds, options);
    const auto split = standardized_split(ds, options.train_frac);

    for (std::uint64_t seed : seeds) {
        const auto noisy = inject_label_noise(split.train, noise_fraction, seed);
        for (std::size_t k = 0; k < methods.size(); ++k) {
            std::vector<double> values;
            if (methods[k].config.method == Method::noise_oracle) {
                values.resize(noisy.mask.size());
                for (std::size_t i = 0; i < values.size(); ++i) values[i] = noisy.mask.flags[i] ? -1.0 : 0.0;
            } else {
                values = value(noisy.data, split.val, spec, seeded(methods[k].config, seed), options.jobs).values;
            }
            auto& row = report.methods[k].per_seed;
            row["noise_auc"].push_back(noise_auc(values, noisy.mask, options.auc_mode));
            for (const char* key : {"wad", "wbd", "wcd"}) row[key].push_back(kNaN);
        }
    }
    return report;
}

EvalReport run_removal_benchmark(const TimedDataset& ds, const UtilitySpec& spec,
                                 const std::vector<BenchmarkMethod>& methods, double step_fraction,
                                 double max_fraction, const std::vector<std::uint64_t>& seeds,
                                 const BenchmarkOptions& options) {
    check_benchmark_inputs(methods, seeds);
    validate(spec);
    removal_grid(step_fraction, max_fraction);
    for (const auto& m : methods) {
        if (m.config.method == Method::noise_oracle) {
            throw ConfigError("noise_oracle has no meaning in the removal benchmark");
        }
    }
    auto report = make_report("removal", spec, methods, seeds, options);
    const auto split = standardized_split(ds, options.train_frac);

    for (std::uint64_t seed : seeds) {
        for (std::size_t k = 0; k < methods.size(); ++k) {
            const auto scores = value(split.train, split.val, spec, seeded(methods[k].config, seed), options.jobs);
            const auto curves = removal_curves(split.train, split.val, spec, scores.values, step_fraction,
                                               max_fraction, RemovalOrder::descending_value, seed);
            auto& row = report.methods[k].per_seed;
            row["noise_auc"].push_back(kNaN);
            row["wad"].push_back(weighted_drop(curves.at(Metric::accuracy).performance, false));
            row["wbd"].push_back(weighted_drop(curves.at(Metric::brier).performance, true));
            row["wcd"].push_back(weighted_drop(curves.at(Metric::cross_entropy).performance, true));
            for (const auto& [metric, curve] : curves) {
                for (std::size_t t = 0; t < curve.fractions.size(); ++t) {
                    report.curves.push_back(
                        {methods[k].label, seed, to_string(metric), curve.fractions[t], curve.performance[t]});
                }
            }
        }
    }
    return report;
}

void write_report_table(std::ostream& out, const EvalReport& report) {
    const bool noise = report.experiment == "noise";
    const std::vector<std::pair<std::string, std::string>> columns =
        noise ? std::vector<std::pair<std::string, std::string>>{{"noise_auc", "AUC"}}
              : std::vector<std::pair<std::string, std::string>>{{"wad", "WAD"}, {"wbd", "WBD"}, {"wcd", "WCD"}};

    std::string seeds;
    for (auto s : report.seeds) seeds += fmt::format("{}{}", seeds.empty() ? "" : " ", s);
    out << fmt::format("{} ({})\n", noise ? "Noise detection AUC" : "High-value data removal", report.model);
    out << fmt::format("dataset: {}\nseeds: {}\n\n", report.dataset, seeds);

    std::size_t width = 6;
    for (const auto& m : report.methods) width = std::max(width, m.label.size());
    std::string line = fmt::format("{:<{}}", "Method", width);
    for (const auto& [key, title] : columns) line += fmt::format("  {:>16}", fmt::format("{} {}", report.model, title));
    out << line << '\n' << std::string(line.size(), '-') << '\n';
    for (const auto& m : report.methods) {
        std::string row = fmt::format("{:<{}}", m.label, width);
        for (const auto& [key, title] : columns) {
            row += fmt::format("  {:>16}", fmt::format("{:.3f} +- {:.3f}", m.mean(key), m.stddev(key)));
        }
        out << row << '\n';
    }
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
    out << "method,seed,metric,value\n";
    for (const auto& m : report.methods) {
        for (std::size_t s = 0; s < report.seeds.size(); ++s) {
            for (const auto& key : kReportMetrics) {
                const double v = m.per_seed.at(key).at(s);
                if (std::isfinite(v)) out << fmt::format("{},{},{},{:.17g}\n", m.label, report.seeds[s], key, v);
            }
        }
    }
}

void write_curve_csv(std::ostream& out, const EvalReport& report) {
    out << "method,seed,metric,fraction,performance\n";
    for (const auto& p : report.curves) {
        out << fmt::format("{},{},{},{:.17g},{:.17g}\n", p.method, p.seed, p.metric, p.fraction, p.performance);
    }
}

}  // namespace tdval
