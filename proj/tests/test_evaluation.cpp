#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tdval/errors.hpp"
#include "tdval/evaluation.hpp"

using namespace tdval;

namespace {

NoiseMask mask_of(std::vector<bool> flags) { return NoiseMask{std::move(flags)}; }

// Pairwise Mann-Whitney count, O(n^2).
double pairwise_auc(const std::vector<double>& values, const std::vector<bool>& flags) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!flags[i]) continue;
        for (std::size_t j = 0; j < values.size(); ++j) {
            if (flags[j]) continue;
            pairs += 1;
            if (values[i] < values[j]) wins += 1;
            else if (values[i] == values[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

// Direct evaluation of the weighted drop definition.
double direct_drop(std::vector<double> a, bool flip) {
    a.push_back(0.0);
    double total = 0;
    for (std::size_t k = 1; k < a.size(); ++k) total += (a[0] - a[k]) / static_cast<double>(k);
    return flip ? -total : total;
}

TimedDataset drift(std::size_t n, std::uint64_t seed) {
    return generate_drift({n, 3, 2, DriftKind::abrupt, 2.0, 10.0, seed});
}

std::vector<BenchmarkMethod> methods_of(std::vector<Method> ms, std::size_t M = 8) {
    std::vector<ValuationConfig> configs;
    for (auto m : ms) {
        ValuationConfig c;
        c.method = m;
        c.num_permutations = M;
        if (m == Method::ms_tds) c.scales = {1, 7};
        configs.push_back(c);
    }
    return label_methods(configs);
}

}  // namespace

TEST_CASE("noise_auc examples") {
    CHECK(noise_auc(std::vector<double>{0.1, 0.2, 0.9, 0.8}, mask_of({true, true, false, false})) == 1.0);
    CHECK(noise_auc(std::vector<double>{0.1, 0.8, 0.2, 0.9}, mask_of({true, false, false, true})) == 0.5);
    CHECK(noise_auc(std::vector<double>{3, 3, 3, 3}, mask_of({true, false, false, true})) == 0.5);
    CHECK_THROWS_AS(noise_auc(std::vector<double>{1, 2}, mask_of({true, true})), UndefinedMetricError);
    CHECK_THROWS_AS(noise_auc(std::vector<double>{1, 2}, mask_of({false, false})), UndefinedMetricError);
    CHECK_THROWS_AS(noise_auc(std::vector<double>{1, 2, 3}, mask_of({true, false})), ValidationError);
}

TEST_CASE("noise_auc matches pairwise counting") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> coarse(0, 6);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 4 + trial % 30;
        std::vector<double> values(n);
        std::vector<bool> flags(n);
        for (std::size_t i = 0; i < n; ++i) {
            values[i] = coarse(rng);  // plenty of ties
            flags[i] = i % 3 == 0;
        }
        CHECK(noise_auc(values, mask_of(flags)) == doctest::Approx(pairwise_auc(values, flags)).epsilon(1e-12));
    }
}

TEST_CASE("noise_auc is invariant under increasing transforms") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 20;
        std::vector<double> values(n), transformed(n), negated(n);
        std::vector<bool> flags(n);
        for (std::size_t i = 0; i < n; ++i) {
            values[i] = normal(rng);
            transformed[i] = std::exp(2 * values[i]) + 3;
            negated[i] = -values[i];
            flags[i] = (rng() % 4) == 0 || i == 0;
        }
        flags[1] = false;
        const auto mask = mask_of(flags);
        const double auc = noise_auc(values, mask);
        CHECK(noise_auc(transformed, mask) == auc);
        CHECK(auc + noise_auc(negated, mask) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(auc >= 0.0);
        CHECK(auc <= 1.0);
    }
}

TEST_CASE("median threshold AUC") {
    // scores below the median are flagged; here exactly the noisy ones
    const std::vector<double> values{0.1, 0.2, 0.9, 0.8};
    CHECK(noise_auc(values, mask_of({true, true, false, false}), AucMode::median_threshold) == 1.0);
    CHECK(noise_auc(values, mask_of({false, false, true, true}), AucMode::median_threshold) == 0.0);
    CHECK(parse_auc_mode(to_string(AucMode::median_threshold)) == AucMode::median_threshold);
}

TEST_CASE("weighted_drop examples") {
    CHECK(std::abs(weighted_drop(std::vector<double>{0.8, 0.8, 0.8, 0.8}, false) - 0.2) <= 1e-9);
    CHECK(std::abs(weighted_drop(std::vector<double>{1.0, 0.5, 0.25}, false) - 1.208333333333) <= 1e-9);
    CHECK(weighted_drop(std::vector<double>{0, 0, 0}, false) == 0.0);
    CHECK(weighted_drop(std::vector<double>{0, 0, 0}, true) == 0.0);
    CHECK(weighted_drop(std::vector<double>{0.4}, true) == -0.4);
    CHECK_THROWS_AS(weighted_drop(std::vector<double>{}, false), SizeError);
}

TEST_CASE("weighted_drop properties on random sequences") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t len = 1 + trial % 15;
        std::vector<double> a(len), b(len), sum(len), scaled(len);
        const double c = 4 * unit(rng) - 2;
        for (std::size_t k = 0; k < len; ++k) {
            a[k] = unit(rng);
            b[k] = unit(rng);
            sum[k] = a[k] + b[k];
            scaled[k] = c * a[k];
        }
        for (bool flip : {false, true}) {
            const double wa = weighted_drop(a, flip);
            CHECK(wa == doctest::Approx(direct_drop(a, flip)).epsilon(1e-12));
            CHECK(weighted_drop(scaled, flip) == doctest::Approx(c * wa).epsilon(1e-9));
            CHECK(weighted_drop(sum, flip) == doctest::Approx(wa + weighted_drop(b, flip)).epsilon(1e-9));
        }
        // non-increasing sequences are bounded below by the constant case
        std::vector<double> mono = a;
        std::sort(mono.begin(), mono.end(), std::greater<>());
        const double bound = mono[0] / static_cast<double>(len);
        CHECK(weighted_drop(mono, false) >= bound - 1e-12);
        if (mono.front() != mono.back()) CHECK(weighted_drop(mono, false) > bound);
    }
}

TEST_CASE("removal grid and order") {
    CHECK(removal_grid(0.1, 0.5) == std::vector<double>{0, 0.1, 0.2, 0.30000000000000004, 0.4, 0.5});
    CHECK(removal_grid(0.05, 0.5).size() == 11);
    CHECK_THROWS_AS(removal_grid(0.0, 0.5), ValidationError);
    CHECK_THROWS_AS(removal_grid(0.6, 0.5), ValidationError);
    CHECK_THROWS_AS(removal_grid(0.1, 1.0), ValidationError);

    const std::vector<double> v{0.2, 0.9, 0.2, -1};
    CHECK(removal_order(v, RemovalOrder::descending_value, 0) == std::vector<std::size_t>{1, 0, 2, 3});
    CHECK(removal_order(v, RemovalOrder::ascending_value, 0) == std::vector<std::size_t>{3, 0, 2, 1});
    const auto r = removal_order(v, RemovalOrder::random, 3);
    CHECK(r == removal_order(v, RemovalOrder::random, 3));
    CHECK(std::is_permutation(r.begin(), r.end(), std::vector<std::size_t>{0, 1, 2, 3}.begin()));
}

TEST_CASE("removal curve basics") {
    const auto ds = drift(60, 3);
    auto split = temporal_split(ds, 0.7);
    const UtilitySpec spec;
    std::vector<double> values(split.train.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = std::sin(static_cast<double>(i));

    const auto curve = removal_curve(split.train, split.val, spec, values, 0.1, 0.5,
                                     RemovalOrder::descending_value, 0);
    CHECK(curve.fractions.size() == 6);
    CHECK(curve.performance.size() == 6);
    CHECK(curve.performance[0] == utility(spec, split.train, split.val));

    // negated values: descending of one equals ascending of the other
    std::vector<double> negated(values.size());
    std::transform(values.begin(), values.end(), negated.begin(), [](double x) { return -x; });
    const auto dual = removal_curve(split.train, split.val, spec, negated, 0.1, 0.5,
                                    RemovalOrder::ascending_value, 0);
    CHECK(dual.performance == curve.performance);

    // equal values: both orders remove by index
    const std::vector<double> flat(values.size(), 1.0);
    CHECK(removal_curve(split.train, split.val, spec, flat, 0.1, 0.5, RemovalOrder::descending_value, 0).performance ==
          removal_curve(split.train, split.val, spec, flat, 0.1, 0.5, RemovalOrder::ascending_value, 0).performance);

    const auto all = removal_curves(split.train, split.val, spec, values, 0.1, 0.5, RemovalOrder::descending_value, 0);
    CHECK(all.size() == 3);
    CHECK(all.at(Metric::accuracy).performance == curve.performance);
    for (double b : all.at(Metric::brier).performance) CHECK(b >= 0.0);
}

TEST_CASE("removing the sole class-1 sample costs its validation share") {
    const TimedDataset train({-1, -1.2, -0.8, 5}, {0, 0, 0, 1}, {0, 1, 2, 3}, 1, 2);
    const TimedDataset val({-1, -1, -1, 5, 5}, {0, 0, 0, 1, 1}, {9, 9, 9, 9, 9}, 1, 2);
    const UtilitySpec nb{Classifier::gaussian_nb, Metric::accuracy, {}};
    const std::vector<double> values{0.1, 0.2, 0.3, 1.0};
    const auto curve = removal_curve(train, val, nb, values, 0.25, 0.5, RemovalOrder::descending_value, 0);
    const double share = 2.0 / 5.0;
    CHECK(curve.performance[0] - curve.performance[1] >= share - 1e-12);
    CHECK(curve.performance[1] == utility(nb, train, std::vector<std::size_t>{0, 1, 2}, val));
}

TEST_CASE("removal that would empty the train split is rejected") {
    const TimedDataset train({-1, 1, 2}, {0, 1, 1}, {0, 1, 2}, 1, 2);
    const std::vector<double> values{0, 1, 2};
    // round(0.85 * 3) = 3 removals
    CHECK_THROWS_AS(removal_curve(train, train, UtilitySpec{}, values, 0.85, 0.9, RemovalOrder::descending_value, 0),
                    RangeError);
}

TEST_CASE("noise benchmark shape and oracle detector") {
    const auto ds = drift(80, 1);
    auto methods = methods_of({Method::noise_oracle, Method::random, Method::tmc});
    const std::vector<std::uint64_t> seeds{0, 1};
    const auto report = run_noise_benchmark(ds, UtilitySpec{}, methods, 0.1, seeds);
    CHECK(report.experiment == "noise");
    CHECK(report.model == "LR");
    REQUIRE(report.methods.size() == 3);
    CHECK(report.method("noise_oracle").per_seed.at("noise_auc") == std::vector<double>{1.0, 1.0});
    for (const auto& m : report.methods) {
        for (const auto& key : kReportMetrics) REQUIRE(m.per_seed.at(key).size() == 2);
        CHECK(std::isnan(m.per_seed.at("wad")[0]));
        for (double auc : m.per_seed.at("noise_auc")) {
            CHECK(auc >= 0.0);
            CHECK(auc <= 1.0);
        }
    }

    std::ostringstream a, b;
    write_report_table(a, report);
    write_report_table(b, run_noise_benchmark(ds, UtilitySpec{}, methods, 0.1, seeds));
    CHECK(a.str() == b.str());
    CHECK(a.str().find("LR AUC") != std::string::npos);
}

TEST_CASE("random scores are a null noise detector") {
    const auto ds = drift(100, 2);
    std::vector<std::uint64_t> seeds(20);
    std::iota(seeds.begin(), seeds.end(), std::uint64_t{0});
    const auto report = run_noise_benchmark(ds, UtilitySpec{Classifier::gaussian_nb, Metric::accuracy, {}},
                                            methods_of({Method::random}), 0.1, seeds);
    CHECK(std::abs(report.methods[0].mean("noise_auc") - 0.5) <= 0.1);
}

TEST_CASE("removal benchmark shape") {
    const auto ds = drift(60, 4);
    const auto methods = methods_of({Method::random, Method::tds});
    const std::vector<std::uint64_t> seeds{0, 1, 2};
    const auto report = run_removal_benchmark(ds, UtilitySpec{}, methods, 0.1, 0.3, seeds);
    CHECK(report.experiment == "removal");
    const std::size_t per_metric = methods.size() * seeds.size() * 4;
    CHECK(report.curves.size() == 3 * per_metric);

    std::ostringstream curves;
    write_curve_csv(curves, report);
    const auto text = curves.str();
    CHECK(text.rfind("method,seed,metric,fraction,performance\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == 1 + 3 * per_metric);

    for (const auto& m : report.methods) {
        CHECK(std::isnan(m.per_seed.at("noise_auc")[0]));
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            std::vector<double> acc;
            for (const auto& p : report.curves) {
                if (p.method == m.label && p.seed == seeds[s] && p.metric == "accuracy") acc.push_back(p.performance);
            }
            CHECK(m.per_seed.at("wad")[s] == weighted_drop(acc, false));
        }
    }

    std::ostringstream table;
    write_report_table(table, report);
    const auto t = table.str();
    CHECK(t.find("LR WAD") != std::string::npos);
    CHECK(t.find("LR WBD") != std::string::npos);
    CHECK(t.find("LR WCD") != std::string::npos);
    CHECK(t.find("AUC") == std::string::npos);

    auto with_oracle = methods_of({Method::noise_oracle});
    CHECK_THROWS_AS(run_removal_benchmark(ds, UtilitySpec{}, with_oracle, 0.1, 0.3, seeds), ValidationError);
}

TEST_CASE("method labels and statistics") {
    const auto labeled = methods_of({Method::tds, Method::tds, Method::loo});
    CHECK(labeled[0].label == "tds");
    CHECK(labeled[1].label == "tds#2");
    CHECK(labeled[2].label == "loo");

    MethodResult r{"x", {{"wad", {1.0, 2.0, 3.0}}}};
    CHECK(r.mean("wad") == 2.0);
    CHECK(r.stddev("wad") == 1.0);
}
