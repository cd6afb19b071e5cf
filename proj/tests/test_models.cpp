#include <doctest.h>

#include <cmath>
#include <random>

#include "tdval/errors.hpp"
#include "tdval/models.hpp"

using namespace tdval;

namespace {

ProbabilityMatrix probs(std::vector<double> values, std::size_t cols) {
    const std::size_t rows = values.size() / cols;
    return ProbabilityMatrix(std::move(values), rows, cols);
}

// class 0 around -5, class 1 around +5, one feature
TimedDataset two_clusters(std::size_t per_class) {
    std::vector<double> x;
    std::vector<int> y;
    std::vector<double> t;
    for (std::size_t i = 0; i < per_class; ++i) {
        const double jitter = 0.1 * static_cast<double>(i) - 0.05 * static_cast<double>(per_class);
        x.push_back(-5.0 + jitter);
        y.push_back(0);
        x.push_back(5.0 + jitter);
        y.push_back(1);
        t.push_back(static_cast<double>(2 * i));
        t.push_back(static_cast<double>(2 * i + 1));
    }
    return TimedDataset(std::move(x), std::move(y), std::move(t), 1, 2);
}

void check_rows_are_distributions(const ProbabilityMatrix& p) {
    for (std::size_t r = 0; r < p.rows; ++r) {
        double sum = 0.0;
        for (double v : p.row(r)) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

}  // namespace

TEST_CASE("accuracy examples") {
    CHECK(accuracy(probs({1, 0, 0, 1}, 2), std::vector<int>{0, 1}) == 1.0);
    CHECK(accuracy(probs({1, 0, 0, 1}, 2), std::vector<int>{1, 0}) == 0.0);
    CHECK(accuracy(probs({1, 0, 0, 1, 1, 0, 0, 1}, 2), std::vector<int>{0, 1, 0, 0}) == 0.75);
    // ties go to the lowest class
    CHECK(accuracy(probs({0.5, 0.5}, 2), std::vector<int>{0}) == 1.0);
    CHECK_THROWS_AS(accuracy(ProbabilityMatrix(0, 2), std::vector<int>{}), UndefinedMetricError);
}

TEST_CASE("brier examples") {
    CHECK(brier(probs({1, 0, 0, 1}, 2), std::vector<int>{0, 1}) == 0.0);
    CHECK(brier(probs({0.5, 0.5}, 2), std::vector<int>{1}) == doctest::Approx(0.5));
    CHECK(brier(probs({0.8, 0.2}, 2), std::vector<int>{0}) == doctest::Approx(0.08));
    CHECK_THROWS_AS(brier(ProbabilityMatrix(0, 2), std::vector<int>{}), UndefinedMetricError);
}

TEST_CASE("cross entropy examples") {
    CHECK(std::abs(cross_entropy(probs({1, 0, 0, 1}, 2), std::vector<int>{0, 1})) <= 1e-9);
    CHECK(cross_entropy(probs({0.5, 0.5}, 2), std::vector<int>{0}) == doctest::Approx(0.693147).epsilon(1e-6));
    const double clipped = cross_entropy(probs({1.0, 0.0}, 2), std::vector<int>{1});
    CHECK(std::isfinite(clipped));
    CHECK(clipped == doctest::Approx(-std::log(1e-12)));
    CHECK_THROWS_AS(cross_entropy(ProbabilityMatrix(0, 2), std::vector<int>{}), UndefinedMetricError);
}

TEST_CASE("as_utility makes every metric larger-is-better") {
    CHECK(as_utility(Metric::accuracy, 0.7) == 0.7);
    CHECK(as_utility(Metric::brier, 0.2) == -0.2);
    CHECK(as_utility(Metric::cross_entropy, 0.3) == -0.3);
}

TEST_CASE("gaussian NB separates two clusters") {
    UtilitySpec spec{Classifier::gaussian_nb, Metric::accuracy, {}};
    const auto train = two_clusters(10);
    const auto model = fit(spec, train, 2);
    const std::vector<double> point{-5.0};
    const auto p = model.predict_proba({point, 1, 1});
    CHECK(p(0, 0) > 0.99);
    CHECK(utility(spec, train, train) == 1.0);
}

TEST_CASE("single-class training yields a one-hot model") {
    for (auto kind : {Classifier::logistic_regression, Classifier::gaussian_nb}) {
        UtilitySpec spec{kind, Metric::accuracy, {}};
        const std::vector<double> x{0.3, -1.0};
        const std::vector<int> y{1};
        const auto model = fit(spec, MatrixView{x, 1, 2}, y, 3);
        CHECK(model.state() == FittedModel::State::single_class);
        const std::vector<double> queries{0, 0, 100, -100, -3, 7};
        const auto p = model.predict_proba({queries, 3, 2});
        for (std::size_t r = 0; r < 3; ++r) {
            CHECK(p(r, 0) == 0.0);
            CHECK(p(r, 1) == 1.0);
            CHECK(p(r, 2) == 0.0);
        }
    }
}

TEST_CASE("NB with identical class statistics predicts the prior") {
    UtilitySpec spec{Classifier::gaussian_nb, Metric::accuracy, {}};
    const std::vector<double> x{-1, 1, -1, 1};
    const std::vector<int> y{0, 0, 1, 1};
    const auto model = fit(spec, MatrixView{x, 4, 1}, y, 2);
    const std::vector<double> q{0.0, 3.0, -2.5};
    const auto p = model.predict_proba({q, 3, 1});
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(std::abs(p(r, 0) - 0.5) <= 1e-9);
        CHECK(std::abs(p(r, 1) - 0.5) <= 1e-9);
    }

    // unequal frequencies: posterior equals the class frequencies
    const std::vector<double> x3{-1, 1, -1, 1, -1, 1};
    const std::vector<int> y3{0, 0, 0, 0, 1, 1};
    const auto skewed = fit(spec, MatrixView{x3, 6, 1}, y3, 2);
    const auto ps = skewed.predict_proba({q, 3, 1});
    for (std::size_t r = 0; r < 3; ++r) CHECK(std::abs(ps(r, 0) - 2.0 / 3.0) <= 1e-9);
}

TEST_CASE("absent classes receive Laplace prior mass") {
    UtilitySpec spec{Classifier::gaussian_nb, Metric::accuracy, {}};
    const std::vector<double> x{-1, 1};
    const std::vector<int> y{0, 1};
    const auto model = fit(spec, MatrixView{x, 2, 1}, y, 3);
    const std::vector<double> q{0.0};
    const auto p = model.predict_proba({q, 1, 1});
    CHECK(p(0, 2) == doctest::Approx(1.0 / 5.0));
    CHECK(p(0, 0) + p(0, 1) == doctest::Approx(4.0 / 5.0));
}

TEST_CASE("predict_proba rejects dimension mismatches") {
    UtilitySpec spec;
    const auto train = two_clusters(3);
    const auto model = fit(spec, train, 2);
    const std::vector<double> q{1.0, 2.0};
    CHECK_THROWS_AS(model.predict_proba({q, 1, 2}), ShapeError);
}

TEST_CASE("LR fit is deterministic and separates clusters") {
    UtilitySpec spec;
    const auto train = two_clusters(10);
    const auto a = fit(spec, train, 2);
    const auto b = fit(spec, train, 2);
    CHECK(a == b);
    CHECK(a.logistic_parameters().weights == b.logistic_parameters().weights);
    CHECK(utility(spec, train, train) == 1.0);
}

TEST_CASE("probability rows are distributions on random fixtures") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 2 + trial % 3;
        const std::size_t n = 12;
        const std::size_t d = 3;
        std::vector<double> x(n * d);
        for (auto& v : x) v = normal(rng) * (1 + trial);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % (k - (trial % 2)));
        for (auto kind : {Classifier::logistic_regression, Classifier::gaussian_nb}) {
            const auto model = fit(UtilitySpec{kind, Metric::accuracy, {}}, MatrixView{x, n, d}, y, k);
            std::vector<double> q(5 * d);
            for (auto& v : q) v = normal(rng) * 10;
            check_rows_are_distributions(model.predict_proba({q, 5, d}));
        }
    }
}

TEST_CASE("LR gradient matches central finite differences") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    for (int classes : {2, 3, 4}) {
        const std::size_t n = 15;
        const std::size_t d = 3;
        std::vector<double> x(n * d);
        for (auto& v : x) v = normal(rng);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % classes);
        const MatrixView X{x, n, d};
        const double l2 = 0.05;

        auto params = logistic::Parameters::zeros(classes, d);
        for (auto& w : params.weights) w = normal(rng);
        for (auto& b : params.bias) b = normal(rng);
        const auto grad = logistic::gradient(params, X, y, l2);

        const double h = 1e-6;
        auto check_coordinate = [&](std::vector<double>& slot, const std::vector<double>& analytic) {
            for (std::size_t i = 0; i < slot.size(); ++i) {
                const double saved = slot[i];
                slot[i] = saved + h;
                const double up = logistic::loss(params, X, y, l2);
                slot[i] = saved - h;
                const double down = logistic::loss(params, X, y, l2);
                slot[i] = saved;
                const double numeric = (up - down) / (2 * h);
                const double scale = std::max(1e-3, std::abs(numeric));
                CHECK(std::abs(numeric - analytic[i]) / scale < 1e-5);
            }
        };
        check_coordinate(params.weights, grad.weights);
        check_coordinate(params.bias, grad.bias);
    }
}

TEST_CASE("LR training loss is non-increasing") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 10; ++trial) {
        const int classes = 2 + trial % 3;
        const std::size_t n = 40;
        const std::size_t d = 4;
        std::vector<double> x(n * d);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<int>(rng() % classes);
            for (std::size_t j = 0; j < d; ++j) x[i * d + j] = normal(rng) + (j == static_cast<std::size_t>(y[i]) ? 1.0 : 0.0);
        }
        // standardize columns
        for (std::size_t j = 0; j < d; ++j) {
            double mean = 0, sq = 0;
            for (std::size_t i = 0; i < n; ++i) mean += x[i * d + j] / n;
            for (std::size_t i = 0; i < n; ++i) sq += (x[i * d + j] - mean) * (x[i * d + j] - mean) / n;
            for (std::size_t i = 0; i < n; ++i) x[i * d + j] = (x[i * d + j] - mean) / std::sqrt(sq);
        }
        std::vector<double> trace;
        logistic::train(MatrixView{x, n, d}, y, classes, {0.1, 100, 1e-3}, &trace);
        REQUIRE(trace.size() == 101);
        for (std::size_t e = 1; e < trace.size(); ++e) CHECK(trace[e] <= trace[e - 1] + 1e-9);
        CHECK(trace.back() < trace.front());
    }
}

TEST_CASE("utility of the empty subset is the prior predictor") {
    UtilitySpec spec;
    const auto ds = two_clusters(5);
    const std::vector<std::size_t> none;
    // uniform probabilities break ties to class 0: accuracy = share of class 0
    CHECK(utility(spec, ds, none, ds) == 0.5);
    const auto val = ds.with_labels({0, 0, 0, 1, 0, 0, 1, 0, 0, 0});
    CHECK(utility(spec, ds, none, val) == 0.8);
    UtilitySpec ce{Classifier::gaussian_nb, Metric::cross_entropy, {}};
    CHECK(utility(ce, ds, none, ds) == doctest::Approx(-std::log(2.0)));
}

TEST_CASE("utility is pure") {
    const auto ds = two_clusters(6);
    const std::vector<std::size_t> idx{0, 3, 4, 7};
    for (auto kind : {Classifier::logistic_regression, Classifier::gaussian_nb}) {
        for (auto metric : {Metric::accuracy, Metric::brier, Metric::cross_entropy}) {
            UtilitySpec spec{kind, metric, {}};
            CHECK(utility(spec, ds, idx, ds) == utility(spec, ds, idx, ds));
            CHECK(utility(spec, ds.subset(idx), ds) == utility(spec, ds, idx, ds));
        }
    }
}

TEST_CASE("utility spec validation and names") {
    UtilitySpec spec;
    spec.lr.learning_rate = 0.0;
    CHECK_THROWS_AS(validate(spec), ValidationError);
    spec = {};
    spec.lr.epochs = 0;
    CHECK_THROWS_AS(validate(spec), ValidationError);
    spec = {};
    spec.lr.l2 = -1;
    CHECK_THROWS_AS(validate(spec), ValidationError);
    CHECK(parse_classifier("nb") == Classifier::gaussian_nb);
    CHECK(parse_classifier(to_string(Classifier::logistic_regression)) == Classifier::logistic_regression);
    CHECK(parse_metric(to_string(Metric::brier)) == Metric::brier);
    CHECK_THROWS_AS(parse_metric("auc"), ValidationError);
}
