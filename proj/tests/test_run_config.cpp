#include <doctest.h>

#include "tdval/errors.hpp"
#include "tdval/run_config.hpp"

using namespace tdval;
using nlohmann::json;

TEST_CASE("run config round-trips through JSON") {
    RunConfig c;
    c.dataset.drift = DriftSpec{120, 4, 3, DriftKind::periodic, 1.5, 30.0, 9};
    c.train_frac = 0.75;
    c.utility = {Classifier::gaussian_nb, Metric::brier, {0.05, 50, 0.01}};
    auto m = default_method_config(Method::ms_tds);
    m.scales = {1, 7, 30};
    m.normalize_scale = 12.5;
    m.share_scale_seeds = true;
    c.methods = {m, default_method_config(Method::loo)};
    c.noise = NoiseExperiment{0.2, AucMode::median_threshold};
    c.removal = RemovalExperiment{0.1, 0.4};
    c.seeds = {3, 4};
    c.output_dir = "results/run1";

    const auto back = run_config_from_json(json::parse(to_json(c).dump()));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.methods[0] == c.methods[0]);
    CHECK(back.dataset.drift->drift_kind == DriftKind::periodic);
    CHECK(back.noise->auc_mode == AucMode::median_threshold);
}

TEST_CASE("method entries fill defaults") {
    const auto m = method_from_json(json{{"method", "tds_improved"}});
    CHECK(m.p == 1.5);
    CHECK(m.normalize_by_max_gap);
    CHECK(m.num_permutations == 200);
    CHECK(method_from_json(json{{"method", "tds"}}).p == 1.0);
    CHECK_THROWS_AS(method_from_json(json{{"lambda", 1}}), ConfigError);
    CHECK_THROWS_AS(method_from_json(json{{"method", "tds"}, {"lamda", 1}}), ConfigError);
    CHECK_THROWS_AS(method_from_json(json{{"method", "magic"}}), ConfigError);
}

TEST_CASE("unknown keys and bad values are rejected") {
    CHECK_THROWS_AS(run_config_from_json(json{{"datasets", json::object()}}), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(json{{"utility", {{"clf", "nb"}}}}), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(json{{"split", {{"train_frac", "most"}}}}), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(json{{"seeds", "one"}}), ConfigError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("run config validation") {
    RunConfig c;
    c.methods = {default_method_config(Method::tmc)};
    CHECK_THROWS_AS(validate(c), ConfigError);  // no dataset
    c.dataset.drift = DriftSpec{};
    CHECK_NOTHROW(validate(c));
    c.seeds.clear();
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.seeds = {1};
    c.methods.clear();
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.methods = {default_method_config(Method::ms_tds)};
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.methods[0].scales = {1};
    c.train_frac = 1.0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.train_frac = 0.8;
    c.removal = RemovalExperiment{0.5, 0.1};
    CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("default method suite") {
    const auto suite = default_method_suite();
    REQUIRE(suite.size() == 6);
    CHECK(suite[0].method == Method::loo);
    CHECK(suite[1].beta == BetaParams{1, 16});
    CHECK(suite[5].scales == std::vector<double>{1, 7, 30});
    for (const auto& m : suite) CHECK_NOTHROW(validate(m));
}
