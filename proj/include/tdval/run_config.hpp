#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdval/dataset.hpp"
#include "tdval/evaluation.hpp"
#include "tdval/models.hpp"
#include "tdval/valuation.hpp"

namespace tdval {

struct DatasetSource {
    std::optional<std::filesystem::path> csv;
    std::optional<DriftSpec> drift;
    std::optional<double> t_ref;  // CSV only
};

struct NoiseExperiment {
    double fraction = 0.1;
    AucMode auc_mode = AucMode::continuous;
};

struct RemovalExperiment {
    double step_fraction = 0.05;
    double max_fraction = 0.5;
};

/// Everything one CLI run needs. Serialized as JSON; the scores sidecar is a
/// RunConfig with a single method and seed, so it can be fed back in.
struct RunConfig {
    DatasetSource dataset;
    double train_frac = 0.8;
    UtilitySpec utility;
    std::vector<ValuationConfig> methods;
    std::optional<NoiseExperiment> noise;
    std::optional<RemovalExperiment> removal;
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path output_dir = "out";
};

/// Defaults applied to a method parsed from config or flags: gaps are
/// normalized by the largest training gap, p = 1.5 for the power-decay
/// methods, M = 200.
ValuationConfig default_method_config(Method method);
/// The six compared methods with default settings; ms_tds uses scales
/// {1, 7, 30}.
std::vector<ValuationConfig> default_method_suite();

nlohmann::json to_json(const ValuationConfig& config);
ValuationConfig method_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Checks the cross-field invariants (a dataset source, >= 1 method and seed,
/// every method config valid). Throws ConfigError.
void validate(const RunConfig& config);

TimedDataset load_dataset(const DatasetSource& source);
std::string describe(const DatasetSource& source);

}  // namespace tdval
