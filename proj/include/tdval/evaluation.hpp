#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tdval/dataset.hpp"
#include "tdval/models.hpp"
#include "tdval/valuation.hpp"

namespace tdval {

enum class AucMode { continuous, median_threshold };
enum class RemovalOrder { descending_value, ascending_value, random };

std::string to_string(AucMode mode);
AucMode parse_auc_mode(const std::string& name);
std::string to_string(RemovalOrder order);

/// ROC AUC of the noise score -value_i against the flipped-label mask
/// (Mann-Whitney; ties count 1/2). In median_threshold mode the score is
/// the binary flag value_i < median(value).
double noise_auc(std::span<const double> values, const NoiseMask& mask,
                 AucMode mode = AucMode::continuous);

/// Weighted cumulative drop: with a_{T+1} = 0 appended, C_k = a_0 - a_k and
/// the result is sum_{k=1}^{T+1} C_k / k, negated when `flip_sign`.
double weighted_drop(std::span<const double> performance, bool flip_sign);

struct RemovalCurve {
    std::vector<double> fractions;
    std::vector<double> performance;
    Metric metric = Metric::accuracy;
    RemovalOrder order = RemovalOrder::descending_value;
};

/// [0, step, 2 step, ...] up to max_fraction (inclusive, with a small
/// tolerance for floating-point steps).
std::vector<double> removal_grid(double step_fraction, double max_fraction);

/// Order in which samples are removed. Value ties remove the lower index
/// first; `random` shuffles with `seed`.
std::vector<std::size_t> removal_order(std::span<const double> values, RemovalOrder order,
                                       std::uint64_t seed);

/// One retraining per grid point, scored with every metric at once. Brier and
/// cross-entropy are stored raw (lower is better).
std::map<Metric, RemovalCurve> removal_curves(const TimedDataset& train, const TimedDataset& val,
                                              const UtilitySpec& spec, std::span<const double> values,
                                              double step_fraction, double max_fraction,
                                              RemovalOrder order, std::uint64_t seed);

/// Curve for spec.metric only.
RemovalCurve removal_curve(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                           std::span<const double> values, double step_fraction, double max_fraction,
                           RemovalOrder order, std::uint64_t seed);

/// One valuation method in a benchmark, with the label used in reports.
struct BenchmarkMethod {
    std::string label;
    ValuationConfig config;
};

/// Labels default to the method name; repeated labels get a "#k" suffix.
std::vector<BenchmarkMethod> label_methods(const std::vector<ValuationConfig>& configs);

struct MethodResult {
    std::string label;
    // metric name -> one value per seed, aligned with EvalReport::seeds.
    std::map<std::string, std::vector<double>> per_seed;

    double mean(const std::string& metric) const;
    double stddev(const std::string& metric) const;
};

struct CurvePoint {
    std::string method;
    std::uint64_t seed = 0;
    std::string metric;
    double fraction = 0.0;
    double performance = 0.0;
};

struct EvalReport {
    std::string experiment;  // "noise" or "removal"
    std::string dataset;
    std::string model;       // "LR" or "NB"
    std::vector<std::uint64_t> seeds;
    std::vector<MethodResult> methods;
    std::vector<CurvePoint> curves;

    const MethodResult& method(const std::string& label) const;
};

inline const std::vector<std::string> kReportMetrics{"noise_auc", "wad", "wbd", "wcd"};

struct BenchmarkOptions {
    double train_frac = 0.8;
    AucMode auc_mode = AucMode::continuous;
    std::string dataset_name = "dataset";
    unsigned jobs = 0;
};

std::string model_tag(Classifier c);

/// Per seed: temporal split, standardize on train, flip `noise_fraction` of
/// the train labels, value the noisy train with every method (valuation seed
/// = benchmark seed) and score noise AUC. Drop metrics are NaN.
EvalReport run_noise_benchmark(const TimedDataset& ds, const UtilitySpec& spec,
                               const std::vector<BenchmarkMethod>& methods, double noise_fraction,
                               const std::vector<std::uint64_t>& seeds,
                               const BenchmarkOptions& options = {});

/// Per seed: temporal split, standardize, value the clean train, remove in
/// descending value order and record WAD / WBD / WCD plus the raw curves.
/// Noise AUC is NaN.
EvalReport run_removal_benchmark(const TimedDataset& ds, const UtilitySpec& spec,
                                 const std::vector<BenchmarkMethod>& methods, double step_fraction,
                                 double max_fraction, const std::vector<std::uint64_t>& seeds,
                                 const BenchmarkOptions& options = {});

/// Aligned table: methods as rows, the experiment's metrics as columns.
void write_report_table(std::ostream& out, const EvalReport& report);
/// `method,seed,metric,value` (finite values only).
void write_report_csv(std::ostream& out, const EvalReport& report);
/// `method,seed,metric,fraction,performance`.
void write_curve_csv(std::ostream& out, const EvalReport& report);

}  // namespace tdval
