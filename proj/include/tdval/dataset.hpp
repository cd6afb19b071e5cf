#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tdval {

struct TimedSample {
    std::vector<double> features;
    int label = 0;
    double timestamp = 0.0;
};

/// Timestamped classification samples in a fixed order.
///
/// Storage is columnar: features are one row-major N x d block so model
/// fits can run over contiguous memory. Instances are immutable once built;
/// the `with_*` and `subset` members return fresh datasets.
class TimedDataset {
public:
    /// Validates every invariant (N >= 1, num_classes >= 2, labels in range,
    /// finite features and timestamps). `t_ref` defaults to the latest
    /// timestamp. `label_values` maps dense class index to the label seen on
    /// disk; empty means the identity mapping.
    TimedDataset(std::vector<double> features, std::vector<int> labels,
                 std::vector<double> timestamps, std::size_t feature_dim, int num_classes,
                 std::optional<double> t_ref = std::nullopt,
                 std::vector<std::int64_t> label_values = {});

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t feature_dim() const noexcept { return feature_dim_; }
    int num_classes() const noexcept { return num_classes_; }
    double t_ref() const noexcept { return t_ref_; }

    std::span<const double> features() const noexcept { return features_; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {features_.data() + i * feature_dim_, feature_dim_};
    }
    std::span<const int> labels() const noexcept { return labels_; }
    int label(std::size_t i) const noexcept { return labels_[i]; }
    std::span<const double> timestamps() const noexcept { return timestamps_; }
    double timestamp(std::size_t i) const noexcept { return timestamps_[i]; }
    std::span<const std::int64_t> label_values() const noexcept { return label_values_; }

    TimedSample sample(std::size_t i) const;
    double max_timestamp() const;

    /// Rows at `indices`, in that order. Keeps num_classes, t_ref and the
    /// label mapping of the parent.
    TimedDataset subset(std::span<const std::size_t> indices) const;
    TimedDataset with_labels(std::vector<int> labels) const;
    TimedDataset with_features(std::vector<double> features) const;
    TimedDataset with_t_ref(double t_ref) const;

    friend bool operator==(const TimedDataset&, const TimedDataset&) = default;

private:
    std::vector<double> features_;
    std::vector<int> labels_;
    std::vector<double> timestamps_;
    std::size_t feature_dim_;
    int num_classes_;
    double t_ref_;
    std::vector<std::int64_t> label_values_;
};

/// Ground-truth flags for injected label noise (true = flipped).
struct NoiseMask {
    std::vector<bool> flags;

    std::size_t size() const noexcept { return flags.size(); }
    std::size_t count() const noexcept;
};

enum class DriftKind { none, abrupt, gradual, periodic };

std::string to_string(DriftKind kind);
DriftKind parse_drift_kind(const std::string& name);

struct DriftSpec {
    std::size_t n_samples = 300;
    std::size_t feature_dim = 5;
    int num_classes = 2;
    DriftKind drift_kind = DriftKind::none;
    double drift_magnitude = 0.0;
    double time_span = 1.0;
    std::uint64_t seed = 0;
};

/// Population parameters behind `generate_drift`: per-class base means and
/// unit drift directions, drawn from the spec seed.
class DriftModel {
public:
    explicit DriftModel(const DriftSpec& spec);

    /// Mean of class `c` at time `t` (t in [0, time_span]).
    std::vector<double> class_mean(int c, double t) const;
    /// Drift profile g(t); the class mean is base + magnitude * g(t) * direction.
    double profile(double t) const;

    const DriftSpec& spec() const noexcept { return spec_; }

    // Distance of each base class mean from the origin; noise is unit variance.
    static constexpr double kClassSeparation = 1.0;
    // Full cycles of the periodic profile across the time span.
    static constexpr double kPeriodicCycles = 4.0;

private:
    DriftSpec spec_;
    std::vector<std::vector<double>> base_means_;
    std::vector<std::vector<double>> directions_;
};

void validate(const DriftSpec& spec);

/// Class-conditional Gaussian stream whose means translate over time.
TimedDataset generate_drift(const DriftSpec& spec);

struct NoisyDataset {
    TimedDataset data;
    NoiseMask mask;
};

/// Flips round(fraction * N) labels chosen uniformly at random; each
/// replacement is drawn uniformly from the other classes.
NoisyDataset inject_label_noise(const TimedDataset& ds, double fraction, std::uint64_t seed);

struct TemporalSplit {
    TimedDataset train;
    TimedDataset val;
};

/// Stable sort by timestamp, then the first ceil(train_frac * N) samples
/// train and the rest validate.
TemporalSplit temporal_split(const TimedDataset& ds, double train_frac);

/// max(0, t_ref - t_i), optionally divided by `normalize_scale`.
std::vector<double> time_gaps(const TimedDataset& ds,
                              std::optional<double> normalize_scale = std::nullopt);

/// Per-feature z-scoring fitted on one dataset (the train split) and applied
/// to others.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const TimedDataset& ds);
    TimedDataset apply(const TimedDataset& ds) const;
};

TimedDataset read_csv(std::istream& in, std::optional<double> t_ref_override = std::nullopt);
TimedDataset load_csv(const std::filesystem::path& path,
                      std::optional<double> t_ref_override = std::nullopt);
void write_csv(std::ostream& out, const TimedDataset& ds);
void save_csv(const TimedDataset& ds, const std::filesystem::path& path);

}  // namespace tdval
