#include "tdval/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "tdval/errors.hpp"

namespace tdval {

TimedDataset::TimedDataset(std::vector<double> features, std::vector<int> labels,
                           std::vector<double> timestamps, std::size_t feature_dim,
                           int num_classes, std::optional<double> t_ref,
                           std::vector<std::int64_t> label_values)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      timestamps_(std::move(timestamps)),
      feature_dim_(feature_dim),
      num_classes_(num_classes),
      t_ref_(0.0),
      label_values_(std::move(label_values)) {
    if (labels_.empty()) throw SizeError("dataset must hold at least one sample");
    if (feature_dim_ == 0) throw SchemaError("feature dimension must be positive");
    if (num_classes_ < 2) throw SchemaError("num_classes must be at least 2");
    if (timestamps_.size() != labels_.size() || features_.size() != labels_.size() * feature_dim_) {
        throw ShapeError("features, labels and timestamps disagree on sample count");
    }
    for (int y : labels_) {
        if (y < 0 || y >= num_classes_) {
            throw SchemaError(fmt::format("label {} outside [0, {})", y, num_classes_));
        }
    }
    for (double v : features_) {
        if (!std::isfinite(v)) throw SchemaError("feature values must be finite");
    }
    for (double t : timestamps_) {
        if (!std::isfinite(t)) throw SchemaError("timestamps must be finite");
    }
    if (label_values_.empty()) {
        label_values_.resize(static_cast<std::size_t>(num_classes_));
        std::iota(label_values_.begin(), label_values_.end(), std::int64_t{0});
    } else if (label_values_.size() != static_cast<std::size_t>(num_classes_)) {
        throw ShapeError("label mapping must have one entry per class");
    }
    t_ref_ = t_ref.value_or(max_timestamp());
    if (!std::isfinite(t_ref_)) throw SchemaError("t_ref must be finite");
}

TimedSample TimedDataset::sample(std::size_t i) const {
    auto r = row(i);
    return {std::vector<double>(r.begin(), r.end()), labels_[i], timestamps_[i]};
}

double TimedDataset::max_timestamp() const {
    return *std::max_element(timestamps_.begin(), timestamps_.end());
}

TimedDataset TimedDataset::subset(std::span<const std::size_t> indices) const {
    std::vector<double> feats;
    feats.reserve(indices.size() * feature_dim_);
    std::vector<int> labels;
    labels.reserve(indices.size());
    std::vector<double> times;
    times.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= size()) throw ShapeError(fmt::format("subset index {} out of range", i));
        auto r = row(i);
        feats.insert(feats.end(), r.begin(), r.end());
        labels.push_back(labels_[i]);
        times.push_back(timestamps_[i]);
    }
    return TimedDataset(std::move(feats), std::move(labels), std::move(times), feature_dim_,
                        num_classes_, t_ref_, label_values_);
}

TimedDataset TimedDataset::with_labels(std::vector<int> labels) const {
    return TimedDataset(features_, std::move(labels), timestamps_, feature_dim_, num_classes_,
                        t_ref_, label_values_);
}

TimedDataset TimedDataset::with_features(std::vector<double> features) const {
    return TimedDataset(std::move(features), labels_, timestamps_, feature_dim_, num_classes_,
                        t_ref_, label_values_);
}

TimedDataset TimedDataset::with_t_ref(double t_ref) const {
    return TimedDataset(features_, labels_, timestamps_, feature_dim_, num_classes_, t_ref,
                        label_values_);
}

std::size_t NoiseMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
}

// --- synthetic drift -------------------------------------------------------

std::string to_string(DriftKind kind) {
    switch (kind) {
        case DriftKind::none: return "none";
        case DriftKind::abrupt: return "abrupt";
        case DriftKind::gradual: return "gradual";
        case DriftKind::periodic: return "periodic";
    }
    return "none";
}

DriftKind parse_drift_kind(const std::string& name) {
    if (name == "none") return DriftKind::none;
    if (name == "abrupt") return DriftKind::abrupt;
    if (name == "gradual") return DriftKind::gradual;
    if (name == "periodic") return DriftKind::periodic;
    throw SchemaError("unknown drift kind '" + name + "' (expected none|abrupt|gradual|periodic)");
}

void validate(const DriftSpec& spec) {
    if (spec.n_samples == 0) throw SchemaError("n_samples must be positive");
    if (spec.feature_dim == 0) throw SchemaError("feature_dim must be positive");
    if (spec.num_classes < 2) throw SchemaError("num_classes must be at least 2");
    if (!(spec.drift_magnitude >= 0.0) || !std::isfinite(spec.drift_magnitude)) {
        throw SchemaError("drift_magnitude must be a non-negative real");
    }
    if (!(spec.time_span > 0.0) || !std::isfinite(spec.time_span)) {
        throw SchemaError("time_span must be positive");
    }
    if (spec.n_samples < static_cast<std::size_t>(spec.num_classes)) {
        throw InfeasibleError(fmt::format("n_samples ({}) smaller than num_classes ({})",
                                          spec.n_samples, spec.num_classes));
    }
}

namespace {

std::vector<double> random_unit_vector(std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& x : v) {
            x = gauss(rng);
            norm += x * x;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

}  // namespace

DriftModel::DriftModel(const DriftSpec& spec) : spec_(spec) {
    validate(spec_);
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                      static_cast<std::uint32_t>(spec.seed >> 32), 0x6d65616eU};
    std::mt19937_64 rng(seq);
    for (int c = 0; c < spec.num_classes; ++c) {
        auto mean = random_unit_vector(spec.feature_dim, rng);
        for (auto& x : mean) x *= kClassSeparation;
        base_means_.push_back(std::move(mean));
        directions_.push_back(random_unit_vector(spec.feature_dim, rng));
    }
}

double DriftModel::profile(double t) const {
    switch (spec_.drift_kind) {
        case DriftKind::none: return 0.0;
        case DriftKind::abrupt: return t >= 0.5 * spec_.time_span ? 1.0 : 0.0;
        case DriftKind::gradual: return std::clamp(t / spec_.time_span, 0.0, 1.0);
        case DriftKind::periodic:
            return std::sin(2.0 * std::numbers::pi * kPeriodicCycles * t / spec_.time_span);
    }
    return 0.0;
}

std::vector<double> DriftModel::class_mean(int c, double t) const {
    const auto& base = base_means_.at(static_cast<std::size_t>(c));
    const auto& dir = directions_.at(static_cast<std::size_t>(c));
    const double shift = spec_.drift_magnitude * profile(t);
    std::vector<double> mean(base.size());
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] = base[j] + shift * dir[j];
    return mean;
}

TimedDataset generate_drift(const DriftSpec& spec) {
    DriftModel model(spec);
    const std::size_t n = spec.n_samples;
    const std::size_t d = spec.feature_dim;

    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                      static_cast<std::uint32_t>(spec.seed >> 32), 0x73616d70U};
    std::mt19937_64 rng(seq);

    // Balanced labels so every class is present.
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(spec.num_classes));
    std::shuffle(labels.begin(), labels.end(), rng);

    std::vector<double> times(n);
    const double spacing = n > 1 ? spec.time_span / static_cast<double>(n - 1) : 0.0;
    for (std::size_t i = 0; i < n; ++i) times[i] = static_cast<double>(i) * spacing;

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> features(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        auto mean = model.class_mean(labels[i], times[i]);
        for (std::size_t j = 0; j < d; ++j) features[i * d + j] = mean[j] + gauss(rng);
    }
    return TimedDataset(std::move(features), std::move(labels), std::move(times), d,
                        spec.num_classes);
}

// --- perturbation and splitting ---------------------------------------------

NoisyDataset inject_label_noise(const TimedDataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw RangeError(fmt::format("noise fraction {} outside [0, 1]", fraction));
    }
    const std::size_t n = ds.size();
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      0x6e6f6973U};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<int> labels(ds.labels().begin(), ds.labels().end());
    NoiseMask mask{std::vector<bool>(n, false)};
    std::uniform_int_distribution<int> other(0, ds.num_classes() - 2);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = order[k];
        const int draw = other(rng);
        labels[i] = draw >= labels[i] ? draw + 1 : draw;
        mask.flags[i] = true;
    }
    return {ds.with_labels(std::move(labels)), std::move(mask)};
}

TemporalSplit temporal_split(const TimedDataset& ds, double train_frac) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) {
        throw SplitError(fmt::format("train_frac {} outside (0, 1)", train_frac));
    }
    const std::size_t n = ds.size();
    const auto n_train = static_cast<std::size_t>(std::ceil(train_frac * static_cast<double>(n)));
    if (n < 2 || n_train == 0 || n_train >= n) {
        throw SplitError(fmt::format("train_frac {} on {} samples leaves an empty side", train_frac, n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ds.timestamp(a) < ds.timestamp(b);
    });
    std::span<const std::size_t> all(order);
    auto train = ds.subset(all.first(n_train));
    auto val = ds.subset(all.subspan(n_train));
    return {train.with_t_ref(train.max_timestamp()), val.with_t_ref(val.max_timestamp())};
}

std::vector<double> time_gaps(const TimedDataset& ds, std::optional<double> normalize_scale) {
    if (normalize_scale && !(*normalize_scale > 0.0)) {
        throw RangeError("normalize_scale must be positive");
    }
    std::vector<double> gaps(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        gaps[i] = std::max(0.0, ds.t_ref() - ds.timestamp(i));
        if (normalize_scale) gaps[i] /= *normalize_scale;
    }
    return gaps;
}

Standardizer Standardizer::fit(const TimedDataset& ds) {
    const std::size_t n = ds.size();
    const std::size_t d = ds.feature_dim();
    Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        auto r = ds.row(i);
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
    }
    for (auto& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = ds.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double c = r[j] - s.mean[j];
            s.scale[j] += c * c;
        }
    }
    for (auto& v : s.scale) {
        v = std::sqrt(v / static_cast<double>(n));
        if (!(v > 0.0)) v = 1.0;  // constant column
    }
    return s;
}

TimedDataset Standardizer::apply(const TimedDataset& ds) const {
    if (ds.feature_dim() != mean.size()) throw ShapeError("standardizer dimension mismatch");
    std::vector<double> feats(ds.features().begin(), ds.features().end());
    const std::size_t d = mean.size();
    for (std::size_t k = 0; k < feats.size(); ++k) {
        const std::size_t j = k % d;
        feats[k] = (feats[k] - mean[j]) / scale[j];
    }
    return ds.with_features(std::move(feats));
}

// --- CSV ----------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_cell(std::string_view cell, std::size_t row, const char* what) {
    cell = trim(cell);
    T value{};
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) {
        throw ParseError(fmt::format("non-numeric {} '{}'", what, cell), row);
    }
    return value;
}

}  // namespace

TimedDataset read_csv(std::istream& in, std::optional<double> t_ref_override) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("missing header row");
    auto header = split_commas(line);
    if (header.size() < 3 || trim(header[0]) != "timestamp" || trim(header[1]) != "label") {
        throw SchemaError("header must be timestamp,label,f0,...,f{d-1}");
    }
    const std::size_t d = header.size() - 2;
    for (std::size_t j = 0; j < d; ++j) {
        if (trim(header[j + 2]) != fmt::format("f{}", j)) {
            throw SchemaError(fmt::format("expected column f{} in header, found '{}'", j,
                                          trim(header[j + 2])));
        }
    }

    std::vector<double> feats;
    std::vector<std::int64_t> raw_labels;
    std::vector<double> times;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto cells = split_commas(line);
        if (cells.size() != d + 2) {
            throw SchemaError(fmt::format("row {} has {} columns, expected {}", row, cells.size(), d + 2));
        }
        times.push_back(parse_cell<double>(cells[0], row, "timestamp"));
        raw_labels.push_back(parse_cell<std::int64_t>(cells[1], row, "label"));
        for (std::size_t j = 0; j < d; ++j) feats.push_back(parse_cell<double>(cells[j + 2], row, "feature"));
    }
    if (raw_labels.empty()) throw SchemaError("no data rows");

    std::map<std::int64_t, int> dense;
    for (auto y : raw_labels) dense.emplace(y, 0);
    if (dense.size() < 2) throw DegenerateDatasetError("dataset has a single distinct label");
    std::vector<std::int64_t> label_values;
    for (auto& [value, index] : dense) {
        index = static_cast<int>(label_values.size());
        label_values.push_back(value);
    }
    std::vector<int> labels;
    labels.reserve(raw_labels.size());
    for (auto y : raw_labels) labels.push_back(dense.at(y));

    const int k = static_cast<int>(label_values.size());
    return TimedDataset(std::move(feats), std::move(labels), std::move(times), d, k, t_ref_override,
                        std::move(label_values));
}

TimedDataset load_csv(const std::filesystem::path& path, std::optional<double> t_ref_override) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_csv(in, t_ref_override);
}

void write_csv(std::ostream& out, const TimedDataset& ds) {
    std::string buf = "timestamp,label";
    for (std::size_t j = 0; j < ds.feature_dim(); ++j) fmt::format_to(std::back_inserter(buf), ",f{}", j);
    buf += '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        fmt::format_to(std::back_inserter(buf), "{:.17g},{}", ds.timestamp(i),
                       ds.label_values()[static_cast<std::size_t>(ds.label(i))]);
        for (double v : ds.row(i)) fmt::format_to(std::back_inserter(buf), ",{:.17g}", v);
        buf += '\n';
    }
    out << buf;
}

void save_csv(const TimedDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_csv(out, ds);
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace tdval
