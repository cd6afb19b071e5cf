#include "tdval/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "tdval/errors.hpp"

namespace tdval {

std::string to_string(Classifier c) {
    return c == Classifier::logistic_regression ? "logistic_regression" : "gaussian_nb";
}

std::string to_string(Metric m) {
    switch (m) {
        case Metric::accuracy: return "accuracy";
        case Metric::brier: return "brier";
        case Metric::cross_entropy: return "cross_entropy";
    }
    return "accuracy";
}

Classifier parse_classifier(const std::string& name) {
    if (name == "logistic_regression" || name == "lr") return Classifier::logistic_regression;
    if (name == "gaussian_nb" || name == "nb") return Classifier::gaussian_nb;
    throw ConfigError("unknown classifier '" + name + "' (expected logistic_regression|gaussian_nb)");
}

Metric parse_metric(const std::string& name) {
    if (name == "accuracy") return Metric::accuracy;
    if (name == "brier") return Metric::brier;
    if (name == "cross_entropy") return Metric::cross_entropy;
    throw ConfigError("unknown metric '" + name + "' (expected accuracy|brier|cross_entropy)");
}

void validate(const UtilitySpec& spec) {
    if (!(spec.lr.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (spec.lr.epochs <= 0) throw ConfigError("epochs must be positive");
    if (!(spec.lr.l2 >= 0.0)) throw ConfigError("l2 must be non-negative");
}

// --- logistic regression ------------------------------------------------------

namespace logistic {

Parameters Parameters::zeros(int classes, std::size_t dim) {
    Parameters p;
    p.classes = classes;
    p.dim = dim;
    p.weights.assign(p.rows() * dim, 0.0);
    p.bias.assign(p.rows(), 0.0);
    return p;
}

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// One pass over the data: fills `grad` (same layout as params) and, when
// requested, the regularized loss.
void gradient_pass(const Parameters& params, MatrixView X, std::span<const int> y, double l2,
                   Parameters& grad, double* loss_out) {
    const std::size_t n = X.rows;
    const std::size_t d = params.dim;
    std::fill(grad.weights.begin(), grad.weights.end(), 0.0);
    std::fill(grad.bias.begin(), grad.bias.end(), 0.0);
    double nll = 0.0;

    if (params.classes == 2) {
        const double* w = params.weights.data();
        double* gw = grad.weights.data();
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = X.data.data() + i * d;
            double z = params.bias[0];
            for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
            const double target = y[i] == 1 ? 1.0 : 0.0;
            const double err = sigmoid(z) - target;
            for (std::size_t j = 0; j < d; ++j) gw[j] += err * x[j];
            gb += err;
            if (loss_out) nll += softplus(z) - target * z;
        }
        grad.bias[0] = gb;
    } else {
        const std::size_t k = params.rows();
        std::vector<double> z(k);
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = X.data.data() + i * d;
            double zmax = -INFINITY;
            for (std::size_t c = 0; c < k; ++c) {
                double acc = params.bias[c];
                const double* w = params.weights.data() + c * d;
                for (std::size_t j = 0; j < d; ++j) acc += w[j] * x[j];
                z[c] = acc;
                zmax = std::max(zmax, acc);
            }
            double sum = 0.0;
            for (std::size_t c = 0; c < k; ++c) sum += std::exp(z[c] - zmax);
            const auto yi = static_cast<std::size_t>(y[i]);
            for (std::size_t c = 0; c < k; ++c) {
                const double err = std::exp(z[c] - zmax) / sum - (c == yi ? 1.0 : 0.0);
                double* gw = grad.weights.data() + c * d;
                for (std::size_t j = 0; j < d; ++j) gw[j] += err * x[j];
                grad.bias[c] += err;
            }
            if (loss_out) nll += zmax + std::log(sum) - z[yi];
        }
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t t = 0; t < grad.weights.size(); ++t) {
        grad.weights[t] = grad.weights[t] * inv_n + l2 * params.weights[t];
    }
    for (auto& b : grad.bias) b *= inv_n;
    if (loss_out) {
        double reg = 0.0;
        for (double w : params.weights) reg += w * w;
        *loss_out = nll * inv_n + 0.5 * l2 * reg;
    }
}

void check_shapes(const Parameters& params, MatrixView X, std::span<const int> y) {
    if (X.cols != params.dim) throw ShapeError("feature dimension does not match parameters");
    if (y.size() != X.rows || X.rows == 0) throw ShapeError("label count must equal row count (> 0)");
    for (int v : y) {
        if (v < 0 || v >= params.classes) throw ShapeError("label outside the parameter classes");
    }
}

}  // namespace

double loss(const Parameters& params, MatrixView X, std::span<const int> y, double l2) {
    check_shapes(params, X, y);
    Parameters grad = Parameters::zeros(params.classes, params.dim);
    double value = 0.0;
    gradient_pass(params, X, y, l2, grad, &value);
    return value;
}

Parameters gradient(const Parameters& params, MatrixView X, std::span<const int> y, double l2) {
    check_shapes(params, X, y);
    Parameters grad = Parameters::zeros(params.classes, params.dim);
    gradient_pass(params, X, y, l2, grad, nullptr);
    return grad;
}

Parameters train(MatrixView X, std::span<const int> y, int classes, const LogisticParams& opts,
                 std::vector<double>* loss_trace) {
    Parameters params = Parameters::zeros(classes, X.cols);
    check_shapes(params, X, y);
    Parameters grad = Parameters::zeros(classes, X.cols);
    if (loss_trace) loss_trace->clear();
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        double value = 0.0;
        gradient_pass(params, X, y, opts.l2, grad, loss_trace ? &value : nullptr);
        if (loss_trace) loss_trace->push_back(value);
        for (std::size_t t = 0; t < params.weights.size(); ++t) {
            params.weights[t] -= opts.learning_rate * grad.weights[t];
        }
        for (std::size_t c = 0; c < params.bias.size(); ++c) {
            params.bias[c] -= opts.learning_rate * grad.bias[c];
        }
    }
    if (loss_trace) loss_trace->push_back(loss(params, X, y, opts.l2));
    return params;
}

void probabilities(const Parameters& params, std::span<const double> x, std::span<double> out) {
    const std::size_t d = params.dim;
    if (params.classes == 2) {
        double z = params.bias[0];
        for (std::size_t j = 0; j < d; ++j) z += params.weights[j] * x[j];
        const double p1 = sigmoid(z);
        out[0] = 1.0 - p1;
        out[1] = p1;
        return;
    }
    const std::size_t k = params.rows();
    double zmax = -INFINITY;
    for (std::size_t c = 0; c < k; ++c) {
        double acc = params.bias[c];
        for (std::size_t j = 0; j < d; ++j) acc += params.weights[c * d + j] * x[j];
        out[c] = acc;
        zmax = std::max(zmax, acc);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        out[c] = std::exp(out[c] - zmax);
        sum += out[c];
    }
    for (std::size_t c = 0; c < k; ++c) out[c] /= sum;
}

}  // namespace logistic

// --- Gaussian naive Bayes -------------------------------------------------------

namespace {

GaussianNBParameters fit_nb(MatrixView X, std::span<const int> local_y, int classes) {
    const std::size_t d = X.cols;
    const auto k = static_cast<std::size_t>(classes);
    GaussianNBParameters p;
    std::vector<double> counts(k, 0.0);
    p.mean.assign(k * d, 0.0);
    p.variance.assign(k * d, 0.0);
    for (std::size_t i = 0; i < X.rows; ++i) {
        const auto c = static_cast<std::size_t>(local_y[i]);
        counts[c] += 1.0;
        auto x = X.row(i);
        for (std::size_t j = 0; j < d; ++j) p.mean[c * d + j] += x[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < d; ++j) p.mean[c * d + j] /= counts[c];
    }
    for (std::size_t i = 0; i < X.rows; ++i) {
        const auto c = static_cast<std::size_t>(local_y[i]);
        auto x = X.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double r = x[j] - p.mean[c * d + j];
            p.variance[c * d + j] += r * r;
        }
    }
    const double n = static_cast<double>(X.rows);
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < d; ++j) {
            auto& v = p.variance[c * d + j];
            v = std::max(v / counts[c], GaussianNBParameters::kVarianceFloor);
        }
        p.log_prior.push_back(std::log(counts[c] / n));
    }
    return p;
}

void nb_probabilities(const GaussianNBParameters& p, std::span<const double> x, std::span<double> out) {
    const std::size_t k = p.log_prior.size();
    const std::size_t d = x.size();
    double lmax = -INFINITY;
    for (std::size_t c = 0; c < k; ++c) {
        double ll = p.log_prior[c];
        for (std::size_t j = 0; j < d; ++j) {
            const double var = p.variance[c * d + j];
            const double r = x[j] - p.mean[c * d + j];
            ll -= 0.5 * (std::log(2.0 * std::numbers::pi * var) + r * r / var);
        }
        out[c] = ll;
        lmax = std::max(lmax, ll);
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        out[c] = std::exp(out[c] - lmax);
        sum += out[c];
    }
    for (std::size_t c = 0; c < k; ++c) out[c] /= sum;
}

}  // namespace

// --- FittedModel ----------------------------------------------------------------

FittedModel FittedModel::uniform_prior(Classifier kind, int num_classes, std::size_t feature_dim) {
    FittedModel m;
    m.kind_ = kind;
    m.state_ = State::prior;
    m.num_classes_ = num_classes;
    m.feature_dim_ = feature_dim;
    return m;
}

FittedModel fit(const UtilitySpec& spec, MatrixView X, std::span<const int> y, int num_classes) {
    if (num_classes < 2) throw SchemaError("num_classes must be at least 2");
    if (y.size() != X.rows) throw ShapeError("label count must equal row count");
    FittedModel m = FittedModel::uniform_prior(spec.classifier, num_classes, X.cols);
    if (X.rows == 0) return m;

    std::vector<int> local(static_cast<std::size_t>(num_classes), -1);
    for (int v : y) {
        if (v < 0 || v >= num_classes) throw ShapeError(fmt::format("label {} out of range", v));
        local[static_cast<std::size_t>(v)] = 0;
    }
    for (int c = 0; c < num_classes; ++c) {
        if (local[static_cast<std::size_t>(c)] == 0) {
            local[static_cast<std::size_t>(c)] = static_cast<int>(m.classes_seen_.size());
            m.classes_seen_.push_back(c);
        }
    }
    if (m.classes_seen_.size() == 1) {
        m.state_ = FittedModel::State::single_class;
        return m;
    }

    std::vector<int> local_y(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) local_y[i] = local[static_cast<std::size_t>(y[i])];
    const int present = static_cast<int>(m.classes_seen_.size());
    m.state_ = FittedModel::State::trained;
    m.absent_mass_ = present < num_classes
                         ? 1.0 / static_cast<double>(X.rows + static_cast<std::size_t>(num_classes))
                         : 0.0;
    if (spec.classifier == Classifier::logistic_regression) {
        m.logistic_ = logistic::train(X, local_y, present, spec.lr);
    } else {
        m.nb_ = fit_nb(X, local_y, present);
    }
    return m;
}

FittedModel fit(const UtilitySpec& spec, const TimedDataset& train, int num_classes) {
    return fit(spec, features_of(train), train.labels(), num_classes);
}

ProbabilityMatrix FittedModel::predict_proba(MatrixView X) const {
    if (X.cols != feature_dim_) {
        throw ShapeError(fmt::format("model expects {} features, got {}", feature_dim_, X.cols));
    }
    const auto k = static_cast<std::size_t>(num_classes_);
    ProbabilityMatrix out(X.rows, k);
    if (state_ == State::prior) {
        std::fill(out.values.begin(), out.values.end(), 1.0 / static_cast<double>(k));
        return out;
    }
    if (state_ == State::single_class) {
        const auto c = static_cast<std::size_t>(classes_seen_.front());
        for (std::size_t i = 0; i < X.rows; ++i) out.values[i * k + c] = 1.0;
        return out;
    }

    const std::size_t present = classes_seen_.size();
    const double present_share = 1.0 - absent_mass_ * static_cast<double>(k - present);
    std::vector<double> local(present);
    for (std::size_t i = 0; i < X.rows; ++i) {
        if (kind_ == Classifier::logistic_regression) {
            logistic::probabilities(logistic_, X.row(i), local);
        } else {
            nb_probabilities(nb_, X.row(i), local);
        }
        double* row = out.values.data() + i * k;
        if (present < k) std::fill(row, row + k, absent_mass_);
        for (std::size_t c = 0; c < present; ++c) {
            row[static_cast<std::size_t>(classes_seen_[c])] = local[c] * present_share;
        }
    }
    return out;
}

// --- metrics ------------------------------------------------------------------------

namespace {

void check_metric_inputs(const ProbabilityMatrix& probs, std::span<const int> y) {
    if (probs.rows == 0 || y.empty()) throw UndefinedMetricError("metric of an empty prediction set");
    if (probs.rows != y.size()) throw ShapeError("probability rows must equal label count");
    for (int v : y) {
        if (v < 0 || static_cast<std::size_t>(v) >= probs.cols) throw ShapeError("label outside probability columns");
    }
}

}  // namespace

double accuracy(const ProbabilityMatrix& probs, std::span<const int> y) {
    check_metric_inputs(probs, y);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        auto row = probs.row(i);
        // max_element returns the first maximum, i.e. the lowest class on ties.
        auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        if (best == y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(probs.rows);
}

double brier(const ProbabilityMatrix& probs, std::span<const int> y) {
    check_metric_inputs(probs, y);
    double total = 0.0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        auto row = probs.row(i);
        for (std::size_t c = 0; c < probs.cols; ++c) {
            const double r = row[c] - (static_cast<int>(c) == y[i] ? 1.0 : 0.0);
            total += r * r;
        }
    }
    return total / static_cast<double>(probs.rows);
}

double cross_entropy(const ProbabilityMatrix& probs, std::span<const int> y) {
    check_metric_inputs(probs, y);
    double total = 0.0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const double p = std::clamp(probs(i, static_cast<std::size_t>(y[i])), 1e-12, 1.0);
        total -= std::log(p);
    }
    return total / static_cast<double>(probs.rows);
}

double score(Metric metric, const ProbabilityMatrix& probs, std::span<const int> y) {
    switch (metric) {
        case Metric::accuracy: return accuracy(probs, y);
        case Metric::brier: return brier(probs, y);
        case Metric::cross_entropy: return cross_entropy(probs, y);
    }
    return accuracy(probs, y);
}

double as_utility(Metric metric, double raw) { return metric == Metric::accuracy ? raw : -raw; }

double utility(const UtilitySpec& spec, const TimedDataset& subset, const TimedDataset& val) {
    auto model = fit(spec, subset, val.num_classes());
    return as_utility(spec.metric, score(spec.metric, model.predict_proba(features_of(val)), val.labels()));
}

double utility(const UtilitySpec& spec, const TimedDataset& train,
               std::span<const std::size_t> indices, const TimedDataset& val) {
    const std::size_t d = train.feature_dim();
    std::vector<double> X(indices.size() * d);
    std::vector<int> y(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        auto row = train.row(indices[r]);
        std::copy(row.begin(), row.end(), X.begin() + static_cast<std::ptrdiff_t>(r * d));
        y[r] = train.label(indices[r]);
    }
    auto model = fit(spec, MatrixView{X, indices.size(), d}, y, val.num_classes());
    return as_utility(spec.metric, score(spec.metric, model.predict_proba(features_of(val)), val.labels()));
}

}  // namespace tdval
