#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tdval/dataset.hpp"
#include "tdval/matrix.hpp"

namespace tdval {

enum class Classifier { logistic_regression, gaussian_nb };
enum class Metric { accuracy, brier, cross_entropy };

std::string to_string(Classifier c);
std::string to_string(Metric m);
Classifier parse_classifier(const std::string& name);
Metric parse_metric(const std::string& name);

struct LogisticParams {
    double learning_rate = 0.1;
    int epochs = 100;
    double l2 = 1e-3;
};

/// Defines U(S): which learner is trained on S and how it is scored on the
/// validation set.
struct UtilitySpec {
    Classifier classifier = Classifier::logistic_regression;
    Metric metric = Metric::accuracy;
    LogisticParams lr;
};

void validate(const UtilitySpec& spec);

inline MatrixView features_of(const TimedDataset& ds) {
    return {ds.features(), ds.size(), ds.feature_dim()};
}

using ProbabilityMatrix = DenseMatrix;

/// Multinomial logistic regression internals. Binary problems use a single
/// sigmoid row; K > 2 classes use K softmax rows. Labels are local indices
/// in [0, classes).
namespace logistic {

struct Parameters {
    int classes = 2;
    std::size_t dim = 0;
    std::vector<double> weights;  // rows() x dim
    std::vector<double> bias;     // rows()

    std::size_t rows() const noexcept { return classes == 2 ? 1 : static_cast<std::size_t>(classes); }
    static Parameters zeros(int classes, std::size_t dim);
    friend bool operator==(const Parameters&, const Parameters&) = default;
};

/// Mean negative log-likelihood plus (l2 / 2) * ||W||^2; the bias is not
/// penalized.
double loss(const Parameters& params, MatrixView X, std::span<const int> y, double l2);
Parameters gradient(const Parameters& params, MatrixView X, std::span<const int> y, double l2);

/// Full-batch gradient descent from zero weights. When `loss_trace` is
/// given it receives the loss before every epoch and after the last one.
Parameters train(MatrixView X, std::span<const int> y, int classes, const LogisticParams& opts,
                 std::vector<double>* loss_trace = nullptr);

/// Class probabilities for one row, written to `out` (length `classes`).
void probabilities(const Parameters& params, std::span<const double> x, std::span<double> out);

}  // namespace logistic

struct GaussianNBParameters {
    std::vector<double> log_prior;  // per present class
    std::vector<double> mean;       // present x dim
    std::vector<double> variance;   // present x dim, floored

    static constexpr double kVarianceFloor = 1e-9;
    friend bool operator==(const GaussianNBParameters&, const GaussianNBParameters&) = default;
};

/// A trained classifier over `num_classes` dense labels.
///
/// Only the classes present in the training data are modelled. With two or
/// more present classes, each absent class gets the Laplace-smoothed prior
/// 1 / (n + num_classes) and the modelled probabilities share the rest. A
/// single present class yields a one-hot predictor; an empty training set
/// yields the uniform prior predictor.
class FittedModel {
public:
    enum class State { prior, single_class, trained };

    static FittedModel uniform_prior(Classifier kind, int num_classes, std::size_t feature_dim);

    Classifier kind() const noexcept { return kind_; }
    State state() const noexcept { return state_; }
    int num_classes() const noexcept { return num_classes_; }
    std::size_t feature_dim() const noexcept { return feature_dim_; }
    const std::vector<int>& classes_seen() const noexcept { return classes_seen_; }
    const logistic::Parameters& logistic_parameters() const noexcept { return logistic_; }
    const GaussianNBParameters& nb_parameters() const noexcept { return nb_; }

    ProbabilityMatrix predict_proba(MatrixView X) const;

    friend bool operator==(const FittedModel&, const FittedModel&) = default;

private:
    friend FittedModel fit(const UtilitySpec&, MatrixView, std::span<const int>, int);

    Classifier kind_ = Classifier::logistic_regression;
    State state_ = State::prior;
    int num_classes_ = 2;
    std::size_t feature_dim_ = 0;
    std::vector<int> classes_seen_;
    double absent_mass_ = 0.0;  // probability given to each unseen class
    logistic::Parameters logistic_;
    GaussianNBParameters nb_;
};

FittedModel fit(const UtilitySpec& spec, MatrixView X, std::span<const int> y, int num_classes);
FittedModel fit(const UtilitySpec& spec, const TimedDataset& train, int num_classes);

/// Fraction of rows whose argmax (ties to the lowest class) equals the label.
double accuracy(const ProbabilityMatrix& probs, std::span<const int> y);
/// Mean squared distance to the one-hot label; lower is better.
double brier(const ProbabilityMatrix& probs, std::span<const int> y);
/// Mean -log p_y with probabilities clipped to [1e-12, 1]; lower is better.
double cross_entropy(const ProbabilityMatrix& probs, std::span<const int> y);

double score(Metric metric, const ProbabilityMatrix& probs, std::span<const int> y);
/// Maps a raw metric to larger-is-better form (Brier and CE are negated).
double as_utility(Metric metric, double raw);

double utility(const UtilitySpec& spec, const TimedDataset& subset, const TimedDataset& val);
/// U(S) for S = rows of `train` at `indices`; an empty S scores the uniform
/// prior predictor.
double utility(const UtilitySpec& spec, const TimedDataset& train,
               std::span<const std::size_t> indices, const TimedDataset& val);

}  // namespace tdval
