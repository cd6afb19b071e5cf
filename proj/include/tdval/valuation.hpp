#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tdval/dataset.hpp"
#include "tdval/matrix.hpp"
#include "tdval/models.hpp"

namespace tdval {

/// Valuation methods. `random` and `noise_oracle` are reference scorers for
/// the benchmarks: seeded uniform noise, and the negated ground-truth noise
/// mask (only meaningful inside the noise benchmark).
enum class Method { loo, tmc, beta, tds, tds_improved, ms_tds, random, noise_oracle };

std::string to_string(Method m);
Method parse_method(const std::string& name);
/// Comma-separated list of accepted method names.
std::string valid_method_names();

struct BetaParams {
    double a = 1.0;
    double b = 1.0;
    friend bool operator==(const BetaParams&, const BetaParams&) = default;
};

struct ValuationConfig {
    Method method = Method::tmc;
    double lambda = 1.0;               // decay coefficient
    double p = 1.0;                    // power of the gap in the improved decay
    double alpha = 1.0;                // post-scale of improved TDS
    std::vector<double> scales;        // multi-scale granularities tau_k
    double epsilon = 1e-6;             // fusion stabilizer
    std::size_t num_permutations = 200;
    std::uint64_t seed = 0;
    double truncation_tol = 0.0;       // 0 disables TMC truncation
    BetaParams beta;
    std::optional<double> normalize_scale;  // explicit T_ref for gap normalization
    bool normalize_by_max_gap = false;      // T_ref = largest training gap
    bool share_scale_seeds = false;         // every scale reuses `seed`

    friend bool operator==(const ValuationConfig&, const ValuationConfig&) = default;
};

void validate(const ValuationConfig& config);

struct ValuationScores {
    std::vector<double> values;
    ValuationConfig config;
    std::uint64_t permutations_used = 0;
    std::optional<DenseMatrix> per_scale;  // N x K, multi-scale only
};

/// exp(-lambda * dt)
double decay_weight_exp(double dt, double lambda);
/// exp(-lambda * dt^p); p == 1 is bit-identical to decay_weight_exp.
double decay_weight_power(double dt, double lambda, double p);
/// lambda / tau_k for each scale, in input order.
std::vector<double> scale_decay_rates(double lambda, std::span<const double> scales);

/// Cardinality weights omega(s), s = |S| in [0, n). omega(0) = 0 because the
/// first element of a permutation is never credited; the rest follow the
/// Beta(a, b) semivalue reweighting and sum to n - 1. a = b = 1 gives all
/// ones exactly.
std::vector<double> beta_cardinality_weights(std::size_t n, BetaParams params);

/// U(S) for S given as training indices. Implementations must be safe to
/// call concurrently.
using SubsetUtility = std::function<double(std::span<const std::size_t>)>;

SubsetUtility make_subset_utility(const UtilitySpec& spec, const TimedDataset& train,
                                  const TimedDataset& val);

struct PermutationOptions {
    std::size_t num_permutations = 200;
    std::uint64_t seed = 0;
    double truncation_tol = 0.0;
    std::vector<double> cardinality_weights;  // empty = all ones
    unsigned jobs = 0;                         // 0 = logical CPU count
};

/// Weighted permutation sampler. For every permutation the growing prefix is
/// scored; the first element earns nothing and each later element i earns
/// weights[i] * omega(|S|) * (U(S + i) - U(S)). Returns the mean over
/// permutations. Permutation m draws from its own stream seeded by
/// (seed, m) and contributions are summed in ascending m, so the output does
/// not depend on `jobs`.
///
/// With truncation_tol > 0 a permutation stops once |U(prefix) - U(all)| <
/// truncation_tol held for 3 consecutive steps.
std::vector<double> permutation_values(std::size_t n, const SubsetUtility& utility,
                                       std::span<const double> weights,
                                       const PermutationOptions& options);

/// The permutation of [0, n) used for permutation number m.
std::vector<std::size_t> sample_permutation(std::size_t n, std::uint64_t seed, std::uint64_t m);

ValuationScores permutation_valuation(const TimedDataset& train, const TimedDataset& val,
                                      const UtilitySpec& spec, std::span<const double> weights,
                                      std::size_t num_permutations, std::uint64_t seed,
                                      double truncation_tol, unsigned jobs = 0);

/// Time gaps used by the temporal methods, after the configured normalization.
std::vector<double> valuation_gaps(const TimedDataset& train, const ValuationConfig& config);

ValuationScores tmc_shapley(const TimedDataset& train, const TimedDataset& val,
                            const UtilitySpec& spec, const ValuationConfig& config, unsigned jobs = 0);
ValuationScores beta_shapley(const TimedDataset& train, const TimedDataset& val,
                             const UtilitySpec& spec, const ValuationConfig& config, unsigned jobs = 0);
ValuationScores tds(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                    const ValuationConfig& config, unsigned jobs = 0);
ValuationScores tds_improved(const TimedDataset& train, const TimedDataset& val,
                             const UtilitySpec& spec, const ValuationConfig& config, unsigned jobs = 0);
ValuationScores ms_tds(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                       const ValuationConfig& config, unsigned jobs = 0);
ValuationScores loo(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                    const ValuationConfig& config, unsigned jobs = 0);
ValuationScores random_scores(const TimedDataset& train, const ValuationConfig& config);

/// Inverse-variance fusion of an N x K matrix of per-scale values:
/// a_i = 1 / (Var_K(row_i) + epsilon), output_i = a_i * sum(row_i).
std::vector<double> fuse_multiscale(const DenseMatrix& phi, double epsilon);

/// Dispatches on config.method. `noise_oracle` is rejected here; it needs
/// the ground-truth mask and lives in the noise benchmark.
ValuationScores value(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                      const ValuationConfig& config, unsigned jobs = 0);

struct ExactShapley {
    std::vector<double> values;                // classical Shapley values
    std::vector<double> first_credit_dropped;  // same sum without the S = {} terms
    double full_utility = 0.0;
    double empty_utility = 0.0;
    std::uint64_t permutations = 0;            // n!
};

inline constexpr std::size_t kExactShapleyCap = 12;

/// Exact Shapley values by enumerating all 2^n subsets (each utility
/// evaluated once). Throws SizeError above kExactShapleyCap.
ExactShapley exact_shapley(std::size_t n, const SubsetUtility& utility, unsigned jobs = 0);
ExactShapley exact_shapley(const TimedDataset& train, const TimedDataset& val,
                           const UtilitySpec& spec, unsigned jobs = 0);

/// Indices sorted by value, highest first; ties keep the lower index first.
std::vector<std::size_t> argsort_descending(std::span<const double> values);

/// `index,timestamp,value[,scale_0..scale_{K-1}]`, full precision.
void write_scores_csv(std::ostream& out, const TimedDataset& train, const ValuationScores& scores);

}  // namespace tdval
