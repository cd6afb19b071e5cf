#include "tdval/valuation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "tdval/errors.hpp"
#include "tdval/parallel.hpp"

namespace tdval {

namespace {

struct MethodName {
    Method method;
    const char* name;
};

constexpr MethodName kMethodNames[] = {
    {Method::loo, "loo"},
    {Method::tmc, "tmc"},
    {Method::beta, "beta"},
    {Method::tds, "tds"},
    {Method::tds_improved, "tds_improved"},
    {Method::ms_tds, "ms_tds"},
    {Method::random, "random"},
    {Method::noise_oracle, "noise_oracle"},
};

bool is_permutation_method(Method m) {
    return m == Method::tmc || m == Method::beta || m == Method::tds || m == Method::tds_improved ||
           m == Method::ms_tds;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), tag};
    return std::mt19937_64(seq);
}

constexpr std::uint32_t kPermutationTag = 0x7065726dU;
constexpr std::uint32_t kRandomScoreTag = 0x72616e64U;

}  // namespace

std::string to_string(Method m) {
    for (const auto& entry : kMethodNames) {
        if (entry.method == m) return entry.name;
    }
    return "unknown";
}

std::string valid_method_names() {
    std::string out;
    for (const auto& entry : kMethodNames) {
        if (!out.empty()) out += ", ";
        out += entry.name;
    }
    return out;
}

Method parse_method(const std::string& name) {
    for (const auto& entry : kMethodNames) {
        if (name == entry.name) return entry.method;
    }
    throw ConfigError("unknown method '" + name + "'; valid methods: " + valid_method_names());
}

void validate(const ValuationConfig& config) {
    if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) throw RangeError("lambda must be a non-negative real");
    if (!(config.p > 0.0)) throw RangeError("p must be positive");
    if (!(config.alpha > 0.0)) throw RangeError("alpha must be positive");
    if (!(config.epsilon > 0.0)) throw RangeError("epsilon must be positive");
    if (!(config.truncation_tol >= 0.0)) throw RangeError("truncation_tol must be non-negative");
    if (!(config.beta.a > 0.0) || !(config.beta.b > 0.0)) throw RangeError("beta parameters must be positive");
    if (config.normalize_scale && !(*config.normalize_scale > 0.0)) {
        throw RangeError("normalize_scale must be positive");
    }
    for (double tau : config.scales) {
        if (!(tau > 0.0)) throw RangeError("scales must be positive");
    }
    if (is_permutation_method(config.method) && config.num_permutations == 0) {
        throw ConfigError("num_permutations must be at least 1");
    }
    if (config.method == Method::ms_tds && config.scales.empty()) {
        throw ConfigError("scales required for ms_tds");
    }
}

// --- temporal weights -----------------------------------------------------------

double decay_weight_exp(double dt, double lambda) {
    if (!(dt >= 0.0)) throw RangeError(fmt::format("time gap {} is negative", dt));
    return std::exp(-lambda * dt);
}

double decay_weight_power(double dt, double lambda, double p) {
    if (!(p > 0.0)) throw RangeError("power p must be positive");
    if (!(dt >= 0.0)) throw RangeError(fmt::format("time gap {} is negative", dt));
    const double shaped = p == 1.0 ? dt : std::pow(dt, p);
    return std::exp(-lambda * shaped);
}

std::vector<double> scale_decay_rates(double lambda, std::span<const double> scales) {
    std::vector<double> rates;
    rates.reserve(scales.size());
    for (double tau : scales) {
        if (!(tau > 0.0)) throw RangeError(fmt::format("scale {} must be positive", tau));
        rates.push_back(lambda / tau);
    }
    return rates;
}

std::vector<double> beta_cardinality_weights(std::size_t n, BetaParams params) {
    if (!(params.a > 0.0) || !(params.b > 0.0)) throw RangeError("beta parameters must be positive");
    std::vector<double> omega(n, 0.0);
    if (n <= 1) return omega;
    if (params.a == 1.0 && params.b == 1.0) {
        std::fill(omega.begin() + 1, omega.end(), 1.0);
        return omega;
    }
    // omega(s) is proportional to C(n-1, s) * B(s + a, n - 1 - s + b): the
    // Beta semivalue's per-subset weight times the number of subsets of size s.
    const auto nd = static_cast<double>(n);
    auto lbeta = [](double x, double y) { return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y); };
    std::vector<double> logw(n, -INFINITY);
    double top = -INFINITY;
    for (std::size_t s = 1; s < n; ++s) {
        const auto sd = static_cast<double>(s);
        logw[s] = std::lgamma(nd) - std::lgamma(sd + 1.0) - std::lgamma(nd - sd) +
                  lbeta(sd + params.a, nd - 1.0 - sd + params.b);
        top = std::max(top, logw[s]);
    }
    double total = 0.0;
    for (std::size_t s = 1; s < n; ++s) {
        omega[s] = std::exp(logw[s] - top);
        total += omega[s];
    }
    for (std::size_t s = 1; s < n; ++s) omega[s] *= (nd - 1.0) / total;
    return omega;
}

// --- permutation backbone ---------------------------------------------------------

SubsetUtility make_subset_utility(const UtilitySpec& spec, const TimedDataset& train,
                                  const TimedDataset& val) {
    return [&spec, &train, &val](std::span<const std::size_t> indices) {
        return utility(spec, train, indices, val);
    };
}

std::vector<std::size_t> sample_permutation(std::size_t n, std::uint64_t seed, std::uint64_t m) {
    auto rng = make_rng(seed, m, kPermutationTag);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

std::vector<double> permutation_values(std::size_t n, const SubsetUtility& utility,
                                       std::span<const double> weights,
                                       const PermutationOptions& options) {
    if (weights.size() != n) {
        throw ShapeError(fmt::format("weight vector has length {}, expected {}", weights.size(), n));
    }
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw RangeError("weights must be finite and non-negative");
    }
    if (options.num_permutations == 0) throw ConfigError("num_permutations must be at least 1");
    if (!options.cardinality_weights.empty() && options.cardinality_weights.size() != n) {
        throw ShapeError("cardinality weights must have one entry per prefix size");
    }
    if (!(options.truncation_tol >= 0.0)) throw RangeError("truncation_tol must be non-negative");

    const std::size_t M = options.num_permutations;
    const bool truncate = options.truncation_tol > 0.0;
    double full_utility = 0.0;
    if (truncate) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        full_utility = utility(all);
    }
    constexpr int kTruncationPatience = 3;

    DenseMatrix credit(M, n, 0.0);
    parallel_for(M, options.jobs, [&](std::size_t m) {
        const auto perm = sample_permutation(n, options.seed, m);
        const std::span<const std::size_t> order(perm);
        double prev = 0.0;
        int streak = 0;
        for (std::size_t pos = 0; pos < n; ++pos) {
            const double curr = utility(order.first(pos + 1));
            if (pos > 0) {
                double delta = curr - prev;
                if (!options.cardinality_weights.empty()) delta *= options.cardinality_weights[pos];
                credit(m, perm[pos]) = delta;
            }
            prev = curr;
            if (truncate) {
                streak = std::abs(curr - full_utility) < options.truncation_tol ? streak + 1 : 0;
                if (streak >= kTruncationPatience) break;
            }
        }
    });

    std::vector<double> phi(n, 0.0);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t i = 0; i < n; ++i) phi[i] += weights[i] * credit(m, i);
    }
    const auto denom = static_cast<double>(M);
    for (auto& v : phi) v /= denom;
    return phi;
}

ValuationScores permutation_valuation(const TimedDataset& train, const TimedDataset& val,
                                      const UtilitySpec& spec, std::span<const double> weights,
                                      std::size_t num_permutations, std::uint64_t seed,
                                      double truncation_tol, unsigned jobs) {
    PermutationOptions options;
    options.num_permutations = num_permutations;
    options.seed = seed;
    options.truncation_tol = truncation_tol;
    options.jobs = jobs;
    ValuationScores scores;
    scores.values = permutation_values(train.size(), make_subset_utility(spec, train, val), weights, options);
    scores.config.num_permutations = num_permutations;
    scores.config.seed = seed;
    scores.config.truncation_tol = truncation_tol;
    scores.permutations_used = num_permutations;
    return scores;
}

std::vector<double> valuation_gaps(const TimedDataset& train, const ValuationConfig& config) {
    std::optional<double> scale = config.normalize_scale;
    if (!scale && config.normalize_by_max_gap) {
        const auto raw = time_gaps(train);
        const double largest = *std::max_element(raw.begin(), raw.end());
        if (largest > 0.0) scale = largest;
    }
    return time_gaps(train, scale);
}

// --- methods ----------------------------------------------------------------------

namespace {

ValuationScores run_weighted(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                             const ValuationConfig& config, std::span<const double> weights,
                             std::vector<double> cardinality_weights, unsigned jobs) {
    validate(config);
    PermutationOptions options;
    options.num_permutations = config.num_permutations;
    options.seed = config.seed;
    options.truncation_tol = config.truncation_tol;
    options.cardinality_weights = std::move(cardinality_weights);
    options.jobs = jobs;
    ValuationScores scores;
    scores.values = permutation_values(train.size(), make_subset_utility(spec, train, val), weights, options);
    scores.config = config;
    scores.permutations_used = config.num_permutations;
    return scores;
}

}  // namespace

ValuationScores tmc_shapley(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                            const ValuationConfig& config, unsigned jobs) {
    const std::vector<double> ones(train.size(), 1.0);
    return run_weighted(train, val, spec, config, ones, {}, jobs);
}

ValuationScores beta_shapley(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                             const ValuationConfig& config, unsigned jobs) {
    const std::vector<double> ones(train.size(), 1.0);
    return run_weighted(train, val, spec, config, ones,
                        beta_cardinality_weights(train.size(), config.beta), jobs);
}

ValuationScores tds(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                    const ValuationConfig& config, unsigned jobs) {
    validate(config);
    auto weights = valuation_gaps(train, config);
    for (auto& w : weights) w = decay_weight_exp(w, config.lambda);
    return run_weighted(train, val, spec, config, weights, {}, jobs);
}

ValuationScores tds_improved(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                             const ValuationConfig& config, unsigned jobs) {
    validate(config);
    auto weights = valuation_gaps(train, config);
    for (auto& w : weights) w = decay_weight_power(w, config.lambda, config.p);
    auto scores = run_weighted(train, val, spec, config, weights, {}, jobs);
    for (auto& v : scores.values) v = config.alpha * v;
    return scores;
}

ValuationScores ms_tds(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                       const ValuationConfig& config, unsigned jobs) {
    validate(config);
    if (config.scales.empty()) throw ConfigError("scales required for ms_tds");
    const auto rates = scale_decay_rates(config.lambda, config.scales);
    const std::size_t n = train.size();
    const std::size_t k = rates.size();
    DenseMatrix phi(n, k);
    for (std::size_t s = 0; s < k; ++s) {
        ValuationConfig scale_config = config;
        scale_config.method = Method::tds_improved;
        scale_config.lambda = rates[s];
        scale_config.alpha = 1.0;
        scale_config.scales.clear();
        scale_config.seed = config.share_scale_seeds ? config.seed : config.seed + s;
        const auto column = tds_improved(train, val, spec, scale_config, jobs);
        for (std::size_t i = 0; i < n; ++i) phi(i, s) = column.values[i];
    }
    ValuationScores scores;
    scores.values = fuse_multiscale(phi, config.epsilon);
    scores.config = config;
    scores.permutations_used = config.num_permutations;
    scores.per_scale = std::move(phi);
    return scores;
}

std::vector<double> fuse_multiscale(const DenseMatrix& phi, double epsilon) {
    if (phi.rows == 0 || phi.cols == 0) throw ShapeError("multi-scale matrix is empty");
    if (!(epsilon > 0.0)) throw RangeError("epsilon must be positive");
    const auto k = static_cast<double>(phi.cols);
    std::vector<double> fused(phi.rows);
    for (std::size_t i = 0; i < phi.rows; ++i) {
        auto row = phi.row(i);
        double sum = 0.0;
        for (double v : row) sum += v;
        const double mean = sum / k;
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        var /= k;
        fused[i] = sum / (var + epsilon);
    }
    return fused;
}

ValuationScores loo(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                    const ValuationConfig& config, unsigned jobs) {
    const std::size_t n = train.size();
    if (n < 2) throw SizeError("leave-one-out needs at least 2 samples");
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const double full = utility(spec, train, all, val);
    std::vector<double> values(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        std::vector<std::size_t> rest;
        rest.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) rest.push_back(j);
        }
        values[i] = full - utility(spec, train, rest, val);
    });
    ValuationScores scores;
    scores.values = std::move(values);
    scores.config = config;
    scores.permutations_used = 0;
    return scores;
}

ValuationScores random_scores(const TimedDataset& train, const ValuationConfig& config) {
    auto rng = make_rng(config.seed, 0, kRandomScoreTag);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ValuationScores scores;
    scores.values.resize(train.size());
    for (auto& v : scores.values) v = unit(rng);
    scores.config = config;
    return scores;
}

ValuationScores value(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                      const ValuationConfig& config, unsigned jobs) {
    validate(config);
    switch (config.method) {
        case Method::loo: return loo(train, val, spec, config, jobs);
        case Method::tmc: return tmc_shapley(train, val, spec, config, jobs);
        case Method::beta: return beta_shapley(train, val, spec, config, jobs);
        case Method::tds: return tds(train, val, spec, config, jobs);
        case Method::tds_improved: return tds_improved(train, val, spec, config, jobs);
        case Method::ms_tds: return ms_tds(train, val, spec, config, jobs);
        case Method::random: return random_scores(train, config);
        case Method::noise_oracle: break;
    }
    throw ConfigError("noise_oracle needs the injected noise mask and only runs in the noise benchmark");
}

// --- exact oracle -------------------------------------------------------------------

ExactShapley exact_shapley(std::size_t n, const SubsetUtility& utility, unsigned jobs) {
    if (n == 0) throw SizeError("exact Shapley needs at least one player");
    if (n > kExactShapleyCap) {
        throw SizeError(fmt::format("exact Shapley is capped at N <= {} (got N = {})", kExactShapleyCap, n));
    }
    const std::size_t subsets = std::size_t{1} << n;
    std::vector<double> table(subsets);
    parallel_for(subsets, jobs, [&](std::size_t mask) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask & (std::size_t{1} << i)) members.push_back(i);
        }
        table[mask] = utility(members);
    });

    // |S|! (n - |S| - 1)! / n! for each coalition size.
    std::vector<double> coef(n);
    for (std::size_t s = 0; s < n; ++s) {
        coef[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) +
                           std::lgamma(static_cast<double>(n - s)) -
                           std::lgamma(static_cast<double>(n) + 1.0));
    }

    ExactShapley out;
    out.values.assign(n, 0.0);
    out.first_credit_dropped.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        for (std::size_t mask = 0; mask < subsets; ++mask) {
            if (mask & bit) continue;
            const double term = coef[static_cast<std::size_t>(std::popcount(mask))] *
                                (table[mask | bit] - table[mask]);
            out.values[i] += term;
            if (mask != 0) out.first_credit_dropped[i] += term;
        }
    }
    out.full_utility = table[subsets - 1];
    out.empty_utility = table[0];
    out.permutations = 1;
    for (std::size_t k = 2; k <= n; ++k) out.permutations *= k;
    return out;
}

ExactShapley exact_shapley(const TimedDataset& train, const TimedDataset& val, const UtilitySpec& spec,
                           unsigned jobs) {
    return exact_shapley(train.size(), make_subset_utility(spec, train, val), jobs);
}

std::vector<std::size_t> argsort_descending(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return order;
}

void write_scores_csv(std::ostream& out, const TimedDataset& train, const ValuationScores& scores) {
    if (scores.values.size() != train.size()) throw ShapeError("one score per training sample required");
    const std::size_t k = scores.per_scale ? scores.per_scale->cols : 0;
    std::string buf = "index,timestamp,value";
    for (std::size_t s = 0; s < k; ++s) fmt::format_to(std::back_inserter(buf), ",scale_{}", s);
    buf += '\n';
    for (std::size_t i = 0; i < train.size(); ++i) {
        fmt::format_to(std::back_inserter(buf), "{},{:.17g},{:.17g}", i, train.timestamp(i), scores.values[i]);
        for (std::size_t s = 0; s < k; ++s) fmt::format_to(std::back_inserter(buf), ",{:.17g}", (*scores.per_scale)(i, s));
        buf += '\n';
    }
    out << buf;
}

}  // namespace tdval
