#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "posid/estimator.hpp"

namespace posid {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    int points = 1;  ///< grid resolution; ignored by random search
};

struct HyperparamSpace {
    KernelKind kernel = KernelKind::TC;
    /// FIR baselines have no dominant pole; then rho is neither searched nor coupled to beta.
    bool with_rho = true;
    Range rho{0.5, 0.99, 10};
    Range lambda{1e-6, 1e2, 9};  ///< log-spaced
    Range beta{0.5, 0.99, 10};
    Range gamma{-0.9, 0.9, 7};   ///< DC only

    void validate() const;
};

struct Hyperparams {
    KernelKind kind = KernelKind::TC;
    double rho = 0.0;
    double lambda = 1.0;
    double beta = 0.8;
    double gamma = 0.0;

    KernelSpec kernel() const;
};

/// sqrt(beta) < rho for TC/DC and beta^1.5 < rho for SS.
bool satisfies_coupling(KernelKind kind, double rho, double beta);

/// Disjoint sample-index sets.
struct SplitSpec {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;

    /// First round(fraction * n) samples train, the rest validate.
    static SplitSpec temporal(std::size_t n, double fraction = 0.7);
    void validate(std::size_t n) const;
};

enum class SearchStrategy { Grid, Random };
SearchStrategy search_strategy_from_string(const std::string& name);

struct TuneOptions {
    SearchStrategy strategy = SearchStrategy::Grid;
    /// Number of random candidates; the grid strategy evaluates every admissible grid point.
    int budget = 20;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    /// Compass-search rounds started from the best candidate, in coordinates
    /// scaled to the unit box (lambda on a log scale). 0 disables refinement.
    int refine_iterations = 0;
};

struct TuneEntry {
    Hyperparams theta;
    double score = 0.0;
    std::string diagnostic;  ///< set when the candidate failed
};

struct TuneResult {
    Hyperparams best;
    double score = 0.0;
    std::vector<TuneEntry> trace;  ///< evaluation order
};

/// Candidates in evaluation order; throws ConfigError if none satisfies the coupling.
std::vector<Hyperparams> tuning_candidates(const HyperparamSpace& space, const TuneOptions& options);

/// Mean squared prediction error of g on the given samples.
double prediction_mse(const ImpulseResponse& g, const TimeSeriesData& data, const std::vector<std::size_t>& indices);

/// Identifies on the training outputs (whole input kept) and scores on the
/// validation samples. Failures give +infinity.
double validation_score(const PositiveIdConfig& config, const TimeSeriesData& data, const SplitSpec& split,
                        std::string* diagnostic = nullptr);

/// Generic search. evaluate returns the score; exceptions score +infinity.
TuneResult tune(const HyperparamSpace& space, const TuneOptions& options,
                const std::function<double(const Hyperparams&)>& evaluate);

/// Search over (rho, lambda, kernel) for the positive estimator; other
/// settings come from `base`.
TuneResult tune_positive(const HyperparamSpace& space, const PositiveIdConfig& base, const TimeSeriesData& data,
                         const SplitSpec& split, const TuneOptions& options);

PositiveIdConfig apply(const PositiveIdConfig& base, const Hyperparams& theta);

/// Columns rho,lambda,beta,gamma,score.
std::string trace_csv(const TuneResult& result);

}  // namespace posid
