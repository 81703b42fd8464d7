#include "posid/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "posid/errors.hpp"
#include "posid/parallel.hpp"

namespace posid {

namespace {

void require_range(const Range& r, const char* name, double lo, double hi) {
    if (!(r.lo <= r.hi) || r.points < 1 || r.lo < lo || r.hi > hi) {
        std::ostringstream msg;
        msg << name << " range [" << r.lo << ", " << r.hi << "] with " << r.points
            << " points is invalid (bounds [" << lo << ", " << hi << "])";
        throw ConfigError(msg.str());
    }
}

std::vector<double> linear_points(const Range& r) {
    if (r.points == 1) return {r.lo};
    std::vector<double> out(static_cast<std::size_t>(r.points));
    for (int i = 0; i < r.points; ++i) out[i] = r.lo + (r.hi - r.lo) * i / (r.points - 1);
    return out;
}

std::vector<double> log_points(const Range& r) {
    if (r.points == 1) return {r.lo};
    std::vector<double> out(static_cast<std::size_t>(r.points));
    const double a = std::log(r.lo), b = std::log(r.hi);
    for (int i = 0; i < r.points; ++i) out[i] = std::exp(a + (b - a) * i / (r.points - 1));
    return out;
}

bool admissible(const HyperparamSpace& space, const Hyperparams& h) {
    return !space.with_rho || satisfies_coupling(space.kernel, h.rho, h.beta);
}

// Free coordinates of a candidate, each mapped onto [0, 1].
struct UnitBox {
    struct Axis {
        double Hyperparams::*field;
        double lo, hi;
        bool log;
    };
    std::vector<Axis> axes;

    explicit UnitBox(const HyperparamSpace& space) {
        auto add = [&](double Hyperparams::*f, const Range& r, bool log) {
            if (r.hi > r.lo) axes.push_back({f, r.lo, r.hi, log});
        };
        if (space.with_rho) add(&Hyperparams::rho, space.rho, false);
        add(&Hyperparams::lambda, space.lambda, true);
        add(&Hyperparams::beta, space.beta, false);
        if (space.kernel == KernelKind::DC) add(&Hyperparams::gamma, space.gamma, false);
    }

    std::vector<double> to_unit(const Hyperparams& h) const {
        std::vector<double> x;
        for (const auto& a : axes) {
            const double v = h.*a.field;
            x.push_back(a.log ? (std::log(v) - std::log(a.lo)) / (std::log(a.hi) - std::log(a.lo))
                              : (v - a.lo) / (a.hi - a.lo));
        }
        return x;
    }

    Hyperparams from_unit(Hyperparams h, const std::vector<double>& x) const {
        for (std::size_t i = 0; i < axes.size(); ++i) {
            const auto& a = axes[i];
            const double u = std::clamp(x[i], 0.0, 1.0);
            h.*a.field = a.log ? std::exp(std::log(a.lo) + u * (std::log(a.hi) - std::log(a.lo)))
                               : a.lo + u * (a.hi - a.lo);
        }
        return h;
    }
};

}  // namespace

void HyperparamSpace::validate() const {
    if (kernel == KernelKind::FiniteSupport) throw ConfigError("tuning supports tc, dc and ss kernels");
    if (with_rho) {
        require_range(rho, "rho", 0.0, 1.0);
        if (!(rho.lo > 0.0 && rho.hi < 1.0)) throw ConfigError("rho range must lie inside (0,1)");
    }
    require_range(lambda, "lambda", 0.0, std::numeric_limits<double>::infinity());
    if (!(lambda.lo > 0.0)) throw ConfigError("lambda range must be positive");
    require_range(beta, "beta", 0.0, 1.0);
    if (!(beta.hi < 1.0)) throw ConfigError("beta range must lie in [0,1)");
    if (kernel == KernelKind::DC) require_range(gamma, "gamma", -1.0, 1.0);
}

KernelSpec Hyperparams::kernel() const {
    switch (kind) {
        case KernelKind::TC: return KernelSpec::tc(beta);
        case KernelKind::DC: return KernelSpec::dc(beta, gamma);
        case KernelKind::SS: return KernelSpec::ss(beta);
        case KernelKind::FiniteSupport: break;
    }
    throw ConfigError("tuning supports tc, dc and ss kernels");
}

bool satisfies_coupling(KernelKind kind, double rho, double beta) {
    switch (kind) {
        case KernelKind::TC:
        case KernelKind::DC: return std::sqrt(beta) < rho;
        case KernelKind::SS: return std::pow(beta, 1.5) < rho;
        case KernelKind::FiniteSupport: return true;
    }
    return false;
}

SplitSpec SplitSpec::temporal(std::size_t n, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("training fraction must lie in (0,1)");
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train >= n) throw ConfigError("temporal split leaves an empty training or validation set");
    SplitSpec s;
    for (std::size_t i = 0; i < n; ++i) (i < n_train ? s.train : s.validation).push_back(i);
    return s;
}

void SplitSpec::validate(std::size_t n) const {
    if (train.empty() || validation.empty()) throw ConfigError("training and validation sets must be nonempty");
    std::vector<char> seen(n, 0);
    for (auto i : train) {
        if (i >= n) throw ConfigError("training index out of range");
        seen[i] = 1;
    }
    for (auto i : validation) {
        if (i >= n) throw ConfigError("validation index out of range");
        if (seen[i]) throw ConfigError("training and validation sets overlap");
    }
}

SearchStrategy search_strategy_from_string(const std::string& name) {
    if (name == "grid") return SearchStrategy::Grid;
    if (name == "random") return SearchStrategy::Random;
    throw ConfigError("unknown search strategy '" + name + "' (expected grid or random)");
}

std::vector<Hyperparams> tuning_candidates(const HyperparamSpace& space, const TuneOptions& options) {
    space.validate();
    if (options.budget < 1) throw ConfigError("tuning budget must be at least 1");
    std::vector<Hyperparams> out;
    const bool dc = space.kernel == KernelKind::DC;
    if (options.strategy == SearchStrategy::Grid) {
        const auto rhos = space.with_rho ? linear_points(space.rho) : std::vector<double>{0.0};
        const auto gammas = dc ? linear_points(space.gamma) : std::vector<double>{0.0};
        for (double rho : rhos) {
            for (double lambda : log_points(space.lambda)) {
                for (double beta : linear_points(space.beta)) {
                    for (double gamma : gammas) {
                        Hyperparams h{space.kernel, rho, lambda, beta, gamma};
                        if (admissible(space, h)) out.push_back(h);
                    }
                }
            }
        }
    } else {
        std::mt19937_64 rng(options.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const int max_draws = 1000 * options.budget;
        for (int draw = 0; draw < max_draws && static_cast<int>(out.size()) < options.budget; ++draw) {
            Hyperparams h;
            h.kind = space.kernel;
            h.rho = space.with_rho ? space.rho.lo + (space.rho.hi - space.rho.lo) * unit(rng) : 0.0;
            h.lambda = std::exp(std::log(space.lambda.lo) +
                                (std::log(space.lambda.hi) - std::log(space.lambda.lo)) * unit(rng));
            h.beta = space.beta.lo + (space.beta.hi - space.beta.lo) * unit(rng);
            h.gamma = dc ? space.gamma.lo + (space.gamma.hi - space.gamma.lo) * unit(rng) : 0.0;
            if (admissible(space, h)) out.push_back(h);
        }
    }
    if (out.empty()) throw ConfigError("no candidate satisfies the kernel decay coupling with rho");
    return out;
}

double prediction_mse(const ImpulseResponse& g, const TimeSeriesData& data, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw ConfigError("empty index set for prediction error");
    double acc = 0.0;
    for (auto i : indices) {
        const double e = data.outputs()[i] - convolve(g, data, data.sample_times()[i]);
        acc += e * e;
    }
    return acc / static_cast<double>(indices.size());
}

double validation_score(const PositiveIdConfig& config, const TimeSeriesData& data, const SplitSpec& split,
                        std::string* diagnostic) {
    split.validate(data.size());
    try {
        const TimeSeriesData train = data.subset(split.train);
        PositiveIdConfig cfg = config;
        cfg.horizon = std::max(cfg.horizon_for(train), data.span());
        const PositiveIdModel model = identify(cfg, train);
        if (model.diagnostics.status != QPStatus::Optimal) {
            if (diagnostic) *diagnostic = "solver status " + to_string(model.diagnostics.status);
            return std::numeric_limits<double>::infinity();
        }
        return prediction_mse(model.g, data, split.validation);
    } catch (const std::exception& e) {
        if (diagnostic) *diagnostic = e.what();
        return std::numeric_limits<double>::infinity();
    }
}

TuneResult tune(const HyperparamSpace& space, const TuneOptions& options,
                const std::function<double(const Hyperparams&)>& evaluate) {
    TuneResult result;
    // Appends evaluations of `cands` to the trace; returns the index of the best new entry.
    auto run_batch = [&](const std::vector<Hyperparams>& cands) {
        const std::size_t first = result.trace.size();
        result.trace.resize(first + cands.size());
        parallel_for(cands.size(), options.workers, [&](std::size_t i) {
            TuneEntry& entry = result.trace[first + i];
            entry.theta = cands[i];
            try {
                entry.score = evaluate(cands[i]);
                if (std::isnan(entry.score)) entry.score = std::numeric_limits<double>::infinity();
            } catch (const std::exception& e) {
                entry.score = std::numeric_limits<double>::infinity();
                entry.diagnostic = e.what();
            }
        });
        std::size_t best = first;
        for (std::size_t i = first + 1; i < result.trace.size(); ++i) {
            if (result.trace[i].score < result.trace[best].score) best = i;
        }
        return best;
    };

    const std::size_t best = run_batch(tuning_candidates(space, options));
    result.best = result.trace[best].theta;
    result.score = result.trace[best].score;

    const UnitBox box(space);
    if (options.refine_iterations > 0 && !box.axes.empty() && std::isfinite(result.score)) {
        std::vector<double> x = box.to_unit(result.best);
        double step = 0.25;
        for (int it = 0; it < options.refine_iterations; ++it) {
            std::vector<Hyperparams> moves;
            for (std::size_t i = 0; i < x.size(); ++i) {
                for (double dir : {-1.0, 1.0}) {
                    std::vector<double> y = x;
                    y[i] = std::clamp(y[i] + dir * step, 0.0, 1.0);
                    if (y[i] == x[i]) continue;
                    const Hyperparams h = box.from_unit(result.best, y);
                    if (admissible(space, h)) moves.push_back(h);
                }
            }
            if (moves.empty()) {
                step *= 0.5;
                continue;
            }
            const std::size_t b = run_batch(moves);
            if (result.trace[b].score < result.score) {
                result.best = result.trace[b].theta;
                result.score = result.trace[b].score;
                x = box.to_unit(result.best);
            } else {
                step *= 0.5;
            }
        }
    }
    return result;
}

PositiveIdConfig apply(const PositiveIdConfig& base, const Hyperparams& theta) {
    PositiveIdConfig cfg = base;
    cfg.rho = theta.rho;
    cfg.lambda = theta.lambda;
    cfg.kernel = theta.kernel();
    return cfg;
}

TuneResult tune_positive(const HyperparamSpace& space, const PositiveIdConfig& base, const TimeSeriesData& data,
                         const SplitSpec& split, const TuneOptions& options) {
    if (!space.with_rho) throw ConfigError("the positive estimator needs rho in the search space");
    split.validate(data.size());
    return tune(space, options, [&](const Hyperparams& theta) {
        std::string diag;
        const double score = validation_score(apply(base, theta), data, split, &diag);
        if (!diag.empty()) throw SolverError(diag);
        return score;
    });
}

std::string trace_csv(const TuneResult& result) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "rho,lambda,beta,gamma,score\n";
    for (const auto& e : result.trace) {
        out << e.theta.rho << ',' << e.theta.lambda << ',' << e.theta.beta << ',' << e.theta.gamma << ',' << e.score
            << '\n';
    }
    return out.str();
}

}  // namespace posid
