#include "posid/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>

#include "posid/errors.hpp"
#include "posid/parallel.hpp"

namespace posid {

ImpulseResponse true_system(const McProtocol& protocol, long H) {
    if (H < 1) throw ConfigError("impulse response horizon must be at least 1");
    Eigen::VectorXd g(H);
    for (long t = 0; t < H; ++t) {
        const double td = static_cast<double>(t);
        g(t) = std::pow(protocol.rho_true, td) *
               (1.0 + std::pow(protocol.beta_true, td) * std::cos(2.0 * std::numbers::pi * protocol.omega * td));
    }
    return ImpulseResponse(std::move(g));
}

std::vector<double> gen_binary_input(long n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::vector<double> u(static_cast<std::size_t>(std::max(n, 0L)));
    for (auto& v : u) v = coin(rng) ? 1.0 : -1.0;
    return u;
}

std::vector<double> add_noise(const std::vector<double>& y, double snr_db, std::uint64_t seed) {
    double power = 0.0;
    for (double v : y) power += v * v;
    if (y.empty() || !(power > 0.0)) throw DataError("cannot set an SNR for a zero-power output");
    const double var = power / (static_cast<double>(y.size()) * std::pow(10.0, snr_db / 10.0));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(var));
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + noise(rng);
    return out;
}

double fit_impulse(const Eigen::VectorXd& g_hat, const Eigen::VectorXd& g_true) {
    const long n = std::min(g_hat.size(), g_true.size());
    const double denom = g_true.head(n).norm();
    if (!(denom > 0.0)) throw DataError("fit of a zero impulse response is undefined");
    return 100.0 * (1.0 - (g_hat.head(n) - g_true.head(n)).norm() / denom);
}

double fit_output(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& y_test) {
    if (y_hat.size() != y_test.size() || y_test.size() == 0) throw DataError("prediction and test lengths differ");
    const double mean = y_test.mean();
    const double denom = (y_test.array() - mean).square().sum();
    if (!(denom > 0.0)) throw DataError("fit on a constant test output is undefined");
    return 100.0 * (1.0 - std::sqrt((y_test - y_hat).squaredNorm() / denom));
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32)};
    for (auto p : path) {
        words.push_back(static_cast<std::uint32_t>(p));
        words.push_back(static_cast<std::uint32_t>(p >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

namespace {

HyperparamSpace space_for(KernelKind kind, bool with_rho) {
    HyperparamSpace s;
    s.kernel = kind;
    s.with_rho = with_rho;
    s.rho = {0.9, 0.995, 8};
    s.lambda = {1e-6, 1e2, 9};
    s.beta = {0.5, 0.98, 8};
    s.gamma = {-0.5, 0.95, 5};
    return s;
}

MethodSettings settings_for(KernelKind kind) {
    MethodSettings s;
    s.g_space = space_for(kind, true);
    s.fir_space = space_for(kind, false);
    s.tuning.strategy = SearchStrategy::Random;
    s.tuning.budget = 20;
    s.tuning.workers = 1;
    s.tuning.refine_iterations = 12;
    s.fixed_g = {kind, 0.98, 1.0, 0.9, 0.5};
    s.fixed_fir = {kind, 0.0, 1.0, 0.9, 0.5};
    return s;
}

ImpulseResponse fir_estimate(BaselineKind kind, const TimeSeriesData& data, const MethodSettings& s,
                             const Hyperparams& theta) {
    BaselineConfig cfg;
    cfg.kind = kind;
    cfg.fir_length = s.fir_length;
    cfg.lambda = theta.lambda;
    cfg.kernel = theta.kernel();
    cfg.qp = s.qp;
    return run_baseline(cfg, data);
}

PositiveIdConfig positive_base(const MethodSettings& s) {
    PositiveIdConfig cfg;
    cfg.a_min = s.a_min;
    cfg.qp = s.qp;
    return cfg;
}

}  // namespace

MethodSettings MethodSettings::monte_carlo() { return settings_for(KernelKind::DC); }
MethodSettings MethodSettings::heating() { return settings_for(KernelKind::TC); }

MethodResult run_method(const std::string& method, const TimeSeriesData& data, const MethodSettings& settings,
                        long horizon, std::uint64_t seed) {
    MethodResult out;
    TuneOptions opts = settings.tuning;
    opts.seed = seed;
    if (method == "b" || method == "c") {
        BaselineConfig cfg;
        cfg.kind = baseline_kind_from_string(method);
        cfg.fir_length = settings.fir_length;
        cfg.qp = settings.qp;
        out.g = run_baseline(cfg, data);
        return out;
    }
    const SplitSpec split = SplitSpec::temporal(data.size(), settings.split_fraction);
    if (method == "d" || method == "e") {
        const BaselineKind kind = baseline_kind_from_string(method);
        out.theta = settings.fixed_fir;
        if (settings.tune) {
            const TimeSeriesData train = data.subset(split.train);
            const TuneResult r = tune(settings.fir_space, opts, [&](const Hyperparams& theta) {
                return prediction_mse(fir_estimate(kind, train, settings, theta), data, split.validation);
            });
            if (!std::isfinite(r.score)) throw SolverError("no hyperparameter candidate succeeded for method " + method);
            out.theta = r.best;
            out.validation = r.score;
        }
        out.g = fir_estimate(kind, data, settings, out.theta);
        return out;
    }
    if (method == "g") {
        const PositiveIdConfig base = positive_base(settings);
        out.theta = settings.fixed_g;
        if (settings.tune) {
            const TuneResult r = tune_positive(settings.g_space, base, data, split, opts);
            if (!std::isfinite(r.score)) throw SolverError("no hyperparameter candidate succeeded for method g");
            out.theta = r.best;
            out.validation = r.score;
        }
        PositiveIdConfig cfg = apply(base, out.theta);
        cfg.horizon = horizon;
        const PositiveIdModel model = identify(cfg, data);
        if (model.diagnostics.status != QPStatus::Optimal) {
            throw SolverError("positive estimator ended with status " + to_string(model.diagnostics.status));
        }
        out.g = model.g;
        return out;
    }
    throw ConfigError("unknown comparison method '" + method + "' (expected b, c, d, e or g)");
}

MetricsReport run_monte_carlo(const McConfig& config) {
    const McProtocol& p = config.protocol;
    if (p.runs < 1) throw ConfigError("Monte Carlo run count must be at least 1");
    if (p.n_d < 1 || p.horizon < 1) throw ConfigError("n_D and the metric horizon must be positive");
    if (config.methods.empty()) throw ConfigError("no methods selected");
    for (const auto& m : config.methods) {
        if (m != "b" && m != "c" && m != "d" && m != "e" && m != "g") {
            throw ConfigError("unknown comparison method '" + m + "' (expected b, c, d, e or g)");
        }
    }
    const Eigen::VectorXd g_true = true_system(p, p.horizon).values;
    const ImpulseResponse g_sim = true_system(p, p.n_d);
    const std::size_t n_snr = p.snr_db.size();
    const std::size_t n_methods = config.methods.size();
    const std::size_t runs = static_cast<std::size_t>(p.runs);

    // estimates[(snr * runs + run) * n_methods + method]
    std::vector<std::optional<Eigen::VectorXd>> estimates(n_snr * runs * n_methods);
    parallel_for(n_snr * runs, config.workers, [&](std::size_t job) {
        const std::size_t k = job / runs;
        const std::size_t r = job % runs;
        const auto u = gen_binary_input(p.n_d, derive_seed(p.seed, {r, 0}));
        const TimeSeriesData clean = TimeSeriesData::at_rest(u, std::vector<double>(u.size(), 0.0));
        std::vector<double> y0(u.size());
        for (long t = 0; t < p.n_d; ++t) y0[t] = convolve(g_sim, clean, t);
        const auto y = add_noise(y0, p.snr_db[k], derive_seed(p.seed, {r, 1, k}));
        const TimeSeriesData data = TimeSeriesData::at_rest(u, y);
        for (std::size_t m = 0; m < n_methods; ++m) {
            try {
                const MethodResult res =
                    run_method(config.methods[m], data, config.settings, p.horizon, derive_seed(p.seed, {r, 2, k, m}));
                Eigen::VectorXd g = Eigen::VectorXd::Zero(p.horizon);
                const long n = std::min<long>(p.horizon, res.g.horizon());
                g.head(n) = res.g.values.head(n);
                estimates[job * n_methods + m] = std::move(g);
            } catch (const std::exception&) {
                // counted as a failure below
            }
        }
    });

    MetricsReport report;
    for (std::size_t k = 0; k < n_snr; ++k) {
        for (std::size_t m = 0; m < n_methods; ++m) {
            MethodMetrics mm;
            mm.method = config.methods[m];
            mm.snr_db = p.snr_db[k];
            std::vector<const Eigen::VectorXd*> ok;
            std::vector<double> fits;
            for (std::size_t r = 0; r < runs; ++r) {
                const auto& est = estimates[(k * runs + r) * n_methods + m];
                if (!est) {
                    ++mm.failures;
                    continue;
                }
                ok.push_back(&*est);
                const double f = fit_impulse(*est, g_true);
                fits.push_back(f);
                report.fits.push_back({mm.method, mm.snr_db, static_cast<int>(r), f});
            }
            if (!ok.empty()) {
                Eigen::VectorXd mean = Eigen::VectorXd::Zero(p.horizon);
                for (const auto* g : ok) mean += *g;
                mean /= static_cast<double>(ok.size());
                mm.bias = (mean - g_true).norm();
                double var = 0.0, mse = 0.0;
                for (const auto* g : ok) {
                    var += (*g - mean).squaredNorm();
                    mse += (*g - g_true).squaredNorm();
                }
                mm.variance = var / static_cast<double>(ok.size());
                mm.mse = mse / static_cast<double>(ok.size());
                std::vector<double> sorted = fits;
                std::sort(sorted.begin(), sorted.end());
                const std::size_t n = sorted.size();
                mm.median_fit = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
            } else {
                mm.bias = mm.variance = mm.mse = mm.median_fit = std::numeric_limits<double>::quiet_NaN();
            }
            report.metrics.push_back(mm);
        }
    }
    return report;
}

std::string metrics_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "method,snr,bias,var,mse,median_fit,failures\n";
    for (const auto& m : report.metrics) {
        out << m.method << ',' << m.snr_db << ',' << m.bias << ',' << m.variance << ',' << m.mse << ','
            << m.median_fit << ',' << m.failures << '\n';
    }
    return out.str();
}

std::string fits_csv(const MetricsReport& report) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "method,snr,run,fit\n";
    for (const auto& f : report.fits) out << f.method << ',' << f.snr_db << ',' << f.run << ',' << f.fit << '\n';
    return out.str();
}

std::vector<HeatingFit> run_heating(const TimeSeriesData& data, const HeatingConfig& config) {
    if (config.n_train < 1 || config.n_test < 1 || config.n_drop < 0) {
        throw ConfigError("heating split sizes must be positive");
    }
    const auto total = static_cast<std::size_t>(config.n_train + config.n_test);
    const std::size_t full = total + static_cast<std::size_t>(config.n_drop);
    if (data.size() != full && data.size() != total) {
        std::ostringstream msg;
        msg << "heating record must have " << full << " samples (or " << total << " after trimming), found "
            << data.size();
        throw DataError(msg.str());
    }
    std::vector<std::size_t> train_idx(static_cast<std::size_t>(config.n_train));
    for (std::size_t i = 0; i < train_idx.size(); ++i) train_idx[i] = i;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = train_idx.size(); i < total; ++i) test_idx.push_back(i);
    const TimeSeriesData train = data.subset(train_idx);
    const long horizon = data.sample_times()[total - 1] - data.input_start() + 1;

    Eigen::VectorXd y_test(static_cast<Eigen::Index>(test_idx.size()));
    for (std::size_t j = 0; j < test_idx.size(); ++j) y_test(static_cast<Eigen::Index>(j)) = data.outputs()[test_idx[j]];

    std::vector<HeatingFit> out;
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
        const MethodResult res = run_method(config.methods[m], train, config.settings, horizon,
                                            derive_seed(config.seed, {m}));
        Eigen::VectorXd y_hat(y_test.size());
        for (std::size_t j = 0; j < test_idx.size(); ++j) {
            y_hat(static_cast<Eigen::Index>(j)) = convolve(res.g, data, data.sample_times()[test_idx[j]]);
        }
        out.push_back({config.methods[m], fit_output(y_hat, y_test), res.theta});
    }
    return out;
}

std::vector<HeatingFit> run_heating(const std::filesystem::path& path, const HeatingConfig& config) {
    return run_heating(read_series(path), config);
}

std::string heating_csv(const std::vector<HeatingFit>& fits) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "method,fit,rho,lambda,beta,gamma\n";
    for (const auto& f : fits) {
        out << f.method << ',' << f.fit << ',' << f.theta.rho << ',' << f.theta.lambda << ',' << f.theta.beta << ','
            << f.theta.gamma << '\n';
    }
    return out.str();
}

}  // namespace posid
