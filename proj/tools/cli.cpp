#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "posid/baselines.hpp"
#include "posid/errors.hpp"
#include "posid/experiments.hpp"
#include "posid/extensions.hpp"
#include "posid/parallel.hpp"
#include "posid/tuning.hpp"

namespace posid::cli {

namespace {

namespace fs = std::filesystem;

struct KernelArgs {
    std::string kind = "tc";
    double beta = 0.8;
    double gamma = 0.5;
    int support = 0;  ///< > 0 windows the kernel to a finite support

    KernelSpec build() const {
        const KernelKind k = kernel_kind_from_string(kind);
        if (k == KernelKind::FiniteSupport) {
            throw ConfigError("use --support with a tc, dc or ss kernel to obtain a finite-support kernel");
        }
        const KernelSpec spec = k == KernelKind::TC   ? KernelSpec::tc(beta)
                                : k == KernelKind::DC ? KernelSpec::dc(beta, gamma)
                                                      : KernelSpec::ss(beta);
        return support > 0 ? KernelSpec::windowed(spec, support) : spec;
    }
};

void add_kernel_options(CLI::App* app, KernelArgs& k) {
    app->add_option("--kernel", k.kind, "kernel family: tc, dc or ss")->capture_default_str();
    app->add_option("--beta", k.beta, "kernel decay beta in [0,1)")->capture_default_str();
    app->add_option("--gamma", k.gamma, "DC correlation gamma in [-1,1]")->capture_default_str();
    app->add_option("--support", k.support, "window the kernel to this many lags (zsr, e)");
}

TimeSeriesData load(const std::string& path) {
    if (path.empty()) throw ConfigError("--data is required");
    if (!fs::exists(path)) throw DataError("data file not found: " + path);
    return read_series(path);
}

fs::path in_dir(const std::string& dir, const std::string& name) {
    if (!dir.empty()) fs::create_directories(dir);
    return fs::path(dir.empty() ? "." : dir) / name;
}

std::vector<std::string> split_methods(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    for (const auto& item : raw) {
        std::stringstream ss(item);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            out.push_back(tok);
        }
    }
    return out;
}

Range to_range(const std::vector<double>& v, const char* name) {
    if (v.size() != 3 || v[2] < 1 || v[2] != std::floor(v[2])) {
        throw ConfigError(std::string("--") + name + " expects LO HI POINTS");
    }
    return {v[0], v[1], static_cast<int>(v[2])};
}

// identify ---------------------------------------------------------------

struct IdentifyArgs {
    std::string data;
    std::string method = "g";
    KernelArgs kernel;
    double rho = 0.95;
    double lambda = 1.0;
    double a_min = 1e-3;
    long delta_m = 50;
    long horizon = 0;
    int n = 1;
    double epsilon = -1.0;
    long fir_length = 200;
    std::string out = "model";
    std::string dump_qp;
};

PositiveIdConfig positive_config(const IdentifyArgs& a) {
    PositiveIdConfig cfg;
    cfg.kernel = a.kernel.build();
    cfg.rho = a.rho;
    cfg.lambda = a.lambda;
    cfg.a_min = a.a_min;
    cfg.delta_m = a.delta_m;
    cfg.horizon = a.horizon;
    return cfg;
}

void write_fir_metadata(const fs::path& stem, const IdentifyArgs& a, const ImpulseResponse& g,
                        const nlohmann::ordered_json& extra) {
    nlohmann::ordered_json j;
    j["method"] = a.method;
    j["kernel"] = a.kernel.kind;
    j["lambda"] = a.lambda;
    j["fir_length"] = g.horizon();
    j["horizon"] = g.horizon();
    for (const auto& [k, v] : extra.items()) j[k] = v;
    fs::path csv = stem, meta = stem;
    csv += ".csv";
    meta += ".json";
    write_impulse_csv(csv, g);
    write_file_atomic(meta, j.dump(2) + "\n");
}

int identify_cmd(const IdentifyArgs& a, std::ostream& out) {
    const TimeSeriesData data = load(a.data);
    const fs::path stem = a.out;
    if (stem.has_parent_path()) fs::create_directories(stem.parent_path());

    if (a.method == "g" || a.method == "nup" || a.method == "snp") {
        PositiveIdModel model;
        const PositiveIdConfig cfg = positive_config(a);
        if (a.method == "g") {
            model = identify(cfg, data);
        } else if (a.method == "nup") {
            NupConfig nup{cfg, a.n, a.epsilon};
            model = identify_nup(nup, data);
        } else {
            SnpConfig snp{cfg, a.n, a.epsilon};
            model = identify_snp(snp, data);
        }
        if (!a.dump_qp.empty()) dump_qp(a.dump_qp, build_qp(cfg, data, model.m));
        if (model.diagnostics.status != QPStatus::Optimal) {
            throw SolverError("QP ended with status " + to_string(model.diagnostics.status) + " at m=" +
                              std::to_string(model.m));
        }
        export_model(stem, model);
        out << "a=" << model.a << " rho=" << model.rho << " lambda=" << model.lambda << " m=" << model.m
            << " iterations=" << model.diagnostics.iterations << '\n';
        return kOk;
    }
    if (a.method == "zsr") {
        ZsrConfig cfg;
        KernelArgs k = a.kernel;
        if (k.support <= 0) k.support = static_cast<int>(a.fir_length);
        cfg.kernel = k.build();
        cfg.lambda = a.lambda;
        const ZsrModel model = identify_zsr(cfg, data);
        if (model.diagnostics.status != QPStatus::Optimal) {
            throw SolverError("QP ended with status " + to_string(model.diagnostics.status));
        }
        write_fir_metadata(stem, a, model.g, {{"status", to_string(model.diagnostics.status)}});
        out << "n_g=" << model.g.horizon() << " min g=" << model.g.values.minCoeff() << '\n';
        return kOk;
    }
    BaselineConfig cfg;
    cfg.kind = baseline_kind_from_string(a.method);
    cfg.fir_length = a.fir_length;
    cfg.lambda = a.lambda;
    cfg.kernel = a.kernel.build();
    const ImpulseResponse g = run_baseline(cfg, data);
    write_fir_metadata(stem, a, g, nlohmann::ordered_json::object());
    out << "n_g=" << g.horizon() << '\n';
    return kOk;
}

// tune -------------------------------------------------------------------

struct TuneArgs {
    std::string data;
    std::string kernel = "tc";
    std::vector<double> rho_range{0.5, 0.99, 10};
    std::vector<double> lambda_range{1e-6, 1e2, 9};
    std::vector<double> beta_range{0.5, 0.99, 10};
    std::vector<double> gamma_range{-0.9, 0.9, 7};
    std::string strategy = "grid";
    int budget = 20;
    int refine = 0;
    double train_fraction = 0.7;
    double a_min = 1e-3;
    std::string out = "trace.csv";
};

int tune_cmd(const TuneArgs& a, std::uint64_t seed, unsigned workers, std::ostream& out) {
    const TimeSeriesData data = load(a.data);
    HyperparamSpace space;
    space.kernel = kernel_kind_from_string(a.kernel);
    space.rho = to_range(a.rho_range, "rho-range");
    space.lambda = to_range(a.lambda_range, "lambda-range");
    space.beta = to_range(a.beta_range, "beta-range");
    space.gamma = to_range(a.gamma_range, "gamma-range");
    TuneOptions opts;
    opts.strategy = search_strategy_from_string(a.strategy);
    opts.budget = a.budget;
    opts.seed = seed;
    opts.workers = workers;
    opts.refine_iterations = a.refine;
    PositiveIdConfig base;
    base.a_min = a.a_min;
    const TuneResult r = tune_positive(space, base, data, SplitSpec::temporal(data.size(), a.train_fraction), opts);
    const fs::path path = a.out;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, trace_csv(r));
    if (!std::isfinite(r.score)) throw SolverError("every candidate failed; see the trace for scores");
    out << std::setprecision(10) << "best rho=" << r.best.rho << " lambda=" << r.best.lambda
        << " beta=" << r.best.beta << " gamma=" << r.best.gamma << " score=" << r.score << '\n';
    return kOk;
}

// experiments ------------------------------------------------------------

struct McArgs {
    int runs = 30;
    bool full = false;
    std::vector<double> snr{10.0, 20.0, 30.0};
    std::vector<std::string> methods{"b,c,d,e,g"};
    long n_d = 200;
    int budget = 20;
    int refine = 12;
    std::string out_dir = ".";
};

int montecarlo_cmd(const McArgs& a, std::uint64_t seed, unsigned workers, std::ostream& out) {
    McConfig cfg;
    cfg.protocol.runs = a.full ? 120 : a.runs;
    cfg.protocol.snr_db = a.snr;
    cfg.protocol.n_d = a.n_d;
    cfg.protocol.seed = seed;
    cfg.methods = split_methods(a.methods);
    cfg.settings.tuning.budget = a.budget;
    cfg.settings.tuning.refine_iterations = a.refine;
    cfg.workers = workers;
    const MetricsReport r = run_monte_carlo(cfg);
    write_file_atomic(in_dir(a.out_dir, "metrics.csv"), metrics_csv(r));
    write_file_atomic(in_dir(a.out_dir, "fits.csv"), fits_csv(r));
    out << metrics_csv(r);
    return kOk;
}

struct HeatingArgs {
    std::string data;
    std::vector<std::string> methods{"b,c,d,e,g"};
    int budget = 20;
    int refine = 12;
    std::string out_dir = ".";
};

int heating_cmd(const HeatingArgs& a, std::uint64_t seed, std::ostream& out) {
    const TimeSeriesData data = load(a.data);
    HeatingConfig cfg;
    cfg.methods = split_methods(a.methods);
    cfg.seed = seed;
    cfg.settings.tuning.budget = a.budget;
    cfg.settings.tuning.refine_iterations = a.refine;
    const auto fits = run_heating(data, cfg);
    write_file_atomic(in_dir(a.out_dir, "heating_fits.csv"), heating_csv(fits));
    out << heating_csv(fits);
    return kOk;
}

// predict / kernels ------------------------------------------------------

struct PredictArgs {
    std::string model;
    std::string data;
    std::string out = "prediction.csv";
};

int predict_cmd(const PredictArgs& a, std::ostream& out) {
    if (!fs::exists(a.model)) throw DataError("model file not found: " + a.model);
    const ImpulseResponse g = read_impulse_csv(a.model);
    const TimeSeriesData data = load(a.data);
    std::vector<double> measured(static_cast<std::size_t>(data.input_end() - data.input_start() + 1),
                                 std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < data.size(); ++i) {
        measured[static_cast<std::size_t>(data.sample_times()[i] - data.input_start())] = data.outputs()[i];
    }
    std::ostringstream csv;
    csv << std::setprecision(17) << "t,y_hat,y\n";
    for (long t = data.input_start(); t <= data.input_end(); ++t) {
        csv << t << ',' << convolve(g, data, t) << ',';
        const double y = measured[static_cast<std::size_t>(t - data.input_start())];
        if (!std::isnan(y)) csv << y;
        csv << '\n';
    }
    const fs::path path = a.out;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, csv.str());
    out << "wrote " << (data.input_end() - data.input_start() + 1) << " predictions to " << a.out << '\n';
    return kOk;
}

struct KernelsArgs {
    KernelArgs kernel;
    double rho = 0.95;
    long size = 50;
};

int kernels_cmd(const KernelsArgs& a, std::ostream& out) {
    if (a.size < 1) throw ConfigError("--size must be positive");
    const KernelSpec k = a.kernel.build();
    const DominationBound b = domination_bound(k);
    const Eigen::MatrixXd K = gram_range(k, a.size, a.size);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K, Eigen::EigenvaluesOnly);
    out << std::setprecision(10);
    out << "kernel: " << k.describe() << '\n';
    out << "domination: k(t,t) <= " << b.c << " * ";
    if (b.any_rate) {
        out << "(any rate)^t\n";
    } else {
        out << b.rho_d << "^t\n";
    }
    out << "decay faster than rho=" << a.rho << ": " << (check_assumption1(k, a.rho) ? "yes" : "no") << '\n';
    out << "gram " << a.size << "x" << a.size << " eigenvalues: min " << eig.eigenvalues().minCoeff() << ", max "
        << eig.eigenvalues().maxCoeff() << '\n';
    const long window = std::max(1L, a.size / 2);
    out << "section hankel ranks (window " << window << "):";
    for (long t = 0; t < std::min(a.size, 6L); ++t) {
        Eigen::VectorXd sec(2 * window);
        for (long s = 0; s < 2 * window; ++s) sec(s) = k.eval(s, t);
        out << ' ' << hankel_numerical_rank(ImpulseResponse(sec), window);
    }
    out << '\n';
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Impulse response identification for positive systems"};
    app.set_config("--config", "", "INI/TOML file with option values; flags given on the command line win");
    app.require_subcommand(1);
    std::uint64_t seed = 1;
    unsigned workers = default_workers();
    app.add_option("--seed", seed, "master seed for all randomness")->capture_default_str();
    app.add_option("--workers", workers, "parallel jobs for tuning and Monte Carlo")->check(CLI::PositiveNumber);

    IdentifyArgs id;
    auto* identify = app.add_subcommand("identify", "identify an impulse response from data");
    identify->add_option("--data", id.data, "CSV (t,u,y) or whitespace data file")->required();
    identify->add_option("--method", id.method, "g, nup, snp, zsr, b, c, d or e")->capture_default_str();
    add_kernel_options(identify, id.kernel);
    identify->add_option("--rho", id.rho)->capture_default_str();
    identify->add_option("--lambda", id.lambda)->capture_default_str();
    identify->add_option("--a-min", id.a_min)->capture_default_str();
    identify->add_option("--delta-m", id.delta_m)->capture_default_str();
    identify->add_option("--horizon", id.horizon, "reconstruction horizon (0: twice the data span)");
    identify->add_option("--n", id.n, "pole multiplicity (nup) or number of poles (snp)")->capture_default_str();
    identify->add_option("--epsilon", id.epsilon, "ridge on the extra mode coefficients (default 1e-4 lambda)");
    identify->add_option("--fir-length", id.fir_length, "n_g for the FIR methods")->capture_default_str();
    identify->add_option("--out", id.out, "output stem; writes STEM.csv and STEM.json")->capture_default_str();
    identify->add_option("--dump-qp", id.dump_qp, "write the final QP in matrix-market array blocks");

    TuneArgs tu;
    auto* tune = app.add_subcommand("tune", "hold-out search over (rho, lambda, kernel) for method g");
    tune->add_option("--data", tu.data)->required();
    tune->add_option("--kernel", tu.kernel)->capture_default_str();
    tune->add_option("--rho-range", tu.rho_range, "LO HI POINTS")->expected(3);
    tune->add_option("--lambda-range", tu.lambda_range, "LO HI POINTS (log spaced)")->expected(3);
    tune->add_option("--beta-range", tu.beta_range, "LO HI POINTS")->expected(3);
    tune->add_option("--gamma-range", tu.gamma_range, "LO HI POINTS (dc only)")->expected(3);
    tune->add_option("--strategy", tu.strategy, "grid or random")->capture_default_str();
    tune->add_option("--budget", tu.budget, "random candidates")->capture_default_str();
    tune->add_option("--refine", tu.refine, "compass-search rounds after the search")->capture_default_str();
    tune->add_option("--train-fraction", tu.train_fraction)->capture_default_str();
    tune->add_option("--a-min", tu.a_min)->capture_default_str();
    tune->add_option("--out", tu.out, "trace CSV")->capture_default_str();

    McArgs mc;
    auto* montecarlo = app.add_subcommand("montecarlo", "synthetic Monte Carlo comparison");
    montecarlo->add_option("--runs", mc.runs)->capture_default_str();
    montecarlo->add_flag("--full", mc.full, "use 120 runs");
    montecarlo->add_option("--snr", mc.snr, "SNR levels in dB")->capture_default_str();
    montecarlo->add_option("--methods", mc.methods, "comma separated subset of b,c,d,e,g")->capture_default_str();
    montecarlo->add_option("--n-d", mc.n_d)->capture_default_str();
    montecarlo->add_option("--budget", mc.budget)->capture_default_str();
    montecarlo->add_option("--refine", mc.refine)->capture_default_str();
    montecarlo->add_option("--out-dir", mc.out_dir)->capture_default_str();

    HeatingArgs he;
    auto* heating = app.add_subcommand("heating", "train/test evaluation on the heating record");
    heating->add_option("--data", he.data)->required();
    heating->add_option("--methods", he.methods)->capture_default_str();
    heating->add_option("--budget", he.budget)->capture_default_str();
    heating->add_option("--refine", he.refine)->capture_default_str();
    heating->add_option("--out-dir", he.out_dir)->capture_default_str();

    PredictArgs pr;
    auto* predict = app.add_subcommand("predict", "simulate outputs of a stored impulse response");
    predict->add_option("--model", pr.model, "impulse response CSV (s,g)")->required();
    predict->add_option("--data", pr.data, "input data")->required();
    predict->add_option("--out", pr.out)->capture_default_str();

    KernelsArgs ke;
    auto* kernels = app.add_subcommand("kernels", "kernel and domination diagnostics");
    add_kernel_options(kernels, ke.kernel);
    kernels->add_option("--rho", ke.rho)->capture_default_str();
    kernels->add_option("--size", ke.size)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*identify) return identify_cmd(id, out);
        if (*tune) return tune_cmd(tu, seed, workers, out);
        if (*montecarlo) return montecarlo_cmd(mc, seed, workers, out);
        if (*heating) return heating_cmd(he, seed, out);
        if (*predict) return predict_cmd(pr, out);
        if (*kernels) return kernels_cmd(ke, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kData;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << '\n';
        return kSolver;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kOther;
    }
    return kConfig;
}

}  // namespace posid::cli
