#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "posid/baselines.hpp"
#include "posid/estimator.hpp"
#include "posid/tuning.hpp"

namespace posid {

struct McProtocol {
    double rho_true = 0.98;
    double beta_true = 0.92;
    double omega = std::numbers::pi * std::numbers::pi / 10.0;
    int runs = 30;
    long n_d = 200;
    std::vector<double> snr_db{10.0, 20.0, 30.0};
    std::uint64_t seed = 1;
    long horizon = 400;  ///< common horizon for metrics
};

/// g_t = rho^t (1 + beta^t cos(2 pi omega t)) for t < H.
ImpulseResponse true_system(const McProtocol& protocol, long H);

/// Symmetric binary sequence in {-1, +1}.
std::vector<double> gen_binary_input(long n, std::uint64_t seed);

/// Adds white Gaussian noise with variance |y|^2 / (n 10^(snr/10)).
std::vector<double> add_noise(const std::vector<double>& y, double snr_db, std::uint64_t seed);

/// 100 (1 - |g_hat - g| / |g|) over the common horizon.
double fit_impulse(const Eigen::VectorXd& g_hat, const Eigen::VectorXd& g_true);

/// 100 (1 - sqrt(sum (y - y_hat)^2 / sum (y - mean y)^2)).
double fit_output(const Eigen::VectorXd& y_hat, const Eigen::VectorXd& y_test);

/// Deterministic child seed from a master seed and a path of indices.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// How the comparison methods b, c, d, e and g obtain their hyperparameters.
struct MethodSettings {
    HyperparamSpace g_space;    ///< method g (searches rho too)
    HyperparamSpace fir_space;  ///< methods d and e (with_rho = false)
    bool tune = true;
    TuneOptions tuning;         ///< seed is replaced per call
    double split_fraction = 0.7;
    Hyperparams fixed_g;        ///< used when tune is false
    Hyperparams fixed_fir;
    long fir_length = 200;
    double a_min = 1e-3;
    QPOptions qp;

    /// DC kernel for every kernel-based method, as in the synthetic study.
    static MethodSettings monte_carlo();
    /// TC kernel, as in the heating study.
    static MethodSettings heating();
};

struct MethodResult {
    ImpulseResponse g;
    Hyperparams theta;
    double validation = 0.0;
};

/// Methods: b, c, d, e (FIR baselines) and g (positive estimator). The
/// positive estimator reconstructs `horizon` lags.
MethodResult run_method(const std::string& method, const TimeSeriesData& data, const MethodSettings& settings,
                        long horizon, std::uint64_t seed);

struct MethodMetrics {
    std::string method;
    double snr_db = 0.0;
    double bias = 0.0;
    double variance = 0.0;
    double mse = 0.0;
    double median_fit = 0.0;
    int failures = 0;
};

struct FitRecord {
    std::string method;
    double snr_db = 0.0;
    int run = 0;
    double fit = 0.0;
};

struct MetricsReport {
    std::vector<MethodMetrics> metrics;  ///< snr-major, then method order
    std::vector<FitRecord> fits;         ///< successful runs only
};

struct McConfig {
    McProtocol protocol;
    std::vector<std::string> methods{"b", "c", "d", "e", "g"};
    MethodSettings settings = MethodSettings::monte_carlo();
    unsigned workers = 1;
};

MetricsReport run_monte_carlo(const McConfig& config);

/// Columns method,snr,bias,var,mse,median_fit,failures.
std::string metrics_csv(const MetricsReport& report);
/// Columns method,snr,run,fit.
std::string fits_csv(const MetricsReport& report);

struct HeatingConfig {
    std::vector<std::string> methods{"b", "c", "d", "e", "g"};
    MethodSettings settings = MethodSettings::heating();
    std::uint64_t seed = 1;
    long n_train = 500;
    long n_test = 200;
    long n_drop = 101;
};

struct HeatingFit {
    std::string method;
    double fit = 0.0;
    Hyperparams theta;
};

/// Trims the record to n_train + n_test samples, identifies on the first
/// n_train outputs and scores predictions of the next n_test.
std::vector<HeatingFit> run_heating(const TimeSeriesData& data, const HeatingConfig& config);
std::vector<HeatingFit> run_heating(const std::filesystem::path& path, const HeatingConfig& config);

/// Columns method,fit.
std::string heating_csv(const std::vector<HeatingFit>& fits);

}  // namespace posid
