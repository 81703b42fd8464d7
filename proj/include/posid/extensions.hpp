#pragma once

#include "posid/estimator.hpp"

namespace posid {

/// Dominant pole rho of multiplicity n: g_t = h_t + rho^t (a t^(n-1) + sum_{j<n-1} a_j t^j).
struct NupConfig {
    PositiveIdConfig base;
    int n = 1;
    /// Ridge on the lower-order coefficients; a negative value selects 1e-4 * lambda.
    double epsilon = -1.0;

    double eps() const { return epsilon < 0.0 ? 1e-4 * base.lambda : epsilon; }
    void validate() const;
};

/// n simple dominant poles rho * exp(2 pi j k / n):
/// g_t = h_t + rho^t Re sum_k (ar_k + j ai_k) exp(2 pi j k t / n).
struct SnpConfig {
    PositiveIdConfig base;
    int n = 1;
    double epsilon = -1.0;

    double eps() const { return epsilon < 0.0 ? 1e-4 * base.lambda : epsilon; }
    void validate() const;
};

/// Finitely supported impulse response estimated with a finite-support kernel.
struct ZsrConfig {
    KernelSpec kernel = KernelSpec::windowed(KernelSpec::tc(0.8), 50);
    double lambda = 1.0;
    QPOptions qp;

    long n_g() const { return kernel.support(); }
    void validate() const;
};

/// Coefficients appear in model.coefficients under "a_vec" (lower-order terms).
PositiveIdModel identify_nup(const NupConfig& config, const TimeSeriesData& data);

/// Coefficients appear under "a_re" and "a_im"; model.a holds min_k of the
/// per-phase limits rho^-t g_t along t = k mod n.
PositiveIdModel identify_snp(const SnpConfig& config, const TimeSeriesData& data);

/// Dominant-mode part f_t for the harmonic extension, returned as (real, imaginary) parts.
std::pair<Eigen::VectorXd, Eigen::VectorXd> snp_mode(double rho, const Eigen::VectorXd& a_re,
                                                     const Eigen::VectorXd& a_im, long horizon);

struct ZsrModel {
    ImpulseResponse g;  ///< length n_g; zero beyond
    Eigen::VectorXd x;
    IdDiagnostics diagnostics;
};

ZsrModel identify_zsr(const ZsrConfig& config, const TimeSeriesData& data);

}  // namespace posid
