#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "posid/gram.hpp"
#include "posid/kernels.hpp"
#include "posid/qp.hpp"
#include "posid/signals.hpp"

namespace posid {

struct PositiveIdConfig {
    KernelSpec kernel = KernelSpec::tc(0.8);
    double rho = 0.95;
    double lambda = 1.0;
    double a_min = 1e-3;
    long delta_m = 50;
    /// Reconstruction horizon; 0 selects 2 * data.span().
    long horizon = 0;
    QPOptions qp;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    long horizon_for(const TimeSeriesData& data) const;
};

struct IdDiagnostics {
    long m0 = 0;
    long m_initial = 0;
    int iterations = 0;
    std::vector<long> m_history;
    /// Set when the loop stopped at m0 with residual negativity beyond tolerance.
    bool forced_at_cap = false;
    double min_checked = 0.0;  ///< min g_s over the checked range s < max(H, m0)
    double c0 = 0.0;
    double a0 = 0.0;
    QPStatus status = QPStatus::Optimal;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    double objective = 0.0;
    /// sqrt(c x'Gx) rho_d^H: bound on |h_t| for t >= H.
    double tail_bound = 0.0;
    /// Largest equality-constraint violation (only the harmonic extension has equalities).
    double equality_residual = 0.0;
    std::string note;
};

struct PositiveIdModel {
    double a = 0.0;
    double rho = 0.0;
    double lambda = 0.0;
    std::string kernel;
    Eigen::VectorXd x;
    long m = 0;
    long n_samples = 0;
    ImpulseResponse h;
    ImpulseResponse g;
    IdDiagnostics diagnostics;
    /// Extra coefficient blocks of the extended methods, keyed by name.
    std::map<std::string, Eigen::VectorXd> coefficients;
};

/// Cost ||y - b a - [O L] x||^2 + lambda x'[O L; L' K]x over z = (a, x), with
/// [L' K] x + c a >= 0 and a >= a_min.
ConvexQP build_qp(const QPDataMatrices& mats, double lambda, double a_min);
ConvexQP build_qp(const PositiveIdConfig& config, const TimeSeriesData& data, long m);

/// h_t = sum_i x_i phi_i(t) + sum_{s<=m} x_{nD+s} k(s,t) for t < H.
ImpulseResponse reconstruct_h(const Eigen::VectorXd& x, const KernelSpec& kernel, const TimeSeriesData& data,
                              long m, long horizon);

struct M0Result {
    long m0 = 0;
    double c0 = 0.0;
    double a0 = 0.0;
};

M0Result compute_m0_detail(const PositiveIdConfig& config, const TimeSeriesData& data);
long compute_m0(const PositiveIdConfig& config, const TimeSeriesData& data);

/// One solve at a fixed constraint horizon m (no outer loop).
PositiveIdModel solve_fixed_m(const PositiveIdConfig& config, const TimeSeriesData& data, long m);

/// Constraint-horizon loop: start at m = span, grow by delta_m until g_s >= -tol for s < m0.
PositiveIdModel identify(const PositiveIdConfig& config, const TimeSeriesData& data);

/// Convolution of the estimated g with the inputs at the requested times.
Eigen::VectorXd predict(const PositiveIdModel& model, const TimeSeriesData& inputs, const std::vector<long>& times);

double negativity_tolerance(double a);

/// Writes <stem>.csv (s,g) and <stem>.json (metadata).
void export_model(const std::filesystem::path& stem, const PositiveIdModel& model);
std::string model_metadata_json(const PositiveIdModel& model);

}  // namespace posid
