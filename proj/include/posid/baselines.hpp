#pragma once

#include <string>

#include "posid/kernels.hpp"
#include "posid/qp.hpp"
#include "posid/signals.hpp"

namespace posid {

/// FIR comparison methods. KernelNnls delegates to identify_zsr.
enum class BaselineKind { LsProject, Nnls, KernelRidgeProject, KernelNnls };

std::string to_string(BaselineKind kind);
/// Accepts the method letters b, c, d, e.
BaselineKind baseline_kind_from_string(const std::string& name);

struct BaselineConfig {
    BaselineKind kind = BaselineKind::LsProject;
    long fir_length = 200;
    double lambda = 1.0;                            ///< D and E only
    KernelSpec kernel = KernelSpec::dc(0.9, 0.5);   ///< D and E only; E windows it to fir_length
    QPOptions qp;

    void validate() const;
};

/// T(i, s) = u_{t_i - s} for s < n_g (zero before the first input).
Eigen::MatrixXd convolution_matrix(const TimeSeriesData& data, long n_g);

/// Minimum-norm minimizer of |T g - y|.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& T, const Eigen::VectorXd& y);

/// K T' (T K T' + lambda I)^-1 y, the minimizer of |T g - y|^2 + lambda g' K^-1 g.
Eigen::VectorXd kernel_ridge(const Eigen::MatrixXd& T, const Eigen::VectorXd& y, const Eigen::MatrixXd& K,
                             double lambda);

/// Minimizer of |T g - y|^2 over g >= 0.
Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& T, const Eigen::VectorXd& y,
                                          const QPOptions& options = {});

ImpulseResponse run_baseline(const BaselineConfig& config, const TimeSeriesData& data);

}  // namespace posid
