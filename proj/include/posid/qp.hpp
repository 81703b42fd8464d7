#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

namespace posid {

/// minimize 0.5 z'Pz + q'z  subject to  G z >= l,  A z = r.
struct ConvexQP {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd G;
    Eigen::VectorXd l;
    Eigen::MatrixXd A;
    Eigen::VectorXd r;
    /// Constant added to the reported objective.
    double offset = 0.0;

    long dim() const { return q.size(); }
    long n_ineq() const { return G.rows(); }
    long n_eq() const { return A.rows(); }

    /// Throws ConfigError on inconsistent dimensions or non-finite data.
    void check_dimensions() const;
    double objective(const Eigen::VectorXd& z) const;
};

enum class QPStatus { Optimal, MaxIterations, Infeasible };

std::string to_string(QPStatus status);

struct QPSolution {
    Eigen::VectorXd z;
    Eigen::VectorXd y_ineq;  ///< multipliers of G z >= l (nonnegative)
    Eigen::VectorXd y_eq;    ///< multipliers of A z = r
    double objective = 0.0;
    QPStatus status = QPStatus::MaxIterations;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    int iterations = 0;
};

struct QPOptions {
    double feas_tol = 1e-8;
    double gap_tol = 1e-7;
    /// Iterations continue past the acceptance thresholds until residuals fall
    /// this far below them or progress stalls.
    double polish_factor = 1e-4;
    int max_iterations = 200;
    double regularization = 1e-12;
    int ruiz_iterations = 15;
    /// Re-solve the equality problem on the detected active set after convergence.
    bool active_set_polish = true;
};

/// Dense primal-dual interior point method (Mehrotra predictor-corrector).
QPSolution solve(const ConvexQP& problem, const QPOptions& options = {});

struct KktReport {
    double stationarity = 0.0;       ///< |Pz + q - G'y - A'v|_inf
    double primal_infeasibility = 0.0;  ///< max violation of G z >= l and A z = r
    double dual_infeasibility = 0.0;    ///< max(-y_ineq)
    double complementarity = 0.0;       ///< max |y_i (G z - l)_i|
    double max() const;
};

/// Residuals recomputed from the problem data and the returned primal/dual point.
KktReport kkt_certificate(const ConvexQP& problem, const QPSolution& solution);

/// Plain-text dump of all problem blocks, one matrix-market array section per block.
void dump_qp(const std::filesystem::path& path, const ConvexQP& problem);

}  // namespace posid
