#include "posid/baselines.hpp"

#include <algorithm>
#include <cctype>

#include "posid/errors.hpp"
#include "posid/extensions.hpp"

namespace posid {

std::string to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::LsProject: return "b";
        case BaselineKind::Nnls: return "c";
        case BaselineKind::KernelRidgeProject: return "d";
        case BaselineKind::KernelNnls: return "e";
    }
    return "?";
}

BaselineKind baseline_kind_from_string(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "b") return BaselineKind::LsProject;
    if (lower == "c") return BaselineKind::Nnls;
    if (lower == "d") return BaselineKind::KernelRidgeProject;
    if (lower == "e") return BaselineKind::KernelNnls;
    throw ConfigError("unknown baseline method '" + name + "' (expected b, c, d or e)");
}

void BaselineConfig::validate() const {
    if (fir_length < 1) throw ConfigError("FIR length n_g must be at least 1");
    if (kind == BaselineKind::KernelRidgeProject || kind == BaselineKind::KernelNnls) {
        if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    }
}

Eigen::MatrixXd convolution_matrix(const TimeSeriesData& data, long n_g) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.size()), n_g);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const long t = data.sample_times()[i];
        const long top = std::min(n_g - 1, t - data.input_start());
        for (long s = 0; s <= top; ++s) T(static_cast<Eigen::Index>(i), s) = data.input(t - s);
    }
    return T;
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& T, const Eigen::VectorXd& y) {
    return T.completeOrthogonalDecomposition().solve(y);
}

Eigen::VectorXd kernel_ridge(const Eigen::MatrixXd& T, const Eigen::VectorXd& y, const Eigen::MatrixXd& K,
                             double lambda) {
    const Eigen::MatrixXd TK = T * K;
    Eigen::MatrixXd S = TK * T.transpose();
    S.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) throw SolverError("kernel ridge system is not positive definite");
    return TK.transpose() * llt.solve(y);
}

Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& T, const Eigen::VectorXd& y,
                                          const QPOptions& options) {
    const long n = T.cols();
    ConvexQP qp;
    qp.P = 2.0 * T.transpose() * T;
    qp.q = -2.0 * T.transpose() * y;
    qp.offset = y.squaredNorm();
    qp.G = Eigen::MatrixXd::Identity(n, n);
    qp.l = Eigen::VectorXd::Zero(n);
    qp.A.resize(0, n);
    qp.r.resize(0);
    const QPSolution sol = solve(qp, options);
    if (sol.status != QPStatus::Optimal) {
        throw SolverError("nonnegative least squares ended with status " + to_string(sol.status));
    }
    return sol.z.cwiseMax(0.0);
}

ImpulseResponse run_baseline(const BaselineConfig& config, const TimeSeriesData& data) {
    config.validate();
    const long ng = config.fir_length;
    if (config.kind == BaselineKind::KernelNnls) {
        ZsrConfig zsr;
        zsr.kernel = config.kernel.kind() == KernelKind::FiniteSupport
                         ? config.kernel
                         : KernelSpec::windowed(config.kernel, static_cast<int>(ng));
        zsr.lambda = config.lambda;
        zsr.qp = config.qp;
        ZsrModel model = identify_zsr(zsr, data);
        return ImpulseResponse(model.g.values.cwiseMax(0.0));
    }
    const Eigen::MatrixXd T = convolution_matrix(data, ng);
    const Eigen::VectorXd y = data.output_vector();
    switch (config.kind) {
        case BaselineKind::LsProject: return ImpulseResponse(least_squares(T, y).cwiseMax(0.0));
        case BaselineKind::Nnls: return ImpulseResponse(nonnegative_least_squares(T, y, config.qp));
        case BaselineKind::KernelRidgeProject: {
            const Eigen::MatrixXd K = gram_range(config.kernel, ng, ng);
            return ImpulseResponse(kernel_ridge(T, y, K, config.lambda).cwiseMax(0.0));
        }
        case BaselineKind::KernelNnls: break;
    }
    return {};
}

}  // namespace posid
