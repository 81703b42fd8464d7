#include "posid/estimator.hpp"

#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "loop.hpp"
#include "representer.hpp"
#include "posid/errors.hpp"

namespace posid {

void PositiveIdConfig::validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0,1)");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
    if (!(a_min > 0.0) || !std::isfinite(a_min)) throw ConfigError("a_min must be positive");
    if (delta_m < 1) throw ConfigError("delta_m must be a positive integer");
    if (horizon < 0) throw ConfigError("horizon must be nonnegative (0 selects the default)");
    if (!check_assumption1(kernel, rho)) {
        std::ostringstream msg;
        msg << "kernel " << kernel.describe() << " decays at rate " << domination_bound(kernel).rho_d
            << ", which is not faster than rho=" << rho;
        throw ConfigError(msg.str());
    }
}

long PositiveIdConfig::horizon_for(const TimeSeriesData& data) const {
    return horizon > 0 ? horizon : 2 * data.span();
}

double negativity_tolerance(double a) { return 1e-8 * (1.0 + std::abs(a)); }

ConvexQP build_qp(const QPDataMatrices& mats, double lambda, double a_min) {
    const long nd = mats.n_samples();
    const long k = mats.K.rows();
    const long d = 1 + nd + k;

    Eigen::MatrixXd F(nd, d);
    F.col(0) = mats.b;
    F.block(0, 1, nd, nd) = mats.O;
    F.block(0, 1 + nd, nd, k) = mats.L;

    ConvexQP qp;
    qp.P = 2.0 * F.transpose() * F;
    qp.P.bottomRightCorner(nd + k, nd + k) += 2.0 * lambda * mats.joint_gram();
    qp.q = -2.0 * F.transpose() * mats.y;
    qp.offset = mats.y.squaredNorm();

    qp.G = Eigen::MatrixXd::Zero(k + 1, d);
    qp.G.block(0, 0, k, 1) = mats.c;
    qp.G.block(0, 1, k, nd) = mats.L.transpose();
    qp.G.block(0, 1 + nd, k, k) = mats.K;
    qp.G(k, 0) = 1.0;
    qp.l = Eigen::VectorXd::Zero(k + 1);
    qp.l(k) = a_min;
    qp.A.resize(0, d);
    qp.r.resize(0);
    return qp;
}

ConvexQP build_qp(const PositiveIdConfig& config, const TimeSeriesData& data, long m) {
    config.validate();
    return build_qp(assemble_core(config.kernel, data, config.rho, m), config.lambda, config.a_min);
}

ImpulseResponse reconstruct_h(const Eigen::VectorXd& x, const KernelSpec& kernel, const TimeSeriesData& data,
                              long m, long horizon) {
    const long nd = static_cast<long>(data.size());
    if (x.size() != nd + m + 1) throw ConfigError("coefficient vector length must be n_D + m + 1");
    const long span = data.span();
    const long len = std::max(span, m + 1);
    // h = sum_s w_s k_s with w = U' x_phi + x_k
    Eigen::VectorXd w = Eigen::VectorXd::Zero(len);
    w.head(span) = lag_matrix(data, span).transpose() * x.head(nd);
    w.head(m + 1) += x.tail(m + 1);
    const long used = kernel.kind() == KernelKind::FiniteSupport ? std::min(len, static_cast<long>(kernel.support()))
                                                                 : len;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(horizon);
    const long reach = kernel.kind() == KernelKind::FiniteSupport ? std::min(horizon, static_cast<long>(kernel.support()))
                                                                  : horizon;
    if (used > 0 && reach > 0) h.head(reach) = gram_range(kernel, used, reach).transpose() * w.head(used);
    return ImpulseResponse(std::move(h));
}

M0Result compute_m0_detail(const PositiveIdConfig& config, const TimeSeriesData& data) {
    config.validate();
    const Eigen::MatrixXd U = lag_matrix(data, data.span());
    const Eigen::VectorXd f = dominant_mode(config.rho, data.span()).values;
    const Eigen::VectorXd b = U * f;
    const Eigen::VectorXd y = data.output_vector();
    const double bb = b.squaredNorm();
    if (!(bb > 0.0)) throw ConfigError("the input does not excite the dominant mode (sum of b_i^2 is zero)");
    M0Result out;
    out.a0 = std::max(config.a_min, y.dot(b) / bb);
    out.c0 = (y - out.a0 * b).squaredNorm();
    const DominationBound dom = domination_bound(config.kernel);
    if (dom.any_rate) {
        // h vanishes beyond the support, so only those lags can go negative
        out.m0 = config.kernel.support();
        return out;
    }
    if (out.c0 == 0.0) return out;
    const double num = std::log(out.c0 * dom.c) - std::log(config.a_min * config.a_min * config.lambda);
    const double den = std::log(config.rho) - std::log(dom.rho_d);
    const double val = std::ceil(0.5 * num / den);
    out.m0 = val <= 0.0 ? 0 : static_cast<long>(std::min(val, 1e12));
    return out;
}

long compute_m0(const PositiveIdConfig& config, const TimeSeriesData& data) {
    return compute_m0_detail(config, data).m0;
}

namespace detail {

void record_qp(IdDiagnostics& diag, const QPSolution& sol) {
    diag.status = sol.status;
    diag.primal_residual = sol.primal_residual;
    diag.dual_residual = sol.dual_residual;
    diag.gap = sol.gap;
    diag.objective = sol.objective;
}

double tail_bound(const PositiveIdConfig& config, const TimeSeriesData& data, double h_norm2) {
    const DominationBound dom = domination_bound(config.kernel);
    if (dom.any_rate) return 0.0;
    return std::sqrt(dom.c * std::max(h_norm2, 0.0)) *
           std::pow(dom.rho_d, static_cast<double>(config.horizon_for(data)));
}

}  // namespace detail

namespace {

using detail::record_qp;
using detail::tail_bound;

PositiveIdModel solve_core(const PositiveIdConfig& config, const TimeSeriesData& data, long m, long length) {
    const QPDataMatrices mats = assemble_core(config.kernel, data, config.rho, m);
    detail::ModeBlock modes;
    modes.fit = mats.b;
    modes.lags = mats.c;
    modes.ridge = Eigen::VectorXd::Zero(1);
    modes.G = Eigen::MatrixXd::Ones(1, 1);
    modes.l = Eigen::VectorXd::Constant(1, config.a_min);
    const detail::RepresenterSolution sol = detail::solve_representer(mats, modes, config.lambda, config.qp);

    PositiveIdModel model;
    model.rho = config.rho;
    model.lambda = config.lambda;
    model.kernel = config.kernel.describe();
    model.m = m;
    model.n_samples = static_cast<long>(data.size());
    record_qp(model.diagnostics, sol.qp);
    if (sol.qp.status == QPStatus::Infeasible) return model;

    model.a = sol.theta(0);
    model.x = sol.x;
    model.h = reconstruct_h(model.x, config.kernel, data, m, length);
    model.g = ImpulseResponse(model.h.values + model.a * dominant_mode(config.rho, length).values);
    model.diagnostics.tail_bound = tail_bound(config, data, sol.h_norm2);
    return model;
}

}  // namespace

PositiveIdModel solve_fixed_m(const PositiveIdConfig& config, const TimeSeriesData& data, long m) {
    config.validate();
    if (m < 0) throw ConfigError("constraint horizon m must be nonnegative");
    const long horizon = config.horizon_for(data);
    PositiveIdModel model = solve_core(config, data, m, horizon);
    if (model.diagnostics.status == QPStatus::Infeasible) throw SolverError("QP reported infeasible");
    model.diagnostics.iterations = 1;
    model.diagnostics.m_history = {m};
    model.diagnostics.min_checked = model.g.values.minCoeff();
    return model;
}

PositiveIdModel identify(const PositiveIdConfig& config, const TimeSeriesData& data) {
    config.validate();
    const M0Result bound = compute_m0_detail(config, data);
    return detail::constraint_loop(config, data, bound,
                                   [&](long m, long length) { return solve_core(config, data, m, length); });
}

Eigen::VectorXd predict(const PositiveIdModel& model, const TimeSeriesData& inputs, const std::vector<long>& times) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(times.size()));
    for (std::size_t i = 0; i < times.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = convolve(model.g, inputs, times[i]);
    }
    return out;
}

std::string model_metadata_json(const PositiveIdModel& model) {
    nlohmann::ordered_json j;
    j["a"] = model.a;
    j["rho"] = model.rho;
    j["lambda"] = model.lambda;
    j["kernel"] = model.kernel;
    j["m"] = model.m;
    j["n_samples"] = model.n_samples;
    j["horizon"] = model.g.horizon();
    const auto& d = model.diagnostics;
    j["diagnostics"] = {
        {"m0", d.m0},
        {"m_initial", d.m_initial},
        {"iterations", d.iterations},
        {"m_history", d.m_history},
        {"forced_at_cap", d.forced_at_cap},
        {"min_checked", d.min_checked},
        {"c0", d.c0},
        {"a0", d.a0},
        {"status", to_string(d.status)},
        {"primal_residual", d.primal_residual},
        {"dual_residual", d.dual_residual},
        {"gap", d.gap},
        {"objective", d.objective},
        {"tail_bound", d.tail_bound},
        {"equality_residual", d.equality_residual},
        {"note", d.note},
    };
    for (const auto& [name, v] : model.coefficients) {
        j["coefficients"][name] = std::vector<double>(v.data(), v.data() + v.size());
    }
    return j.dump(2) + "\n";
}

void export_model(const std::filesystem::path& stem, const PositiveIdModel& model) {
    std::filesystem::path csv = stem;
    csv += ".csv";
    std::filesystem::path meta = stem;
    meta += ".json";
    write_impulse_csv(csv, model.g);
    write_file_atomic(meta, model_metadata_json(model));
}

}  // namespace posid
