#include "posid/extensions.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "loop.hpp"
#include "posid/errors.hpp"
#include "representer.hpp"

namespace posid {

void NupConfig::validate() const {
    base.validate();
    if (n < 1) throw ConfigError("pole multiplicity n must be at least 1");
    if (!(eps() > 0.0)) throw ConfigError("epsilon must be positive");
}

void SnpConfig::validate() const {
    base.validate();
    if (n < 1) throw ConfigError("number of dominant poles n must be at least 1");
    if (!(eps() > 0.0)) throw ConfigError("epsilon must be positive");
}

void ZsrConfig::validate() const {
    if (kernel.kind() != KernelKind::FiniteSupport) {
        throw ConfigError("the finite-impulse-response estimator needs a finite-support kernel");
    }
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
}

namespace {

PositiveIdModel base_model(const PositiveIdConfig& config, const TimeSeriesData& data, long m) {
    PositiveIdModel model;
    model.rho = config.rho;
    model.lambda = config.lambda;
    model.kernel = config.kernel.describe();
    model.m = m;
    model.n_samples = static_cast<long>(data.size());
    return model;
}

}  // namespace

PositiveIdModel identify_nup(const NupConfig& config, const TimeSeriesData& data) {
    config.validate();
    const PositiveIdConfig& base = config.base;
    const int n = config.n;
    const M0Result bound = compute_m0_detail(base, data);

    auto solve_at = [&](long m, long length) {
        const QPDataMatrices mats = assemble_core(base.kernel, data, base.rho, m);
        const NupMatrices ext = assemble_nup(data, base.rho, n, m);
        detail::ModeBlock modes;
        modes.fit = ext.B;
        modes.lags = ext.C;
        modes.ridge = Eigen::VectorXd::Constant(n, config.eps());
        modes.ridge(n - 1) = 0.0;
        modes.G = Eigen::MatrixXd::Zero(1, n);
        modes.G(0, n - 1) = 1.0;
        modes.l = Eigen::VectorXd::Constant(1, base.a_min);
        const auto sol = detail::solve_representer(mats, modes, base.lambda, base.qp);

        PositiveIdModel model = base_model(base, data, m);
        detail::record_qp(model.diagnostics, sol.qp);
        if (sol.qp.status == QPStatus::Infeasible) return model;
        model.a = sol.theta(n - 1);
        model.coefficients["a_vec"] = sol.theta.head(n - 1);
        model.x = sol.x;
        model.h = reconstruct_h(model.x, base.kernel, data, m, length);
        Eigen::VectorXd g = model.h.values;
        for (long t = 0; t < length; ++t) {
            double poly = 0.0;
            for (int j = 0; j < n; ++j) poly += sol.theta(j) * (j == 0 ? 1.0 : std::pow(static_cast<double>(t), j));
            g(t) += std::pow(base.rho, static_cast<double>(t)) * poly;
        }
        model.g = ImpulseResponse(std::move(g));
        model.diagnostics.tail_bound = detail::tail_bound(base, data, sol.h_norm2);
        return model;
    };
    PositiveIdModel model = detail::constraint_loop(base, data, bound, solve_at);
    if (n > 1) model.diagnostics.note += (model.diagnostics.note.empty() ? "" : "; ") +
                                         std::string("m0 cap taken from the simple-pole bound");
    return model;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> snp_mode(double rho, const Eigen::VectorXd& a_re,
                                                     const Eigen::VectorXd& a_im, long horizon) {
    const int n = static_cast<int>(a_re.size());
    const SnpMatrices v = assemble_snp(rho, n, horizon);
    Eigen::VectorXd re = v.D.cwiseProduct(v.Vr * a_re - v.Vi * a_im);
    Eigen::VectorXd im = v.D.cwiseProduct(v.Vi * a_re + v.Vr * a_im);
    return {std::move(re), std::move(im)};
}

PositiveIdModel identify_snp(const SnpConfig& config, const TimeSeriesData& data) {
    config.validate();
    const PositiveIdConfig& base = config.base;
    const int n = config.n;
    const M0Result bound = compute_m0_detail(base, data);
    const SnpInputModes inputs = snp_input_modes(data, base.rho, n);
    const SnpMatrices per = assemble_snp(base.rho, n, n);

    auto solve_at = [&](long m, long length) {
        const QPDataMatrices mats = assemble_core(base.kernel, data, base.rho, m);
        const SnpMatrices lag = assemble_snp(base.rho, n, m + 1);
        detail::ModeBlock modes;
        modes.fit.resize(inputs.Br.rows(), 2 * n);
        modes.fit << inputs.Br, -inputs.Bi;
        modes.lags.resize(m + 1, 2 * n);
        modes.lags << lag.D.asDiagonal() * lag.Vr, -(lag.D.asDiagonal() * lag.Vi);
        modes.ridge.resize(2 * n);
        modes.ridge << config.eps() * per.E, config.eps() * per.E;
        modes.G.resize(n, 2 * n);
        modes.G << per.Vr, -per.Vi;
        modes.l = Eigen::VectorXd::Constant(n, base.a_min);
        modes.A.resize(n, 2 * n);
        modes.A << per.Vi, per.Vr;
        modes.r = Eigen::VectorXd::Zero(n);
        const auto sol = detail::solve_representer(mats, modes, base.lambda, base.qp);

        PositiveIdModel model = base_model(base, data, m);
        detail::record_qp(model.diagnostics, sol.qp);
        if (sol.qp.status == QPStatus::Infeasible) return model;
        const Eigen::VectorXd a_re = sol.theta.head(n);
        const Eigen::VectorXd a_im = sol.theta.tail(n);
        model.coefficients["a_re"] = a_re;
        model.coefficients["a_im"] = a_im;
        model.a = (per.Vr * a_re - per.Vi * a_im).minCoeff();
        model.diagnostics.equality_residual = (per.Vi * a_re + per.Vr * a_im).cwiseAbs().maxCoeff();
        model.x = sol.x;
        model.h = reconstruct_h(model.x, base.kernel, data, m, length);
        const auto [f_re, f_im] = snp_mode(base.rho, a_re, a_im, length);
        model.g = ImpulseResponse(model.h.values + f_re);
        model.diagnostics.tail_bound = detail::tail_bound(base, data, sol.h_norm2);
        return model;
    };
    PositiveIdModel model = detail::constraint_loop(base, data, bound, solve_at);
    if (n > 1) model.diagnostics.note += (model.diagnostics.note.empty() ? "" : "; ") +
                                         std::string("m0 cap taken from the simple-pole bound");
    return model;
}

ZsrModel identify_zsr(const ZsrConfig& config, const TimeSeriesData& data) {
    config.validate();
    const long ng = config.n_g();
    const long m = ng - 1;
    // rho only enters b and c, which this program does not use
    const QPDataMatrices mats = assemble_core(config.kernel, data, 0.5, m);
    detail::ModeBlock modes;
    modes.fit.resize(mats.n_samples(), 0);
    modes.lags.resize(m + 1, 0);
    modes.ridge.resize(0);
    modes.G.resize(0, 0);
    modes.l.resize(0);
    const auto sol = detail::solve_representer(mats, modes, config.lambda, config.qp);
    if (sol.qp.status == QPStatus::Infeasible) throw SolverError("finite-support QP reported infeasible");

    ZsrModel out;
    detail::record_qp(out.diagnostics, sol.qp);
    out.x = sol.x;
    out.g = reconstruct_h(out.x, config.kernel, data, m, ng);
    out.diagnostics.iterations = 1;
    out.diagnostics.m_history = {m};
    out.diagnostics.min_checked = out.g.values.minCoeff();
    return out;
}

}  // namespace posid
