#include "posid/gram.hpp"

#include <cmath>
#include <numbers>

#include "posid/errors.hpp"

namespace posid {

Eigen::MatrixXd QPDataMatrices::joint_gram() const {
    const long n = O.rows();
    const long k = K.rows();
    Eigen::MatrixXd G(n + k, n + k);
    G.topLeftCorner(n, n) = O;
    G.topRightCorner(n, k) = L;
    G.bottomLeftCorner(k, n) = L.transpose();
    G.bottomRightCorner(k, k) = K;
    return G;
}

Eigen::MatrixXd lag_matrix(const TimeSeriesData& data, long lags) {
    const auto& times = data.sample_times();
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()), lags);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const long reach = std::min(lags - 1, times[i] - data.input_start());
        for (long s = 0; s <= reach; ++s) U(static_cast<Eigen::Index>(i), s) = data.input(times[i] - s);
    }
    return U;
}

QPDataMatrices assemble_core(const KernelSpec& kernel, const TimeSeriesData& data, double rho, long m) {
    if (m < 0) throw ConfigError("constraint horizon m must be nonnegative");
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must lie in (0,1)");

    const long span = data.span();
    const long n_idx = std::max(span, m + 1);
    const Eigen::MatrixXd Kbar = gram_range(kernel, n_idx, n_idx);
    const Eigen::MatrixXd U = lag_matrix(data, span);

    QPDataMatrices out;
    out.m = m;
    out.L = U * Kbar.topLeftCorner(span, m + 1);
    const Eigen::MatrixXd UK = U * Kbar.topLeftCorner(span, span);
    out.O = UK * U.transpose();
    out.O = 0.5 * (out.O + out.O.transpose());
    out.K = Kbar.topLeftCorner(m + 1, m + 1);
    out.y = data.output_vector();

    Eigen::VectorXd f(span);
    for (long s = 0; s < span; ++s) f(s) = std::pow(rho, static_cast<double>(s));
    out.b = U * f;
    out.c.resize(m + 1);
    for (long j = 0; j <= m; ++j) out.c(j) = std::pow(rho, static_cast<double>(j));
    return out;
}

namespace {

// t^j with 0^0 = 1
double ipow(long t, int j) { return j == 0 ? 1.0 : std::pow(static_cast<double>(t), j); }

}  // namespace

NupMatrices assemble_nup(const TimeSeriesData& data, double rho, int n, long m) {
    if (n < 1) throw ConfigError("pole multiplicity must be at least 1");
    if (m < 0) throw ConfigError("constraint horizon m must be nonnegative");
    const long span = data.span();
    Eigen::MatrixXd F(span, n);
    for (int j = 0; j < n; ++j) {
        for (long s = 0; s < span; ++s) F(s, j) = ipow(s, j) * std::pow(rho, static_cast<double>(s));
    }
    NupMatrices out;
    out.B = lag_matrix(data, span) * F;
    out.C.resize(m + 1, n);
    for (int j = 0; j < n; ++j) {
        for (long i = 0; i <= m; ++i) out.C(i, j) = ipow(i, j) * std::pow(rho, static_cast<double>(i));
    }
    return out;
}

SnpMatrices assemble_snp(double rho, int n, long rows) {
    if (n < 1) throw ConfigError("number of dominant poles must be at least 1");
    SnpMatrices out;
    out.Vr.resize(rows, n);
    out.Vi.resize(rows, n);
    out.D.resize(rows);
    for (long i = 0; i < rows; ++i) {
        out.D(i) = std::pow(rho, static_cast<double>(i));
        for (int j = 0; j < n; ++j) {
            // reduce the exponent mod n so periodic rows are bitwise identical
            const long e = (i * j) % n;
            const double phase = 2.0 * std::numbers::pi * static_cast<double>(e) / n;
            double re = std::cos(phase);
            double im = std::sin(phase);
            // exact values at quarter turns
            if (4 * e % n == 0) {
                const long q = 4 * e / n;
                re = q == 0 ? 1.0 : q == 2 ? -1.0 : 0.0;
                im = q == 1 ? 1.0 : q == 3 ? -1.0 : 0.0;
            }
            out.Vr(i, j) = re;
            out.Vi(i, j) = im;
        }
    }
    out.E = Eigen::VectorXd::Ones(n);
    out.E(0) = 0.0;
    return out;
}

SnpInputModes snp_input_modes(const TimeSeriesData& data, double rho, int n) {
    const long span = data.span();
    const SnpMatrices v = assemble_snp(rho, n, span);
    const Eigen::MatrixXd U = lag_matrix(data, span);
    SnpInputModes out;
    out.Br = U * v.D.asDiagonal() * v.Vr;
    out.Bi = U * v.D.asDiagonal() * v.Vi;
    return out;
}

}  // namespace posid
