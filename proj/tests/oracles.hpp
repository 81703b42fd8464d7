#pragma once

// Independent reference computations used by the tests. Nothing here calls into
// the library's solvers or assembly code.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

struct QPResult {
    Eigen::VectorXd z;
    double objective = std::numeric_limits<double>::infinity();
};

// Strictly convex QP by brute force over active sets: each subset of the
// inequalities is treated as equalities, the KKT system solved densely, and the
// primal/dual feasible candidate kept.
inline std::optional<QPResult> active_set_enumeration(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                                                      const Eigen::MatrixXd& G, const Eigen::VectorXd& l,
                                                      const Eigen::MatrixXd& A = {}, const Eigen::VectorXd& r = {}) {
    const long d = q.size();
    const long k = G.rows();
    const long e = A.rows();
    std::optional<QPResult> best;
    for (long mask = 0; mask < (1L << k); ++mask) {
        std::vector<long> act;
        for (long i = 0; i < k; ++i) {
            if (mask & (1L << i)) act.push_back(i);
        }
        const long na = static_cast<long>(act.size());
        const long n = d + na + e;
        Eigen::MatrixXd KKT = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        KKT.topLeftCorner(d, d) = P;
        rhs.head(d) = -q;
        for (long a = 0; a < na; ++a) {
            KKT.block(0, d + a, d, 1) = -G.row(act[a]).transpose();
            KKT.block(d + a, 0, 1, d) = G.row(act[a]);
            rhs(d + a) = l(act[a]);
        }
        for (long j = 0; j < e; ++j) {
            KKT.block(0, d + na + j, d, 1) = -A.row(j).transpose();
            KKT.block(d + na + j, 0, 1, d) = A.row(j);
            rhs(d + na + j) = r(j);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(KKT);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd sol = lu.solve(rhs);
        const Eigen::VectorXd z = sol.head(d);
        bool ok = true;
        for (long i = 0; i < k && ok; ++i) ok = G.row(i).dot(z) >= l(i) - 1e-10;
        for (long a = 0; a < na && ok; ++a) ok = sol(d + a) >= -1e-10;
        if (!ok) continue;
        const double obj = 0.5 * z.dot(P * z) + q.dot(z);
        if (!best || obj < best->objective) best = QPResult{z, obj};
    }
    return best;
}

// Box-constrained (g >= 0) strictly convex QP by cyclic coordinate descent.
inline Eigen::VectorXd nonneg_coordinate_descent(const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
                                                 int sweeps = 200000, double tol = 1e-15) {
    // minimize 0.5 g'Hg + f'g over g >= 0
    Eigen::VectorXd g = Eigen::VectorXd::Zero(f.size());
    Eigen::VectorXd grad = f;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double moved = 0.0;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            const double gi = std::max(0.0, g(i) - grad(i) / H(i, i));
            const double delta = gi - g(i);
            if (delta != 0.0) {
                grad += delta * H.col(i);
                g(i) = gi;
                moved = std::max(moved, std::abs(delta));
            }
        }
        if (moved < tol) break;
    }
    return g;
}

// sum_{s=0}^{min(H-1, t-t0)} g_s u_{t-s} with u given from t0 onwards.
inline double naive_convolution(const std::vector<double>& g, const std::vector<double>& u, long t0, long t) {
    double acc = 0.0;
    for (long s = 0; s < static_cast<long>(g.size()); ++s) {
        const long tau = t - s;
        if (tau < t0) break;
        acc += g[static_cast<std::size_t>(s)] * u[static_cast<std::size_t>(tau - t0)];
    }
    return acc;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

inline std::vector<double> random_binary(std::mt19937_64& rng, std::size_t n) {
    std::bernoulli_distribution coin(0.5);
    std::vector<double> v(n);
    for (auto& x : v) x = coin(rng) ? 1.0 : -1.0;
    return v;
}

inline double min_eigenvalue(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
}

}  // namespace oracle
