#include "representer.hpp"

namespace posid::detail {

namespace {

// Re-solve the least-squares problem with the IPM's active set imposed as
// equalities, by null-space elimination and QR (never forming F'F). Returns
// false when the result fails the feasibility or multiplier-sign checks.
bool polish(const ConvexQP& qp, const Eigen::MatrixXd& Faug, const Eigen::VectorXd& yaug, QPSolution& sol) {
    const long d = qp.dim();
    const Eigen::VectorXd slack = qp.G * sol.z - qp.l;
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
        if (sol.y_ineq(i) > slack(i)) act.push_back(i);
    }
    const long na = static_cast<long>(act.size());
    const long ne = qp.n_eq();
    Eigen::MatrixXd C(na + ne, d);
    Eigen::VectorXd rhs(na + ne);
    for (long i = 0; i < na; ++i) {
        C.row(i) = qp.G.row(act[i]);
        rhs(i) = qp.l(act[i]);
    }
    if (ne > 0) {
        C.bottomRows(ne) = qp.A;
        rhs.tail(ne) = qp.r;
    }

    Eigen::VectorXd z;
    if (na + ne == 0) {
        z = Faug.colPivHouseholderQr().solve(yaug);
    } else {
        const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qrc(C.transpose());
        const long c = qrc.rank();
        const Eigen::VectorXd zp = C.completeOrthogonalDecomposition().solve(rhs);
        if ((C * zp - rhs).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + rhs.cwiseAbs().maxCoeff())) return false;
        if (c >= d) {
            z = zp;
        } else {
            const Eigen::MatrixXd Qfull = qrc.householderQ();
            const Eigen::MatrixXd N = Qfull.rightCols(d - c);
            const Eigen::VectorXd w = (Faug * N).colPivHouseholderQr().solve(yaug - Faug * zp);
            z = zp + N * w;
        }
    }

    const double scale_l = 1.0 + (qp.l.size() ? qp.l.cwiseAbs().maxCoeff() : 0.0);
    if (qp.n_ineq() > 0 && (qp.G * z - qp.l).minCoeff() < -1e-10 * scale_l) return false;

    // multipliers from stationarity restricted to the active rows
    const Eigen::VectorXd grad = qp.P * z + qp.q;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(qp.n_ineq());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(ne);
    if (na + ne > 0) {
        const Eigen::VectorXd mult = C.transpose().completeOrthogonalDecomposition().solve(grad);
        for (long i = 0; i < na; ++i) y(act[i]) = mult(i);
        if (ne > 0) v = mult.tail(ne);
        if (na > 0 && mult.head(na).minCoeff() < -1e-8 * (1.0 + mult.head(na).cwiseAbs().maxCoeff())) return false;
    }
    const double obj = qp.objective(z);
    if (obj > sol.objective + 1e-9 * (1.0 + std::abs(sol.objective))) return false;

    QPSolution out = sol;
    out.z = z;
    out.y_ineq = y.cwiseMax(0.0);
    out.y_eq = v;
    out.objective = obj;
    const KktReport rep = kkt_certificate(qp, out);
    out.primal_residual = rep.primal_infeasibility;
    out.dual_residual = rep.stationarity;
    double comp = 0.0;
    if (qp.n_ineq() > 0) comp = out.y_ineq.dot((qp.G * z - qp.l).cwiseAbs());
    out.gap = comp / std::max(1.0, std::abs(obj));
    const double tol_d = 1e-8 * (1.0 + qp.q.cwiseAbs().maxCoeff());
    if (out.dual_residual > std::max(tol_d, sol.dual_residual)) return false;
    sol = out;
    return true;
}

}  // namespace

RepresenterSolution solve_representer(const QPDataMatrices& mats, const ModeBlock& modes, double lambda,
                                      const QPOptions& options) {
    const long nd = mats.n_samples();
    const long k = mats.K.rows();
    const long p = modes.size();

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mats.joint_gram());
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double top = ev.size() > 0 ? ev.maxCoeff() : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > 1e-13 * top) keep.push_back(i);
    }
    const long r = static_cast<long>(keep.size());
    Eigen::MatrixXd Q(ev.size(), r);
    Eigen::VectorXd root(r);
    for (long j = 0; j < r; ++j) {
        Q.col(j) = eig.eigenvectors().col(keep[j]);
        root(j) = std::sqrt(ev(keep[j]));
    }
    // Rows of S' Q' restricted to the sample block and the lag block.
    const Eigen::MatrixXd W = Q * root.asDiagonal();
    const long d = p + r;

    Eigen::MatrixXd F(nd, d);
    F.leftCols(p) = modes.fit;
    F.rightCols(r) = W.topRows(nd);

    ConvexQP qp;
    qp.P = 2.0 * F.transpose() * F;
    qp.P.diagonal().head(p) += 2.0 * modes.ridge;
    qp.P.diagonal().tail(r).array() += 2.0 * lambda;
    qp.q = -2.0 * F.transpose() * mats.y;
    qp.offset = mats.y.squaredNorm();

    const long extra = modes.G.rows();
    qp.G = Eigen::MatrixXd::Zero(k + extra, d);
    qp.G.topLeftCorner(k, p) = modes.lags;
    qp.G.topRightCorner(k, r) = W.bottomRows(k);
    if (extra > 0) qp.G.bottomLeftCorner(extra, p) = modes.G;
    qp.l = Eigen::VectorXd::Zero(k + extra);
    if (extra > 0) qp.l.tail(extra) = modes.l;
    qp.A = Eigen::MatrixXd::Zero(modes.A.rows(), d);
    if (modes.A.rows() > 0) qp.A.leftCols(p) = modes.A;
    qp.r = modes.r.size() == modes.A.rows() ? modes.r : Eigen::VectorXd::Zero(modes.A.rows());

    RepresenterSolution out;
    out.qp = solve(qp, options);
    out.rank = r;
    if (out.qp.status == QPStatus::Infeasible) return out;
    if (out.qp.status == QPStatus::Optimal) {
        Eigen::MatrixXd Faug = Eigen::MatrixXd::Zero(nd + d, d);
        Faug.topRows(nd) = F;
        Eigen::VectorXd penalty(d);
        penalty << modes.ridge, Eigen::VectorXd::Constant(r, lambda);
        Faug.bottomRows(d).diagonal() = penalty.cwiseSqrt();
        Eigen::VectorXd yaug = Eigen::VectorXd::Zero(nd + d);
        yaug.head(nd) = mats.y;
        polish(qp, Faug, yaug, out.qp);
    }
    out.theta = out.qp.z.head(p);
    const Eigen::VectorXd v = out.qp.z.tail(r);
    out.x = Q * v.cwiseQuotient(root);
    out.h_norm2 = v.squaredNorm();
    return out;
}

}  // namespace posid::detail
