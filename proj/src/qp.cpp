#include "posid/qp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include "posid/errors.hpp"
#include "posid/signals.hpp"

namespace posid {

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double col_inf_norm(const Eigen::MatrixXd& M, Eigen::Index j) {
    return M.rows() == 0 ? 0.0 : M.col(j).cwiseAbs().maxCoeff();
}

double row_inf_norm(const Eigen::MatrixXd& M, Eigen::Index i) {
    return M.cols() == 0 ? 0.0 : M.row(i).cwiseAbs().maxCoeff();
}

double safe_inv_sqrt(double v) { return v > 1e-300 ? 1.0 / std::sqrt(v) : 1.0; }

// Problem in equilibrated coordinates: z = D zs, y = EG ys / c, v = EA vs / c.
struct Scaled {
    Eigen::MatrixXd P, G, A;
    Eigen::VectorXd q, l, r;
    Eigen::VectorXd D, EG, EA;
    double c = 1.0;
};

Scaled equilibrate(const ConvexQP& p, int iterations) {
    Scaled s;
    const long d = p.dim();
    s.P = p.P;
    s.q = p.q;
    s.G = p.G;
    s.l = p.l;
    s.A = p.A;
    s.r = p.r;
    s.D = Eigen::VectorXd::Ones(d);
    s.EG = Eigen::VectorXd::Ones(p.n_ineq());
    s.EA = Eigen::VectorXd::Ones(p.n_eq());

    for (int it = 0; it < iterations; ++it) {
        Eigen::VectorXd dj(d);
        for (long j = 0; j < d; ++j) {
            const double n = std::max({col_inf_norm(s.P, j), col_inf_norm(s.G, j), col_inf_norm(s.A, j)});
            dj(j) = safe_inv_sqrt(n);
        }
        Eigen::VectorXd eg(s.G.rows());
        for (long i = 0; i < s.G.rows(); ++i) eg(i) = safe_inv_sqrt(row_inf_norm(s.G, i));
        Eigen::VectorXd ea(s.A.rows());
        for (long i = 0; i < s.A.rows(); ++i) ea(i) = safe_inv_sqrt(row_inf_norm(s.A, i));

        s.P = dj.asDiagonal() * s.P * dj.asDiagonal();
        s.q = dj.cwiseProduct(s.q);
        s.G = eg.asDiagonal() * s.G * dj.asDiagonal();
        s.l = eg.cwiseProduct(s.l);
        s.A = ea.asDiagonal() * s.A * dj.asDiagonal();
        s.r = ea.cwiseProduct(s.r);
        s.D = s.D.cwiseProduct(dj);
        s.EG = s.EG.cwiseProduct(eg);
        s.EA = s.EA.cwiseProduct(ea);
    }

    double pnorm = 0.0;
    for (long j = 0; j < d; ++j) pnorm += col_inf_norm(s.P, j);
    pnorm = d > 0 ? pnorm / static_cast<double>(d) : 0.0;
    const double scale = std::max(pnorm, inf_norm(s.q));
    s.c = scale > 1e-300 ? std::clamp(1.0 / scale, 1e-6, 1e6) : 1.0;
    s.P *= s.c;
    s.q *= s.c;
    return s;
}

struct Residuals {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
    double objective = 0.0;
};

Residuals measure(const ConvexQP& p, const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& v) {
    Residuals out;
    out.objective = p.objective(z);
    double prim = 0.0;
    Eigen::VectorXd slack;
    if (p.n_ineq() > 0) {
        slack = p.G * z - p.l;
        prim = std::max(prim, (-slack).cwiseMax(0.0).maxCoeff());
    }
    if (p.n_eq() > 0) prim = std::max(prim, inf_norm(p.A * z - p.r));
    out.primal = prim;
    Eigen::VectorXd stat = p.P * z + p.q;
    if (p.n_ineq() > 0) stat -= p.G.transpose() * y;
    if (p.n_eq() > 0) stat -= p.A.transpose() * v;
    out.dual = inf_norm(stat);
    double comp = 0.0;
    if (p.n_ineq() > 0) comp = y.cwiseMax(0.0).dot(slack.cwiseAbs());
    out.gap = comp / std::max(1.0, std::abs(out.objective));
    return out;
}

// Largest step in (0, 1] keeping v + alpha*dv >= 0.
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
    }
    return alpha;
}

class NewtonSystem {
public:
    NewtonSystem(const Scaled& sp, double reg) : sp_(sp), reg_(reg) {}

    // Factor P + G'WG + reg*I and, with equalities, the Schur complement A M^-1 A'.
    bool factor(const Eigen::VectorXd& w) {
        Eigen::MatrixXd M = sp_.P;
        if (sp_.G.rows() > 0) M.noalias() += sp_.G.transpose() * w.asDiagonal() * sp_.G;
        double reg = reg_;
        for (int attempt = 0; attempt < 8; ++attempt) {
            Eigen::MatrixXd Mr = M;
            Mr.diagonal().array() += reg;
            llt_.compute(Mr);
            if (llt_.info() == Eigen::Success) break;
            reg *= 100.0;
        }
        if (llt_.info() != Eigen::Success) return false;
        if (sp_.A.rows() > 0) {
            MinvAt_ = llt_.solve(sp_.A.transpose());
            Eigen::MatrixXd S = sp_.A * MinvAt_;
            const double sreg = 1e-13 * std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
            S.diagonal().array() += sreg;
            schur_.compute(S);
            if (schur_.info() != Eigen::Success) return false;
        }
        return true;
    }

    // Solve M dz - A' dv = rhs1, A dz = rhs2.
    void solve(const Eigen::VectorXd& rhs1, const Eigen::VectorXd& rhs2, Eigen::VectorXd& dz,
               Eigen::VectorXd& dv) const {
        Eigen::VectorXd base = llt_.solve(rhs1);
        if (sp_.A.rows() > 0) {
            dv = schur_.solve(rhs2 - sp_.A * base);
            dz = base + MinvAt_ * dv;
        } else {
            dv.resize(0);
            dz = std::move(base);
        }
    }

private:
    const Scaled& sp_;
    double reg_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::MatrixXd MinvAt_;
    Eigen::LDLT<Eigen::MatrixXd> schur_;
};

void check_convexity(ConvexQP& p) {
    if (p.dim() == 0) return;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(p.P);
    const Eigen::VectorXd dd = ldlt.vectorD();
    const double hi = std::max(dd.cwiseAbs().maxCoeff(), 1e-300);
    const double lo = dd.minCoeff();
    if (lo < -1e-8 * hi) {
        std::ostringstream msg;
        msg << "quadratic cost is not positive semidefinite (pivot " << lo << " vs " << hi << ")";
        throw ConfigError(msg.str());
    }
    if (lo < 0.0) {
        p.P.diagonal().array() += 1e-12 * p.P.trace() / static_cast<double>(p.dim());
    }
}

// Equality-constrained re-solve on the active face {G_i z = l_i : y_i > slack_i} plus A z = r.
// Returns false when the face solution is not a valid optimum.
bool polish_active_set(const ConvexQP& p, QPSolution& sol, double tol_p, double tol_d) {
    const long d = p.dim();
    const long k = p.n_ineq();
    const long e = p.n_eq();
    std::vector<long> active;
    if (k > 0) {
        const Eigen::VectorXd slack = p.G * sol.z - p.l;
        for (long i = 0; i < k; ++i) {
            if (sol.y_ineq(i) > slack(i)) active.push_back(i);
        }
    }
    const long na = static_cast<long>(active.size());
    const long nc = na + e;
    Eigen::MatrixXd C(nc, d);
    Eigen::VectorXd c(nc);
    for (long i = 0; i < na; ++i) {
        C.row(i) = p.G.row(active[i]);
        c(i) = p.l(active[i]);
    }
    if (e > 0) {
        C.bottomRows(e) = p.A;
        c.tail(e) = p.r;
    }

    Eigen::VectorXd z;
    if (nc == 0) {
        z = p.P.completeOrthogonalDecomposition().solve(-p.q);
    } else {
        const Eigen::VectorXd zp = C.completeOrthogonalDecomposition().solve(c);
        if (inf_norm(C * zp - c) > tol_p) return false;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C.transpose());
        const long rank = qr.rank();
        if (rank < d) {
            const Eigen::MatrixXd Q = qr.householderQ();
            const Eigen::MatrixXd Z = Q.rightCols(d - rank);
            const Eigen::MatrixXd H = Z.transpose() * p.P * Z;
            const Eigen::VectorXd w = H.completeOrthogonalDecomposition().solve(-Z.transpose() * (p.P * zp + p.q));
            z = zp + Z * w;
        } else {
            z = zp;
        }
    }

    Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(e);
    const Eigen::VectorXd grad = p.P * z + p.q;
    if (nc > 0) {
        const Eigen::VectorXd mult = C.transpose().completeOrthogonalDecomposition().solve(grad);
        const double scale = std::max(1.0, inf_norm(mult));
        for (long i = 0; i < na; ++i) {
            if (mult(i) < -1e-8 * scale) return false;
            y(active[i]) = std::max(mult(i), 0.0);
        }
        if (e > 0) v = mult.tail(e);
    }
    const Residuals res = measure(p, z, y, v);
    if (!(res.primal <= tol_p && res.dual <= tol_d)) return false;
    if (res.objective > sol.objective + 1e-9 * std::max(1.0, std::abs(sol.objective))) return false;
    if (res.primal > std::max(sol.primal_residual, 1e-3 * tol_p)) return false;
    sol.z = z;
    sol.y_ineq = y;
    sol.y_eq = v;
    sol.objective = res.objective;
    sol.primal_residual = res.primal;
    sol.dual_residual = res.dual;
    sol.gap = res.gap;
    return true;
}

}  // namespace

void ConvexQP::check_dimensions() const {
    const long d = q.size();
    auto fail = [](const std::string& what) { throw ConfigError("QP dimension mismatch: " + what); };
    if (P.rows() != d || P.cols() != d) fail("P must be d x d");
    if (G.cols() != d && G.rows() > 0) fail("G must have d columns");
    if (l.size() != G.rows()) fail("l must match the rows of G");
    if (A.cols() != d && A.rows() > 0) fail("A must have d columns");
    if (r.size() != A.rows()) fail("r must match the rows of A");
    if (!P.allFinite() || !q.allFinite() || !G.allFinite() || !l.allFinite() || !A.allFinite() || !r.allFinite()) {
        throw ConfigError("QP data contains non-finite entries");
    }
}

double ConvexQP::objective(const Eigen::VectorXd& z) const { return 0.5 * z.dot(P * z) + q.dot(z) + offset; }

std::string to_string(QPStatus status) {
    switch (status) {
        case QPStatus::Optimal: return "optimal";
        case QPStatus::MaxIterations: return "max_iterations";
        case QPStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

double KktReport::max() const {
    return std::max({stationarity, primal_infeasibility, dual_infeasibility, complementarity});
}

QPSolution solve(const ConvexQP& input, const QPOptions& options) {
    input.check_dimensions();
    ConvexQP problem = input;
    problem.P = 0.5 * (problem.P + problem.P.transpose());
    if (problem.G.rows() == 0) problem.G.resize(0, problem.dim());
    if (problem.A.rows() == 0) problem.A.resize(0, problem.dim());
    check_convexity(problem);

    const long d = problem.dim();
    const long k = problem.n_ineq();
    const long e = problem.n_eq();
    const Scaled sp = equilibrate(problem, options.ruiz_iterations);

    const double tol_p = options.feas_tol * (1.0 + std::max(inf_norm(problem.l), inf_norm(problem.r)));
    const double tol_d = options.feas_tol * (1.0 + inf_norm(problem.q));
    const double tol_g = options.gap_tol;

    auto unscale = [&](const Eigen::VectorXd& zs, const Eigen::VectorXd& ys, const Eigen::VectorXd& vs,
                       Eigen::VectorXd& z, Eigen::VectorXd& y, Eigen::VectorXd& v) {
        z = sp.D.cwiseProduct(zs);
        y = sp.EG.cwiseProduct(ys) / sp.c;
        v = sp.EA.cwiseProduct(vs) / sp.c;
    };

    NewtonSystem newton(sp, options.regularization);

    // Starting point from a regularized least-squares fit of the constraints.
    Eigen::VectorXd zs, s, ys, vs;
    {
        Eigen::MatrixXd M = sp.P;
        M.noalias() += sp.G.transpose() * sp.G;
        M.noalias() += sp.A.transpose() * sp.A;
        M.diagonal().array() += 1e-6;
        Eigen::VectorXd rhs = -sp.q;
        rhs.noalias() += sp.G.transpose() * sp.l;
        rhs.noalias() += sp.A.transpose() * sp.r;
        zs = M.ldlt().solve(rhs);
        s = sp.G * zs - sp.l;
        s = s.cwiseMax(1.0);
        ys = Eigen::VectorXd::Ones(k);
        vs = Eigen::VectorXd::Zero(e);
    }

    QPSolution best;
    best.status = QPStatus::MaxIterations;
    double best_merit = std::numeric_limits<double>::infinity();
    bool reached = false;
    int since_improve = 0;

    auto record = [&](int iter) -> double {
        Eigen::VectorXd z, y, v;
        unscale(zs, ys, vs, z, y, v);
        const Residuals res = measure(problem, z, y, v);
        const double merit = std::max({res.primal / tol_p, res.dual / tol_d, res.gap / tol_g});
        if (std::isfinite(merit) && merit < best_merit) {
            best_merit = merit;
            best.z = z;
            best.y_ineq = y;
            best.y_eq = v;
            best.objective = res.objective;
            best.primal_residual = res.primal;
            best.dual_residual = res.dual;
            best.gap = res.gap;
            best.iterations = iter;
            since_improve = 0;
        } else {
            ++since_improve;
        }
        return merit;
    };

    for (int iter = 0; iter <= options.max_iterations; ++iter) {
        const double merit = record(iter);

        if (merit <= 1.0) reached = true;
        if (best_merit <= options.polish_factor) break;
        if (reached && since_improve >= 5) break;
        if (iter == options.max_iterations) break;

        Eigen::VectorXd rd = sp.P * zs + sp.q;
        if (k > 0) rd.noalias() -= sp.G.transpose() * ys;
        if (e > 0) rd.noalias() -= sp.A.transpose() * vs;
        const Eigen::VectorXd rp = sp.G * zs - s - sp.l;
        const Eigen::VectorXd re = sp.A * zs - sp.r;
        const double mu = k > 0 ? s.dot(ys) / static_cast<double>(k) : 0.0;

        // Farkas ray: G'y + A'v ~ 0 with l'y + r'v > 0 certifies an empty feasible set.
        if (k + e > 0) {
            Eigen::VectorXd y, v, zdummy;
            unscale(zs, ys, vs, zdummy, y, v);
            const double lift = problem.l.dot(y) + problem.r.dot(v);
            if (lift > 0.0 && (inf_norm(y) + inf_norm(v)) > 1e6 * (1.0 + inf_norm(problem.q))) {
                Eigen::VectorXd ray = Eigen::VectorXd::Zero(d);
                if (k > 0) ray += problem.G.transpose() * y;
                if (e > 0) ray += problem.A.transpose() * v;
                if (inf_norm(ray) <= 1e-7 * lift) {
                    best.status = QPStatus::Infeasible;
                    best.iterations = iter;
                    return best;
                }
            }
        }

        if (!newton.factor(k > 0 ? Eigen::VectorXd(ys.cwiseQuotient(s)) : Eigen::VectorXd(0))) break;

        auto direction = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dz, Eigen::VectorXd& ds,
                             Eigen::VectorXd& dy, Eigen::VectorXd& dv) {
            Eigen::VectorXd rhs1 = -rd;
            if (k > 0) rhs1.noalias() -= sp.G.transpose() * (rc + ys.cwiseProduct(rp)).cwiseQuotient(s);
            newton.solve(rhs1, -re, dz, dv);
            ds = sp.G * dz + rp;
            dy = -(rc + ys.cwiseProduct(ds)).cwiseQuotient(s);
        };

        Eigen::VectorXd dz, ds, dy, dv;
        double alpha = 1.0;
        if (k > 0) {
            direction(s.cwiseProduct(ys), dz, ds, dy, dv);
            const double a_aff = std::min(max_step(s, ds), max_step(ys, dy));
            const double mu_aff = (s + a_aff * ds).dot(ys + a_aff * dy) / static_cast<double>(k);
            const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
            // Below this floor the scaling W = y/s overflows without improving the gap.
            const double target = std::max(sigma * mu, 1e-14);
            Eigen::VectorXd rc = s.cwiseProduct(ys) + ds.cwiseProduct(dy);
            rc.array() -= target;
            direction(rc, dz, ds, dy, dv);
            alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(ys, dy)));
        } else {
            direction(Eigen::VectorXd(0), dz, ds, dy, dv);
        }

        zs += alpha * dz;
        if (k > 0) {
            s += alpha * ds;
            ys += alpha * dy;
            // keep strictly interior
            s = s.cwiseMax(1e-300);
            ys = ys.cwiseMax(1e-300);
        }
        if (e > 0) vs += alpha * dv;
        if (alpha < 1e-12 && reached) break;
    }

    best.status = best_merit <= 1.0 ? QPStatus::Optimal : QPStatus::MaxIterations;
    if (best.status == QPStatus::Optimal && options.active_set_polish) polish_active_set(problem, best, tol_p, tol_d);
    return best;
}

KktReport kkt_certificate(const ConvexQP& problem, const QPSolution& solution) {
    KktReport rep;
    const Eigen::VectorXd& z = solution.z;
    Eigen::VectorXd stat = problem.P * z + problem.q;
    if (problem.n_ineq() > 0) stat -= problem.G.transpose() * solution.y_ineq;
    if (problem.n_eq() > 0) stat -= problem.A.transpose() * solution.y_eq;
    rep.stationarity = inf_norm(stat);
    if (problem.n_ineq() > 0) {
        const Eigen::VectorXd slack = problem.G * z - problem.l;
        rep.primal_infeasibility = (-slack).cwiseMax(0.0).maxCoeff();
        rep.dual_infeasibility = (-solution.y_ineq).cwiseMax(0.0).maxCoeff();
        rep.complementarity = solution.y_ineq.cwiseProduct(slack).cwiseAbs().maxCoeff();
    }
    if (problem.n_eq() > 0) {
        rep.primal_infeasibility = std::max(rep.primal_infeasibility, inf_norm(problem.A * z - problem.r));
    }
    return rep;
}

namespace {

void write_block(std::ostream& out, const std::string& name, const Eigen::MatrixXd& M) {
    out << "%%MatrixMarket matrix array real general\n% " << name << "\n" << M.rows() << " " << M.cols() << "\n";
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        for (Eigen::Index i = 0; i < M.rows(); ++i) out << M(i, j) << "\n";
    }
}

}  // namespace

void dump_qp(const std::filesystem::path& path, const ConvexQP& problem) {
    std::ostringstream out;
    out << std::setprecision(17);
    write_block(out, "P", problem.P);
    write_block(out, "q", problem.q);
    write_block(out, "G", problem.G);
    write_block(out, "l", problem.l);
    write_block(out, "A", problem.A);
    write_block(out, "r", problem.r);
    write_file_atomic(path, out.str());
}

}  // namespace posid
