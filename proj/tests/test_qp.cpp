#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "posid/errors.hpp"
#include "posid/qp.hpp"

using namespace posid;

namespace {

ConvexQP random_qp(std::mt19937_64& rng, long d, long k, double rank_frac = 1.0) {
    std::normal_distribution<double> n01;
    const long rank = std::max(1L, static_cast<long>(rank_frac * d));
    Eigen::MatrixXd R(rank + 1, d);
    for (long i = 0; i < R.rows(); ++i)
        for (long j = 0; j < d; ++j) R(i, j) = n01(rng);
    ConvexQP qp;
    qp.P = R.transpose() * R;
    if (rank_frac >= 1.0) qp.P += 0.1 * Eigen::MatrixXd::Identity(d, d);
    qp.q.resize(d);
    for (long j = 0; j < d; ++j) qp.q(j) = 3.0 * n01(rng);
    qp.G.resize(k, d);
    qp.l.resize(k);
    for (long i = 0; i < k; ++i) {
        for (long j = 0; j < d; ++j) qp.G(i, j) = n01(rng);
        qp.l(i) = n01(rng);
    }
    return qp;
}

}  // namespace

TEST_CASE("unconstrained least squares returns the center") {
    ConvexQP qp;
    qp.P = 2.0 * Eigen::MatrixXd::Identity(4, 4);
    qp.q = -2.0 * Eigen::VectorXd::Ones(4);
    qp.offset = 4.0;
    const auto sol = solve(qp);
    CHECK(sol.status == QPStatus::Optimal);
    CHECK((sol.z - Eigen::VectorXd::Ones(4)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(sol.objective) < 1e-10);
    CHECK(kkt_certificate(qp, sol).max() <= 1e-10);
}

TEST_CASE("active lower bound") {
    ConvexQP qp;
    qp.P = Eigen::MatrixXd::Constant(1, 1, 2.0);
    qp.q = Eigen::VectorXd::Zero(1);
    qp.G = Eigen::MatrixXd::Ones(1, 1);
    qp.l = Eigen::VectorXd::Constant(1, 2.0);
    const auto sol = solve(qp);
    CHECK(sol.status == QPStatus::Optimal);
    CHECK(sol.z(0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(sol.objective == doctest::Approx(4.0).epsilon(1e-9));
    const auto rep = kkt_certificate(qp, sol);
    CHECK(rep.max() <= 1e-10);
}

TEST_CASE("random strictly convex problems agree with active-set enumeration") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const long d = 2 + trial % 7;
        const long k = 1 + trial % 6;
        const ConvexQP qp = random_qp(rng, d, k);
        const auto ref = oracle::active_set_enumeration(qp.P, qp.q, qp.G, qp.l);
        const auto sol = solve(qp);
        if (!ref) {
            CHECK(sol.status != QPStatus::Optimal);
            continue;
        }
        REQUIRE(sol.status == QPStatus::Optimal);
        CHECK((sol.z - ref->z).cwiseAbs().maxCoeff() < 1e-7);
        CHECK(std::abs(sol.objective - ref->objective) < 1e-7 * (1.0 + std::abs(ref->objective)));
    }
}

TEST_CASE("equality constrained least squares matches the KKT solve") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    const long d = 6, e = 2;
    Eigen::MatrixXd F(10, d);
    for (long i = 0; i < F.rows(); ++i)
        for (long j = 0; j < d; ++j) F(i, j) = n01(rng);
    Eigen::VectorXd y(10);
    for (long i = 0; i < 10; ++i) y(i) = n01(rng);
    ConvexQP qp;
    qp.P = 2.0 * F.transpose() * F;
    qp.q = -2.0 * F.transpose() * y;
    qp.A.resize(e, d);
    qp.r.resize(e);
    for (long i = 0; i < e; ++i) {
        for (long j = 0; j < d; ++j) qp.A(i, j) = n01(rng);
        qp.r(i) = n01(rng);
    }
    Eigen::MatrixXd KKT = Eigen::MatrixXd::Zero(d + e, d + e);
    KKT.topLeftCorner(d, d) = qp.P;
    KKT.topRightCorner(d, e) = qp.A.transpose();
    KKT.bottomLeftCorner(e, d) = qp.A;
    Eigen::VectorXd rhs(d + e);
    rhs << -qp.q, qp.r;
    const Eigen::VectorXd ref = KKT.fullPivLu().solve(rhs);

    const auto sol = solve(qp);
    REQUIRE(sol.status == QPStatus::Optimal);
    CHECK((sol.z - ref.head(d)).cwiseAbs().maxCoeff() < 1e-9);
    const auto rep = kkt_certificate(qp, sol);
    CHECK(rep.stationarity <= 1e-9);
    CHECK(rep.primal_infeasibility <= 1e-9);
}

TEST_CASE("perturbing the optimum shows up in the certificate") {
    ConvexQP qp;
    qp.P = 2.0 * Eigen::MatrixXd::Identity(3, 3);
    qp.q = -2.0 * Eigen::VectorXd::Ones(3);
    auto sol = solve(qp);
    REQUIRE(kkt_certificate(qp, sol).stationarity < 1e-10);
    sol.z(1) += 1e-3;
    CHECK(kkt_certificate(qp, sol).stationarity > 1e-4);
}

TEST_CASE("adding an inequality never lowers the optimum") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        ConvexQP qp = random_qp(rng, 5, 4);
        ConvexQP fewer = qp;
        fewer.G = qp.G.topRows(3);
        fewer.l = qp.l.head(3);
        const auto a = solve(fewer);
        const auto b = solve(qp);
        if (b.status == QPStatus::Infeasible) continue;
        REQUIRE(a.status == QPStatus::Optimal);
        REQUIRE(b.status == QPStatus::Optimal);
        CHECK(b.objective >= a.objective - 1e-9);
    }
}

TEST_CASE("scaling the cost leaves the argmin unchanged") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        ConvexQP qp = random_qp(rng, 6, 4);
        ConvexQP scaled = qp;
        scaled.P *= 37.5;
        scaled.q *= 37.5;
        const auto a = solve(qp);
        const auto b = solve(scaled);
        if (a.status != QPStatus::Optimal) continue;
        REQUIRE(b.status == QPStatus::Optimal);
        CHECK((a.z - b.z).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("singular cost with redundant coordinates") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        ConvexQP qp = random_qp(rng, 8, 5, 0.4);
        // keep the problem bounded: the linear term must lie in the range of P
        qp.q = qp.P * qp.q;
        const auto sol = solve(qp);
        if (sol.status == QPStatus::Infeasible) continue;
        CHECK(sol.status == QPStatus::Optimal);
        const auto rep = kkt_certificate(qp, sol);
        CHECK(rep.primal_infeasibility <= 1e-8 * (1.0 + qp.l.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("contradictory bounds are reported infeasible") {
    ConvexQP qp;
    qp.P = Eigen::MatrixXd::Identity(2, 2);
    qp.q = Eigen::VectorXd::Zero(2);
    qp.G.resize(2, 2);
    qp.G << 1, 0, -1, 0;
    qp.l.resize(2);
    qp.l << 1, 0;
    const auto sol = solve(qp);
    CHECK(sol.status == QPStatus::Infeasible);
}

TEST_CASE("indefinite cost is rejected") {
    ConvexQP qp;
    qp.P = Eigen::MatrixXd::Identity(2, 2);
    qp.P(1, 1) = -1.0;
    qp.q = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(solve(qp), ConfigError);
}

TEST_CASE("dimension mismatch is rejected") {
    ConvexQP qp;
    qp.P = Eigen::MatrixXd::Identity(2, 2);
    qp.q = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(solve(qp), ConfigError);
}

TEST_CASE("dump writes every block") {
    ConvexQP qp;
    qp.P = Eigen::MatrixXd::Identity(2, 2);
    qp.q = Eigen::VectorXd::Ones(2);
    qp.G = Eigen::MatrixXd::Ones(1, 2);
    qp.l = Eigen::VectorXd::Zero(1);
    const auto path = std::filesystem::temp_directory_path() / "posid_qp_dump.mtx";
    dump_qp(path, qp);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("% P") != std::string::npos);
    CHECK(text.find("% r") != std::string::npos);
    std::filesystem::remove(path);
}
