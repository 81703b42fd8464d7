#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "posid/errors.hpp"
#include "posid/estimator.hpp"

using namespace posid;

namespace {

// y_t = sum_s g_s u_{t-s} + noise at t = 0..n-1, at rest.
TimeSeriesData simulate(const std::vector<double>& g, const std::vector<double>& u, double noise, std::mt19937_64& rng) {
    std::normal_distribution<double> n01;
    std::vector<double> y(u.size());
    for (long t = 0; t < static_cast<long>(u.size()); ++t) y[t] = oracle::naive_convolution(g, u, 0, t) + noise * n01(rng);
    return TimeSeriesData::at_rest(u, y);
}

std::vector<double> two_mode(long H, double rho = 0.9) {
    std::vector<double> g(H);
    for (long t = 0; t < H; ++t) g[t] = std::pow(rho, t) + 0.8 * std::pow(0.5, t);
    return g;
}

double fit(const Eigen::VectorXd& est, const std::vector<double>& truth) {
    Eigen::Map<const Eigen::VectorXd> g(truth.data(), static_cast<Eigen::Index>(truth.size()));
    const long n = std::min(est.size(), g.size());
    return 100.0 * (1.0 - (est.head(n) - g.head(n)).norm() / g.head(n).norm());
}

}  // namespace

TEST_CASE("m0 evaluation") {
    // C0 = 100 from a single sample with b = 1 and y = a_min - 10
    PositiveIdConfig cfg;
    cfg.a_min = 0.01;
    cfg.lambda = 1.0;
    cfg.rho = 0.9;
    cfg.kernel = KernelSpec::tc(0.64);  // rho_d = 0.8, C = 1
    const auto data = TimeSeriesData::at_rest({1.0}, {0.01 - 10.0});
    const auto r = compute_m0_detail(cfg, data);
    CHECK(r.a0 == doctest::Approx(0.01));
    CHECK(r.c0 == doctest::Approx(100.0));
    CHECK(r.m0 == 59);

    const double direct = std::ceil(0.5 * (std::log(100.0) - std::log(1e-4)) / (std::log(0.9) - std::log(0.8)));
    CHECK(direct == 59.0);

    long prev = r.m0;
    for (int i = 0; i < 6; ++i) {
        cfg.lambda *= 2.0;
        const long m0 = compute_m0(cfg, data);
        CHECK(m0 <= prev);
        prev = m0;
    }
}

TEST_CASE("noiseless dominant-mode data gives m0 = 0") {
    std::mt19937_64 rng(1);
    const auto u = oracle::random_binary(rng, 30);
    const auto data = simulate(std::vector<double>(60, 0.0), u, 0.0, rng);
    PositiveIdConfig cfg;
    cfg.rho = 0.9;
    cfg.kernel = KernelSpec::tc(0.5);
    std::vector<double> g(60);
    for (long t = 0; t < 60; ++t) g[t] = 2.0 * std::pow(0.9, t);
    const auto clean = simulate(g, u, 0.0, rng);
    const auto r = compute_m0_detail(cfg, clean);
    CHECK(r.a0 == doctest::Approx(2.0));
    CHECK(r.m0 == 0);
    CHECK_THROWS_AS(compute_m0(cfg, TimeSeriesData::at_rest({0.0, 0.0}, {1.0, 1.0})), ConfigError);
}

TEST_CASE("configuration validation") {
    PositiveIdConfig cfg;
    cfg.kernel = KernelSpec::tc(0.81);
    cfg.rho = 0.85;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.rho = 0.95;
    CHECK_NOTHROW(cfg.validate());
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.lambda = 1.0;
    cfg.a_min = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("QP layout") {
    std::vector<double> u(5, 0.0);
    u[0] = 1.0;
    const auto data = TimeSeriesData::at_rest(u, {1, 0.5, 0.25, 0.1, 0.05});
    PositiveIdConfig cfg;
    cfg.kernel = KernelSpec::tc(0.5);
    cfg.rho = 0.9;
    const auto qp = build_qp(cfg, data, 0);
    CHECK(qp.G.rows() == 2);
    CHECK(qp.dim() == 1 + 5 + 1);
    CHECK(qp.l(1) == cfg.a_min);
}

TEST_CASE("without positivity rows the minimizer is the closed-form ridge solution") {
    std::mt19937_64 rng(3);
    const auto u = oracle::random_binary(rng, 25);
    const auto data = simulate(two_mode(25), u, 0.05, rng);
    PositiveIdConfig cfg;
    cfg.kernel = KernelSpec::tc(0.6);
    cfg.rho = 0.9;
    cfg.lambda = 0.5;
    const auto mats = assemble_core(cfg.kernel, data, cfg.rho, 10);
    ConvexQP qp = build_qp(mats, cfg.lambda, cfg.a_min);
    qp.G = qp.G.bottomRows(1);
    qp.l = qp.l.tail(1);
    const auto sol = solve(qp);
    REQUIRE(sol.status == QPStatus::Optimal);

    // kernel ridge with an unpenalized offset: (O + lambda I) alpha = y - b a
    const long n = mats.n_samples();
    const Eigen::MatrixXd R = mats.O + cfg.lambda * Eigen::MatrixXd::Identity(n, n);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(R);
    const Eigen::VectorXd Ry = ldlt.solve(mats.y), Rb = ldlt.solve(mats.b);
    const double a = mats.b.dot(Ry) / mats.b.dot(Rb);
    REQUIRE(a > cfg.a_min);
    const Eigen::VectorXd alpha = Ry - a * Rb;
    const Eigen::VectorXd yhat_ref = a * mats.b + mats.O * alpha;

    const Eigen::VectorXd x = sol.z.tail(sol.z.size() - 1);
    const Eigen::VectorXd yhat = sol.z(0) * mats.b + mats.O * x.head(n) + mats.L * x.tail(11);
    CHECK(std::abs(sol.z(0) - a) <= 1e-8 * std::abs(a));
    CHECK((yhat - yhat_ref).norm() <= 1e-8 * yhat_ref.norm());
}

TEST_CASE("reconstruction") {
    std::mt19937_64 rng(4);
    const auto u = oracle::random_binary(rng, 12);
    const auto data = TimeSeriesData::at_rest(u, std::vector<double>(12, 0.0));
    const auto k = KernelSpec::dc(0.7, 0.5);
    const long m = 15;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(12 + m + 1);
    CHECK(reconstruct_h(zero, k, data, m, 30).values.cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd e = zero;
    e(12) = 1.0;
    const auto h = reconstruct_h(e, k, data, m, 30);
    for (long t = 0; t < 30; ++t) CHECK(h.values(t) == doctest::Approx(k.eval(0, t)).epsilon(1e-14));

    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(oracle::random_vector(rng, 12 + m + 1).data(), 12 + m + 1);
    const auto mats = assemble_core(k, data, 0.9, m);
    const Eigen::VectorXd sampled = mats.L.transpose() * x.head(12) + mats.K * x.tail(m + 1);
    const auto hx = reconstruct_h(x, k, data, m, m + 1);
    CHECK((hx.values - sampled).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("TC kernel terminates after one loop iteration") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto u = oracle::random_binary(rng, 60);
        const auto data = simulate(two_mode(60), u, 0.1, rng);
        PositiveIdConfig cfg;
        cfg.kernel = KernelSpec::tc(0.7);
        cfg.rho = 0.9;
        cfg.lambda = 1.0;
        const auto model = identify(cfg, data);
        CHECK(model.diagnostics.iterations == 1);
        CHECK(model.diagnostics.status == QPStatus::Optimal);
        CHECK(model.a >= cfg.a_min);
        CHECK(model.g.values.minCoeff() >= -1e-6 * model.g.values.maxCoeff());
    }
}

TEST_CASE("noiseless single-mode data is recovered") {
    std::mt19937_64 rng(6);
    const auto u = oracle::random_binary(rng, 60);
    std::vector<double> g(120);
    for (long t = 0; t < 120; ++t) g[t] = std::pow(0.9, t);
    const auto data = simulate(g, u, 0.0, rng);
    PositiveIdConfig cfg;
    cfg.kernel = KernelSpec::tc(0.7);
    cfg.rho = 0.9;
    cfg.lambda = 1e-6;
    const auto model = identify(cfg, data);
    CHECK(fit(model.g.values, g) >= 99.0);
    CHECK(model.diagnostics.status == QPStatus::Optimal);

    PositiveIdConfig tiny = cfg;
    tiny.lambda = 1e-8;
    const auto exact = solve_fixed_m(tiny, data, data.span());
    CHECK(std::abs(exact.a - 1.0) <= 1e-3);
    CHECK(exact.x.norm() <= 1e-3);
}

TEST_CASE("extra constraints beyond the loop horizon do not move the estimate") {
    std::mt19937_64 rng(7);
    const auto u = oracle::random_binary(rng, 40);
    const auto data = simulate(two_mode(40), u, 0.2, rng);
    PositiveIdConfig cfg;
    cfg.kernel = KernelSpec::ss(0.8);
    cfg.rho = 0.92;
    cfg.lambda = 0.3;
    const auto model = identify(cfg, data);
    const auto more = solve_fixed_m(cfg, data, model.m + 50);
    CHECK(std::abs(model.a - more.a) <= 1e-6);
    CHECK((model.g.values - more.g.values).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("predictions follow the matrix path on training times") {
    std::mt19937_64 rng(8);
    const auto u = oracle::random_binary(rng, 30);
    const auto data = simulate(two_mode(30), u, 0.1, rng);
    PositiveIdConfig cfg;
    cfg.kernel = KernelSpec::tc(0.6);
    cfg.rho = 0.9;
    const auto model = identify(cfg, data);
    const auto mats = assemble_core(cfg.kernel, data, cfg.rho, model.m);
    const long n = 30;
    const Eigen::VectorXd matrix_path =
        model.a * mats.b + mats.O * model.x.head(n) + mats.L * model.x.tail(model.m + 1);
    const Eigen::VectorXd yhat = predict(model, data, data.sample_times());
    CHECK((yhat - matrix_path).cwiseAbs().maxCoeff() < 1e-8);

    PositiveIdModel unit;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(5);
    e(0) = 1.0;
    unit.g = ImpulseResponse(e);
    const Eigen::VectorXd echo = predict(unit, data, {0, 3, 7});
    CHECK(echo(1) == u[3]);
    const auto quiet = TimeSeriesData::at_rest(std::vector<double>(10, 0.0), std::vector<double>(10, 0.0));
    CHECK(predict(model, quiet, {0, 5, 9}).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(predict(model, data, {200}), DataError);
}

TEST_CASE("identified models obey the structural invariants") {
    std::mt19937_64 rng(9);
    const auto u = oracle::random_binary(rng, 20);
    const auto data = simulate(two_mode(20), u, 0.1, rng);
    PositiveIdConfig cfg;
    cfg.kernel = KernelSpec::tc(0.5);
    cfg.rho = 0.9;
    const auto model = identify(cfg, data);
    CHECK(model.a >= cfg.a_min * (1.0 - 1e-9));
    CHECK(model.g.values.minCoeff() >= -1e-6 * model.g.values.maxCoeff());
    // feasible point (a0, 0) bounds the optimum
    CHECK(model.diagnostics.objective <= model.diagnostics.c0 + 1e-9 * (1.0 + model.diagnostics.c0));
    // Hankel rank stays within the representer dimension
    CHECK(hankel_numerical_rank(model.g, 20, 1e-6) <= 20 + model.m + 2);
    // rho^-t g_t at the end of the horizon sits within the envelope of a
    const long H = model.g.horizon();
    const auto dom = domination_bound(cfg.kernel);
    const double hnorm = std::sqrt(model.x.dot(assemble_core(cfg.kernel, data, cfg.rho, model.m).joint_gram() * model.x));
    const double ratio = model.g.values(H - 1) / std::pow(cfg.rho, H - 1);
    CHECK(std::abs(ratio - model.a) <= std::sqrt(dom.c) * hnorm * std::pow(dom.rho_d / cfg.rho, H - 1) + 1e-9);
}

TEST_CASE("adding a small dominant mode barely moves the l1 norm") {
    Eigen::VectorXd g(50);
    for (long t = 0; t < 50; ++t) g(t) = std::abs(std::sin(0.3 * t)) * std::pow(0.8, t);
    const double eps = 0.01, rho = 0.9;
    const double a = 0.99 * (1.0 - rho) * eps;
    const ImpulseResponse base(g);
    const ImpulseResponse bumped(g + a * dominant_mode(rho, 50).values);
    CHECK(std::abs(l1_norm(bumped) - l1_norm(base)) < eps);
}

TEST_CASE("model export") {
    std::mt19937_64 rng(10);
    const auto u = oracle::random_binary(rng, 15);
    const auto data = simulate(two_mode(15), u, 0.1, rng);
    PositiveIdConfig cfg;
    cfg.kernel = KernelSpec::tc(0.5);
    cfg.rho = 0.9;
    const auto model = identify(cfg, data);
    const auto stem = std::filesystem::temp_directory_path() / "posid_model";
    export_model(stem, model);
    CHECK(read_impulse_csv(stem.string() + ".csv").values == model.g.values);
    std::ifstream in(stem.string() + ".json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (const char* key : {"\"a\"", "\"rho\"", "\"lambda\"", "\"m\""}) CHECK(text.find(key) != std::string::npos);
}
