#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "posid/gram.hpp"

using namespace posid;

namespace {

// Definitional assembly: every entry as an explicit double sum over kernel
// arguments up to a fixed truncation horizon.
struct Definitional {
    Eigen::MatrixXd O, L;
    Eigen::VectorXd b;
};

Definitional definitional(const KernelSpec& k, const std::vector<double>& u, long t0, const std::vector<long>& times,
                          double rho, long m, long horizon) {
    auto uu = [&](long t) { return t < t0 ? 0.0 : u[static_cast<std::size_t>(t - t0)]; };
    const long n = static_cast<long>(times.size());
    Definitional out;
    out.O.resize(n, n);
    out.L.resize(n, m + 1);
    out.b.resize(n);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j <= m; ++j) {
            double acc = 0.0;
            for (long s = 0; s < horizon; ++s) acc += uu(times[i] - s) * k.eval(s, j);
            out.L(i, j) = acc;
        }
        for (long j = 0; j < n; ++j) {
            double acc = 0.0;
            for (long s = 0; s < horizon; ++s)
                for (long r = 0; r < horizon; ++r) acc += uu(times[i] - s) * uu(times[j] - r) * k.eval(s, r);
            out.O(i, j) = acc;
        }
        double acc = 0.0;
        for (long s = 0; s < horizon; ++s) acc += uu(times[i] - s) * std::pow(rho, s);
        out.b(i) = acc;
    }
    return out;
}

}  // namespace

TEST_CASE("impulse input at rest gives raw kernel blocks") {
    const long n = 7, m = 9;
    std::vector<double> u(n, 0.0);
    u[0] = 1.0;
    const auto data = TimeSeriesData::at_rest(u, std::vector<double>(n, 0.0));
    const auto k = KernelSpec::tc(0.8);
    const auto M = assemble_core(k, data, 0.95, m);
    CHECK((M.O - gram_range(k, n, n)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((M.L - gram_range(k, n, m + 1)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((M.K - gram_range(k, m + 1, m + 1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("at rest the doubly convolved block is T K T'") {
    std::mt19937_64 rng(7);
    const long n = 15;
    const auto data = TimeSeriesData::at_rest(oracle::random_vector(rng, n), oracle::random_vector(rng, n));
    const auto k = KernelSpec::dc(0.85, 0.4);
    const auto M = assemble_core(k, data, 0.95, 20);
    const Eigen::MatrixXd T = toeplitz(data, n);
    const Eigen::MatrixXd ref = T * gram_range(k, n, n) * T.transpose();
    CHECK((M.O - ref).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((M.L - T * gram_range(k, n, 21)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("b and c vectors") {
    const auto data = TimeSeriesData::at_rest(std::vector<double>(5, 1.0), std::vector<double>(5, 0.0));
    const auto M = assemble_core(KernelSpec::tc(0.5), data, 0.5, 3);
    CHECK(M.b(0) == 1.0);
    CHECK(M.b(2) == doctest::Approx(1.75));
    CHECK(M.c(3) == doctest::Approx(0.125));
}

TEST_CASE("assembly matches the definitional double sums, with and without pre-sample inputs") {
    std::mt19937_64 rng(9);
    const auto k = KernelSpec::tc(0.7);
    for (long t0 : {0L, -6L}) {
        const long len = 14 - t0;
        const auto u = oracle::random_vector(rng, static_cast<std::size_t>(len));
        const std::vector<long> times{0, 2, 5, 6, 13};
        const TimeSeriesData data(t0, u, times, std::vector<double>(times.size(), 1.0));
        const long m = 25;
        const auto M = assemble_core(k, data, 0.9, m);
        const auto ref = definitional(k, u, t0, times, 0.9, m, 60);
        CHECK((M.O - ref.O).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((M.L - ref.L).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((M.b - ref.b).cwiseAbs().maxCoeff() < 1e-12);
        // a longer truncation of the definitional sums changes nothing
        const auto longer = definitional(k, u, t0, times, 0.9, m, 110);
        CHECK((M.O - longer.O).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((M.L - longer.L).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("joint Gram is positive semidefinite") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<long> nd(2, 20), mm(0, 30);
    std::uniform_real_distribution<double> beta(0.3, 0.95);
    for (int trial = 0; trial < 20; ++trial) {
        const long n = nd(rng);
        const auto data = TimeSeriesData::at_rest(oracle::random_binary(rng, n), std::vector<double>(n, 0.0));
        const KernelSpec k = trial % 2 ? KernelSpec::tc(beta(rng)) : KernelSpec::ss(beta(rng));
        const auto M = assemble_core(k, data, 0.99, mm(rng));
        const Eigen::MatrixXd J = M.joint_gram();
        CHECK((M.K - M.K.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(oracle::min_eigenvalue(J) >= -1e-9 * oracle::max_eigenvalue(J));
    }
}

TEST_CASE("polynomial-mode blocks") {
    std::mt19937_64 rng(15);
    const auto u = oracle::random_vector(rng, 12);
    const auto data = TimeSeriesData::at_rest(u, std::vector<double>(12, 0.0));
    const auto core = assemble_core(KernelSpec::tc(0.5), data, 0.8, 4);
    const auto one = assemble_nup(data, 0.8, 1, 4);
    CHECK((one.B.col(0) - core.b).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((one.C.col(0) - core.c).cwiseAbs().maxCoeff() < 1e-15);

    const auto c2 = assemble_nup(data, 0.5, 2, 2).C;
    Eigen::MatrixXd expect(3, 2);
    expect << 1, 0, 0.5, 0.5, 0.25, 0.5;
    CHECK((c2 - expect).cwiseAbs().maxCoeff() < 1e-15);

    const auto three = assemble_nup(data, 0.8, 3, 4);
    for (int j = 0; j < 3; ++j) {
        std::vector<double> f(12);
        for (long t = 0; t < 12; ++t) f[t] = (j == 0 ? 1.0 : std::pow(t, j)) * std::pow(0.8, t);
        for (long i = 0; i < 12; ++i) CHECK(std::abs(three.B(i, j) - oracle::naive_convolution(f, u, 0, i)) < 1e-12);
    }
}

TEST_CASE("periodic Vandermonde blocks") {
    const auto v2 = assemble_snp(0.9, 2, 2);
    Eigen::MatrixXd expect(2, 2);
    expect << 1, 1, 1, -1;
    CHECK(v2.Vr == expect);
    CHECK(v2.Vi.cwiseAbs().maxCoeff() == 0.0);

    const auto v4 = assemble_snp(0.9, 4, 4);
    Eigen::RowVectorXd re(4), im(4);
    re << 1, 0, -1, 0;
    im << 0, 1, 0, -1;
    CHECK(v4.Vr.row(1) == re);
    CHECK(v4.Vi.row(1) == im);
    CHECK(v4.E(0) == 0.0);
    CHECK(v4.E(3) == 1.0);
    CHECK(v4.D(2) == doctest::Approx(0.81));

    const auto v9 = assemble_snp(0.9, 3, 9);
    for (long i = 0; i < 3; ++i) {
        CHECK(v9.Vr.row(i) == v9.Vr.row(i + 3));
        CHECK(v9.Vi.row(i) == v9.Vi.row(i + 6));
    }
    for (long i = 0; i < 9; ++i)
        for (long j = 0; j < 3; ++j) {
            const double ph = 2.0 * M_PI * static_cast<double>(i * j) / 3.0;
            CHECK(std::abs(v9.Vr(i, j) - std::cos(ph)) < 1e-12);
            CHECK(std::abs(v9.Vi(i, j) - std::sin(ph)) < 1e-12);
        }
}

TEST_CASE("convolved harmonic modes") {
    std::mt19937_64 rng(17);
    const auto u = oracle::random_vector(rng, 10);
    const auto data = TimeSeriesData::at_rest(u, std::vector<double>(10, 0.0));
    const auto modes = snp_input_modes(data, 0.85, 3);
    for (int k = 0; k < 3; ++k) {
        std::vector<double> fc(10), fs(10);
        for (long t = 0; t < 10; ++t) {
            fc[t] = std::pow(0.85, t) * std::cos(2.0 * M_PI * k * t / 3.0);
            fs[t] = std::pow(0.85, t) * std::sin(2.0 * M_PI * k * t / 3.0);
        }
        for (long i = 0; i < 10; ++i) {
            CHECK(std::abs(modes.Br(i, k) - oracle::naive_convolution(fc, u, 0, i)) < 1e-12);
            CHECK(std::abs(modes.Bi(i, k) - oracle::naive_convolution(fs, u, 0, i)) < 1e-12);
        }
    }
}
