#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "posid/signals.hpp"

namespace testutil {

// y_t = sum_s g_s u_{t-s} + noise at t = 0..n-1, at rest.
inline posid::TimeSeriesData simulate(const std::vector<double>& g, const std::vector<double>& u, double noise,
                                      std::mt19937_64& rng) {
    std::normal_distribution<double> n01;
    std::vector<double> y(u.size());
    for (long t = 0; t < static_cast<long>(u.size()); ++t) y[t] = oracle::naive_convolution(g, u, 0, t) + noise * n01(rng);
    return posid::TimeSeriesData::at_rest(u, y);
}

inline double fit_percent(const Eigen::VectorXd& est, const std::vector<double>& truth) {
    Eigen::Map<const Eigen::VectorXd> g(truth.data(), static_cast<Eigen::Index>(truth.size()));
    const long n = std::min(est.size(), g.size());
    return 100.0 * (1.0 - (est.head(n) - g.head(n)).norm() / g.head(n).norm());
}

// T(i, s) = u_{t_i - s}, s < n_g
inline Eigen::MatrixXd toeplitz_block(const posid::TimeSeriesData& data, long ng) {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.size()), ng);
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (long s = 0; s < ng; ++s) {
            const long t = data.sample_times()[i] - s;
            if (t >= data.input_start()) T(static_cast<Eigen::Index>(i), s) = data.input(t);
        }
    }
    return T;
}

}  // namespace testutil
