#pragma once

#include <Eigen/Dense>

#include "posid/kernels.hpp"
#include "posid/signals.hpp"

namespace posid {

/// Building blocks of the base program for constraint horizon m.
///
/// With phi_i the kernel convolved against the input at t_i, O = [<phi_i, phi_j>],
/// L = [phi_i(s)] for s = 0..m, K = [k(s,r)] for s,r = 0..m.
struct QPDataMatrices {
    Eigen::MatrixXd O;
    Eigen::MatrixXd L;
    Eigen::MatrixXd K;
    Eigen::VectorXd y;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    long m = 0;

    long n_samples() const { return O.rows(); }
    /// [O L; L' K].
    Eigen::MatrixXd joint_gram() const;
};

/// Lag matrix U(i,s) = u_{t_i - s} for s < lags (zero once t_i - s < t_lo).
/// Convolving any sequence f against the input at the sample times is U * f.
Eigen::MatrixXd lag_matrix(const TimeSeriesData& data, long lags);

/// Since u_t = 0 before t_lo, every convolution is a finite sum over at most
/// span() lags, so the matrices are exact (no truncated tails).
QPDataMatrices assemble_core(const KernelSpec& kernel, const TimeSeriesData& data, double rho, long m);

/// Polynomial-mode blocks for a dominant pole of multiplicity n:
/// B(i,j) = sum_s u_{t_i-s} s^j rho^s and C(i,j) = i^j rho^i, with 0^0 = 1.
struct NupMatrices {
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
};

NupMatrices assemble_nup(const TimeSeriesData& data, double rho, int n, long m);

/// Periodic Vandermonde blocks for n evenly spread poles rho * omega^k, omega = exp(2 pi j / n).
struct SnpMatrices {
    Eigen::MatrixXd Vr;  ///< Re omega^(ij), i < rows, j < n
    Eigen::MatrixXd Vi;  ///< Im omega^(ij)
    Eigen::VectorXd D;   ///< diagonal (1, rho, ..., rho^(rows-1))
    Eigen::VectorXd E;   ///< diagonal (0, 1, ..., 1) of size n
};

SnpMatrices assemble_snp(double rho, int n, long rows);

/// Convolved harmonic modes: Br(i,k) = sum_s u_{t_i-s} rho^s cos(2 pi k s / n), Bi likewise with sin.
struct SnpInputModes {
    Eigen::MatrixXd Br;
    Eigen::MatrixXd Bi;
};

SnpInputModes snp_input_modes(const TimeSeriesData& data, double rho, int n);

}  // namespace posid
