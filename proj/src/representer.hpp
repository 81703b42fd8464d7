#pragma once

// Representer-coefficient QP solved in the spectral coordinates of the joint Gram.
//
// With [O L; L' K] = Q diag(s) Q', the substitution x = Q s^{-1/2} v turns
// x'[O L; L' K]x into |v|^2 and both [O L]x and [L' K]x into products with
// s^{1/2} Q'. Directions with negligible s carry no RKHS norm and are dropped.

#include <Eigen/Dense>

#include "posid/gram.hpp"
#include "posid/qp.hpp"

namespace posid::detail {

// Finite-dimensional parameters entering alongside h: fit columns, their
// contribution to the constrained lags t = 0..m, a ridge, and own constraints.
struct ModeBlock {
    Eigen::MatrixXd fit;       // n_D x p
    Eigen::MatrixXd lags;      // (m+1) x p
    Eigen::VectorXd ridge;     // p, penalty theta' diag(ridge) theta
    Eigen::MatrixXd G;         // rows x p, G theta >= l
    Eigen::VectorXd l;
    Eigen::MatrixXd A;         // rows x p, A theta = r
    Eigen::VectorXd r;

    long size() const { return fit.cols(); }
};

struct RepresenterSolution {
    QPSolution qp;
    Eigen::VectorXd theta;
    Eigen::VectorXd x;
    double h_norm2 = 0.0;
    long rank = 0;
};

RepresenterSolution solve_representer(const QPDataMatrices& mats, const ModeBlock& modes, double lambda,
                                      const QPOptions& options);

}  // namespace posid::detail
