#include "posid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "posid/errors.hpp"

namespace posid {

namespace {

void require_beta(double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) {
        std::ostringstream msg;
        msg << "kernel beta must lie in [0,1), got " << beta;
        throw ConfigError(msg.str());
    }
}

}  // namespace

std::string to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::TC: return "tc";
        case KernelKind::DC: return "dc";
        case KernelKind::SS: return "ss";
        case KernelKind::FiniteSupport: return "finite";
    }
    return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "tc") return KernelKind::TC;
    if (lower == "dc") return KernelKind::DC;
    if (lower == "ss") return KernelKind::SS;
    if (lower == "finite" || lower == "finite_support") return KernelKind::FiniteSupport;
    throw ConfigError("unknown kernel kind '" + name + "' (expected tc, dc, ss or finite)");
}

KernelSpec KernelSpec::tc(double beta) {
    require_beta(beta);
    KernelSpec k;
    k.kind_ = KernelKind::TC;
    k.beta_ = beta;
    return k;
}

KernelSpec KernelSpec::dc(double beta, double gamma) {
    require_beta(beta);
    if (!(gamma >= -1.0 && gamma <= 1.0)) {
        std::ostringstream msg;
        msg << "DC kernel gamma must lie in [-1,1], got " << gamma;
        throw ConfigError(msg.str());
    }
    KernelSpec k;
    k.kind_ = KernelKind::DC;
    k.beta_ = beta;
    k.gamma_ = gamma;
    return k;
}

KernelSpec KernelSpec::ss(double beta) {
    require_beta(beta);
    KernelSpec k;
    k.kind_ = KernelKind::SS;
    k.beta_ = beta;
    return k;
}

KernelSpec KernelSpec::finite_support(Eigen::MatrixXd table) {
    if (table.rows() != table.cols() || table.rows() == 0) {
        throw ConfigError("finite-support kernel table must be a non-empty square matrix");
    }
    if (!table.allFinite()) {
        throw ConfigError("finite-support kernel table has non-finite entries");
    }
    const double asym = (table - table.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, table.cwiseAbs().maxCoeff());
    if (asym > 1e-12 * scale) {
        throw ConfigError("finite-support kernel table is not symmetric");
    }
    Eigen::MatrixXd sym = 0.5 * (table + table.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo < -1e-10 * std::max(hi, 0.0)) {
        std::ostringstream msg;
        msg << "finite-support kernel table is not positive semidefinite (min eigenvalue " << lo << ")";
        throw ConfigError(msg.str());
    }
    KernelSpec k;
    k.kind_ = KernelKind::FiniteSupport;
    k.table_ = std::move(sym);
    return k;
}

KernelSpec KernelSpec::windowed(const KernelSpec& base, int support) {
    if (support < 1) throw ConfigError("kernel window must contain at least one index");
    KernelSpec k = finite_support(gram_range(base, support, support));
    k.beta_ = base.beta_;
    k.gamma_ = base.gamma_;
    return k;
}

double KernelSpec::eval(long s, long t) const {
    switch (kind_) {
        case KernelKind::TC:
            return std::pow(beta_, static_cast<double>(std::max(s, t)));
        case KernelKind::DC:
            return std::pow(beta_, 0.5 * static_cast<double>(s + t)) *
                   std::pow(gamma_, static_cast<double>(std::labs(s - t)));
        case KernelKind::SS: {
            const double hi = static_cast<double>(std::max(s, t));
            return 0.5 * std::pow(beta_, static_cast<double>(s + t) + hi) - std::pow(beta_, 3.0 * hi) / 6.0;
        }
        case KernelKind::FiniteSupport: {
            const long n = table_.rows();
            if (s < 0 || t < 0 || s >= n || t >= n) return 0.0;
            return table_(s, t);
        }
    }
    return 0.0;
}

std::string KernelSpec::describe() const {
    std::ostringstream out;
    out << to_string(kind_);
    switch (kind_) {
        case KernelKind::TC:
        case KernelKind::SS: out << "(beta=" << beta_ << ")"; break;
        case KernelKind::DC: out << "(beta=" << beta_ << ", gamma=" << gamma_ << ")"; break;
        case KernelKind::FiniteSupport: out << "(support=" << table_.rows() << ")"; break;
    }
    return out.str();
}

Eigen::MatrixXd gram(const KernelSpec& kernel, std::span<const long> rows, std::span<const long> cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kernel.eval(rows[i], cols[j]);
        }
    }
    return out;
}

Eigen::MatrixXd gram_range(const KernelSpec& kernel, long n_rows, long n_cols) {
    Eigen::MatrixXd out(n_rows, n_cols);
    for (long j = 0; j < n_cols; ++j) {
        for (long i = 0; i < n_rows; ++i) out(i, j) = kernel.eval(i, j);
    }
    return out;
}

std::vector<long> index_range(long first, long count) {
    std::vector<long> idx(static_cast<std::size_t>(std::max(count, 0L)));
    for (long i = 0; i < count; ++i) idx[static_cast<std::size_t>(i)] = first + i;
    return idx;
}

DominationBound domination_bound(const KernelSpec& kernel) {
    switch (kernel.kind()) {
        case KernelKind::TC:
        case KernelKind::DC:
            // k(t,t) = beta^t for both
            return {1.0, std::sqrt(kernel.beta()), false};
        case KernelKind::SS:
            return {1.0 / 3.0, std::pow(kernel.beta(), 1.5), false};
        case KernelKind::FiniteSupport: {
            const auto& table = kernel.table();
            return {table.diagonal().maxCoeff(), 0.0, true};
        }
    }
    return {};
}

bool check_assumption1(const KernelSpec& kernel, double rho) {
    const DominationBound bound = domination_bound(kernel);
    if (bound.any_rate) return true;
    return bound.rho_d < rho;
}

}  // namespace posid
