#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace posid {

enum class KernelKind { TC, DC, SS, FiniteSupport };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// Stable Mercer kernel on Z+ x Z+. Immutable once constructed.
class KernelSpec {
public:
    static KernelSpec tc(double beta);
    static KernelSpec dc(double beta, double gamma);
    static KernelSpec ss(double beta);
    /// Kernel equal to `table` on [0,n)^2 and zero elsewhere.
    static KernelSpec finite_support(Eigen::MatrixXd table);
    /// Restriction of `base` to the window [0,n)^2.
    static KernelSpec windowed(const KernelSpec& base, int support);

    KernelKind kind() const { return kind_; }
    double beta() const { return beta_; }
    double gamma() const { return gamma_; }
    int support() const { return static_cast<int>(table_.rows()); }
    const Eigen::MatrixXd& table() const { return table_; }

    double eval(long s, long t) const;

    std::string describe() const;

private:
    KernelSpec() = default;

    KernelKind kind_ = KernelKind::TC;
    double beta_ = 0.0;
    double gamma_ = 0.0;
    Eigen::MatrixXd table_;
};

/// Matrix [k(rows[i], cols[j])].
Eigen::MatrixXd gram(const KernelSpec& kernel, std::span<const long> rows, std::span<const long> cols);
/// Matrix [k(i,j)] for 0 <= i < n_rows, 0 <= j < n_cols.
Eigen::MatrixXd gram_range(const KernelSpec& kernel, long n_rows, long n_cols);

std::vector<long> index_range(long first, long count);

/// Envelope k(t,t) <= c * rho_d^(2t).
struct DominationBound {
    double c = 0.0;
    double rho_d = 0.0;
    /// Set for finite-support kernels: the diagonal vanishes beyond the support,
    /// so any rho_d in (0, rho) works and `rho_d` holds the sentinel 0.
    bool any_rate = false;
};

DominationBound domination_bound(const KernelSpec& kernel);

/// Whether the kernel diagonal is dominated by rho^(2t) at a strictly faster rate.
bool check_assumption1(const KernelSpec& kernel, double rho);

}  // namespace posid
