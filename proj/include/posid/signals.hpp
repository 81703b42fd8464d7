#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace posid {

/// Truncated impulse response g_0 .. g_{H-1}; entries beyond the horizon are zero.
struct ImpulseResponse {
    Eigen::VectorXd values;

    ImpulseResponse() = default;
    explicit ImpulseResponse(Eigen::VectorXd v) : values(std::move(v)) {}

    long horizon() const { return values.size(); }
    double operator[](long s) const { return s < values.size() ? values(s) : 0.0; }
};

/// Sampled input/output record.
///
/// Inputs are stored densely from the support start t_lo <= 0 onwards (u_t = 0 for
/// t < t_lo). Outputs are known only at the integer sample times, which must be
/// strictly increasing and covered by the input record.
class TimeSeriesData {
public:
    TimeSeriesData(long input_start, std::vector<double> inputs, std::vector<long> sample_times,
                   std::vector<double> outputs);

    /// System at rest from t = 0, sampled at t = 0..n-1. Inputs may extend past n.
    static TimeSeriesData at_rest(std::vector<double> inputs, std::vector<double> outputs);

    long input_start() const { return input_start_; }
    /// Last time index with a recorded input.
    long input_end() const { return input_start_ + static_cast<long>(inputs_.size()) - 1; }
    double input(long t) const;
    const std::vector<double>& inputs() const { return inputs_; }

    std::size_t size() const { return sample_times_.size(); }
    const std::vector<long>& sample_times() const { return sample_times_; }
    const std::vector<double>& outputs() const { return outputs_; }
    long last_sample_time() const { return sample_times_.back(); }
    Eigen::VectorXd output_vector() const;

    /// t_{n-1} - t_lo + 1: the number of input lags that reach the last sample.
    long span() const { return last_sample_time() - input_start_ + 1; }

    /// Sampled at 0..n-1 with inputs starting at 0.
    bool is_at_rest() const;

    /// Same input history, only the listed samples retained.
    TimeSeriesData subset(std::span<const std::size_t> indices) const;
    /// Same input history, outputs replaced.
    TimeSeriesData with_outputs(std::vector<double> outputs) const;

private:
    long input_start_;
    std::vector<double> inputs_;
    std::vector<long> sample_times_;
    std::vector<double> outputs_;
};

/// sum_{s=0}^{min(H-1, t-t_lo)} g_s u_{t-s}, summed with s ascending.
double convolve(const ImpulseResponse& g, const TimeSeriesData& data, long t);

/// Lower-triangular [u_{i-j}] of size n x n. Requires at-rest data.
Eigen::MatrixXd toeplitz(const TimeSeriesData& data, long n);

/// (rho^t) for t < horizon.
ImpulseResponse dominant_mode(double rho, long horizon);

/// N x N window [g_{i+j}] of the Hankel operator.
Eigen::MatrixXd hankel_window(const ImpulseResponse& g, long size);

/// Number of singular values of the N x N Hankel window above tol * sigma_max.
long hankel_numerical_rank(const ImpulseResponse& g, long size, double tol = 1e-8);

double l1_norm(const ImpulseResponse& g);

/// Reads a `t,u,y` CSV. Rows must have consecutive integer t; empty y marks an
/// input-only row.
TimeSeriesData read_series_csv(const std::filesystem::path& path);
/// Whitespace separated columns `t u y` (the DAISY layout).
TimeSeriesData read_series_whitespace(const std::filesystem::path& path);
/// Dispatches on extension: `.csv` uses the CSV reader, anything else the whitespace one.
TimeSeriesData read_series(const std::filesystem::path& path);

void write_series_csv(const std::filesystem::path& path, const TimeSeriesData& data);
void write_impulse_csv(const std::filesystem::path& path, const ImpulseResponse& g);
ImpulseResponse read_impulse_csv(const std::filesystem::path& path);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace posid
