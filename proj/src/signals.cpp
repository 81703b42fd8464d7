#include "posid/signals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "posid/errors.hpp"

namespace posid {

TimeSeriesData::TimeSeriesData(long input_start, std::vector<double> inputs, std::vector<long> sample_times,
                               std::vector<double> outputs)
    : input_start_(input_start),
      inputs_(std::move(inputs)),
      sample_times_(std::move(sample_times)),
      outputs_(std::move(outputs)) {
    if (input_start_ > 0) throw DataError("input support must start at t <= 0");
    if (sample_times_.empty()) throw DataError("time series has no samples");
    if (sample_times_.size() != outputs_.size()) {
        throw DataError("sample_times and outputs differ in length");
    }
    for (std::size_t i = 1; i < sample_times_.size(); ++i) {
        if (sample_times_[i] <= sample_times_[i - 1]) throw DataError("sample times must be strictly increasing");
    }
    if (sample_times_.front() < input_start_) throw DataError("sample time precedes the input support start");
    if (sample_times_.back() > input_end()) {
        std::ostringstream msg;
        msg << "inputs end at t=" << input_end() << " but a sample is requested at t=" << sample_times_.back();
        throw DataError(msg.str());
    }
    for (double u : inputs_) {
        if (!std::isfinite(u)) throw DataError("non-finite input value");
    }
    for (double y : outputs_) {
        if (!std::isfinite(y)) throw DataError("non-finite output value");
    }
}

TimeSeriesData TimeSeriesData::at_rest(std::vector<double> inputs, std::vector<double> outputs) {
    std::vector<long> times(outputs.size());
    for (std::size_t i = 0; i < times.size(); ++i) times[i] = static_cast<long>(i);
    return TimeSeriesData(0, std::move(inputs), std::move(times), std::move(outputs));
}

double TimeSeriesData::input(long t) const {
    if (t < input_start_) return 0.0;
    if (t > input_end()) {
        std::ostringstream msg;
        msg << "no input recorded at t=" << t << " (inputs end at t=" << input_end() << ")";
        throw DataError(msg.str());
    }
    return inputs_[static_cast<std::size_t>(t - input_start_)];
}

Eigen::VectorXd TimeSeriesData::output_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(outputs_.data(), static_cast<Eigen::Index>(outputs_.size()));
}

bool TimeSeriesData::is_at_rest() const {
    if (input_start_ != 0) return false;
    for (std::size_t i = 0; i < sample_times_.size(); ++i) {
        if (sample_times_[i] != static_cast<long>(i)) return false;
    }
    return true;
}

TimeSeriesData TimeSeriesData::subset(std::span<const std::size_t> indices) const {
    std::vector<long> times;
    std::vector<double> outs;
    times.reserve(indices.size());
    outs.reserve(indices.size());
    for (std::size_t idx : indices) {
        if (idx >= sample_times_.size()) throw DataError("subset index out of range");
        times.push_back(sample_times_[idx]);
        outs.push_back(outputs_[idx]);
    }
    return TimeSeriesData(input_start_, inputs_, std::move(times), std::move(outs));
}

TimeSeriesData TimeSeriesData::with_outputs(std::vector<double> outputs) const {
    return TimeSeriesData(input_start_, inputs_, sample_times_, std::move(outputs));
}

double convolve(const ImpulseResponse& g, const TimeSeriesData& data, long t) {
    if (t < data.input_start()) {
        std::ostringstream msg;
        msg << "convolution requested at t=" << t << " before the input support start " << data.input_start();
        throw DataError(msg.str());
    }
    const long last = std::min(g.horizon() - 1, t - data.input_start());
    double acc = 0.0;
    for (long s = 0; s <= last; ++s) acc += g.values(s) * data.input(t - s);
    return acc;
}

Eigen::MatrixXd toeplitz(const TimeSeriesData& data, long n) {
    if (data.input_start() != 0) throw DataError("toeplitz construction requires data at rest from t=0");
    if (n < 1) throw DataError("toeplitz size must be positive");
    if (n - 1 > data.input_end()) throw DataError("toeplitz size exceeds the recorded inputs");
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
    for (long j = 0; j < n; ++j) {
        for (long i = j; i < n; ++i) T(i, j) = data.input(i - j);
    }
    return T;
}

ImpulseResponse dominant_mode(double rho, long horizon) {
    Eigen::VectorXd v(horizon);
    for (long t = 0; t < horizon; ++t) v(t) = std::pow(rho, static_cast<double>(t));
    return ImpulseResponse(std::move(v));
}

Eigen::MatrixXd hankel_window(const ImpulseResponse& g, long size) {
    if (size < 1) throw DataError("Hankel window must be at least 1x1");
    if (2 * size - 1 > g.horizon()) {
        std::ostringstream msg;
        msg << "a " << size << "x" << size << " Hankel window needs " << 2 * size - 1
            << " coefficients but the horizon is " << g.horizon();
        throw DataError(msg.str());
    }
    Eigen::MatrixXd Hk(size, size);
    for (long j = 0; j < size; ++j) {
        for (long i = 0; i < size; ++i) Hk(i, j) = g.values(i + j);
    }
    return Hk;
}

long hankel_numerical_rank(const ImpulseResponse& g, long size, double tol) {
    if (2 * size > g.horizon()) {
        std::ostringstream msg;
        msg << "Hankel window " << size << " exceeds half the horizon " << g.horizon();
        throw DataError(msg.str());
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(hankel_window(g, size));
    const Eigen::VectorXd& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    long rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > tol * sv(0)) ++rank;
    }
    return rank;
}

double l1_norm(const ImpulseResponse& g) { return g.values.cwiseAbs().sum(); }

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& text, const std::filesystem::path& path, std::size_t line_no,
                    const char* column) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        std::ostringstream msg;
        msg << path.string() << ":" << line_no << ": cannot parse " << column << " value '" << text << "'";
        throw DataError(msg.str());
    }
}

struct RawRow {
    long t;
    double u;
    bool has_y;
    double y;
};

TimeSeriesData from_rows(const std::vector<RawRow>& rows, const std::filesystem::path& path) {
    if (rows.empty()) throw DataError(path.string() + ": no data rows");
    // Rows may start before t=0; the support start is clamped to <= 0.
    const long first = rows.front().t;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].t != rows[i - 1].t + 1) {
            std::ostringstream msg;
            msg << path.string() << ": time index " << rows[i].t << " does not follow " << rows[i - 1].t;
            throw DataError(msg.str());
        }
    }
    const long start = std::min(first, 0L);
    std::vector<double> u(static_cast<std::size_t>(rows.back().t - start + 1), 0.0);
    std::vector<long> times;
    std::vector<double> y;
    for (const auto& r : rows) {
        u[static_cast<std::size_t>(r.t - start)] = r.u;
        if (r.has_y) {
            times.push_back(r.t);
            y.push_back(r.y);
        }
    }
    if (times.empty()) throw DataError(path.string() + ": no output samples");
    return TimeSeriesData(start, std::move(u), std::move(times), std::move(y));
}

std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path.string() + "'");
    return in;
}

}  // namespace

TimeSeriesData read_series_csv(const std::filesystem::path& path) {
    std::ifstream in = open_for_read(path);
    std::string line;
    std::size_t line_no = 0;
    int col_t = -1, col_u = -1, col_y = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    const auto header = split_csv(trim(line));
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "t") col_t = static_cast<int>(i);
        if (header[i] == "u") col_u = static_cast<int>(i);
        if (header[i] == "y") col_y = static_cast<int>(i);
    }
    if (col_t < 0 || col_u < 0 || col_y < 0) {
        throw DataError(path.string() + ": expected a header with columns t,u,y");
    }
    const std::size_t need = static_cast<std::size_t>(std::max({col_t, col_u, col_y})) + 1;
    std::vector<RawRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto f = split_csv(line);
        if (f.size() < need) f.resize(need);
        RawRow r{};
        const double t = parse_number(f[static_cast<std::size_t>(col_t)], path, line_no, "t");
        if (t != std::floor(t)) {
            std::ostringstream msg;
            msg << path.string() << ":" << line_no << ": time index must be an integer";
            throw DataError(msg.str());
        }
        r.t = static_cast<long>(t);
        r.u = parse_number(f[static_cast<std::size_t>(col_u)], path, line_no, "u");
        const std::string& ytext = f[static_cast<std::size_t>(col_y)];
        r.has_y = !ytext.empty();
        if (r.has_y) r.y = parse_number(ytext, path, line_no, "y");
        rows.push_back(r);
    }
    return from_rows(rows, path);
}

TimeSeriesData read_series_whitespace(const std::filesystem::path& path) {
    std::ifstream in = open_for_read(path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<RawRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body[0] == '%' || body[0] == '#') continue;
        std::istringstream ss(body);
        std::vector<std::string> f;
        std::string tok;
        while (ss >> tok) f.push_back(tok);
        if (f.size() < 3) {
            std::ostringstream msg;
            msg << path.string() << ":" << line_no << ": expected 3 columns (t u y), found " << f.size();
            throw DataError(msg.str());
        }
        parse_number(f[0], path, line_no, "t");
        RawRow r{};
        r.u = parse_number(f[1], path, line_no, "u");
        r.y = parse_number(f[2], path, line_no, "y");
        r.has_y = true;
        // DAISY files index time from 1 or in seconds; only the row order matters.
        r.t = rows.empty() ? 0 : rows.back().t + 1;
        rows.push_back(r);
    }
    return from_rows(rows, path);
}

TimeSeriesData read_series(const std::filesystem::path& path) {
    if (path.extension() == ".csv") return read_series_csv(path);
    return read_series_whitespace(path);
}

void write_series_csv(const std::filesystem::path& path, const TimeSeriesData& data) {
    std::ostringstream out;
    out << std::setprecision(17) << "t,u,y\n";
    std::size_t k = 0;
    const auto& times = data.sample_times();
    for (long t = data.input_start(); t <= data.input_end(); ++t) {
        out << t << "," << data.input(t) << ",";
        if (k < times.size() && times[k] == t) out << data.outputs()[k++];
        out << "\n";
    }
    write_file_atomic(path, out.str());
}

void write_impulse_csv(const std::filesystem::path& path, const ImpulseResponse& g) {
    std::ostringstream out;
    out << std::setprecision(17) << "s,g\n";
    for (long s = 0; s < g.horizon(); ++s) out << s << "," << g.values(s) << "\n";
    write_file_atomic(path, out.str());
}

ImpulseResponse read_impulse_csv(const std::filesystem::path& path) {
    std::ifstream in = open_for_read(path);
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || trim(line) != "s,g") throw DataError(path.string() + ": expected header s,g");
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 2) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 2 columns");
        const double s = parse_number(f[0], path, line_no, "s");
        if (s != static_cast<double>(values.size())) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": lags must be 0,1,2,...");
        }
        values.push_back(parse_number(f[1], path, line_no, "g"));
    }
    if (values.empty()) throw DataError(path.string() + ": empty impulse response");
    return ImpulseResponse(Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out << contents;
        out.flush();
        if (!out) throw DataError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

}  // namespace posid
