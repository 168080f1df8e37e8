#include "espa/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "espa/rng.hpp"
#include "espa/spline.hpp"

namespace espa {

void validate(const TimeSeries& series) {
    if (series.values.size() == 0) throw std::invalid_argument("time series is empty");
    if (!(series.sampling_rate > 0.0)) throw std::invalid_argument("sampling rate must be positive");
    if (!series.values.allFinite()) throw std::invalid_argument("time series contains non-finite values");
}

double population_mean(const Eigen::VectorXd& v) {
    return v.size() ? v.mean() : 0.0;
}

double population_stddev(const Eigen::VectorXd& v) {
    if (v.size() == 0) return 0.0;
    const double mu = v.mean();
    return std::sqrt((v.array() - mu).square().mean());
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's
// days_from_civil), so ISO timestamps parse identically on every platform.
long long days_from_civil(long long y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

bool parse_iso8601(const std::string& text, double& out) {
    int year, month, day, hour = 0, minute = 0;
    double second = 0.0;
    char sep = 0;
    int consumed = 0;
    int n = std::sscanf(text.c_str(), "%d-%d-%d%n", &year, &month, &day, &consumed);
    if (n != 3) return false;
    std::string rest = trim(text.substr(consumed));
    if (!rest.empty()) {
        sep = rest[0];
        if (sep == 'T' || sep == 't') rest = rest.substr(1);
        int c2 = 0;
        if (std::sscanf(rest.c_str(), "%d:%d:%lf%n", &hour, &minute, &second, &c2) < 2) return false;
    }
    if (month < 1 || month > 12 || day < 1 || day > 31) return false;
    out = static_cast<double>(days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day))) * 86400.0 +
          hour * 3600.0 + minute * 60.0 + second;
    return true;
}

bool parse_timestamp(const std::string& field, double& out) {
    const std::string t = trim(field);
    if (t.empty()) return false;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() + t.size()) {
        out = v;
        return std::isfinite(v);
    }
    return parse_iso8601(t, out);
}

}  // namespace

EventLog ingest_event_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open event log: " + path);

    EventLog log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string row = trim(line);
        if (row.empty()) continue;
        const std::string first = row.substr(0, row.find(','));
        double ts;
        if (!parse_timestamp(first, ts)) {
            if (line_no == 1) continue;  // header
            throw std::runtime_error(path + ": unparsable timestamp at line " + std::to_string(line_no));
        }
        log.timestamps.push_back(ts);
    }
    if (log.timestamps.empty()) throw std::runtime_error(path + ": no events");
    std::sort(log.timestamps.begin(), log.timestamps.end());
    return log;
}

TimeSeries count_per_window(const EventLog& log, double window_seconds) {
    if (!(window_seconds > 0.0)) throw std::invalid_argument("window length must be positive");
    if (log.timestamps.empty()) throw std::invalid_argument("event log is empty");

    const double t0 = std::floor(log.timestamps.front() / window_seconds) * window_seconds;
    const double last = log.timestamps.back();
    const auto windows = static_cast<Eigen::Index>(std::floor((last - t0) / window_seconds)) + 1;

    TimeSeries out;
    out.start_time = t0;
    out.sampling_rate = window_seconds;
    out.values = Eigen::VectorXd::Zero(windows);
    for (double t : log.timestamps) {
        auto idx = static_cast<Eigen::Index>(std::floor((t - t0) / window_seconds));
        idx = std::clamp<Eigen::Index>(idx, 0, windows - 1);
        out.values[idx] += 1.0;
    }
    return out;
}

namespace detail {

TimeSeries simulate_iot_load_real(const TimeSeries& base, const SimConfig& cfg) {
    validate(base);
    if (base.size() < 2) throw std::invalid_argument("base series needs at least 2 points");
    if (!(cfg.sampling_rate > 0.0)) throw std::invalid_argument("sampling rate must be positive");
    if (cfg.noise_fraction < 0.0 || cfg.noise_fraction > 1.0)
        throw std::invalid_argument("noise fraction must be in [0, 1]");

    const Eigen::Index n = base.size();
    Eigen::VectorXd axis(n);  // seconds since the first sample
    for (Eigen::Index i = 0; i < n; ++i) axis[i] = static_cast<double>(i) * base.sampling_rate;

    const double span = axis[n - 1];
    const auto m = static_cast<Eigen::Index>(std::floor(span / cfg.sampling_rate)) + 1;
    Eigen::VectorXd new_axis(m);
    for (Eigen::Index j = 0; j < m; ++j) new_axis[j] = static_cast<double>(j) * cfg.sampling_rate;

    const CubicSpline spline(axis, base.values);
    Eigen::VectorXd interpolated = spline(new_axis);

    // Events per window scale with the window length, so the adjustment
    // factor follows the ratio of sampling frequencies.
    const double rate_ratio = (1.0 / cfg.sampling_rate) / (1.0 / base.sampling_rate);
    const double alpha = cfg.alpha_base / rate_ratio;

    Rng rng(cfg.seed);
    TimeSeries out;
    out.start_time = base.start_time;
    out.sampling_rate = cfg.sampling_rate;
    out.values.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double noise = rng.uniform(-cfg.noise_fraction, cfg.noise_fraction);
        out.values[j] = alpha * interpolated[j] * (1.0 + noise);
    }
    return out;
}

}  // namespace detail

TimeSeries simulate_iot_load(const TimeSeries& base, const SimConfig& cfg) {
    TimeSeries out = detail::simulate_iot_load_real(base, cfg);
    for (Eigen::Index j = 0; j < out.size(); ++j) {
        double v = out.values[j];
        if (!std::isfinite(v) || v < 0.0) v = 0.0;
        out.values[j] = std::floor(v + 0.5);  // round half-up
    }
    return out;
}

TimeSeries match_statistics(const TimeSeries& series, const TargetStats& target) {
    validate(series);
    if (series.size() < 2) throw std::invalid_argument("series needs at least 2 points");
    if (target.stddev < 0.0) throw std::invalid_argument("target stddev must be nonnegative");

    const double mu = population_mean(series.values);
    const double sigma = population_stddev(series.values);
    if (sigma < 1e-300) throw std::invalid_argument("degenerate series: zero variance");

    TimeSeries out = series;
    out.values = ((series.values.array() - mu) / sigma) * target.stddev + target.mean;
    return out;
}

std::pair<TimeSeries, TimeSeries> train_test_split(const TimeSeries& series, double train_fraction) {
    validate(series);
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("train fraction must be in (0, 1)");
    if (series.size() < 2) throw std::invalid_argument("series needs at least 2 points");

    const auto n = series.size();
    const auto n_train = static_cast<Eigen::Index>(std::floor(train_fraction * static_cast<double>(n)));

    TimeSeries train, test;
    train.start_time = series.start_time;
    train.sampling_rate = series.sampling_rate;
    train.values = series.values.head(n_train);
    test.start_time = series.time_at(n_train);
    test.sampling_rate = series.sampling_rate;
    test.values = series.values.tail(n - n_train);
    return {std::move(train), std::move(test)};
}

std::pair<TimeSeries, MinMaxParams> minmax_normalize(const TimeSeries& series) {
    validate(series);
    const double lo = series.values.minCoeff();
    const double hi = series.values.maxCoeff();
    if (!(hi > lo)) throw std::invalid_argument("constant series cannot be min-max normalized");

    MinMaxParams params{lo, hi};
    TimeSeries out = series;
    out.values = (series.values.array() - lo) / (hi - lo);
    return {std::move(out), params};
}

}  // namespace espa
