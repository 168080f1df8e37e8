#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace espa {

/**
 * Uniformly sampled ingress-rate sequence. Timestamps are implicit:
 * sample i sits at start_time + i * sampling_rate (epoch seconds).
 */
struct TimeSeries {
    double start_time = 0.0;      // epoch seconds of the first sample
    double sampling_rate = 1.0;   // seconds per sample, > 0
    Eigen::VectorXd values;

    double time_at(Eigen::Index i) const { return start_time + static_cast<double>(i) * sampling_rate; }
    Eigen::Index size() const { return values.size(); }
};

// Throws std::invalid_argument when the invariants do not hold.
void validate(const TimeSeries& series);

/// Sorted multiset of event epoch timestamps (seconds).
struct EventLog {
    std::vector<double> timestamps;
};

/// Knobs for the interpolation-based load simulation.
struct SimConfig {
    double sampling_rate = 300.0;  // target window length, seconds
    double noise_fraction = 0.10;  // multiplicative uniform noise, in [0, 1]
    double alpha_base = 1.0;       // magnitude adjustment reference
    std::uint64_t seed = 0;
};

/// Target moments for shifting/scaling a counted series.
struct TargetStats {
    double mean = 0.0;
    double stddev = 1.0;  // population convention, >= 0
};

/// Inverse-exact [0,1] scaling parameters.
struct MinMaxParams {
    double min = 0.0;
    double max = 1.0;

    double normalize(double x) const { return (x - min) / (max - min); }
    double denormalize(double y) const { return y * (max - min) + min; }
};

double population_mean(const Eigen::VectorXd& v);
double population_stddev(const Eigen::VectorXd& v);

/**
 * Parses an event log: newline-delimited epoch seconds, or CSV whose first
 * column is a timestamp (epoch seconds or ISO-8601, header optional).
 * Timestamps come back sorted ascending.
 */
EventLog ingest_event_log(const std::string& path);

/**
 * Counts events per tumbling window of `window_seconds`. Windows are anchored
 * at the first event's timestamp floored to the window length; window i covers
 * [t0 + i*w, t0 + (i+1)*w).
 */
TimeSeries count_per_window(const EventLog& log, double window_seconds);

/**
 * Resamples `base` onto a new axis at cfg.sampling_rate via natural cubic
 * spline interpolation, scales by the adjustment factor
 * alpha = alpha_base * (new rate / base rate), perturbs each point with
 * multiplicative uniform noise in [-noise_fraction, +noise_fraction], then
 * clamps negatives to zero and rounds half-up to integers.
 */
TimeSeries simulate_iot_load(const TimeSeries& base, const SimConfig& cfg);

namespace detail {
// Pre-cast (real-valued) stage of simulate_iot_load; exposed for bound checks.
TimeSeries simulate_iot_load_real(const TimeSeries& base, const SimConfig& cfg);
}  // namespace detail

/**
 * Affine map taking the series to the target population mean and standard
 * deviation (z-score, then scale and shift). Throws on zero-variance input.
 */
TimeSeries match_statistics(const TimeSeries& series, const TargetStats& target);

/// Chronological split; train length = floor(fraction * n).
std::pair<TimeSeries, TimeSeries> train_test_split(const TimeSeries& series, double train_fraction);

/// Min-max scaling to [0,1]; throws on a constant series.
std::pair<TimeSeries, MinMaxParams> minmax_normalize(const TimeSeries& series);

}  // namespace espa
