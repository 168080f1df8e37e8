#pragma once

#include <optional>
#include <string>

#include "espa/timeseries.hpp"

namespace espa {

// Compact numeric formatting: integers print without a fraction, everything
// else with enough digits to round-trip a double.
std::string format_number(double x);

/**
 * Writes `timestamp,value` rows plus a `<path>.meta.json` sidecar holding
 * start time, sampling rate and the seed that produced the series.
 */
void write_timeseries_csv(const std::string& path, const TimeSeries& series,
                          std::optional<std::uint64_t> seed = std::nullopt);

/**
 * Reads a `timestamp,value` CSV. Sampling metadata comes from the sidecar
 * when present, otherwise from the first two timestamps.
 */
TimeSeries read_timeseries_csv(const std::string& path);

}  // namespace espa
