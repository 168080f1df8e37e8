#include "espa/series_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace espa {

std::string format_number(double x) {
    if (std::isfinite(x) && std::abs(x) < 1e15 && x == std::floor(x)) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(x));
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_timeseries_csv(const std::string& path, const TimeSeries& series,
                          std::optional<std::uint64_t> seed) {
    validate(series);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "timestamp,value\n";
    for (Eigen::Index i = 0; i < series.size(); ++i)
        out << format_number(series.time_at(i)) << ',' << format_number(series.values[i]) << '\n';

    nlohmann::json meta;
    meta["start_time"] = series.start_time;
    meta["sampling_rate"] = series.sampling_rate;
    meta["length"] = static_cast<long long>(series.size());
    if (seed) meta["seed"] = *seed;
    std::ofstream side(path + ".meta.json");
    if (!side) throw std::runtime_error("cannot write: " + path + ".meta.json");
    side << meta.dump(2) << '\n';
}

TimeSeries read_timeseries_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open series: " + path);

    std::vector<double> stamps, values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error(path + ": malformed row at line " + std::to_string(line_no));
        char* end = nullptr;
        const std::string ts_field = line.substr(0, comma);
        const double ts = std::strtod(ts_field.c_str(), &end);
        if (end == ts_field.c_str()) {
            if (line_no == 1) continue;  // header
            throw std::runtime_error(path + ": bad timestamp at line " + std::to_string(line_no));
        }
        const std::string val_field = line.substr(comma + 1);
        const double v = std::strtod(val_field.c_str(), &end);
        if (end == val_field.c_str())
            throw std::runtime_error(path + ": bad value at line " + std::to_string(line_no));
        stamps.push_back(ts);
        values.push_back(v);
    }
    if (values.empty()) throw std::runtime_error(path + ": no samples");

    TimeSeries series;
    series.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    series.start_time = stamps.front();
    series.sampling_rate = stamps.size() > 1 ? stamps[1] - stamps[0] : 1.0;

    std::ifstream side(path + ".meta.json");
    if (side) {
        const auto meta = nlohmann::json::parse(side, nullptr, false);
        if (!meta.is_discarded()) {
            if (meta.contains("start_time")) series.start_time = meta["start_time"].get<double>();
            if (meta.contains("sampling_rate")) series.sampling_rate = meta["sampling_rate"].get<double>();
        }
    }
    validate(series);
    return series;
}

}  // namespace espa
