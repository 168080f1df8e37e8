#include "espa/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace espa {

double smape(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted) {
    if (actual.size() != predicted.size()) throw std::invalid_argument("smape: length mismatch");
    if (actual.size() == 0) throw std::invalid_argument("smape: empty input");

    double acc = 0.0;
    for (Eigen::Index i = 0; i < actual.size(); ++i) {
        const double denom = std::abs(actual[i]) + std::abs(predicted[i]);
        if (denom > 0.0) acc += std::abs(actual[i] - predicted[i]) / denom;
    }
    return 100.0 * acc / static_cast<double>(actual.size());
}

double rmse(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted) {
    if (actual.size() != predicted.size()) throw std::invalid_argument("rmse: length mismatch");
    if (actual.size() == 0) throw std::invalid_argument("rmse: empty input");
    return std::sqrt((actual - predicted).squaredNorm() / static_cast<double>(actual.size()));
}

double rmse_normalized(double rmse_value, double mean_abs_error_scale) {
    if (!(mean_abs_error_scale > 0.0)) throw std::invalid_argument("rmse_normalized: scale must be positive");
    return rmse_value / mean_abs_error_scale;
}

double mean_absolute_error(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted) {
    if (actual.size() != predicted.size()) throw std::invalid_argument("mae: length mismatch");
    if (actual.size() == 0) throw std::invalid_argument("mae: empty input");
    return (actual - predicted).cwiseAbs().mean();
}

}  // namespace espa
