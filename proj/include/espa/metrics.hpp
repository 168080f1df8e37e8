#pragma once

#include <Eigen/Core>
#include <chrono>
#include <string>
#include <utility>

namespace espa {

/**
 * Symmetric mean absolute percentage error, in percent:
 *   (100 / n) * sum |a_i - p_i| / (|a_i| + |p_i|)
 * The denominator carries no factor 1/2, so results live in [0, 100].
 * Terms with |a| + |p| = 0 contribute zero.
 */
double smape(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted);

/// Root mean squared error.
double rmse(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted);

/// RMSE divided by a positive error scale, for cross-rate comparison.
double rmse_normalized(double rmse_value, double mean_abs_error_scale);

double mean_absolute_error(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted);

/// Runs `f` and returns its result with elapsed wall-clock seconds (monotonic).
template <typename F>
auto timed(F&& f) -> std::pair<decltype(f()), double> {
    const auto t0 = std::chrono::steady_clock::now();
    auto result = f();
    const auto t1 = std::chrono::steady_clock::now();
    return {std::move(result), std::chrono::duration<double>(t1 - t0).count()};
}

/// One evaluation-grid cell: the shape of the reported results table.
struct EvalReport {
    std::string dataset;
    double sampling_rate = 0.0;
    std::string model;
    double smape = 0.0;
    double rmse = 0.0;
    double rmse_norm = 0.0;
    double delta_t = 0.0;  // end-to-end train + inference seconds
    Eigen::Index n = 0;
};

}  // namespace espa
