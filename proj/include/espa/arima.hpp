#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

namespace espa {

struct ArimaOrder {
    int ar = 0;    // p
    int diff = 0;  // d
    int ma = 0;    // q
};

struct ArimaSearchConfig {
    int max_ar = 3;
    int max_ma = 3;
    std::vector<int> d_set{0, 1};
    int nm_max_iter = 30;  // Nelder-Mead iteration budget per candidate
};

/**
 * ARIMA(p,d,q) via conditional sum of squares. Coefficients start from a
 * least-squares AR fit and are polished with Nelder-Mead; order selection
 * scans the constrained grid and keeps the lowest AIC, with
 * AIC = n ln(SSE/n) + 2 (p + q + 1).
 */
class ArimaModel {
public:
    static ArimaModel fit(const Eigen::VectorXd& series, const ArimaSearchConfig& cfg = {});
    static ArimaModel fit_order(const Eigen::VectorXd& series, ArimaOrder order, int nm_max_iter = 30);

    /// Recursive mean forecast; differencing is inverted by cumulative sum
    /// anchored at the last observed level.
    Eigen::VectorXd forecast(int steps) const;

    void append_observation(double value);
    /// Re-estimates coefficients on the current history, keeping the order.
    void refit(int nm_max_iter = 30);

    ArimaOrder order() const { return order_; }
    double aic() const { return aic_; }
    double intercept() const { return intercept_; }
    const Eigen::VectorXd& ar_coefficients() const { return ar_; }
    const Eigen::VectorXd& ma_coefficients() const { return ma_; }
    const Eigen::VectorXd& history() const { return history_; }

private:
    ArimaOrder order_;
    Eigen::VectorXd ar_, ma_;
    double intercept_ = 0.0;
    double aic_ = 0.0;
    Eigen::VectorXd history_;
};

/**
 * One-step-ahead walk-forward over `test`: after each step the actual value
 * joins the history, and every `refit_window` steps the coefficients are
 * refitted on the trailing history.
 */
Eigen::VectorXd arima_forecast_rolling(ArimaModel model, const Eigen::VectorXd& test, int refit_window);

namespace detail {
/// CSS objective for a parameter vector [c, ar..., ma...] on a differenced series.
double arima_css(const Eigen::VectorXd& w, int p, int q, const Eigen::VectorXd& params);

/// Standard Nelder-Mead on a dense parameter vector; returns the best point.
Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                            Eigen::VectorXd start, int max_iter);

/// True when the lag polynomial with these coefficients has all inverse
/// roots strictly inside the unit circle (margin 0.99).
bool lag_polynomial_stable(const Eigen::VectorXd& coeffs);
}  // namespace detail

}  // namespace espa
