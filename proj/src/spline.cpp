#include "espa/spline.hpp"

#include <cmath>
#include <stdexcept>

namespace espa {

CubicSpline::CubicSpline(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys) : x_(xs), y_(ys) {
    const Eigen::Index n = xs.size();
    if (n < 2) throw std::invalid_argument("spline needs at least 2 knots");
    if (ys.size() != n) throw std::invalid_argument("knot abscissae/values size mismatch");
    for (Eigen::Index i = 1; i < n; ++i)
        if (!(xs[i] > xs[i - 1])) throw std::invalid_argument("knot abscissae must be strictly increasing");

    second_ = Eigen::VectorXd::Zero(n);
    if (n == 2) return;  // linear segment, second derivatives stay zero

    // Thomas solve of the tridiagonal system for interior second derivatives;
    // natural boundary keeps the first and last at zero.
    const Eigen::Index m = n - 2;
    Eigen::VectorXd diag(m), rhs(m), upper(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double h_prev = xs[i + 1] - xs[i];
        const double h_next = xs[i + 2] - xs[i + 1];
        diag[i] = 2.0 * (h_prev + h_next);
        upper[i] = h_next;
        rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h_next - (ys[i + 1] - ys[i]) / h_prev);
    }
    for (Eigen::Index i = 1; i < m; ++i) {
        const double lower = xs[i + 1] - xs[i];  // sub-diagonal entry of row i
        const double w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    second_[m] = rhs[m - 1] / diag[m - 1];
    for (Eigen::Index i = m - 1; i >= 1; --i)
        second_[i] = (rhs[i - 1] - upper[i - 1] * second_[i + 1]) / diag[i - 1];
}

double CubicSpline::operator()(double x) const {
    const Eigen::Index n = x_.size();
    if (x < x_[0] || x > x_[n - 1]) throw std::out_of_range("spline query outside knot range");

    // locate segment by binary search
    Eigen::Index lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const Eigen::Index mid = (lo + hi) / 2;
        (x_[mid] <= x ? lo : hi) = mid;
    }
    const double h = x_[lo + 1] - x_[lo];
    const double a = (x_[lo + 1] - x) / h;
    const double b = (x - x_[lo]) / h;
    return a * y_[lo] + b * y_[lo + 1] +
           ((a * a * a - a) * second_[lo] + (b * b * b - b) * second_[lo + 1]) * (h * h) / 6.0;
}

Eigen::VectorXd CubicSpline::operator()(const Eigen::VectorXd& xs) const {
    Eigen::VectorXd out(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) out[i] = (*this)(xs[i]);
    return out;
}

Eigen::VectorXd cubic_spline_interpolate(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                                         const Eigen::VectorXd& query) {
    return CubicSpline(xs, ys)(query);
}

}  // namespace espa
