#pragma once

#include <Eigen/Core>

namespace espa {

/**
 * Natural cubic spline through (xs, ys): second derivative zero at both ends,
 * C2-continuous, interpolates every knot exactly. Knot abscissae must be
 * strictly increasing and queries must stay inside [xs.front, xs.back].
 */
class CubicSpline {
public:
    CubicSpline(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys);

    double operator()(double x) const;
    Eigen::VectorXd operator()(const Eigen::VectorXd& xs) const;

private:
    Eigen::VectorXd x_, y_, second_;  // knot second derivatives
};

Eigen::VectorXd cubic_spline_interpolate(const Eigen::VectorXd& xs,
                                         const Eigen::VectorXd& ys,
                                         const Eigen::VectorXd& query);

}  // namespace espa
