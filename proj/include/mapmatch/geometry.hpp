#ifndef MAPMATCH_GEOMETRY_HPP_
#define MAPMATCH_GEOMETRY_HPP_

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "mapmatch/types.hpp"

namespace mapmatch {

inline constexpr double kPi = std::numbers::pi;

// Degenerate-radius tolerance, as a fraction of the frame diagonal.
inline constexpr double kEpsRadiusFrac = 1e-6;
// Denominator cutoff for the two-circle origin solver.
inline constexpr double kEpsDenominator = 1e-12;

/// Polar coordinate pair: radius >= 0, angle in (-pi, pi].
struct PolarCoord {
    double r = 0.0;
    double theta = 0.0;
};

/// Reduces an angle to the half-open interval (-pi, pi].
inline double wrap_angle(double a) {
    double w = std::remainder(a, 2.0 * kPi);
    if (w <= -kPi) w = kPi;  // remainder can return -pi exactly
    return w;
}

/// Polar coordinates of p about origin.  Throws if p is within eps_r of
/// the origin (bearing undefined).
inline PolarCoord to_polar(const Point2& p, const Point2& origin, double eps_r) {
    const Point2 d = p - origin;
    const double r = d.norm();
    if (r < eps_r) throw std::runtime_error("to_polar: point coincides with origin");
    return {r, std::atan2(d.y, d.x)};
}

struct OriginSolution {
    Point2 origin;
    double r_i = 0.0;  // radius of the first anchor about the origin
    // Set when dtheta is at a tangency (near 0 or pi) and the sign test
    // degenerates; the returned point is the unique tangency intersection.
    bool low_confidence = false;
};

/// Solves for the point c such that the polar coordinates of p_i and p_j
/// about c satisfy R_j / R_i = rho and wrap(Theta_i - Theta_j) = dtheta.
///
/// Closed form: R_i = D / sqrt(1 + rho^2 - 2 rho cos(dtheta)) with
/// D = |p_i - p_j|, then c is the circle-circle intersection (radius R_i
/// about p_i, rho R_i about p_j) whose relative angle carries the sign of
/// dtheta.  Returns nullopt when the denominator degenerates (R_i would
/// be unbounded).
inline std::optional<OriginSolution> solve_origin(const Point2& p_i, const Point2& p_j,
                                                  double rho, double dtheta) {
    const Point2 d = p_j - p_i;
    const double D = d.norm();
    if (D <= 0.0 || rho <= 0.0) return std::nullopt;

    const double den = 1.0 + rho * rho - 2.0 * rho * std::cos(dtheta);
    if (den < kEpsDenominator) return std::nullopt;

    const double r_i = D / std::sqrt(den);

    // Angle at p_i between the p_i->p_j direction and the p_i->c direction.
    double cos_b = (den + 1.0 - rho * rho) / (2.0 * std::sqrt(den));
    bool tangent = false;
    if (cos_b >= 1.0) {
        cos_b = 1.0;
        tangent = true;
    } else if (cos_b <= -1.0) {
        cos_b = -1.0;
        tangent = true;
    }
    const double sin_b = std::sqrt(std::max(0.0, 1.0 - cos_b * cos_b));

    // Rotating CCW by +beta puts c on the side where the relative angle
    // Theta_i - Theta_j comes out negative; flip for positive dtheta.
    const double s = (dtheta > 0.0) ? -1.0 : 1.0;
    const double ux = d.x / D, uy = d.y / D;
    const Point2 c{p_i.x + r_i * (ux * cos_b - uy * s * sin_b),
                   p_i.y + r_i * (ux * s * sin_b + uy * cos_b)};
    // Internal tangency (dtheta ~ 0, collinear configuration) is unique
    // but fragile; external tangency at |dtheta| = pi is plain unique.
    const bool low_conf = tangent && std::abs(dtheta) < kPi / 2.0;
    return OriginSolution{c, r_i, low_conf};
}

}  // namespace mapmatch

#endif  // MAPMATCH_GEOMETRY_HPP_
