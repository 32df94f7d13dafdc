#include "polarpath/geometry.hpp"

#include <cmath>

namespace polarpath {

void Units::validate() const {
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw DomainError("hbar must be a positive finite number");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw DomainError("mass must be a positive finite number");
}

double canonical_angle(double theta) {
    double r = std::remainder(theta, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r -= kTwoPi;
    return r;
}

double wrapped_difference(double dtheta) {
    double r = std::remainder(dtheta, kTwoPi);
    if (r >= std::numbers::pi) r -= kTwoPi;
    return r;
}

Chart Chart::cartesian() { return Chart(ChartKind::cartesian2d, 0.0); }

Chart Chart::polar(double r_min) {
    if (!(r_min > 0.0)) throw DomainError("polar chart requires r_min > 0");
    return Chart(ChartKind::polar2d, r_min);
}

Chart Chart::from_id(std::string_view id, double r_min) {
    if (id == "cartesian2d") return cartesian();
    if (id == "polar2d") return polar(r_min);
    throw DomainError("unknown chart id '" + std::string(id) + "'");
}

std::string Chart::id() const { return is_polar() ? "polar2d" : "cartesian2d"; }

bool Chart::admissible(Point2 q) const { return !is_polar() || q.q1 > 0.0; }

bool Chart::inside_cutoff(Point2 q) const { return !is_polar() || q.q1 >= r_min_; }

void Chart::require_admissible(Point2 q) const {
    if (!admissible(q)) throw DomainError("polar chart requires r > 0, got r = " + std::to_string(q.q1));
}

Mat2 Chart::metric(Point2 q) const {
    require_admissible(q);
    if (!is_polar()) return {{{1.0, 0.0}, {0.0, 1.0}}};
    return {{{1.0, 0.0}, {0.0, q.q1 * q.q1}}};
}

Mat2 Chart::metric_inverse(Point2 q) const {
    require_admissible(q);
    if (!is_polar()) return {{{1.0, 0.0}, {0.0, 1.0}}};
    return {{{1.0, 0.0}, {0.0, 1.0 / (q.q1 * q.q1)}}};
}

double Chart::density(Point2 q) const {
    require_admissible(q);
    return is_polar() ? q.q1 : 1.0;
}

Point2 Chart::canonical(Point2 q) const {
    if (!is_polar()) return q;
    return {q.q1, canonical_angle(q.q2)};
}

ScalingFunction ScalingFunction::from_id(Chart chart, std::string_view id) {
    if (id == "one") return unit(chart);
    if (id == "sqrt_g") return sqrt_g(chart);
    throw DomainError("unknown scaling function id '" + std::string(id) + "'");
}

} // namespace polarpath
