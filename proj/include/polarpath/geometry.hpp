#pragma once

#include <array>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace polarpath {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Thrown when a point or parameter lies outside the admissible domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Physical constants threaded through every module. Defaults are hbar = m = 1.
struct Units {
    double hbar = 1.0;
    double mass = 1.0;

    void validate() const;
};

/// A point in a 2-D chart: (x, y) for Cartesian, (r, theta) for polar.
struct Point2 {
    double q1 = 0.0;
    double q2 = 0.0;
};

using Mat2 = std::array<std::array<double, 2>, 2>;

enum class ChartKind { cartesian2d, polar2d };

/// Maps theta onto [0, 2pi).
double canonical_angle(double theta);

/// Maps an angle difference onto [-pi, pi).
double wrapped_difference(double dtheta);

/// Closed description of a 2-D coordinate chart with its metric data.
///
/// Polar charts carry a radial cutoff r_min below which grids and kernels
/// refuse to go; metric evaluation itself only requires r > 0.
class Chart {
public:
    static Chart cartesian();
    static Chart polar(double r_min = 1e-6);
    /// Accepts "cartesian2d" or "polar2d".
    static Chart from_id(std::string_view id, double r_min = 1e-6);

    ChartKind kind() const { return kind_; }
    std::string id() const;
    double r_min() const { return r_min_; }
    bool is_polar() const { return kind_ == ChartKind::polar2d; }

    /// True when the metric is defined at q (polar: r > 0).
    bool admissible(Point2 q) const;
    /// True when q is inside the numerical domain (polar: r >= r_min).
    bool inside_cutoff(Point2 q) const;

    Mat2 metric(Point2 q) const;
    Mat2 metric_inverse(Point2 q) const;
    /// sqrt(det g_ij).
    double density(Point2 q) const;

    /// Canonical form of a point: polar theta wrapped to [0, 2pi).
    Point2 canonical(Point2 q) const;

private:
    Chart(ChartKind kind, double r_min) : kind_(kind), r_min_(r_min) {}
    void require_admissible(Point2 q) const;

    ChartKind kind_;
    double r_min_;
};

// Free-function spellings of the chart queries.
inline Mat2 metric_inverse(const Chart& chart, Point2 q) { return chart.metric_inverse(q); }
inline double density(const Chart& chart, Point2 q) { return chart.density(q); }

/// The two positive fields the scheme is built from. Only the constant and
/// sqrt(g) choices are supported.
enum class FieldKind { one, sqrt_g };

namespace detail {
class ChartField {
public:
    ChartField(Chart chart, FieldKind kind) : chart_(chart), kind_(kind) {}
    double operator()(Point2 q) const { return kind_ == FieldKind::one ? 1.0 : chart_.density(q); }
    FieldKind kind() const { return kind_; }
    const Chart& chart() const { return chart_; }
    std::string id() const { return kind_ == FieldKind::one ? "one" : "sqrt_g"; }
    bool is_constant() const { return kind_ == FieldKind::one || !chart_.is_polar(); }

private:
    Chart chart_;
    FieldKind kind_;
};
} // namespace detail

/// Integration measure rho(q) d^2q.
class MeasureDensity : public detail::ChartField {
public:
    using ChartField::ChartField;
    static MeasureDensity sqrt_g(Chart chart) { return {chart, FieldKind::sqrt_g}; }
    static MeasureDensity unit(Chart chart) { return {chart, FieldKind::one}; }
};

/// Local time-scaling function alpha(q) > 0.
class ScalingFunction : public detail::ChartField {
public:
    using ChartField::ChartField;
    static ScalingFunction sqrt_g(Chart chart) { return {chart, FieldKind::sqrt_g}; }
    static ScalingFunction unit(Chart chart) { return {chart, FieldKind::one}; }
    static ScalingFunction from_id(Chart chart, std::string_view id);
};

/// alpha = sqrt(g), the choice that yields the Laplace-Beltrami kinetic term.
inline ScalingFunction default_scaling(const Chart& chart) { return ScalingFunction::sqrt_g(chart); }

} // namespace polarpath
