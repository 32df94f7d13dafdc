#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "polarpath/geometry.hpp"

namespace polarpath {

/// Smooth analytic test function with its exact flat Laplacian, expressed in
/// the coordinates of one chart.
struct Probe {
    std::string name;
    ChartKind chart = ChartKind::polar2d;
    std::function<double(Point2)> value;
    std::function<double(Point2)> laplacian;

    double operator()(Point2 q) const { return value(q); }
};

/// exp(-(r - center)^2 / (2 width^2)) cos(l theta), polar coordinates.
inline Probe gaussian_ring(double center, double width, int l) {
    const double s2 = width * width;
    Probe p;
    p.name = "ring(c=" + std::to_string(center) + ",w=" + std::to_string(width) + ",l=" + std::to_string(l) + ")";
    p.chart = ChartKind::polar2d;
    p.value = [=](Point2 q) {
        const double x = q.q1 - center;
        return std::exp(-x * x / (2.0 * s2)) * std::cos(l * q.q2);
    };
    p.laplacian = [=](Point2 q) {
        const double r = q.q1;
        const double x = r - center;
        const double g = std::exp(-x * x / (2.0 * s2));
        const double g1 = -x / s2 * g;
        const double g2 = (x * x / (s2 * s2) - 1.0 / s2) * g;
        return (g2 + g1 / r - l * l * g / (r * r)) * std::cos(l * q.q2);
    };
    return p;
}

/// The ring exp(-(r - center)^2) cos(l theta) used throughout the generator studies.
inline Probe unit_ring(double center, int l) { return gaussian_ring(center, std::sqrt(0.5), l); }

/// Constant function, either chart.
inline Probe constant_probe(ChartKind chart, double c = 1.0) {
    return Probe{"const", chart, [c](Point2) { return c; }, [](Point2) { return 0.0; }};
}

/// exp(-|x - x0|^2 / (2 width^2)), Cartesian coordinates.
inline Probe cartesian_bump(double x0, double y0, double width) {
    const double s2 = width * width;
    Probe p;
    p.name = "bump";
    p.chart = ChartKind::cartesian2d;
    p.value = [=](Point2 q) {
        const double d2 = (q.q1 - x0) * (q.q1 - x0) + (q.q2 - y0) * (q.q2 - y0);
        return std::exp(-d2 / (2.0 * s2));
    };
    p.laplacian = [=](Point2 q) {
        const double d2 = (q.q1 - x0) * (q.q1 - x0) + (q.q2 - y0) * (q.q2 - y0);
        return (d2 / (s2 * s2) - 2.0 / s2) * std::exp(-d2 / (2.0 * s2));
    };
    return p;
}

/// Standard polar battery: rings of two widths times {1, cos theta, cos 2 theta}.
inline std::vector<Probe> polar_probe_battery(double center = 2.0) {
    std::vector<Probe> out;
    for (double w : {std::sqrt(0.5), 1.0})
        for (int l : {0, 1, 2}) out.push_back(gaussian_ring(center, w, l));
    return out;
}

} // namespace polarpath
