#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "polarpath/geometry.hpp"

namespace polarpath {

/// Euclidean free-particle kernel (m / 2 pi hbar tau) exp(-m |x - x0|^2 / (2 hbar tau)).
double heat_kernel_cartesian(Point2 x, Point2 x0, double tau, const Units& u = {});

/// The Cartesian heat kernel written in polar coordinates (law of cosines).
double free_polar_kernel(double r, double theta, double r0, double theta0, double tau, const Units& u = {});

/// e^{-z} I_l(z) for l = 0..l_max, z >= 0.
std::vector<double> scaled_bessel_i(int l_max, double z);

struct SeriesValue {
    double value = 0.0;
    double tail = 0.0;  // estimate of the omitted terms |l| > l_max
};

/// Angular-momentum expansion sum_{|l| <= l_max} e^{il(theta-theta0)} I_l(m r r0 / hbar tau).
SeriesValue bessel_series_kernel(double r, double theta, double r0, double theta0, double tau, int l_max = 64,
                                 const Units& u = {}, double tolerance = 1e-12);

/// Kernel on the universal cover of the punctured plane: the angle difference is
/// not reduced modulo 2 pi, so copies at theta + 2 pi m are distinct sheets whose
/// sum is the plane kernel.
double sheet_kernel(double r, double theta, double r0, double theta0, double tau, const Units& u = {});

/// A base kernel for the image sum together with its continuation to negative radius.
struct ImageBase {
    std::function<double(double r, double theta, double r0, double theta0, double tau)> value;
    /// Value at (-r, theta, ...); empty means the continuation vanishes.
    std::function<double(double r, double theta, double r0, double theta0, double tau)> reflected;
    /// Exact size of the omitted sheets for half-width M, when known in closed form.
    std::function<double(double r, double theta, double r0, double theta0, double tau, int M)> remainder;
};

/// Universal-cover sheets. Negative-radius continuation is taken as zero: the sheet
/// kernel has no principal branch at r < 0 (its correction integral diverges there).
ImageBase sheet_base(const Units& u = {});

/// Plane kernel with the -r continuation through the distance formula.
ImageBase free_polar_base(const Units& u = {});

struct ImageSumValue {
    double value = 0.0;
    double tail = 0.0;  // omitted sheets (exact when the base knows it, else the outermost retained pair)
};

/// sum_{m=-M}^{M} [ base(r, theta + 2 pi m) + base(-r, theta + 2 pi (2m + 1)) ].
ImageSumValue image_sum_kernel(const ImageBase& base, double r, double theta, double r0, double theta0, double tau,
                               int M = 8);

/// (r, theta, r0, theta0) with r, r0 uniform in [0.5, 3] and angles in [0, 2 pi).
using PointPair = std::array<double, 4>;
/// 20 pseudo-random pairs from a fixed seed.
std::vector<PointPair> standard_battery(std::size_t count = 20, std::uint64_t seed = 20240601);

} // namespace polarpath
