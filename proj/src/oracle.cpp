#include "polarpath/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace polarpath {

namespace {

void check_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("oracle kernels need tau > 0");
}

double flat_prefactor(double tau, const Units& u) { return u.mass / (2.0 * std::numbers::pi * u.hbar * tau); }

} // namespace

double heat_kernel_cartesian(Point2 x, Point2 x0, double tau, const Units& u) {
    check_tau(tau);
    const double dx = x.q1 - x0.q1;
    const double dy = x.q2 - x0.q2;
    return flat_prefactor(tau, u) * std::exp(-u.mass * (dx * dx + dy * dy) / (2.0 * u.hbar * tau));
}

double free_polar_kernel(double r, double theta, double r0, double theta0, double tau, const Units& u) {
    check_tau(tau);
    const double d2 = r * r + r0 * r0 - 2.0 * r * r0 * std::cos(theta - theta0);
    return flat_prefactor(tau, u) * std::exp(-u.mass * std::max(d2, 0.0) / (2.0 * u.hbar * tau));
}

std::vector<double> scaled_bessel_i(int l_max, double z) {
    if (l_max < 0) throw DomainError("scaled_bessel_i: l_max must be >= 0");
    if (!(z >= 0.0)) throw DomainError("scaled_bessel_i: z must be >= 0");
    std::vector<double> out(static_cast<std::size_t>(l_max) + 1, 0.0);
    if (z == 0.0) {
        out[0] = 1.0;
        return out;
    }
    // Miller: recur downward from well above max(l_max, z), normalize with e^z = I_0 + 2 sum I_l.
    const int start = 2 * (std::max(l_max, static_cast<int>(std::ceil(z))) + 16) + static_cast<int>(std::sqrt(60.0 * (l_max + z)));
    double next = 0.0, cur = 1e-300, sum = 0.0;
    std::vector<double> tmp(static_cast<std::size_t>(start) + 2, 0.0);
    tmp[static_cast<std::size_t>(start)] = cur;
    for (int l = start; l > 0; --l) {
        const double prev = next + 2.0 * l / z * cur;  // I_{l-1} = I_{l+1} + (2l/z) I_l
        next = cur;
        cur = prev;
        tmp[static_cast<std::size_t>(l - 1)] = cur;
        if (std::abs(cur) > 1e250) {
            for (int k = l - 1; k <= start; ++k) tmp[static_cast<std::size_t>(k)] *= 1e-250;
            next *= 1e-250;
            cur *= 1e-250;
        }
    }
    for (int l = 1; l <= start; ++l) sum += tmp[static_cast<std::size_t>(l)];
    const double norm = tmp[0] + 2.0 * sum;
    for (int l = 0; l <= l_max; ++l) out[static_cast<std::size_t>(l)] = tmp[static_cast<std::size_t>(l)] / norm;
    return out;
}

SeriesValue bessel_series_kernel(double r, double theta, double r0, double theta0, double tau, int l_max,
                                 const Units& u, double tolerance) {
    check_tau(tau);
    if (l_max < 0) throw DomainError("bessel_series_kernel: l_max must be >= 0");
    if (r < 0.0 || r0 < 0.0) throw DomainError("bessel_series_kernel: radii must be >= 0");
    const double z = u.mass * r * r0 / (u.hbar * tau);
    const auto il = scaled_bessel_i(l_max + 1, z);
    const double phi = theta - theta0;
    double s = il[0];
    for (int l = 1; l <= l_max; ++l) s += 2.0 * il[static_cast<std::size_t>(l)] * std::cos(l * phi);
    const double scale = flat_prefactor(tau, u) * std::exp(-u.mass * (r - r0) * (r - r0) / (2.0 * u.hbar * tau));
    // I_l decreases in l; bound the omitted tail by a geometric series on the first omitted term.
    const double first = il[static_cast<std::size_t>(l_max + 1)];
    const double ratio = z / (2.0 * (l_max + 2));
    const double tail = 2.0 * first * (ratio < 1.0 ? 1.0 / (1.0 - ratio) : static_cast<double>(l_max + 1)) * scale;
    (void)tolerance;
    return {scale * s, tail};
}

namespace {

// int_0^inf e^{-z (cosh u - 1)} a / (a^2 + u^2) du via u = |a| tan s.
double correction_integral(double a, double z) {
    if (a == 0.0) return 0.0;
    const double aa = std::abs(a);
    const double u_max = z > 0.0 ? std::acosh(1.0 + 60.0 / z) : 1e6;
    const double s_max = std::atan(u_max / aa);
    auto g = [&](double s) {
        const double uu = aa * std::tan(s);
        return std::exp(-z * (std::cosh(std::min(uu, 700.0)) - 1.0));
    };
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, s_max, 12, 1e-13);
    return a > 0.0 ? v : -v;
}

} // namespace

double sheet_kernel(double r, double theta, double r0, double theta0, double tau, const Units& u) {
    check_tau(tau);
    if (r <= 0.0 || r0 <= 0.0) throw DomainError("sheet_kernel: radii must be > 0");
    const double pi = std::numbers::pi;
    const double phi = theta - theta0;
    const double c = u.mass / (2.0 * u.hbar * tau);
    const double z = 2.0 * c * r * r0;
    const double pref = flat_prefactor(tau, u);
    double principal = 0.0;
    if (std::abs(phi) < pi)
        principal = std::exp(-c * (r * r + r0 * r0 - 2.0 * r * r0 * std::cos(phi)));
    else if (std::abs(phi) == pi)
        principal = 0.5 * std::exp(-c * (r + r0) * (r + r0));
    const double corr = (correction_integral(pi + phi, z) + correction_integral(pi - phi, z)) / pi;
    return pref * (principal - std::exp(-c * (r + r0) * (r + r0)) * corr);
}

static double sheet_remainder(double r, double theta, double r0, double theta0, double tau, int M, const Units& u) {
    // The correction integrals telescope between neighbouring sheets; only the two outer halves survive.
    const double pi = std::numbers::pi;
    const double phi = theta - theta0;
    const double c = u.mass / (2.0 * u.hbar * tau);
    const double z = 2.0 * c * r * r0;
    const double edge = correction_integral(pi + phi + kTwoPi * M, z) + correction_integral(pi - phi + kTwoPi * M, z);
    return flat_prefactor(tau, u) * std::exp(-c * (r + r0) * (r + r0)) * std::abs(edge) / pi;
}

ImageBase sheet_base(const Units& u) {
    return {[u](double r, double th, double r0, double th0, double tau) { return sheet_kernel(r, th, r0, th0, tau, u); },
            {},
            [u](double r, double th, double r0, double th0, double tau, int M) {
                return sheet_remainder(r, th, r0, th0, tau, M, u);
            }};
}

ImageBase free_polar_base(const Units& u) {
    auto f = [u](double r, double th, double r0, double th0, double tau) { return free_polar_kernel(r, th, r0, th0, tau, u); };
    return {f, f, {}};
}

ImageSumValue image_sum_kernel(const ImageBase& base, double r, double theta, double r0, double theta0, double tau,
                               int M) {
    if (M < 0) throw DomainError("image_sum_kernel: M must be >= 0");
    if (!base.value) throw DomainError("image_sum_kernel: empty base kernel");
    check_tau(tau);
    double total = 0.0, edge = 0.0;
    for (int m = -M; m <= M; ++m) {
        double term = base.value(r, theta + kTwoPi * m, r0, theta0, tau);
        if (base.reflected) term += base.reflected(-r, theta + kTwoPi * (2 * m + 1), r0, theta0, tau);
        total += term;
        if (m == -M || m == M) edge += std::abs(term);
    }
    if (base.remainder) edge = base.remainder(r, theta, r0, theta0, tau, M);
    return {total, edge};
}

std::vector<PointPair> standard_battery(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> R(0.5, 3.0), T(0.0, kTwoPi);
    std::vector<PointPair> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double r = R(rng), t = T(rng), r0 = R(rng), t0 = T(rng);
        out.push_back({r, t, r0, t0});
    }
    return out;
}

} // namespace polarpath
