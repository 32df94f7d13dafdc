#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "polarpath/oracle.hpp"

using namespace polarpath;

TEST_CASE("heat kernel closed form") {
    CHECK(heat_kernel_cartesian({0.0, 0.0}, {0.0, 0.0}, 1.0) == doctest::Approx(0.1591549).epsilon(1e-7));
    CHECK(heat_kernel_cartesian({1.0, 0.0}, {0.0, 0.0}, 1.0) == doctest::Approx(0.0965324).epsilon(1e-6));
    CHECK_THROWS_AS(heat_kernel_cartesian({0, 0}, {0, 0}, 0.0), DomainError);
}

TEST_CASE("heat kernel integrates to one") {
    auto inner = [](double x) {
        return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [x](double y) { return heat_kernel_cartesian({x, y}, {0.3, -0.2}, 0.7); }, -12.0, 12.0, 10, 1e-13);
    };
    const double total = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(inner, -12.0, 12.0, 10, 1e-13);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("free polar kernel") {
    CHECK(free_polar_kernel(1.3, 0.4, 1.3, 0.4, 0.25) == doctest::Approx(1.0 / (2.0 * std::numbers::pi * 0.25)));
    CHECK(free_polar_kernel(1.0, 0.7, 2.0, 0.2, 0.5) == free_polar_kernel(1.0, 0.7 + 1.1, 2.0, 0.2 + 1.1, 0.5));
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> R(0.05, 4.0), T(0.0, kTwoPi);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double r = R(rng), t = T(rng), r0 = R(rng), t0 = T(rng);
        const double a = free_polar_kernel(r, t, r0, t0, 0.5);
        const double b = heat_kernel_cartesian({r * std::cos(t), r * std::sin(t)}, {r0 * std::cos(t0), r0 * std::sin(t0)}, 0.5);
        worst = std::max(worst, std::abs(a - b) / std::max(b, 1e-300));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("scaled modified Bessel functions against an independent implementation") {
    for (double z : {1e-3, 0.1, 1.0, 5.0, 18.0, 60.0}) {
        const auto v = scaled_bessel_i(64, z);
        for (int l : {0, 1, 2, 7, 20, 64}) {
            const double ref = boost::math::cyl_bessel_i(l, z) * std::exp(-z);
            if (ref < 1e-290) continue;
            CHECK(v[static_cast<std::size_t>(l)] == doctest::Approx(ref).epsilon(1e-12));
        }
    }
    CHECK(scaled_bessel_i(3, 0.0)[0] == 1.0);
    CHECK(scaled_bessel_i(3, 0.0)[2] == 0.0);
}

TEST_CASE("Bessel series reproduces the closed form") {
    CHECK(bessel_series_kernel(1.0, 0.3, 1.0, 0.3, 0.5, 40).value ==
          doctest::Approx(free_polar_kernel(1.0, 0.3, 1.0, 0.3, 0.5)).epsilon(1e-10));
    const double a = bessel_series_kernel(1.2, std::numbers::pi, 0.9, 0.0, 0.5, 64).value;
    const double b = bessel_series_kernel(1.2, 0.0, 0.9, 0.0, 0.5, 64).value;
    const double ca = free_polar_kernel(1.2, std::numbers::pi, 0.9, 0.0, 0.5);
    const double cb = free_polar_kernel(1.2, 0.0, 0.9, 0.0, 0.5);
    CHECK(std::abs((b - a) - (cb - ca)) < 1e-10);
    // l = 0 term alone is the angular average of the closed form.
    const double l0 = bessel_series_kernel(1.2, 0.0, 0.9, 0.0, 0.5, 0).value;
    const double avg = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                           [](double t) { return free_polar_kernel(1.2, t, 0.9, 0.0, 0.5); }, 0.0, kTwoPi, 10, 1e-14) /
                       kTwoPi;
    CHECK(std::abs(l0 - avg) < 1e-8);
    CHECK(bessel_series_kernel(1.0, 0.0, 1.0, 0.0, 0.5, 2).tail > 1e-6);
}

TEST_CASE("sheet kernel sums to the plane kernel") {
    const double direct = sheet_kernel(1.5, 0.2, 1.1, 0.0, 0.5) + sheet_kernel(1.5, 0.2 + kTwoPi, 1.1, 0.0, 0.5) +
                          sheet_kernel(1.5, 0.2 - kTwoPi, 1.1, 0.0, 0.5);
    const auto img = image_sum_kernel(sheet_base(), 1.5, 0.2, 1.1, 0.0, 0.5, 1);
    CHECK(img.value == doctest::Approx(direct).epsilon(1e-14));
    // Continuity across phi = pi.
    const double below = sheet_kernel(1.0, std::numbers::pi - 1e-7, 1.0, 0.0, 0.5);
    const double above = sheet_kernel(1.0, std::numbers::pi + 1e-7, 1.0, 0.0, 0.5);
    CHECK(std::abs(below - above) < 1e-6 * std::abs(below));
    // Exact remainder: the truncation error equals the reported tail.
    for (int M : {2, 8, 20}) {
        const auto v = image_sum_kernel(sheet_base(), 0.7, 1.0, 0.8, 2.5, 0.5, M);
        const double plane = free_polar_kernel(0.7, 1.0, 0.8, 2.5, 0.5);
        CHECK(std::abs(v.value - plane) == doctest::Approx(v.tail).epsilon(1e-6));
    }
}

TEST_CASE("image sum properties") {
    const auto a = image_sum_kernel(sheet_base(), 2.0, 0.3, 2.0, 0.3, 0.1, 8);
    CHECK(std::abs(a.value - sheet_kernel(2.0, 0.3, 2.0, 0.3, 0.1)) < 1e-8);
    const auto p0 = image_sum_kernel(sheet_base(), 1.0, 0.4, 1.5, 1.0, 0.5, 8);
    const auto p1 = image_sum_kernel(sheet_base(), 1.0, 0.4 + kTwoPi, 1.5, 1.0, 0.5, 8);
    CHECK(std::abs(p0.value - p1.value) <= p0.tail + p1.tail + 1e-15);
    // Literal reading with the plane kernel as base: copies repeat, -r copies add theta + pi.
    const auto lit = image_sum_kernel(free_polar_base(), 1.0, 0.4, 1.5, 1.0, 0.5, 2);
    const double expect = 5.0 * (free_polar_kernel(1.0, 0.4, 1.5, 1.0, 0.5) + free_polar_kernel(-1.0, 0.4, 1.5, 1.0, 0.5));
    CHECK(lit.value == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(image_sum_kernel(sheet_base(), 1.0, 0.0, 1.0, 0.0, 0.5, -1), DomainError);
}

TEST_CASE("Bessel and closed-form kernels agree on the standard battery") {
    for (auto [r, t, r0, t0] : standard_battery()) {
        const double c = free_polar_kernel(r, t, r0, t0, 0.5);
        CHECK(std::abs(bessel_series_kernel(r, t, r0, t0, 0.5, 64).value - c) < 1e-12);
    }
}
