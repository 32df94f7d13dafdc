#include <doctest.h>

#include <cmath>
#include <vector>

#include "polarpath/generators.hpp"
#include "polarpath/numerics.hpp"

using namespace polarpath;

namespace {

PseudoHamiltonian polar_h(double energy = 0.0) {
    const Chart c = Chart::polar();
    return PseudoHamiltonian(Hamiltonian(c), ScalingFunction::sqrt_g(c), energy);
}

} // namespace

TEST_CASE("pseudo-Hamiltonian values") {
    CHECK(eval_pseudo_hamiltonian(2.0, 1.0, 2.0, 0.0) == doctest::Approx(2.0));
    CHECK(eval_pseudo_hamiltonian(1.0, 0.0, 0.0, 3.0) == doctest::Approx(-3.0));
    CHECK(eval_pseudo_hamiltonian(2.0, 1.0, 2.0, 1.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(eval_pseudo_hamiltonian(0.0, 1.0, 1.0, 0.0), DomainError);
}

TEST_CASE("pseudo-Hamiltonian is alpha (H - E)") {
    for (double r : {0.3, 1.0, 2.7})
        for (double e : {0.0, 1.5}) {
            const double hfree = 0.7 * 0.7 / 2.0 + 1.3 * 1.3 / (2.0 * r * r);
            CHECK(eval_pseudo_hamiltonian(r, 0.7, 1.3, e) == doctest::Approx(r * (hfree - e)).epsilon(1e-15));
            CHECK(polar_h(e)({r, 0.4}, 0.7, 1.3) == doctest::Approx(r * (hfree - e)).epsilon(1e-15));
        }
}

TEST_CASE("first-order generators") {
    const auto h = polar_h();
    const auto g0 = generators_first_order({1.0, 0.0}, {1.0, 0.0}, 0.0, 0.0, 0.3, h);
    CHECK(g0.s_pp == 0.0);
    CHECK(g0.s_mm == 0.0);
    const auto g1 = generators_first_order({2.0, 0.0}, {1.0, 0.0}, 1.0, 0.0, 0.1, h);
    CHECK(g1.s_pp == doctest::Approx(1.95));
    // Coincident endpoints: coordinate terms cancel and only -eps h survives.
    const Point2 q{1.7, 0.9};
    const auto g2 = generators_first_order(q, q, 0.8, -0.3, 0.05, h);
    CHECK(g2.s_pp + g2.s_mm == doctest::Approx(-0.05 * h(q, 0.8, -0.3)).epsilon(1e-14));
}

TEST_CASE("slice action") {
    CHECK(slice_action({1.0, 0.2}, {1.0, 0.2}, 0.0, 0.0, 0.1, 0.0) == 0.0);
    CHECK(slice_action({2.0, 0.0}, {1.0, 0.0}, 1.0, 0.0, 0.2, 0.0) == doctest::Approx(0.85));
    // Brute-force evaluation of the same template.
    const double brute = 1.0 * (2.0 - 1.0) - 0.5 * 0.2 * (2.0 * 0.5 + 1.0 * 0.5);
    CHECK(slice_action({2.0, 0.0}, {1.0, 0.0}, 1.0, 0.0, 0.2, polar_h()) == doctest::Approx(brute));
    // Equal radii: kinetic weight t/F (P^2 2r/2m + p^2 (2/r)/2m).
    const double r = 1.3, P = 0.6, p = 0.8, tf = 0.05;
    const double expect = -tf * (P * P * 2.0 * r / 2.0 + p * p * (2.0 / r) / 2.0);
    CHECK(reduced_slice_action({r, 0.5}, {r, 0.5}, P, p, tf) == doctest::Approx(expect));
    CHECK_THROWS_AS(slice_action({0.0, 0.0}, {1.0, 0.0}, 1.0, 0.0, 0.2, 0.0), DomainError);
}

TEST_CASE("slice action is 2 pi periodic in theta and its eps-derivative is minus the endpoint average") {
    const auto h = polar_h(0.4);
    const Point2 a{1.4, 0.3}, b{0.9, 1.2};
    const double P = 0.5, p = -0.7, eps = 0.02;
    const double s = slice_action(a, b, P, p, eps, h);
    CHECK(slice_action({a.q1, a.q2 + kTwoPi}, {b.q1, b.q2 + kTwoPi}, P, p, eps, h) == doctest::Approx(s).epsilon(1e-14));
    const double d = 1e-4;
    const double ds = (slice_action(a, b, P, p, eps + d, h) - slice_action(a, b, P, p, eps - d, h)) / (2.0 * d);
    CHECK(std::abs(ds + 0.5 * (h(a, P, p) + h(b, P, p))) < 1e-8);
}

TEST_CASE("D++ D-- tends to one quadratically") {
    CHECK(std::abs(d_plusplus_check(1e-3) - 1.0) < 1e-5);
    std::vector<double> eps{1e-2, 3e-3, 1e-3, 3e-4, 1e-4}, dev;
    for (double e : eps) dev.push_back(std::abs(d_plusplus_check(e) - 1.0));
    const double slope = loglog_slope(eps, dev);
    CHECK(slope >= 1.8);
    CHECK(slope <= 2.2);
    CHECK(std::abs(d_plusplus_check(1e-6) - 1.0) < 1e-9);
}
