#include <doctest.h>

#include <cmath>

#include "polarpath/geometry.hpp"

using namespace polarpath;

TEST_CASE("polar inverse metric") {
    const Chart polar = Chart::polar();
    const Mat2 g = metric_inverse(polar, {2.0, 0.3});
    CHECK(g[0][0] == 1.0);
    CHECK(g[1][1] == 0.25);
    CHECK(g[0][1] == 0.0);
    CHECK(g[1][0] == 0.0);
    const Mat2 one = metric_inverse(polar, {1.0, 4.0});
    CHECK(one[0][0] == 1.0);
    CHECK(one[1][1] == 1.0);
}

TEST_CASE("cartesian inverse metric is the identity") {
    const Mat2 g = metric_inverse(Chart::cartesian(), {-3.0, 7.5});
    CHECK(g[0][0] == 1.0);
    CHECK(g[1][1] == 1.0);
    CHECK(g[0][1] == 0.0);
}

TEST_CASE("density") {
    const Chart polar = Chart::polar();
    CHECK(density(polar, {2.0, 1.0}) == 2.0);
    CHECK(density(polar, {0.5, 1.0}) == 0.5);
    CHECK(density(Chart::cartesian(), {4.0, -1.0}) == 1.0);
}

TEST_CASE("nonpositive radius is rejected") {
    const Chart polar = Chart::polar();
    CHECK_THROWS_AS(metric_inverse(polar, {0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(density(polar, {-1.0, 0.0}), DomainError);
    CHECK_THROWS_AS(Chart::from_id("sphere"), DomainError);
}

TEST_CASE("scaling functions") {
    const Chart polar = Chart::polar();
    CHECK(default_scaling(polar)({3.0, 0.2}) == 3.0);
    CHECK(default_scaling(Chart::cartesian())({3.0, 0.2}) == 1.0);
    CHECK(ScalingFunction::unit(polar)({3.0, 0.2}) == 1.0);
    CHECK(ScalingFunction::from_id(polar, "sqrt_g")({2.5, 0.0}) == 2.5);
    CHECK(ScalingFunction::from_id(polar, "one").id() == "one");
}

TEST_CASE("metric and inverse are inverse matrices; density squared is det g") {
    for (const Chart& chart : {Chart::polar(), Chart::cartesian()}) {
        for (double r : {0.1, 0.7, 1.0, 2.3, 9.0}) {
            const Point2 q{r, 1.1};
            const Mat2 g = chart.metric(q);
            const Mat2 gi = chart.metric_inverse(q);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    const double v = g[i][0] * gi[0][j] + g[i][1] * gi[1][j];
                    CHECK(v == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
                }
            const double det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            CHECK(chart.density(q) * chart.density(q) == doctest::Approx(det).epsilon(1e-12));
        }
    }
}

TEST_CASE("angle canonicalization") {
    for (double theta : {0.0, 0.4, 3.0, 6.2, -1.3}) {
        const double base = canonical_angle(theta);
        CHECK(base >= 0.0);
        CHECK(base < kTwoPi);
        for (int k = -3; k <= 3; ++k) CHECK(std::abs(canonical_angle(theta + kTwoPi * k) - base) < 1e-12);
    }
    CHECK(wrapped_difference(kTwoPi - 0.1) == doctest::Approx(-0.1));
    CHECK(wrapped_difference(0.2) == doctest::Approx(0.2));
}

TEST_CASE("units validation") {
    CHECK_NOTHROW(Units{}.validate());
    CHECK_THROWS_AS((Units{-1.0, 1.0}.validate()), DomainError);
    CHECK_THROWS_AS((Units{1.0, 0.0}.validate()), DomainError);
}
