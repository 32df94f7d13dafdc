// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "polarpath/kernel.hpp"
#include "polarpath/operators.hpp"
#include "polarpath/oracle.hpp"
#include "polarpath/scaling.hpp"
#include "polarpath/schrod.hpp"

using namespace polarpath;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Verdict()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= budget_s;
    const bool pass = v.pass && in_time;
    failures += !pass;
    std::printf("AC%d %s  %s: %s [%.1f s of %.0f s]\n", id, pass ? "PASS" : "FAIL", title, v.detail.c_str(), secs, budget_s);
    std::fflush(stdout);
}

template <class... T>
std::string fmt(const char* f, T... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const Grid2& ring_grid() {
    static const Grid2 g = Grid2::polar(Chart::polar(), 301, 256, 3.5, 0.5);
    return g;
}

Verdict identities() {
    std::int64_t s1 = 0, s2 = 0, bad = 0;
    for (std::int64_t n = 1; n <= 10000; ++n) {
        s1 += 2 * n - 1;
        s2 += (2 * n - 1) * (2 * n - 1);
        bad += sum_odd(n) != n * n || sum_odd(n) != s1;
        bad += sum_odd_squares(n).exact != n * (2 * n - 1) * (2 * n + 1) / 3 || sum_odd_squares(n).exact != s2;
    }
    boost::math::quadrature::exp_sinh<double> quad;
    double worst = 0.0;
    for (int k = 0; k <= 6; ++k)
        for (double r : {0.5, 1.0, 2.0})
            for (std::int64_t N : {1, 10, 100}) {
                const double num = quad.integrate([&](double b) {
                    const double e = 2.0 * b * r * static_cast<double>(N);
                    return e > 700.0 ? 0.0 : std::pow(b, k) * std::exp(-e);
                });
                worst = std::max(worst, std::abs(beta_moment(k, r, N) - num) / num);
            }
    return {bad == 0 && worst <= 1e-10, fmt("%lld integer mismatches for N <= 1e4, beta moments max rel err %.2e", static_cast<long long>(bad), worst)};
}

Verdict theta_channel() {
    // Angular part of G_N on R(r) cos(l theta) is G_N[R cos l theta] - cos(l theta) G_N[R].
    const Grid2& g = ring_grid();
    const auto radial = [](Point2 q) { return std::exp(-(q.q1 - 2.0) * (q.q1 - 2.0)); };
    const auto R = Wavefunction::sample(g, radial);
    double worst = 0.0, channel = 0.0;
    for (std::int64_t N : {1, 4, 16, 64}) {
        channel = std::max(channel, std::abs(generator_channels(N).theta - 1.0));
        const auto base = effective_generator(N, R, {}, SumVariant::exact, {}, {1.5, 2.5});
        for (int l : {1, 2}) {
            const auto psi = Wavefunction::sample(g, [&](Point2 q) { return radial(q) * std::cos(l * q.q2); });
            const auto full = effective_generator(N, psi, {}, SumVariant::exact, {}, {1.5, 2.5});
            for (std::size_t i = 0; i < g.n1(); ++i) {
                const double r = g.q1(i);
                if (r < 1.5 || r > 2.5) continue;
                for (std::size_t j = 0; j < g.n2(); ++j) {
                    const double c = std::cos(l * g.q2(j));
                    const Complex angular = full.generator.at(i, j) - c * base.generator.at(i, j);
                    // -hbar^2/2m (1/r^2) psi_thth with psi_thth = -l^2 psi.
                    const double want = 0.5 * l * l * radial({r, 0.0}) * c / (r * r);
                    worst = std::max(worst, std::abs(angular - want));
                }
            }
        }
    }
    return {worst <= 1e-6 && channel <= 1e-14,
            fmt("N in {1,4,16,64}: max |angular - (1/r^2) psi_thth term| = %.2e, |theta coefficient - 1| = %.1e", worst, channel)};
}

Verdict schrodinger_limit() {
    const Probe ring = unit_ring(2.0, 1);
    const auto psi = Wavefunction::sample(ring_grid(), ring.value);
    const std::vector<std::int64_t> Ns{16, 32, 64, 128, 256};
    const auto s = convergence_study(Ns, psi, {}, SumVariant::exact, ring.laplacian, {1.5, 2.5});
    const auto& last = s.reports.back();
    const bool ok = last.residual_l2 <= 1e-3 && last.residual_max <= 1e-3 && s.fitted_order >= 1.5 && s.fitted_order <= 2.5;
    return {ok, fmt("N = 256 residual L2 %.2e, max %.2e; fitted order %.3f over N = 16..256", last.residual_l2,
                    last.residual_max, s.fitted_order)};
}

Verdict operator_identity() {
    const Grid2& g = ring_grid();
    const auto psi = Wavefunction::sample(g, [](Point2 q) {
        return Complex(std::exp(-(q.q1 - 2.0) * (q.q1 - 2.0)) * std::cos(q.q2), 0.3 * std::sin(2.0 * q.q2) * std::exp(-q.q1));
    });
    const auto lb = apply_laplace_beltrami(psi);
    const auto canon = apply_canonical_polar(psi);
    const Chart c = Chart::polar();
    const auto scaled = apply_h_rho_alpha(psi, MeasureDensity::sqrt_g(c), ScalingFunction::sqrt_g(c));
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t i = 4; i + 4 < g.n1(); ++i)
        for (std::size_t j = 0; j < g.n2(); ++j) {
            const double r = g.q1(i);
            d1 = std::max(d1, std::abs(canon.at(i, j) - lb.at(i, j) - psi.at(i, j) / (8.0 * r * r)));
            d2 = std::max(d2, std::abs(scaled.at(i, j) - lb.at(i, j)));
        }
    return {d1 <= 1e-10 && d2 <= 1e-8, fmt("canonical - LB - 1/(8r^2): %.2e; scaled(sqrt g) - LB: %.2e", d1, d2)};
}

double cartesian_kernel_error(std::size_t n_grid) {
    SliceConfig cfg;
    cfg.n_slices = 8;
    cfg.eps = 0.5 / 8.0;
    cfg.quadrature = GridQuadrature{n_grid, n_grid, 6.0};
    const Chart c = Chart::cartesian();
    const Grid2 g = cfg.make_grid(c);
    const auto src = g.box(0.0, 0.0, 1.5, 1.5, 2);
    const auto k = iterate_kernel(cfg, PseudoHamiltonian(Hamiltonian(c), ScalingFunction::unit(c)), src);
    double worst = 0.0;
    for (std::size_t s = 0; s < src.size(); ++s)
        for (std::size_t t = 0; t < g.size(); ++t) {
            const Point2 q = g.node(t);
            if (std::abs(q.q1) > 3.0 || std::abs(q.q2) > 3.0) continue;
            const double exact = heat_kernel_cartesian(q, g.node(src[s]), 0.5);
            worst = std::max(worst, std::abs(k.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) - exact) / exact);
        }
    return worst;
}

Verdict kernel_convergence() {
    const double coarse = cartesian_kernel_error(32);
    const double fine = cartesian_kernel_error(64);
    return {fine <= 0.02 && fine < coarse, fmt("max rel error 32^2: %.2e, 64^2: %.2e (central quarter, N = 8, tau = 0.5)", coarse, fine)};
}

Verdict scaling_coincidence() {
    const Chart c = Chart::polar();
    SliceConfig cfg;
    cfg.n_slices = 4;
    cfg.quadrature = GridQuadrature{24, 32, 4.0};
    const double tau = 0.2;
    const auto scaled = scaled_kernel_grid(cfg, ScaledKernelSpec::free(c, FieldKind::one), tau);
    cfg.eps = tau / 4.0;
    const auto plain = iterate_kernel(cfg, PseudoHamiltonian(Hamiltonian(c), ScalingFunction::unit(c)));
    const double d = (scaled.values - plain.values).cwiseAbs().maxCoeff();
    return {d <= 1e-12, fmt("max |scaled(alpha = 1) - unscaled| = %.2e on a 24 x 32 polar grid, N = 4", d)};
}

Verdict scheme_discrimination() {
    const auto probes = polar_probe_battery();
    const std::vector<Point2> pts{{1.5, 0.2}, {2.0, 0.7}, {2.5, 1.3}};
    const Chart c = Chart::polar();
    const auto spec = ScaledKernelSpec::free(c, FieldKind::sqrt_g);
    bool ok = true;
    std::ostringstream out;
    for (double eps : {1e-3, 5e-4}) {
        const auto f4 = extract_effective_potential(scaled_probe_action(spec, 4, eps), eps, probes, pts);
        const auto f6 = extract_effective_potential(scaled_probe_action(spec, 6, eps), eps, probes, pts);
        const auto scaled = richardson_combine(f4, 4.0, f6, 6.0);
        const auto plain = extract_effective_potential(
            short_time_action(PseudoHamiltonian(Hamiltonian(c), ScalingFunction::unit(c)), eps), eps, probes, pts);
        ok = ok && std::abs(scaled.c) <= 0.005 && scaled.covers_zero() && std::abs(plain.c) > 5.0 * plain.half_width;
        out << fmt("eps %.0e: scaled c = %.1e +- %.1e, unscaled c = %.5f +- %.1e; ", eps, scaled.c, scaled.half_width, plain.c,
                   plain.half_width);
    }
    std::string s = out.str();
    s.resize(s.size() - 2);
    return {ok, s};
}

Verdict delta_limit() {
    const auto spec = ScaledKernelSpec::free(Chart::polar(), FieldKind::sqrt_g);
    const std::vector<Probe> probes{gaussian_ring(2.0, 1.0, 0), gaussian_ring(2.0, 1.0, 1), gaussian_ring(2.0, 1.5, 2)};
    const std::vector<double> eps{1e-2, 3e-3, 1e-3};
    double worst = 0.0, slope = 1.0;
    for (std::size_t n : {1UL, 2UL, 4UL}) {
        const auto rep = delta_limit_check([&](double t) { return scaled_probe_action(spec, n, t); }, probes, {2.0, 0.0}, eps);
        worst = std::max(worst, rep.rows.back().max_rel_error);
        if (std::abs(rep.fitted_slope - 1.0) > std::abs(slope - 1.0)) slope = rep.fitted_slope;
    }
    return {worst <= 1e-3, fmt("max rel error at eps = 1e-3 over 3 probes and N in {1,2,4}: %.2e (slope %.3f)", worst, slope)};
}

Verdict oracle_coherence() {
    const double tau = 0.5;
    const ImageBase base = sheet_base();
    const OperatorSpec lb = OperatorSpec::laplace_beltrami(Chart::polar());
    double pair = 0.0, scale = 0.0;
    std::vector<std::pair<double, double>> heat;
    auto residual = [&](const std::function<double(double, double, double)>& k, double r, double t) {
        const double dt = 1e-4 * tau;
        const double lhs = -(k(r, t, tau + dt) - k(r, t, tau - dt)) / (2.0 * dt);
        const double rhs = apply_at(lb, [&](Point2 p) { return Complex(k(p.q1, p.q2, tau)); }, {r, t}, 1e-3).real();
        scale = std::max({scale, std::abs(lhs), std::abs(rhs)});
        heat.emplace_back(lhs, rhs);
    };
    for (auto [r, t, r0, t0] : standard_battery()) {
        const double a = free_polar_kernel(r, t, r0, t0, tau);
        const double b = bessel_series_kernel(r, t, r0, t0, tau, 64).value;
        const double c = image_sum_kernel(base, r, t, r0, t0, tau, 8).value;
        pair = std::max({pair, std::abs(a - b), std::abs(a - c), std::abs(b - c)});
        residual([&](double x, double y, double s) { return free_polar_kernel(x, y, r0, t0, s); }, r, t);
        residual([&](double x, double y, double s) { return bessel_series_kernel(x, y, r0, t0, s, 64).value; }, r, t);
    }
    double worst_heat = 0.0;
    for (auto [l, h] : heat) worst_heat = std::max(worst_heat, std::abs(l - h) / scale);
    return {pair <= 1e-4 && worst_heat <= 1e-4,
            fmt("max pairwise |difference| %.2e (closed / Bessel l_max 64 / image sum M 8), heat-equation residual %.2e", pair, worst_heat)};
}

} // namespace

int main() {
    criterion(1, "exact identities", 10, identities);
    criterion(2, "theta-theta channel exactness", 30, theta_channel);
    criterion(3, "Schrodinger limit of the effective generator", 120, schrodinger_limit);
    criterion(4, "operator identities", 10, operator_identity);
    criterion(5, "Euclidean kernel convergence", 120, kernel_convergence);
    criterion(6, "scaling coincidence for alpha = 1", 60, scaling_coincidence);
    criterion(7, "scheme discrimination", 300, scheme_discrimination);
    criterion(8, "delta limit", 60, delta_limit);
    criterion(9, "oracle coherence", 30, oracle_coherence);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
