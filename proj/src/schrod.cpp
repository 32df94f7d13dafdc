#include "polarpath/schrod.hpp"

#include <cmath>
#include <ostream>

#include "polarpath/numerics.hpp"

namespace polarpath {

std::int64_t sum_odd(std::int64_t n) {
    if (n < 1) throw DomainError("sum_odd needs N >= 1");
    if (n > 3037000499LL) throw DomainError("sum_odd overflows for this N");
    return n * n;
}

OddSquares sum_odd_squares(std::int64_t n) {
    if (n < 1) throw DomainError("sum_odd_squares needs N >= 1");
    if (n > 1000000) throw DomainError("sum_odd_squares overflows for this N");
    OddSquares s;
    s.exact = n * (2 * n - 1) * (2 * n + 1) / 3;
    const double nd = static_cast<double>(n);
    s.asymptotic = 4.0 * nd * nd * nd / 3.0;
    s.difference = nd / 3.0;
    return s;
}

double beta_moment(int n, double r, std::int64_t N) {
    if (n < 0 || n > 20) throw DomainError("beta_moment supports 0 <= n <= 20");
    if (!(r > 0.0)) throw DomainError("beta_moment needs r > 0");
    if (N < 1) throw DomainError("beta_moment needs N >= 1");
    double fact = 1.0;
    for (int i = 2; i <= n; ++i) fact *= i;
    return fact / std::pow(2.0 * r * static_cast<double>(N), n + 1);
}

double f_k(std::int64_t k, std::int64_t N, double r, double r0) {
    return static_cast<double>(2 * N - 1 - 2 * k) * r + static_cast<double>(2 * k + 1) * r0;
}

namespace {

struct LocalDerivs {
    Complex psi, d1, d2, thth;
};

// Bracket of one X_k term before the -hbar^2/2m factor. `a2` is (2k+1)^2 or its stand-in.
Complex xk_bracket(std::int64_t k, std::int64_t N, double r, const LocalDerivs& d, double a2) {
    const double a = static_cast<double>(2 * k + 1);
    const double m1 = beta_moment(1, r, N);
    const double m2 = beta_moment(2, r, N);
    const double m3 = beta_moment(3, r, N);
    const double n2 = 2.0 * static_cast<double>(N);
    const Complex radial = (2.0 * m1 - 6.0 * r * a * m2 + 2.0 * r * r * a2 * m3) * d.psi +
                           (6.0 * r * m1 - 4.0 * r * r * a * m2) * d.d1 + 2.0 * r * r * m1 * d.d2;
    return n2 * (radial + 2.0 * m1 * d.thth);
}

std::size_t locate(const std::vector<double>& axis, double v, double h, const char* what) {
    const double f = (v - axis.front()) / h;
    const auto i = static_cast<long long>(std::llround(f));
    if (i < 0 || static_cast<std::size_t>(i) >= axis.size() || std::abs(f - static_cast<double>(i)) > 1e-9)
        throw DomainError(std::string("evaluation point is not a grid node in ") + what);
    return static_cast<std::size_t>(i);
}

struct GridView {
    const Wavefunction& psi;
    const Grid2& g;
    std::vector<double> r_axis, t_axis;

    explicit GridView(const Wavefunction& w) : psi(w), g(w.grid) {
        if (!g.chart().is_polar()) throw DomainError("the effective generator is defined on polar grids");
        for (std::size_t i = 0; i < g.n1(); ++i) r_axis.push_back(g.q1(i));
        for (std::size_t j = 0; j < g.n2(); ++j) t_axis.push_back(g.q2(j));
    }
    Complex at(long i, long j) const {
        const long n = static_cast<long>(g.n2());
        j = ((j % n) + n) % n;
        return psi.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    bool usable(std::size_t i) const { return i >= 2 && i + 2 < g.n1(); }
    LocalDerivs derivs(std::size_t i, std::size_t j) const {
        const long a = static_cast<long>(i), b = static_cast<long>(j);
        const double h = g.h1(), t = g.h2();
        LocalDerivs d;
        d.psi = at(a, b);
        d.d1 = (-at(a + 2, b) + 8.0 * at(a + 1, b) - 8.0 * at(a - 1, b) + at(a - 2, b)) / (12.0 * h);
        d.d2 = (-at(a + 2, b) + 16.0 * at(a + 1, b) - 30.0 * d.psi + 16.0 * at(a - 1, b) - at(a - 2, b)) / (12.0 * h * h);
        d.thth = (-at(a, b + 2) + 16.0 * at(a, b + 1) - 30.0 * d.psi + 16.0 * at(a, b - 1) - at(a, b - 2)) / (12.0 * t * t);
        return d;
    }
};

} // namespace

Complex xk_apply(std::int64_t k, std::int64_t N, const Wavefunction& psi, Point2 eval_point, const Units& units,
                 XkRoute route) {
    if (N < 1 || k < 0 || k >= N) throw DomainError("xk_apply needs 0 <= k < N");
    units.validate();
    GridView v(psi);
    const std::size_t i = locate(v.r_axis, eval_point.q1, v.g.h1(), "r");
    const std::size_t j = locate(v.t_axis, canonical_angle(eval_point.q2), v.g.h2(), "theta") % v.g.n2();
    if (!v.usable(i)) throw DomainError("xk_apply: evaluation point within two cells of the radial edge");
    const double r = v.g.q1(i);
    const LocalDerivs d = v.derivs(i, j);
    const double kin = -units.hbar * units.hbar / (2.0 * units.mass);
    if (route == XkRoute::moments) {
        const double a = static_cast<double>(2 * k + 1);
        return kin * xk_bracket(k, N, r, d, a * a);
    }
    // d^2/dr0^2 of r0 (r + r0) psi(r0) / F_k(r0)^2 at r0 = r.
    auto g = [&](long off) {
        const double r0 = v.g.q1(static_cast<std::size_t>(static_cast<long>(i) + off));
        const double f = f_k(k, N, r, r0);
        return r0 * (r + r0) * v.at(static_cast<long>(i) + off, static_cast<long>(j)) / (f * f);
    };
    const double h = v.g.h1();
    const Complex d2g = (-g(2) + 16.0 * g(1) - 30.0 * g(0) + 16.0 * g(-1) - g(-2)) / (12.0 * h * h);
    const double n2 = 2.0 * static_cast<double>(N);
    return kin * n2 * (d2g + 2.0 * beta_moment(1, r, N) * d.thth);
}

ChannelBreakdown generator_channels(std::int64_t N, SumVariant variant) {
    if (N < 1) throw DomainError("generator_channels needs N >= 1");
    ChannelBreakdown c;
    const double nn = static_cast<double>(N);
    const double approx_a2 = 4.0 * nn * nn / 3.0;  // per-k stand-in summing to 4N^3/3
    // Unit vectors through the bracket at r = 1 pick out each channel.
    for (std::int64_t k = 0; k < N; ++k) {
        const double a = static_cast<double>(2 * k + 1);
        const double a2 = variant == SumVariant::exact ? a * a : approx_a2;
        c.psi += xk_bracket(k, N, 1.0, {1.0, 0.0, 0.0, 0.0}, a2).real();
        c.dpsi += xk_bracket(k, N, 1.0, {0.0, 1.0, 0.0, 0.0}, a2).real();
        c.d2psi += xk_bracket(k, N, 1.0, {0.0, 0.0, 1.0, 0.0}, a2).real();
        c.theta += xk_bracket(k, N, 1.0, {0.0, 0.0, 0.0, 1.0}, a2).real();
    }
    return c;
}

EffectiveGeneratorReport effective_generator(std::int64_t N, const Wavefunction& psi, const Units& units,
                                             SumVariant variant, const std::function<double(Point2)>& laplacian,
                                             GeneratorWindow window) {
    if (N < 1) throw DomainError("effective_generator needs N >= 1");
    units.validate();
    GridView v(psi);
    const Grid2& g = v.g;
    const double kin = -units.hbar * units.hbar / (2.0 * units.mass);
    const double nn = static_cast<double>(N);
    const double approx_a2 = 4.0 * nn * nn / 3.0;

    Wavefunction blank{g, std::vector<Complex>(g.size(), Complex(0.0)), false, 2};
    EffectiveGeneratorReport rep{N, variant, blank, blank, generator_channels(N, variant)};

    double num2 = 0.0, den2 = 0.0, num_max = 0.0, den_max = 0.0;
    for (std::size_t i = 2; i + 2 < g.n1(); ++i) {
        const double r = g.q1(i);
        for (std::size_t j = 0; j < g.n2(); ++j) {
            const LocalDerivs d = v.derivs(i, j);
            Complex sum = 0.0;
            for (std::int64_t k = 0; k < N; ++k) {
                const double a = static_cast<double>(2 * k + 1);
                sum += xk_bracket(k, N, r, d, variant == SumVariant::exact ? a * a : approx_a2);
            }
            const Complex gen = kin * sum;
            const Complex lap = laplacian ? Complex(laplacian({r, g.q2(j)})) : d.d2 + d.d1 / r + d.thth / (r * r);
            const Complex tgt = kin * lap;
            rep.generator.at(i, j) = gen;
            rep.target.at(i, j) = tgt;
            if (r < window.r_lo || r > window.r_hi) continue;
            const double e = std::abs(gen - tgt);
            num2 += e * e;
            den2 += std::norm(tgt);
            num_max = std::max(num_max, e);
            den_max = std::max(den_max, std::abs(tgt));
        }
    }
    if (!(den2 > 0.0)) throw NumericError("effective_generator: target vanishes on the window");
    rep.residual_l2 = std::sqrt(num2 / den2);
    rep.residual_max = num_max / den_max;
    return rep;
}

ConvergenceStudy convergence_study(std::span<const std::int64_t> Ns, const Wavefunction& psi, const Units& units,
                                   SumVariant variant, const std::function<double(Point2)>& laplacian,
                                   GeneratorWindow window) {
    if (Ns.empty()) throw DomainError("convergence_study needs at least one N");
    ConvergenceStudy s;
    std::vector<double> xs, ys;
    for (auto N : Ns) {
        s.reports.push_back(effective_generator(N, psi, units, variant, laplacian, window));
        xs.push_back(static_cast<double>(N));
        ys.push_back(std::max(s.reports.back().residual_l2, 1e-300));
    }
    if (xs.size() >= 2) {
        s.fitted_slope = loglog_slope(xs, ys);
        s.fitted_order = -s.fitted_slope;
    }
    for (auto& r : s.reports) r.fitted_order = s.fitted_order;
    return s;
}

nlohmann::json to_json(const EffectiveGeneratorReport& r) {
    return {{"N", r.N},
            {"variant", r.variant == SumVariant::exact ? "exact" : "leading_order"},
            {"residual_L2", r.residual_l2},
            {"residual_max", r.residual_max},
            {"fitted_order", r.fitted_order},
            {"channel_breakdown",
             {{"d2psi", r.channels.d2psi}, {"dpsi_times_r", r.channels.dpsi}, {"psi_times_r2", r.channels.psi},
              {"theta_times_r2", r.channels.theta}}}};
}

nlohmann::json to_json(const ConvergenceStudy& s) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.reports) rows.push_back(to_json(r));
    return {{"fitted_slope", s.fitted_slope}, {"fitted_order", s.fitted_order}, {"reports", rows}};
}

void write_convergence_csv(const ConvergenceStudy& s, std::ostream& out) {
    out.precision(17);
    out << "N,residual,order_estimate\n";
    for (std::size_t i = 0; i < s.reports.size(); ++i) {
        const auto& r = s.reports[i];
        out << r.N << ',' << r.residual_l2 << ',';
        if (i > 0) {
            const auto& p = s.reports[i - 1];
            out << std::log(p.residual_l2 / r.residual_l2) / std::log(static_cast<double>(r.N) / static_cast<double>(p.N));
        }
        out << '\n';
    }
}

} // namespace polarpath
