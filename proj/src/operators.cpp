#include "polarpath/operators.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "polarpath/numerics.hpp"
#include "polarpath/oracle.hpp"

namespace polarpath {

OperatorSpec OperatorSpec::laplace_beltrami(const Chart& chart, Units units) {
    return {OperatorKind::laplace_beltrami, chart, MeasureDensity::sqrt_g(chart), ScalingFunction::sqrt_g(chart), units, {}};
}

OperatorSpec OperatorSpec::canonical_polar(const Chart& chart, Units units) {
    if (!chart.is_polar()) throw DomainError("canonical_polar needs a polar chart");
    return {OperatorKind::canonical_polar, chart, MeasureDensity::sqrt_g(chart), ScalingFunction::sqrt_g(chart), units, {}};
}

OperatorSpec OperatorSpec::h_rho_alpha(const Chart& chart, MeasureDensity rho, ScalingFunction alpha, Units units) {
    return {OperatorKind::h_rho_alpha, chart, rho, alpha, units, {}};
}

namespace {

using Samples = std::vector<Complex>;

// 4th-order centred first and second differences along one grid axis.
struct AxisFD {
    const Grid2& g;
    int axis;  // 1 or 2

    std::size_t shift(std::size_t i1, std::size_t i2, long d) const {
        if (axis == 1) return g.index(static_cast<std::size_t>(static_cast<long>(i1) + d), i2);
        const long n = static_cast<long>(g.n2());
        long j = static_cast<long>(i2) + d;
        if (g.periodic2()) j = ((j % n) + n) % n;
        return g.index(i1, static_cast<std::size_t>(j));
    }
    double h() const { return axis == 1 ? g.h1() : g.h2(); }

    Complex d1(const Samples& f, std::size_t i1, std::size_t i2) const {
        return (-f[shift(i1, i2, 2)] + 8.0 * f[shift(i1, i2, 1)] - 8.0 * f[shift(i1, i2, -1)] + f[shift(i1, i2, -2)]) /
               (12.0 * h());
    }
    Complex d2(const Samples& f, std::size_t i1, std::size_t i2) const {
        return (-f[shift(i1, i2, 2)] + 16.0 * f[shift(i1, i2, 1)] - 30.0 * f[g.index(i1, i2)] + 16.0 * f[shift(i1, i2, -1)] -
                f[shift(i1, i2, -2)]) /
               (12.0 * h() * h());
    }
};

bool inside(const Grid2& g, std::size_t i1, std::size_t i2, std::size_t margin) {
    if (i1 < margin || i1 + margin >= g.n1()) return false;
    if (!g.periodic2() && (i2 < margin || i2 + margin >= g.n2())) return false;
    return true;
}

void require_room(const Grid2& g, std::size_t margin) {
    if (g.n1() <= 2 * margin || (!g.periodic2() && g.n2() <= 2 * margin))
        throw DomainError("grid too small for the finite-difference stencil");
}

Wavefunction blank_like(const Wavefunction& psi, std::size_t margin) {
    Wavefunction out{psi.grid, Samples(psi.samples.size(), Complex(0.0)), false, margin};
    return out;
}

// Flat or polar Laplacian of the samples, written into out at interior nodes.
Wavefunction laplacian_grid(const Wavefunction& psi) {
    const Grid2& g = psi.grid;
    require_room(g, 2);
    Wavefunction out = blank_like(psi, std::max<std::size_t>(psi.margin, 2));
    AxisFD a1{g, 1}, a2{g, 2};
    const bool polar = g.chart().is_polar();
    for (std::size_t i = 0; i < g.n1(); ++i)
        for (std::size_t j = 0; j < g.n2(); ++j) {
            if (!inside(g, i, j, out.margin)) continue;
            Complex v;
            if (polar) {
                const double r = g.q1(i);
                v = a1.d2(psi.samples, i, j) + a1.d1(psi.samples, i, j) / r + a2.d2(psi.samples, i, j) / (r * r);
            } else {
                v = a1.d2(psi.samples, i, j) + a2.d2(psi.samples, i, j);
            }
            out.at(i, j) = v;
        }
    return out;
}

} // namespace

Wavefunction apply_laplace_beltrami(const Wavefunction& psi, const Units& units) {
    units.validate();
    Wavefunction out = laplacian_grid(psi);
    const double k = -units.hbar * units.hbar / (2.0 * units.mass);
    for (auto& v : out.samples) v *= k;
    return out;
}

Wavefunction apply_canonical_polar(const Wavefunction& psi, const Units& units) {
    if (!psi.grid.chart().is_polar()) throw DomainError("canonical_polar needs a polar grid");
    Wavefunction out = apply_laplace_beltrami(psi, units);
    const double k = units.hbar * units.hbar / (8.0 * units.mass);
    const Grid2& g = psi.grid;
    for (std::size_t i = 0; i < g.n1(); ++i)
        for (std::size_t j = 0; j < g.n2(); ++j)
            if (out.interior(i, j)) out.at(i, j) += k / (g.q1(i) * g.q1(i)) * psi.at(i, j);
    return out;
}

Wavefunction apply_h_rho_alpha(const Wavefunction& psi, const MeasureDensity& rho, const ScalingFunction& alpha,
                               const Units& units, const PotentialFn& potential) {
    units.validate();
    const Grid2& g = psi.grid;
    const Chart& chart = g.chart();
    require_room(g, 2);
    const std::size_t n = g.size();
    Samples phi(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Point2 q = g.node(k);
        phi[k] = std::sqrt(rho(q) / alpha(q)) * psi.samples[k];
    }
    AxisFD a1{g, 1}, a2{g, 2};
    // d_i (c_i d_i phi) = c_i phi_ii + (d_i c_i) phi_i with c_i = g^ii alpha.
    auto coef = [&](Point2 q, int axis) { return chart.metric_inverse(q)[axis][axis] * alpha(q); };
    auto coef_slope = [&](Point2 q, int axis, double h) {
        auto at = [&](double s) {
            Point2 p = q;
            (axis == 0 ? p.q1 : p.q2) += s * h;
            return coef(p, axis);
        };
        return (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
    };
    Wavefunction out = blank_like(psi, std::max<std::size_t>(psi.margin, 2));
    const double kin = -units.hbar * units.hbar / (2.0 * units.mass);
    for (std::size_t i = 0; i < g.n1(); ++i)
        for (std::size_t j = 0; j < g.n2(); ++j) {
            if (!inside(g, i, j, out.margin)) continue;
            const Point2 q{g.q1(i), g.q2(j)};
            const Complex div = coef(q, 0) * a1.d2(phi, i, j) + coef_slope(q, 0, g.h1()) * a1.d1(phi, i, j) +
                                coef(q, 1) * a2.d2(phi, i, j) + coef_slope(q, 1, g.h2()) * a2.d1(phi, i, j);
            Complex v = kin * div / std::sqrt(rho(q) * alpha(q));
            if (potential) v += potential(q) * psi.at(i, j);
            out.at(i, j) = v;
        }
    return out;
}

Wavefunction apply(const OperatorSpec& spec, const Wavefunction& psi) {
    Wavefunction out = [&] {
        switch (spec.kind) {
            case OperatorKind::laplace_beltrami: return apply_laplace_beltrami(psi, spec.units);
            case OperatorKind::canonical_polar: return apply_canonical_polar(psi, spec.units);
            case OperatorKind::h_rho_alpha: return apply_h_rho_alpha(psi, spec.rho, spec.alpha, spec.units, spec.potential);
        }
        throw DomainError("unknown operator kind");
    }();
    if (spec.potential && spec.kind != OperatorKind::h_rho_alpha) {
        const Grid2& g = psi.grid;
        for (std::size_t i = 0; i < g.n1(); ++i)
            for (std::size_t j = 0; j < g.n2(); ++j)
                if (out.interior(i, j)) out.at(i, j) += spec.potential({g.q1(i), g.q2(j)}) * psi.at(i, j);
    }
    return out;
}

namespace {

template <class F>
Complex d1_point(const F& f, Point2 q, int axis, double h) {
    auto at = [&](double d) { return axis == 1 ? f(Point2{q.q1 + d, q.q2}) : f(Point2{q.q1, q.q2 + d}); };
    return (-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12.0 * h);
}

template <class F>
Complex d2_point(const F& f, Point2 q, int axis, double h) {
    auto at = [&](double d) { return axis == 1 ? f(Point2{q.q1 + d, q.q2}) : f(Point2{q.q1, q.q2 + d}); };
    return (-at(2 * h) + 16.0 * at(h) - 30.0 * at(0.0) + 16.0 * at(-h) - at(-2 * h)) / (12.0 * h * h);
}

} // namespace

Complex apply_at(const OperatorSpec& spec, const Field& psi, Point2 q, double h) {
    spec.units.validate();
    if (!(h > 0.0)) throw DomainError("apply_at needs a positive step");
    const Chart& chart = spec.chart;
    const bool polar = chart.is_polar();
    const double reach = spec.kind == OperatorKind::h_rho_alpha ? 4.0 * h : 2.0 * h;
    if (polar && q.q1 - reach <= chart.r_min()) throw DomainError("stencil reaches r_min");
    const double kin = -spec.units.hbar * spec.units.hbar / (2.0 * spec.units.mass);
    Complex v;
    if (spec.kind == OperatorKind::h_rho_alpha) {
        auto phi = [&](Point2 p) { return std::sqrt(spec.rho(p) / spec.alpha(p)) * psi(p); };
        auto flux1 = [&](Point2 p) { return chart.metric_inverse(p)[0][0] * spec.alpha(p) * d1_point(phi, p, 1, h); };
        auto flux2 = [&](Point2 p) { return chart.metric_inverse(p)[1][1] * spec.alpha(p) * d1_point(phi, p, 2, h); };
        v = kin * (d1_point(flux1, q, 1, h) + d1_point(flux2, q, 2, h)) / std::sqrt(spec.rho(q) * spec.alpha(q));
    } else {
        Complex lap;
        if (polar) {
            const double r = q.q1;
            lap = d2_point(psi, q, 1, h) + d1_point(psi, q, 1, h) / r + d2_point(psi, q, 2, h) / (r * r);
        } else {
            lap = d2_point(psi, q, 1, h) + d2_point(psi, q, 2, h);
        }
        v = kin * lap;
        if (spec.kind == OperatorKind::canonical_polar) {
            if (!polar) throw DomainError("canonical_polar needs a polar chart");
            v += spec.units.hbar * spec.units.hbar / (8.0 * spec.units.mass * q.q1 * q.q1) * psi(q);
        }
    }
    if (spec.potential) v += spec.potential(q) * psi(q);
    return v;
}

void write_residual_csv(const Wavefunction& residual, std::ostream& out) {
    const Grid2& g = residual.grid;
    out.precision(17);
    out << (g.chart().is_polar() ? "r,theta,residual_re,residual_im\n" : "x,y,residual_re,residual_im\n");
    for (std::size_t i = 0; i < g.n1(); ++i)
        for (std::size_t j = 0; j < g.n2(); ++j) {
            if (!residual.interior(i, j)) continue;
            const Complex v = residual.at(i, j);
            out << g.q1(i) << ',' << g.q2(j) << ',' << v.real() << ',' << v.imag() << '\n';
        }
}

// ---------------------------------------------------------------------------

ProbeAction exact_heat_action(double tau, const Units& units, std::size_t nodes) {
    if (!(tau > 0.0)) throw DomainError("exact_heat_action needs tau > 0");
    return [tau, units, nodes](const Probe& f, Point2 q) {
        const auto& gh = GaussHermite::rule(nodes);
        const bool polar = f.chart == ChartKind::polar2d;
        const double x = polar ? q.q1 * std::cos(q.q2) : q.q1;
        const double y = polar ? q.q1 * std::sin(q.q2) : q.q2;
        const double s = std::sqrt(2.0 * units.hbar * tau / units.mass);
        double total = 0.0;
        for (std::size_t i = 0; i < nodes; ++i)
            for (std::size_t j = 0; j < nodes; ++j) {
                const double x0 = x + s * gh.nodes[i];
                const double y0 = y + s * gh.nodes[j];
                const Point2 p = polar ? Point2{std::hypot(x0, y0), std::atan2(y0, x0)} : Point2{x0, y0};
                total += gh.weights[i] * gh.weights[j] * f(p);
            }
        return total / std::numbers::pi;
    };
}

ProbeAction first_order_action(double eps, const Units& units) {
    return [eps, units](const Probe& f, Point2 q) {
        return f(q) + eps * units.hbar / (2.0 * units.mass) * f.laplacian(q);
    };
}

namespace {

double radius_of(const Probe& f, Point2 q) { return f.chart == ChartKind::polar2d ? q.q1 : std::hypot(q.q1, q.q2); }

EffectivePotentialFit fit_rows(std::vector<EffectivePotentialRow> rows) {
    if (rows.size() < 3) throw DomainError("effective-potential fit needs at least three observations");
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
        xs.push_back(r.x);
        xs.push_back(r.z);
        ys.push_back(r.y);
    }
    const LinearFit lf = least_squares(xs, 2, ys);
    EffectivePotentialFit fit;
    fit.c = lf.coef[0];
    fit.std_err = lf.std_err[0];
    fit.dof = lf.dof;
    fit.half_width = lf.half_width95(0);
    fit.d = lf.coef[1];
    fit.d_half_width = lf.half_width95(1);
    fit.condition = lf.condition;
    fit.rows = std::move(rows);
    if (!std::isfinite(fit.c) || !std::isfinite(fit.half_width)) throw NumericError("effective-potential fit is not finite");
    return fit;
}

} // namespace

EffectivePotentialFit extract_effective_potential(const ProbeAction& kernel_action, double eps,
                                                  std::span<const Probe> probes, std::span<const Point2> points,
                                                  const Units& units, ProbeAction reference) {
    if (!(eps > 0.0)) throw DomainError("extract_effective_potential needs eps > 0");
    if (probes.empty() || points.empty()) throw DomainError("extract_effective_potential needs probes and points");
    if (!reference) reference = exact_heat_action(eps, units);
    std::vector<EffectivePotentialRow> rows;
    for (const auto& p : probes)
        for (const auto& q : points) {
            const double r = radius_of(p, q);
            const double f = p(q);
            const double x = units.hbar * units.hbar * f / (2.0 * units.mass * r * r);
            const double z = -units.hbar * units.hbar / (2.0 * units.mass) * p.laplacian(q);
            const double y = units.hbar * (reference(p, q) - kernel_action(p, q)) / eps;
            rows.push_back({p.name, q, x, z, y});
        }
    if (rows.size() < 3) throw DomainError("effective-potential fit needs at least three observations");
    EffectivePotentialFit fit;
    try {
        fit = fit_rows(std::move(rows));
    } catch (const NumericError&) {
        throw NumericError("effective-potential fit is ill-conditioned (degenerate probes)");
    }
    if (fit.condition > 1e12) throw NumericError("effective-potential fit is ill-conditioned (degenerate probes)");
    return fit;
}

EffectivePotentialFit extract_effective_potential(const KernelGrid& kernel, double eps, std::span<const Probe> probes,
                                                  std::span<const Point2> points, const Units& units) {
    return extract_effective_potential(grid_action(kernel), eps, probes, points, units);
}

EffectivePotentialFit richardson_combine(const EffectivePotentialFit& fa, double n_a, const EffectivePotentialFit& fb,
                                         double n_b, double power) {
    if (!(n_b > n_a) || !(n_a > 0.0)) throw DomainError("richardson_combine needs 0 < n_a < n_b");
    const double wa = std::pow(n_a, power);
    const double wb = std::pow(n_b, power);
    EffectivePotentialFit out;
    out.c = (wb * fb.c - wa * fa.c) / (wb - wa);
    out.std_err = std::hypot(wb * fb.std_err, wa * fa.std_err) / (wb - wa);
    out.dof = std::min(fa.dof, fb.dof);
    out.half_width = student_t975(out.dof) * out.std_err;
    out.d = (wb * fb.d - wa * fa.d) / (wb - wa);
    const double sd_a = fa.d_half_width / student_t975(fa.dof), sd_b = fb.d_half_width / student_t975(fb.dof);
    out.d_half_width = student_t975(out.dof) * std::hypot(wb * sd_b, wa * sd_a) / (wb - wa);
    out.condition = std::max(fa.condition, fb.condition);
    out.rows = fb.rows;
    return out;
}

} // namespace polarpath
