#include "polarpath/scaling.hpp"

#include <cmath>
#include <numbers>

#include "polarpath/numerics.hpp"

namespace polarpath {

double ReducedSlicing::slice_action(std::size_t j, double theta_next, double theta_prev, double P, double p,
                                    double mass) const {
    if (j >= n_slices()) throw DomainError("slice index out of range");
    return reduced_slice_action({radii[j + 1], theta_next}, {radii[j], theta_prev}, P, p, half_step, mass);
}

ReducedSlicing reduce_pseudo_energy(std::span<const double> radii, double t) {
    if (radii.size() < 2) throw DomainError("reduce_pseudo_energy needs at least the two boundary radii");
    if (!(t > 0.0)) throw DomainError("reduce_pseudo_energy needs t > 0");
    for (double r : radii)
        if (!(r > 0.0)) throw DomainError("reduce_pseudo_energy: radii must be positive");
    ReducedSlicing s;
    s.radii.assign(radii.begin(), radii.end());
    s.t = t;
    double interior = 0.0;
    for (std::size_t k = 1; k + 1 < radii.size(); ++k) interior += radii[k];
    s.F = radii.front() + 2.0 * interior + radii.back();
    s.half_step = t / s.F;
    s.factor = 2.0 * static_cast<double>(s.n_slices()) / s.F;
    return s;
}

ScaledKernelSpec ScaledKernelSpec::free(const Chart& chart, FieldKind alpha, Units units) {
    return {Hamiltonian(chart, units), MeasureDensity::sqrt_g(chart), ScalingFunction(chart, alpha)};
}

void ScaledKernelSpec::validate() const {
    units().validate();
    if (H.has_potential()) throw DomainError("the scaled kernel is implemented for the free particle only");
    if (rho.chart().kind() != chart().kind() || alpha.chart().kind() != chart().kind())
        throw DomainError("scaled kernel fields live on a different chart");
}

namespace {

SliceConfig unscaled_config(const SliceConfig& config, double tau) {
    SliceConfig c = config;
    c.eps = tau / static_cast<double>(config.n_slices);
    return c;
}

// Sum of alpha over the path with weights 1, 2, ..., 2, 1.
template <class Range>
double f_of(const Range& alphas) {
    double s = 0.0;
    for (std::size_t k = 0; k < alphas.size(); ++k) s += (k == 0 || k + 1 == alphas.size()) ? alphas[k] : 2.0 * alphas[k];
    return s;
}

// Scaled integrand along a discrete path q_0 ... q_N (without the interior measure).
double path_value(const ScaledKernelSpec& spec, const PseudoHamiltonian& h, const std::vector<Point2>& path, double tau) {
    const std::size_t n = path.size() - 1;
    std::vector<double> alphas(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) alphas[k] = spec.alpha(path[k]);
    const double F = f_of(alphas);
    const double eps = 2.0 * tau / F;
    double v = std::sqrt(alphas.front() * alphas.back()) * 2.0 * static_cast<double>(n) / F;
    for (std::size_t j = 0; j < n; ++j) v *= short_time_kernel(path[j + 1], path[j], eps, h, spec.rho);
    return v;
}

} // namespace

McEstimate scaled_kernel_euclidean(const SliceConfig& config, const ScaledKernelSpec& spec, Point2 q, Point2 q0,
                                   double tau) {
    spec.validate();
    if (!(tau > 0.0)) throw DomainError("scaled kernel needs tau > 0");
    const Chart& chart = spec.chart();
    config.validate(chart);
    if (chart.is_polar() && (q.q1 <= chart.r_min() || q0.q1 <= chart.r_min()))
        throw DomainError("scaled kernel: radius at or below r_min");
    const PseudoHamiltonian h = spec.pseudo();
    const std::size_t n = config.n_slices;

    if (spec.unscaled()) {
        const SliceConfig c = unscaled_config(config, tau);
        if (const auto* mc = std::get_if<MonteCarloQuadrature>(&c.quadrature)) return iterate_kernel_mc(n, c.eps, h, q, q0, *mc);
        if (n == 1) return {short_time_kernel(q, q0, c.eps, h, spec.rho), 0.0};
        const Grid2 g = c.make_grid(chart);
        const auto src = g.box(q0.q1, q0.q2, 1e-9, 1e-9);
        const auto tgt = g.box(q.q1, q.q2, 1e-9, 1e-9);
        if (src.size() != 1 || tgt.size() != 1) throw DomainError("grid evaluation needs q and q0 on grid nodes");
        const KernelGrid k = iterate_kernel(c, h, std::vector<std::size_t>{src[0]});
        return {k.values(static_cast<Eigen::Index>(tgt[0]), 0), 0.0};
    }

    if (n == 1) return {path_value(spec, h, {q0, q}, tau), 0.0};

    if (const auto* mc = std::get_if<MonteCarloQuadrature>(&config.quadrature)) {
        const double v = spec.units().hbar * tau / (spec.units().mass * static_cast<double>(n)) *
                         chart.metric_inverse(q0)[0][0] * spec.alpha(q0) * 2.0 / (spec.alpha(q0) + spec.alpha(q));
        BridgeSampler bridge(chart, q0, q, n, v);
        std::mt19937_64 rng(mc->seed);
        std::vector<Point2> path;
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t s = 0; s < mc->samples; ++s) {
            const double log_q = bridge.sample(rng, path);
            bool ok = true;
            double jac = 1.0;
            for (std::size_t k = 1; k < n; ++k) {
                if (!chart.inside_cutoff(path[k]) || (chart.is_polar() && path[k].q1 <= chart.r_min())) {
                    ok = false;
                    break;
                }
                jac *= spec.rho(path[k]) / chart.density(path[k]);
            }
            const double w = ok ? path_value(spec, h, path, tau) * jac * std::exp(-log_q) : 0.0;
            sum += w;
            sum2 += w * w;
        }
        const double ns = static_cast<double>(mc->samples);
        const double mean = sum / ns;
        return {mean, std::sqrt(std::max(0.0, sum2 / ns - mean * mean) / ns)};
    }

    if (n != 2) throw DomainError("grid quadrature of the scaled kernel supports N <= 2; use monte_carlo");
    const Grid2 g = config.make_grid(chart);
    double total = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Point2 mid = g.node(k);
        total += path_value(spec, h, {q0, mid, q}, tau) * spec.rho(mid) * g.coordinate_weight(k);
    }
    return {total, 0.0};
}

KernelGrid scaled_kernel_grid(const SliceConfig& config, const ScaledKernelSpec& spec, double tau,
                              std::optional<std::vector<std::size_t>> sources) {
    spec.validate();
    if (!(tau > 0.0)) throw DomainError("scaled kernel needs tau > 0");
    const Chart& chart = spec.chart();
    const PseudoHamiltonian h = spec.pseudo();
    if (spec.unscaled()) {
        KernelGrid k = iterate_kernel(unscaled_config(config, tau), h, std::move(sources));
        k.scaled = true;
        k.alpha_id = spec.alpha.id();
        return k;
    }
    config.validate(chart);
    const std::size_t n = config.n_slices;
    if (n > 2) throw DomainError("grid quadrature of the scaled kernel supports N <= 2; use monte_carlo");
    Grid2 g = config.make_grid(chart);
    std::vector<std::size_t> cols;
    if (sources) {
        cols = *sources;
        for (auto s : cols)
            if (s >= g.size()) throw DomainError("source index out of range");
    } else {
        for (std::size_t i = 0; i < g.size(); ++i) cols.push_back(i);
    }
    Eigen::MatrixXd values(g.size(), cols.size());
    parallel_for(g.size(), config.workers, [&](std::size_t t) {
        const Point2 q = g.node(t);
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const Point2 q0 = g.node(cols[c]);
            double v = 0.0;
            if (n == 1) {
                v = path_value(spec, h, {q0, q}, tau);
            } else {
                for (std::size_t k = 0; k < g.size(); ++k) {
                    const Point2 mid = g.node(k);
                    v += path_value(spec, h, {q0, mid, q}, tau) * spec.rho(mid) * g.coordinate_weight(k);
                }
            }
            values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = v;
        }
    });
    KernelGrid out{std::move(g), n, tau / static_cast<double>(n), tau, std::move(values), std::move(cols), {}, true,
                   spec.alpha.id(), 0};
    Eigen::VectorXd w(out.grid.size());
    for (std::size_t i = 0; i < out.grid.size(); ++i) w(static_cast<Eigen::Index>(i)) = out.grid.measure_weight(i);
    for (Eigen::Index c = 0; c < out.values.cols(); ++c) out.mass_loss.push_back(1.0 - w.dot(out.values.col(c)));
    return out;
}

ProbeAction scaled_probe_action(const ScaledKernelSpec& spec, std::size_t n_slices, double tau, PathQuadrature quad) {
    spec.validate();
    if (n_slices < 1) throw DomainError("scaled_probe_action needs N >= 1");
    if (!(tau > 0.0)) throw DomainError("scaled_probe_action needs tau > 0");
    if (quad.radial_nodes < 1 || quad.angle_nodes < 1) throw DomainError("path quadrature needs nodes");
    if (!spec.chart().is_polar()) {
        if (!spec.unscaled()) throw DomainError("Cartesian scaled kernels only support alpha = 1");
        return short_time_action(spec.pseudo(), tau);
    }
    return [spec, n_slices, tau, quad](const Probe& f, Point2 q) {
        const Chart& chart = spec.chart();
        const double hbar = spec.units().hbar;
        const double mass = spec.units().mass;
        const auto& ghr = GaussHermite::rule(quad.radial_nodes);
        const auto& gha = GaussHermite::rule(quad.angle_nodes);
        const std::size_t n = n_slices;
        const double sigma = std::sqrt(hbar * tau * chart.metric_inverse(q)[0][0] / (mass * static_cast<double>(n)));
        const double s = std::sqrt(2.0) * sigma;
        std::vector<double> node_w(quad.radial_nodes);
        for (std::size_t i = 0; i < quad.radial_nodes; ++i)
            node_w[i] = ghr.weights[i] * std::exp(ghr.nodes[i] * ghr.nodes[i]) * s;

        std::vector<std::size_t> idx(n, 0);
        std::vector<double> r(n + 1), alpha(n + 1), rho(n + 1), g11(n + 1), g22(n + 1);
        double total = 0.0;
        for (;;) {
            // Radii from the increments d_j = r_{j+1} - r_j, walking down from r_N = r.
            r[n] = q.q1;
            double wgt = 1.0;
            bool ok = true;
            for (std::size_t j = n; j-- > 0;) {
                r[j] = r[j + 1] - s * ghr.nodes[idx[j]];
                wgt *= node_w[idx[j]];
                if (r[j] <= chart.r_min()) ok = false;
            }
            if (ok) {
                for (std::size_t k = 0; k <= n; ++k) {
                    const Point2 p{r[k], 0.0};
                    alpha[k] = spec.alpha(p);
                    rho[k] = spec.rho(p);
                    const Mat2 gi = chart.metric_inverse(p);
                    g11[k] = gi[0][0];
                    g22[k] = gi[1][1];
                }
                const double F = f_of(alpha);
                const double eps = 2.0 * tau / F;
                double radial = std::sqrt(alpha[0] * alpha[n]) * 2.0 * static_cast<double>(n) / F;
                double var_theta = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double a = 0.5 * (alpha[j + 1] * g11[j + 1] + alpha[j] * g11[j]);
                    const double b = 0.5 * (alpha[j + 1] * g22[j + 1] + alpha[j] * g22[j]);
                    const double s1 = hbar * eps * a / mass;
                    const double d = r[j + 1] - r[j];
                    radial *= std::exp(-d * d / (2.0 * s1)) / std::sqrt(2.0 * std::numbers::pi * s1);
                    radial /= std::sqrt(rho[j] * rho[j + 1]);
                    radial *= rho[j];
                    var_theta += hbar * eps * b / mass;
                }
                const double sa = std::sqrt(2.0 * var_theta);
                double ang = 0.0;
                for (std::size_t i = 0; i < quad.angle_nodes; ++i)
                    ang += gha.weights[i] * f(Point2{r[0], q.q2 - sa * gha.nodes[i]});
                total += wgt * radial * ang / std::sqrt(std::numbers::pi);
            }
            std::size_t pos = 0;
            while (pos < n && ++idx[pos] == quad.radial_nodes) idx[pos++] = 0;
            if (pos == n) break;
        }
        return total;
    };
}

ConsistencyReport h_rho_alpha_consistency(const ScaledKernelSpec& spec, const Probe& f, std::span<const Point2> points,
                                          std::span<const double> taus, ConsistencyOptions opts) {
    spec.validate();
    if (points.empty() || taus.empty()) throw DomainError("h_rho_alpha_consistency needs points and times");
    for (double t : taus)
        if (!(t > 0.0)) throw DomainError("h_rho_alpha_consistency needs positive times");
    OperatorSpec op = OperatorSpec::h_rho_alpha(spec.chart(), spec.rho, spec.alpha, spec.units());
    const double hbar = spec.units().hbar;
    ConsistencyReport rep;
    double scale = 0.0;
    for (double tau : taus) {
        const double dt = opts.dtau_ratio * tau;
        const ProbeAction at_tau = scaled_probe_action(spec, opts.n_slices, tau, opts.quad);
        const ProbeAction plus = scaled_probe_action(spec, opts.n_slices, tau + dt, opts.quad);
        const ProbeAction minus = scaled_probe_action(spec, opts.n_slices, tau - dt, opts.quad);
        const Field psi_tau = [&](Point2 p) { return Complex(at_tau(f, p)); };
        for (const auto& q : points) {
            ConsistencyRow row;
            row.tau = tau;
            row.q = q;
            row.lhs = (plus(f, q) - minus(f, q)) / (2.0 * dt);
            row.rhs = -apply_at(op, psi_tau, q, opts.fd_step).real() / hbar;
            scale = std::max(scale, std::abs(row.rhs));
            rep.rows.push_back(row);
        }
    }
    // Residuals are relative to the largest |rhs| in the report.
    for (auto& row : rep.rows) {
        row.residual = std::abs(row.lhs - row.rhs) / std::max(scale, 1e-300);
        rep.max_residual = std::max(rep.max_residual, row.residual);
    }
    return rep;
}

} // namespace polarpath
