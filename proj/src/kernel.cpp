#include "polarpath/kernel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>

#include "polarpath/numerics.hpp"

namespace polarpath {

// ---------------------------------------------------------------------------
// Grid2

Grid2::Grid2(Chart chart, std::vector<double> a1, std::vector<double> w1, std::vector<double> a2,
             std::vector<double> w2, bool periodic2)
    : chart_(chart), axis1_(std::move(a1)), w1_(std::move(w1)), axis2_(std::move(a2)), w2_(std::move(w2)),
      periodic2_(periodic2) {
    h1_ = axis1_.size() > 1 ? axis1_[1] - axis1_[0] : 0.0;
    h2_ = axis2_.size() > 1 ? axis2_[1] - axis2_[0] : 0.0;
}

namespace {

void trapezoid_axis(double lo, double hi, std::size_t n, std::vector<double>& nodes, std::vector<double>& w) {
    nodes.resize(n);
    w.resize(n);
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i] = lo + h * static_cast<double>(i);
        w[i] = (i == 0 || i + 1 == n) ? 0.5 * h : h;
    }
    nodes.back() = hi;
}

} // namespace

Grid2 Grid2::polar(const Chart& chart, std::size_t n_r, std::size_t n_theta, double r_max, double r_lo) {
    if (!chart.is_polar()) throw DomainError("Grid2::polar needs a polar chart");
    if (n_r < 8 || n_theta < 8) throw DomainError("grid sizes must be >= 8");
    if (!(r_max > chart.r_min()) || !(r_max > r_lo)) throw DomainError("grid requires r_max > r_min");
    std::vector<double> r, wr, th(n_theta), wth(n_theta, kTwoPi / static_cast<double>(n_theta));
    const bool anchored = r_lo <= chart.r_min();
    if (anchored) {
        // Trapezoid on [0, r_max] without the r = 0 node, whose weight carries a zero density.
        const double h = r_max / static_cast<double>(n_r);
        for (std::size_t i = 1; i <= n_r; ++i) {
            r.push_back(h * static_cast<double>(i));
            wr.push_back(i == n_r ? 0.5 * h : h);
        }
        if (r.front() <= chart.r_min()) throw DomainError("grid spacing is below r_min");
    } else {
        trapezoid_axis(r_lo, r_max, n_r, r, wr);
    }
    for (std::size_t j = 0; j < n_theta; ++j) th[j] = kTwoPi * static_cast<double>(j) / static_cast<double>(n_theta);
    Grid2 g(chart, std::move(r), std::move(wr), std::move(th), std::move(wth), true);
    g.anchored_ = anchored;
    return g;
}

Grid2 Grid2::cartesian(std::size_t n_x, std::size_t n_y, double half_width) {
    if (n_x < 8 || n_y < 8) throw DomainError("grid sizes must be >= 8");
    if (!(half_width > 0.0)) throw DomainError("grid half-width must be positive");
    std::vector<double> x, wx, y, wy;
    trapezoid_axis(-half_width, half_width, n_x, x, wx);
    trapezoid_axis(-half_width, half_width, n_y, y, wy);
    return Grid2(Chart::cartesian(), std::move(x), std::move(wx), std::move(y), std::move(wy), false);
}

double Grid2::measure_weight(std::size_t idx) const { return chart_.density(node(idx)) * coordinate_weight(idx); }

std::vector<std::size_t> Grid2::box(double c1, double c2, double half1, double half2, std::size_t stride) const {
    std::vector<std::size_t> out;
    const double tol = 1e-12;
    for (std::size_t i = 0; i < n1(); i += stride)
        for (std::size_t j = 0; j < n2(); j += stride)
            if (std::abs(axis1_[i] - c1) <= half1 + tol && std::abs(axis2_[j] - c2) <= half2 + tol)
                out.push_back(index(i, j));
    return out;
}

// ---------------------------------------------------------------------------
// SliceConfig

void SliceConfig::validate(const Chart& chart) const {
    if (n_slices < 1) throw DomainError("n_slices must be >= 1");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("eps must be positive");
    if (const auto* g = std::get_if<GridQuadrature>(&quadrature)) {
        if (g->n1 < 8 || g->n2 < 8) throw DomainError("grid sizes must be >= 8");
        if (!(g->extent > 0.0)) throw DomainError("grid extent must be positive");
        if (chart.is_polar() && !(g->extent > chart.r_min())) throw DomainError("r_max must exceed r_min");
    } else {
        const auto& mc = std::get<MonteCarloQuadrature>(quadrature);
        if (mc.samples < 1) throw DomainError("monte carlo samples must be >= 1");
    }
}

Grid2 SliceConfig::make_grid(const Chart& chart) const {
    const auto* g = std::get_if<GridQuadrature>(&quadrature);
    if (!g) throw DomainError("slice config does not use grid quadrature");
    return chart.is_polar() ? Grid2::polar(chart, g->n1, g->n2, g->extent) : Grid2::cartesian(g->n1, g->n2, g->extent);
}

// ---------------------------------------------------------------------------
// KernelGrid

double KernelGrid::max_mass_loss() const {
    double m = 0.0;
    for (double v : mass_loss) m = std::max(m, std::abs(v));
    return m;
}

std::optional<std::size_t> KernelGrid::column_of(std::size_t source_node) const {
    auto it = std::find(sources.begin(), sources.end(), source_node);
    if (it == sources.end()) return std::nullopt;
    return static_cast<std::size_t>(it - sources.begin());
}

// ---------------------------------------------------------------------------
// Short-time kernel

namespace {

// Sum over windings of exp(-d^2 / (2 s2)) for a periodic coordinate difference.
double periodic_gaussian_sum(double d, double s2) {
    const double base = wrapped_difference(d);
    double total = std::exp(-base * base / (2.0 * s2));
    for (int k = 1; k < 1000; ++k) {
        const double a = base + kTwoPi * k;
        const double b = base - kTwoPi * k;
        const double term = std::exp(-a * a / (2.0 * s2)) + std::exp(-b * b / (2.0 * s2));
        total += term;
        if (term <= 1e-18 * total) break;
    }
    return total;
}

} // namespace

double short_time_kernel(Point2 q_next, Point2 q_prev, double eps, const PseudoHamiltonian& h,
                         std::optional<MeasureDensity> rho) {
    const Chart& chart = h.chart();
    if (!(eps > 0.0)) throw DomainError("short_time_kernel requires eps > 0");
    if (chart.is_polar() && (q_next.q1 <= chart.r_min() || q_prev.q1 <= chart.r_min()))
        throw DomainError("short_time_kernel: radius at or below r_min");
    const MeasureDensity density = rho.value_or(MeasureDensity::sqrt_g(chart));
    const double hbar = h.units().hbar;
    const double m = h.units().mass;

    const auto w_next = h.momentum_weights(q_next);
    const auto w_prev = h.momentum_weights(q_prev);
    const double a1 = 0.5 * (w_next[0] + w_prev[0]);
    const double a2 = 0.5 * (w_next[1] + w_prev[1]);
    if (!(a1 > 0.0) || !(a2 > 0.0)) throw NumericError("momentum quadratic form is not positive definite");

    const double s1 = hbar * eps * a1 / m;  // variance of the q1 Gaussian
    const double s2 = hbar * eps * a2 / m;
    const double d1 = q_next.q1 - q_prev.q1;
    const double d2 = q_next.q2 - q_prev.q2;
    const double g1 = std::exp(-d1 * d1 / (2.0 * s1)) / std::sqrt(2.0 * std::numbers::pi * s1);
    const double g2 = (chart.is_polar() ? periodic_gaussian_sum(d2, s2) : std::exp(-d2 * d2 / (2.0 * s2))) /
                      std::sqrt(2.0 * std::numbers::pi * s2);
    const double energy_factor = std::exp(-0.5 * eps * (h.offset(q_next) + h.offset(q_prev)) / hbar);
    return g1 * g2 * energy_factor / std::sqrt(density(q_next) * density(q_prev));
}

// ---------------------------------------------------------------------------
// Composition

namespace {

std::vector<double> column_mass(const Grid2& grid, const Eigen::MatrixXd& values) {
    std::vector<double> loss(static_cast<std::size_t>(values.cols()));
    Eigen::VectorXd w(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) w(static_cast<Eigen::Index>(i)) = grid.measure_weight(i);
    for (Eigen::Index c = 0; c < values.cols(); ++c) loss[static_cast<std::size_t>(c)] = 1.0 - w.dot(values.col(c));
    return loss;
}

} // namespace

KernelGrid iterate_kernel(const SliceConfig& config, const PseudoHamiltonian& h,
                          std::optional<std::vector<std::size_t>> sources) {
    const Chart& chart = h.chart();
    config.validate(chart);
    const std::size_t n_slices = config.n_slices;
    const double eps = config.eps;

    if (const auto* mc = std::get_if<MonteCarloQuadrature>(&config.quadrature)) {
        (void)mc;
        throw DomainError("iterate_kernel on a grid needs grid quadrature; use iterate_kernel_mc for point estimates");
    }
    Grid2 grid = config.make_grid(chart);
    const std::size_t n = grid.size();
    std::vector<std::size_t> cols;
    if (sources) {
        cols = *sources;
        for (auto s : cols)
            if (s >= n) throw DomainError("source index out of range");
    } else {
        cols.resize(n);
        for (std::size_t i = 0; i < n; ++i) cols[i] = i;
    }

    Eigen::MatrixXd step(n, n);
    parallel_for(n, config.workers, [&](std::size_t i) {
        const Point2 qi = grid.node(i);
        for (std::size_t j = i; j < n; ++j) {
            const double v = short_time_kernel(qi, grid.node(j), eps, h);
            step(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            step(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    });

    Eigen::MatrixXd k(n, cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) k.col(static_cast<Eigen::Index>(c)) = step.col(static_cast<Eigen::Index>(cols[c]));

    Eigen::VectorXd w(n);
    for (std::size_t i = 0; i < n; ++i) w(static_cast<Eigen::Index>(i)) = grid.measure_weight(i);
    for (std::size_t s = 1; s < n_slices; ++s) {
        Eigen::MatrixXd weighted = w.asDiagonal() * k;
        k.noalias() = step * weighted;
    }

    KernelGrid out{std::move(grid), n_slices, eps, config.total_time(), std::move(k), std::move(cols), {}, false, "one", 0};
    out.mass_loss = column_mass(out.grid, out.values);
    return out;
}

KernelGrid compose(const KernelGrid& a, const KernelGrid& b) {
    if (a.grid.size() != b.grid.size() || a.grid.chart().kind() != b.grid.chart().kind())
        throw DomainError("compose: kernels live on different grids");
    if (a.sources.size() != a.grid.size()) throw DomainError("compose: left kernel must have every node as a source");
    const std::size_t n = a.grid.size();
    Eigen::VectorXd w(n);
    for (std::size_t i = 0; i < n; ++i) w(static_cast<Eigen::Index>(i)) = a.grid.measure_weight(i);
    // Columns of a are ordered by node when complete, so a.values(:, j) = a(., node j).
    Eigen::MatrixXd weighted = w.asDiagonal() * b.values;
    KernelGrid out = b;
    out.values.noalias() = a.values * weighted;
    out.n_slices = a.n_slices + b.n_slices;
    out.time = a.time + b.time;
    out.mass_loss = column_mass(out.grid, out.values);
    return out;
}

// ---------------------------------------------------------------------------
// Bridge sampling

namespace {

void to_cartesian(const Chart& chart, Point2 q, double& x, double& y) {
    if (chart.is_polar()) {
        x = q.q1 * std::cos(q.q2);
        y = q.q1 * std::sin(q.q2);
    } else {
        x = q.q1;
        y = q.q2;
    }
}

Point2 from_cartesian(const Chart& chart, double x, double y) {
    if (!chart.is_polar()) return {x, y};
    return {std::hypot(x, y), canonical_angle(std::atan2(y, x))};
}

} // namespace

BridgeSampler::BridgeSampler(const Chart& chart, Point2 from, Point2 to, std::size_t steps, double step_variance)
    : chart_(chart), steps_(steps), var_(step_variance) {
    if (steps < 1) throw DomainError("bridge needs at least one step");
    if (!(step_variance > 0.0)) throw DomainError("bridge step variance must be positive");
    to_cartesian(chart, from, x0_, y0_);
    to_cartesian(chart, to, x1_, y1_);
}

double BridgeSampler::log_total() const {
    const double v = var_ * static_cast<double>(steps_);
    const double d2 = (x1_ - x0_) * (x1_ - x0_) + (y1_ - y0_) * (y1_ - y0_);
    return -std::log(2.0 * std::numbers::pi * v) - d2 / (2.0 * v);
}

double BridgeSampler::sample(std::mt19937_64& rng, std::vector<Point2>& path) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    path.resize(steps_ + 1);
    path.front() = from_cartesian(chart_, x0_, y0_);
    path.back() = from_cartesian(chart_, x1_, y1_);
    double x = x0_, y = y0_;
    double log_q = 0.0;
    for (std::size_t k = 1; k < steps_; ++k) {
        const double remaining = static_cast<double>(steps_ - k + 1);
        const double mx = x + (x1_ - x) / remaining;
        const double my = y + (y1_ - y) / remaining;
        const double v = var_ * (remaining - 1.0) / remaining;
        const double sd = std::sqrt(v);
        const double zx = normal(rng);
        const double zy = normal(rng);
        x = mx + sd * zx;
        y = my + sd * zy;
        log_q += -std::log(2.0 * std::numbers::pi * v) - 0.5 * (zx * zx + zy * zy);
        path[k] = from_cartesian(chart_, x, y);
    }
    return log_q;
}

McEstimate iterate_kernel_mc(std::size_t n_slices, double eps, const PseudoHamiltonian& h, Point2 q, Point2 q0,
                             const MonteCarloQuadrature& mc) {
    const Chart& chart = h.chart();
    if (n_slices < 1 || !(eps > 0.0)) throw DomainError("iterate_kernel_mc: bad slicing");
    if (n_slices == 1) return {short_time_kernel(q, q0, eps, h), 0.0};
    const double v = h.units().hbar * eps * h.momentum_weights(q0)[0] / h.units().mass;
    BridgeSampler bridge(chart, q0, q, n_slices, v);
    std::mt19937_64 rng(mc.seed);
    std::vector<Point2> path;
    double sum = 0.0, sum2 = 0.0;
    std::size_t used = 0;
    for (std::size_t s = 0; s < mc.samples; ++s) {
        const double log_q = bridge.sample(rng, path);
        double log_w = -log_q;
        bool ok = true;
        for (std::size_t j = 0; j < n_slices && ok; ++j) {
            if (chart.is_polar() && (path[j].q1 <= chart.r_min() || path[j + 1].q1 <= chart.r_min())) {
                ok = false;
                break;
            }
            log_w += std::log(short_time_kernel(path[j + 1], path[j], eps, h));
        }
        const double wgt = ok ? std::exp(log_w) : 0.0;
        sum += wgt;
        sum2 += wgt * wgt;
        ++used;
    }
    const double mean = sum / static_cast<double>(used);
    const double var = std::max(0.0, sum2 / static_cast<double>(used) - mean * mean);
    return {mean, std::sqrt(var / static_cast<double>(used))};
}

// ---------------------------------------------------------------------------
// Probe actions

double gauss_hermite_action(const Chart& chart, const std::function<double(Point2, Point2)>& kernel,
                            const Probe& f, Point2 q, std::array<double, 2> sigma, std::size_t nodes,
                            std::optional<MeasureDensity> rho) {
    const auto& gh = GaussHermite::rule(nodes);
    const MeasureDensity density = rho.value_or(MeasureDensity::sqrt_g(chart));
    const double s1 = std::sqrt(2.0) * sigma[0];
    const double s2 = std::sqrt(2.0) * sigma[1];
    double total = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
        const double x = gh.nodes[i];
        const Point2 row{q.q1 + s1 * x, 0.0};
        if (chart.is_polar() && row.q1 <= chart.r_min()) continue;
        double inner = 0.0;
        for (std::size_t j = 0; j < nodes; ++j) {
            const double y = gh.nodes[j];
            const Point2 q0{row.q1, q.q2 + s2 * y};
            inner += gh.weights[j] * std::exp(y * y) * kernel(q, q0) * f(q0);
        }
        total += gh.weights[i] * std::exp(x * x) * density(row) * inner;
    }
    return total * s1 * s2;
}

ProbeAction short_time_action(const PseudoHamiltonian& h, double eps, std::size_t nodes) {
    return [h, eps, nodes](const Probe& f, Point2 q) {
        const auto w = h.momentum_weights(q);
        const double c = h.units().hbar * eps / h.units().mass;
        auto kern = [&](Point2 a, Point2 b) { return short_time_kernel(a, b, eps, h); };
        return gauss_hermite_action(h.chart(), kern, f, q, {std::sqrt(c * w[0]), std::sqrt(c * w[1])}, nodes);
    };
}

ProbeAction grid_action(const KernelGrid& k) {
    if (k.sources.size() != k.grid.size()) throw DomainError("grid_action needs every node as a source");
    for (std::size_t i = 0; i < k.sources.size(); ++i)
        if (k.sources[i] != i) throw DomainError("grid_action needs sources in node order");
    return [&k](const Probe& f, Point2 q) {
        const Grid2& g = k.grid;
        const double f1 = (q.q1 - g.lo1()) / g.h1();
        const double f2 = (q.q2 - g.lo2()) / g.h2();
        const auto i1 = static_cast<std::size_t>(std::llround(f1));
        const auto i2 = static_cast<std::size_t>(std::llround(f2));
        if (std::abs(f1 - static_cast<double>(i1)) > 1e-9 || std::abs(f2 - static_cast<double>(i2)) > 1e-9 ||
            i1 >= g.n1() || i2 >= g.n2())
            throw DomainError("grid_action: evaluation point is not a grid node");
        const std::size_t row = g.index(i1, i2);
        double total = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j)
            total += k.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) * f(g.node(j)) * g.measure_weight(j);
        return total;
    };
}

DeltaLimitReport delta_limit_check(const std::function<ProbeAction(double)>& action_at_eps,
                                   std::span<const Probe> probes, Point2 at, std::span<const double> eps_sequence) {
    if (eps_sequence.empty()) throw DomainError("delta_limit_check needs at least one eps");
    for (std::size_t i = 0; i < eps_sequence.size(); ++i) {
        if (!(eps_sequence[i] > 0.0)) throw DomainError("eps sequence must be positive");
        if (i > 0 && !(eps_sequence[i] < eps_sequence[i - 1])) throw DomainError("eps sequence must be decreasing");
    }
    DeltaLimitReport rep;
    std::vector<double> xs, ys;
    for (double eps : eps_sequence) {
        const ProbeAction act = action_at_eps(eps);
        DeltaLimitRow row{eps, {}, 0.0};
        for (const auto& p : probes) {
            const double f = p(at);
            const double err = std::abs(act(p, at) - f) / std::max(std::abs(f), std::numeric_limits<double>::min());
            row.rel_error.push_back(err);
            row.max_rel_error = std::max(row.max_rel_error, err);
        }
        xs.push_back(eps);
        ys.push_back(std::max(row.max_rel_error, std::numeric_limits<double>::min()));
        rep.rows.push_back(std::move(row));
    }
    rep.fitted_slope = xs.size() >= 2 ? loglog_slope(xs, ys) : 0.0;
    return rep;
}

DeltaLimitReport delta_limit_check(const PseudoHamiltonian& h, std::span<const Probe> probes, Point2 at,
                                   std::span<const double> eps_sequence) {
    return delta_limit_check([&h](double eps) { return short_time_action(h, eps); }, probes, at, eps_sequence);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::uint64_t kMagic = 0x314b475050ULL;  // "PPGK1"

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw DomainError("binary kernel dump is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

} // namespace

void write_csv(const KernelGrid& k, std::ostream& out) {
    const bool polar = k.grid.chart().is_polar();
    out.precision(17);
    out << "# chart=" << k.grid.chart().id() << " N=" << k.n_slices << " eps=" << k.eps << " time=" << k.time
        << " n1=" << k.grid.n1() << " n2=" << k.grid.n2() << " scaled=" << (k.scaled ? "true" : "false")
        << " alpha=" << k.alpha_id << " config_hash=" << k.config_hash << "\n";
    out << (polar ? "r,theta,r0,theta0,value\n" : "x,y,x0,y0,value\n");
    for (std::size_t c = 0; c < k.sources.size(); ++c) {
        const Point2 q0 = k.grid.node(k.sources[c]);
        for (std::size_t t = 0; t < k.grid.size(); ++t) {
            const Point2 q = k.grid.node(t);
            out << q.q1 << ',' << q.q2 << ',' << q0.q1 << ',' << q0.q2 << ','
                << k.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) << '\n';
        }
    }
}

void write_binary(const KernelGrid& k, std::ostream& out) {
    const Grid2& g = k.grid;
    put_u64(out, kMagic);
    put_u64(out, g.chart().is_polar() ? 1 : 0);
    put_u64(out, k.n_slices);
    put_f64(out, k.eps);
    put_u64(out, g.n1());
    put_u64(out, g.n2());
    put_u64(out, k.sources.size());
    put_u64(out, k.scaled ? 1 : 0);
    put_u64(out, k.alpha_id == "sqrt_g" ? 1 : 0);
    put_u64(out, k.config_hash);
    put_f64(out, k.time);
    put_f64(out, g.origin_anchored() ? 0.0 : g.lo1());
    put_f64(out, g.hi1());
    put_f64(out, g.chart().is_polar() ? g.chart().r_min() : 0.0);
    for (auto s : k.sources) put_u64(out, s);
    for (std::size_t t = 0; t < g.size(); ++t)
        for (std::size_t c = 0; c < k.sources.size(); ++c)
            put_f64(out, k.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)));
}

KernelGrid read_binary(std::istream& in) {
    if (get_u64(in) != kMagic) throw DomainError("not a kernel dump (bad magic)");
    const bool polar = get_u64(in) == 1;
    const std::size_t n_slices = get_u64(in);
    const double eps = get_f64(in);
    const std::size_t n1 = get_u64(in);
    const std::size_t n2 = get_u64(in);
    const std::size_t ns = get_u64(in);
    const bool scaled = get_u64(in) == 1;
    const bool sqrt_g = get_u64(in) == 1;
    const std::uint64_t hash = get_u64(in);
    const double time = get_f64(in);
    const double lo1 = get_f64(in);
    const double hi1 = get_f64(in);
    const double r_min = get_f64(in);
    Grid2 grid = polar ? Grid2::polar(Chart::polar(r_min), n1, n2, hi1, lo1) : Grid2::cartesian(n1, n2, hi1);
    std::vector<std::size_t> sources(ns);
    for (auto& s : sources) s = get_u64(in);
    Eigen::MatrixXd values(grid.size(), ns);
    for (std::size_t t = 0; t < grid.size(); ++t)
        for (std::size_t c = 0; c < ns; ++c) values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = get_f64(in);
    KernelGrid k{std::move(grid), n_slices, eps, time, std::move(values), std::move(sources), {}, scaled,
                 sqrt_g ? "sqrt_g" : "one", hash};
    k.mass_loss = column_mass(k.grid, k.values);
    return k;
}

} // namespace polarpath
