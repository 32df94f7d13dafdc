#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "polarpath/generators.hpp"
#include "polarpath/geometry.hpp"
#include "polarpath/probes.hpp"

namespace polarpath {

/// Raised when a numerical procedure cannot produce a trustworthy number.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Trapezoid product grid. Polar: r in [r_lo, r_max] (or (0, r_max] when r_lo <= r_min)
/// x theta in [0, 2pi) periodic.
/// Cartesian: [-half_width, half_width]^2. Node index = i1 * n2 + i2.
class Grid2 {
public:
    static Grid2 polar(const Chart& chart, std::size_t n_r, std::size_t n_theta, double r_max, double r_lo = 0.0);
    static Grid2 cartesian(std::size_t n_x, std::size_t n_y, double half_width);

    const Chart& chart() const { return chart_; }
    std::size_t n1() const { return axis1_.size(); }
    std::size_t n2() const { return axis2_.size(); }
    std::size_t size() const { return n1() * n2(); }
    double h1() const { return h1_; }
    double h2() const { return h2_; }
    double q1(std::size_t i1) const { return axis1_[i1]; }
    double q2(std::size_t i2) const { return axis2_[i2]; }
    double lo1() const { return axis1_.front(); }
    double hi1() const { return axis1_.back(); }
    double lo2() const { return axis2_.front(); }
    double hi2() const { return periodic2_ ? kTwoPi : axis2_.back(); }
    bool periodic2() const { return periodic2_; }
    /// Polar grid covering [0, r_max] with the r = 0 node dropped.
    bool origin_anchored() const { return anchored_; }

    Point2 node(std::size_t idx) const { return {axis1_[idx / n2()], axis2_[idx % n2()]}; }
    std::size_t index(std::size_t i1, std::size_t i2) const { return i1 * n2() + i2; }
    /// Trapezoid coordinate weight dq1 dq2 (without density).
    double coordinate_weight(std::size_t idx) const { return w1_[idx / n2()] * w2_[idx % n2()]; }
    /// Quadrature weight for the measure density(q) dq1 dq2.
    double measure_weight(std::size_t idx) const;
    /// Indices of nodes with |q1 - c1| <= half1 and |q2 - c2| <= half2 (Cartesian sub-box).
    std::vector<std::size_t> box(double c1, double c2, double half1, double half2, std::size_t stride = 1) const;

private:
    Grid2(Chart chart, std::vector<double> a1, std::vector<double> w1, std::vector<double> a2,
          std::vector<double> w2, bool periodic2);

    Chart chart_;
    std::vector<double> axis1_, w1_, axis2_, w2_;
    bool periodic2_;
    bool anchored_ = false;
    double h1_, h2_;
};

struct GridQuadrature {
    std::size_t n1 = 64;     // n_r or n_x
    std::size_t n2 = 64;     // n_theta or n_y
    double extent = 6.0;     // r_max or Cartesian half-width
};

struct MonteCarloQuadrature {
    std::size_t samples = 100000;
    std::uint64_t seed = 12345;
};

/// Slicing parameters: N steps of size eps in (pseudo-)time, Euclidean signature only.
struct SliceConfig {
    std::size_t n_slices = 1;
    double eps = 0.1;
    std::variant<GridQuadrature, MonteCarloQuadrature> quadrature = GridQuadrature{};
    unsigned workers = 0;

    double total_time() const { return static_cast<double>(n_slices) * eps; }
    /// Throws DomainError naming the offending field.
    void validate(const Chart& chart) const;
    Grid2 make_grid(const Chart& chart) const;
};

/// Sampled kernel K(q, q0): rows are all grid nodes (targets q), columns a subset
/// of source nodes q0. Integrates against density(q) dq.
struct KernelGrid {
    Grid2 grid;
    std::size_t n_slices = 1;
    double eps = 0.0;
    double time = 0.0;
    Eigen::MatrixXd values;            // targets x sources
    std::vector<std::size_t> sources;  // node index of each column
    std::vector<double> mass_loss;     // 1 - int K rho dq per source column
    bool scaled = false;
    std::string alpha_id = "one";
    std::uint64_t config_hash = 0;

    double max_mass_loss() const;
    /// Column holding source node idx, if present.
    std::optional<std::size_t> column_of(std::size_t source_node) const;
};

/// Canonical short-time propagator in Euclidean signature with Gaussian momentum
/// integrals done in closed form. `rho` defaults to the chart density.
double short_time_kernel(Point2 q_next, Point2 q_prev, double eps, const PseudoHamiltonian& h,
                         std::optional<MeasureDensity> rho = std::nullopt);

/// Chapman-Kolmogorov composition of n_slices short-time kernels on the configured grid.
/// `sources` selects columns (default: every node).
KernelGrid iterate_kernel(const SliceConfig& config, const PseudoHamiltonian& h,
                          std::optional<std::vector<std::size_t>> sources = std::nullopt);

/// Composes two kernels on the same grid: (a o b)(q, q0) = int a(q, q'') b(q'', q0) rho dq''.
/// `a` must carry every node as a source.
KernelGrid compose(const KernelGrid& a, const KernelGrid& b);

/// Sequential Brownian bridge in Cartesian coordinates between two chart points.
/// Produces interior points of an n-step path together with log of the bridge
/// density (relative to prod d^2x_k).
class BridgeSampler {
public:
    BridgeSampler(const Chart& chart, Point2 from, Point2 to, std::size_t steps, double step_variance);

    /// Fills path[0..steps] with chart points (path[0] = from, path[steps] = to) and
    /// returns log(prod G_j / G_total) evaluated on the sampled path.
    double sample(std::mt19937_64& rng, std::vector<Point2>& path) const;
    /// Log of the free Gaussian transition from `from` to `to` over all steps.
    double log_total() const;

private:
    Chart chart_;
    double x0_, y0_, x1_, y1_;
    std::size_t steps_;
    double var_;
};

/// Monte Carlo estimate of the N-slice unscaled kernel between two points.
struct McEstimate {
    double value = 0.0;
    double std_err = 0.0;
};
McEstimate iterate_kernel_mc(std::size_t n_slices, double eps, const PseudoHamiltonian& h, Point2 q, Point2 q0,
                             const MonteCarloQuadrature& mc);

/// Kernel action f -> int K(q, q0) f(q0) rho(q0) dq0 evaluated at q.
using ProbeAction = std::function<double(const Probe&, Point2)>;

/// Gauss-Hermite product quadrature of a point kernel around q, with reference
/// standard deviations `sigma` in each coordinate.
double gauss_hermite_action(const Chart& chart, const std::function<double(Point2, Point2)>& kernel,
                            const Probe& f, Point2 q, std::array<double, 2> sigma, std::size_t nodes = 24,
                            std::optional<MeasureDensity> rho = std::nullopt);

/// Action of the single short-time kernel of h with step eps.
ProbeAction short_time_action(const PseudoHamiltonian& h, double eps, std::size_t nodes = 24);

/// Action of a grid kernel whose columns cover every node; q must be a node.
ProbeAction grid_action(const KernelGrid& k);

struct DeltaLimitRow {
    double eps = 0.0;
    std::vector<double> rel_error;  // per probe
    double max_rel_error = 0.0;
};

struct DeltaLimitReport {
    std::vector<DeltaLimitRow> rows;
    double fitted_slope = 0.0;  // log-log slope of max error against eps
};

/// Checks int K_eps f rho dq0 -> f(q) as eps -> 0 for each probe.
DeltaLimitReport delta_limit_check(const std::function<ProbeAction(double)>& action_at_eps,
                                   std::span<const Probe> probes, Point2 at, std::span<const double> eps_sequence);

/// Same check for the short-time kernel of h.
DeltaLimitReport delta_limit_check(const PseudoHamiltonian& h, std::span<const Probe> probes, Point2 at,
                                   std::span<const double> eps_sequence);

// Serialization. CSV: comment header lines then columns q1,q2,q1_0,q2_0,value
// (named r,theta,r0,theta0 for polar and x,y,x0,y0 for Cartesian).
void write_csv(const KernelGrid& k, std::ostream& out);
void write_binary(const KernelGrid& k, std::ostream& out);
KernelGrid read_binary(std::istream& in);

} // namespace polarpath
