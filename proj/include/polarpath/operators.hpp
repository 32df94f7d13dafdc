#pragma once

#include <cmath>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "polarpath/kernel.hpp"
#include "polarpath/wavefunction.hpp"

namespace polarpath {

enum class OperatorKind { canonical_polar, h_rho_alpha, laplace_beltrami };

using PotentialFn = std::function<double(Point2)>;

struct OperatorSpec {
    OperatorKind kind = OperatorKind::laplace_beltrami;
    Chart chart = Chart::polar();
    MeasureDensity rho = MeasureDensity::sqrt_g(Chart::polar());
    ScalingFunction alpha = ScalingFunction::sqrt_g(Chart::polar());
    Units units{};
    PotentialFn potential{};

    static OperatorSpec laplace_beltrami(const Chart& chart, Units units = {});
    static OperatorSpec canonical_polar(const Chart& chart, Units units = {});
    static OperatorSpec h_rho_alpha(const Chart& chart, MeasureDensity rho, ScalingFunction alpha, Units units = {});
};

// Grid application with 4th-order centred differences (theta periodic). Nodes within
// the stencil reach of a non-periodic edge get zero and are excluded via `margin`.
Wavefunction apply_laplace_beltrami(const Wavefunction& psi, const Units& units = {});
Wavefunction apply_canonical_polar(const Wavefunction& psi, const Units& units = {});
Wavefunction apply_h_rho_alpha(const Wavefunction& psi, const MeasureDensity& rho, const ScalingFunction& alpha,
                               const Units& units = {}, const PotentialFn& potential = {});
Wavefunction apply(const OperatorSpec& spec, const Wavefunction& psi);

/// Pointwise application to a callable psi with finite-difference step h in both coordinates.
Complex apply_at(const OperatorSpec& spec, const Field& psi, Point2 q, double h = 1e-3);

/// CSV with columns r,theta,residual_re,residual_im (x,y,... for Cartesian), interior nodes only.
void write_residual_csv(const Wavefunction& residual, std::ostream& out);

// ---------------------------------------------------------------------------
// Effective-potential extraction

struct EffectivePotentialRow {
    std::string probe;
    Point2 q;
    double x = 0.0;  // hbar^2 f / (2 m r^2)
    double z = 0.0;  // (H_LB f)(q) = -hbar^2/2m lap f
    double y = 0.0;  // hbar (I_ref - I_K) / eps
};

struct EffectivePotentialFit {
    double c = 0.0;
    double std_err = 0.0;
    double half_width = 0.0;  // 95% interval half-width
    double d = 0.0;           // kinetic normalization error
    double d_half_width = 0.0;
    double condition = 1.0;
    std::size_t dof = 0;
    std::vector<EffectivePotentialRow> rows;

    bool covers_zero() const { return std::abs(c) <= half_width; }
    /// |c| in units of the interval half-width.
    double significance() const { return half_width > 0.0 ? std::abs(c) / half_width : INFINITY; }
};

/// Exact free Euclidean action e^{-tau H/hbar} f (H the Laplace-Beltrami Hamiltonian),
/// by Gauss-Hermite quadrature of the Cartesian heat kernel.
ProbeAction exact_heat_action(double tau, const Units& units = {}, std::size_t nodes = 32);

/// First-order reference f + (eps hbar / 2m) lap f from the probe's analytic Laplacian.
ProbeAction first_order_action(double eps, const Units& units = {});

/// Fits hbar (I_ref - I_K)/eps = c hbar^2 f / (2 m r^2) + d H_LB f over probes x points.
/// `reference` defaults to exact_heat_action(eps).
EffectivePotentialFit extract_effective_potential(const ProbeAction& kernel_action, double eps,
                                                  std::span<const Probe> probes, std::span<const Point2> points,
                                                  const Units& units = {}, ProbeAction reference = {});

/// Same fit from a grid kernel (every node a source); points must be grid nodes.
EffectivePotentialFit extract_effective_potential(const KernelGrid& kernel, double eps, std::span<const Probe> probes,
                                                  std::span<const Point2> points, const Units& units = {});

/// Removes an a/N^p finite-slice bias from two fits taken at n_a < n_b slices.
EffectivePotentialFit richardson_combine(const EffectivePotentialFit& fa, double n_a, const EffectivePotentialFit& fb,
                                         double n_b, double power = 2.0);

} // namespace polarpath
