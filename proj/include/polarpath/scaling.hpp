#pragma once

#include <span>
#include <vector>

#include "polarpath/kernel.hpp"
#include "polarpath/operators.hpp"

namespace polarpath {

/// Result of eliminating the pseudo-energy and pseudo-time integrations for the
/// polar free particle with alpha = r.
struct ReducedSlicing {
    std::vector<double> radii;  // r_0, r_1, ..., r_N (r_N = r)
    double t = 0.0;
    double F = 0.0;          // r_0 + 2 (r_1 + ... + r_{N-1}) + r_N
    double half_step = 0.0;  // t / F
    double factor = 0.0;     // 2N / F

    std::size_t n_slices() const { return radii.size() - 1; }
    /// Reduced action of slice j (between r_j and r_{j+1}) with kinetic weight t/F.
    double slice_action(std::size_t j, double theta_next, double theta_prev, double P, double p,
                        double mass = 1.0) const;
};

ReducedSlicing reduce_pseudo_energy(std::span<const double> radii, double t);

/// Hamiltonian, measure and scaling function of the scaled kernel.
struct ScaledKernelSpec {
    Hamiltonian H;
    MeasureDensity rho;
    ScalingFunction alpha;

    /// Free particle on `chart` with rho = sqrt(g) and the given alpha.
    static ScaledKernelSpec free(const Chart& chart, FieldKind alpha, Units units = {});

    const Chart& chart() const { return H.chart(); }
    const Units& units() const { return H.units(); }
    bool unscaled() const { return alpha.kind() == FieldKind::one; }
    /// alpha H at E = 0.
    PseudoHamiltonian pseudo() const { return PseudoHamiltonian(H, alpha, 0.0); }
    void validate() const;
};

/// Euclidean scaled kernel between two points at time tau. The slice count and the
/// quadrature come from `config` (its eps is ignored: steps follow from tau and F).
/// alpha == 1 goes through iterate_kernel / iterate_kernel_mc with eps = tau / N.
/// Grid quadrature supports N <= 2 for alpha != 1; Monte Carlo supports any N.
McEstimate scaled_kernel_euclidean(const SliceConfig& config, const ScaledKernelSpec& spec, Point2 q, Point2 q0,
                                   double tau);

/// The same kernel sampled on the config grid (columns = `sources`, default all nodes).
KernelGrid scaled_kernel_grid(const SliceConfig& config, const ScaledKernelSpec& spec, double tau,
                              std::optional<std::vector<std::size_t>> sources = std::nullopt);

struct PathQuadrature {
    std::size_t radial_nodes = 8;  // Gauss-Hermite nodes per radial increment
    std::size_t angle_nodes = 20;  // Gauss-Hermite nodes for the collapsed angle
};

/// f -> int K(q, q0) f(q0) rho(q0) dq0 for the N-slice scaled kernel at time tau.
/// Polar: tensor Gauss-Hermite over the N radial increments; the angles are
/// integrated in closed form given the radii. Cartesian (alpha = 1): the slices
/// compose exactly, so a single Gaussian step of length tau is used.
ProbeAction scaled_probe_action(const ScaledKernelSpec& spec, std::size_t n_slices, double tau,
                                PathQuadrature quad = {});

struct ConsistencyRow {
    double tau = 0.0;
    Point2 q;
    double lhs = 0.0;       // d/dtau of the propagated probe
    double rhs = 0.0;       // -(1/hbar) H_{rho,alpha} applied to the propagated probe
    double residual = 0.0;  // |lhs - rhs| / max(|rhs|, floor)
};

struct ConsistencyReport {
    std::vector<ConsistencyRow> rows;
    double max_residual = 0.0;
};

struct ConsistencyOptions {
    std::size_t n_slices = 4;
    double fd_step = 0.02;      // spatial step for the nested operator stencil
    double dtau_ratio = 0.1;    // centred time step as a fraction of tau
    PathQuadrature quad{};
};

/// Checks d psi / d tau = -(1/hbar) H_{rho,alpha} psi for psi(tau) = K_tau f.
ConsistencyReport h_rho_alpha_consistency(const ScaledKernelSpec& spec, const Probe& f,
                                          std::span<const Point2> points, std::span<const double> taus,
                                          ConsistencyOptions opts = {});

} // namespace polarpath
