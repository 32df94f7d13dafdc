#pragma once

#include <functional>

#include "polarpath/geometry.hpp"

namespace polarpath {

/// Phase-space point: coordinates plus the momenta conjugate to q1 and q2.
struct PhasePoint {
    Point2 q;
    double P = 0.0;  // conjugate to q1 (r for polar)
    double p = 0.0;  // conjugate to q2 (theta for polar)
};

/// Classical Hamiltonian H = g^ij p_i p_j / 2m + V(q).
class Hamiltonian {
public:
    using Potential = std::function<double(Point2)>;

    explicit Hamiltonian(Chart chart, Units units = {}, Potential potential = {});

    double kinetic(Point2 q, double P, double p) const;
    double potential(Point2 q) const { return potential_ ? potential_(q) : 0.0; }
    double operator()(Point2 q, double P, double p) const { return kinetic(q, P, p) + potential(q); }

    const Chart& chart() const { return chart_; }
    const Units& units() const { return units_; }
    bool has_potential() const { return static_cast<bool>(potential_); }

private:
    Chart chart_;
    Units units_;
    Potential potential_;
};

/// Pseudo-Hamiltonian h(q, p; E) = alpha(q) (H(q, p) - E).
class PseudoHamiltonian {
public:
    PseudoHamiltonian(Hamiltonian base, ScalingFunction alpha, double energy = 0.0);

    double operator()(Point2 q, double P, double p) const;

    const Hamiltonian& base() const { return base_; }
    const ScalingFunction& alpha() const { return alpha_; }
    double energy() const { return energy_; }
    const Chart& chart() const { return base_.chart(); }
    const Units& units() const { return base_.units(); }

    /// Coefficients (a1, a2) with h = a1 P^2 / 2m + a2 p^2 / 2m + c at fixed q.
    /// Only valid for the diagonal metrics of the supported charts.
    std::array<double, 2> momentum_weights(Point2 q) const;
    /// Momentum-independent part alpha (V - E).
    double offset(Point2 q) const;

private:
    Hamiltonian base_;
    ScalingFunction alpha_;
    double energy_;
};

/// r P^2/2m + p^2/(2 m r) - E r for the polar free particle with alpha = r.
double eval_pseudo_hamiltonian(double r, double P, double p, double energy, double mass = 1.0);

struct MixedGenerators {
    double s_pp = 0.0;  // S_{++}(q_{j+1}, P, p)
    double s_mm = 0.0;  // S_{--}(P, p, q_j)
};

/// First-order mixed generators around a midpoint momentum.
MixedGenerators generators_first_order(Point2 q_next, Point2 q_prev, double P, double p, double eps,
                                       const PseudoHamiltonian& h);

/// Slice action P dq1 + p dq2 - (eps/2) (h_{j+1} + h_j).
double slice_action(Point2 q_next, Point2 q_prev, double P, double p, double eps,
                    const PseudoHamiltonian& h);

/// Polar free-particle slice action with alpha = r at energy E.
double slice_action(Point2 q_next, Point2 q_prev, double P, double p, double eps, double energy,
                    double mass = 1.0);

/// Slice action after the energy/pseudo-time reduction: kinetic weight t/F, no energy terms.
double reduced_slice_action(Point2 q_next, Point2 q_prev, double P, double p, double t_over_f,
                            double mass = 1.0);

struct DeterminantReport {
    double d_pp = 1.0;     // det d^2 S_{++} / dq_{j+1} dp
    double d_mm = 1.0;     // |det d^2 S_{--} / dq_j dp|
    double product = 1.0;  // d_pp * d_mm, the factor entering the short-time propagator
};

/// Van Vleck-type determinants of the first-order generators, by finite differences
/// at a phase point.
DeterminantReport generator_determinants(const PhasePoint& at, double eps, const PseudoHamiltonian& h);

/// D_{++} D_{--} at the point farthest from 1 among a fixed battery of polar phase points (alpha = r, E = 0, m = 1).
double d_plusplus_check(double eps);

} // namespace polarpath
