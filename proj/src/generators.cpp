#include "polarpath/generators.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace polarpath {

Hamiltonian::Hamiltonian(Chart chart, Units units, Potential potential)
    : chart_(chart), units_(units), potential_(std::move(potential)) {
    units_.validate();
}

double Hamiltonian::kinetic(Point2 q, double P, double p) const {
    const Mat2 gi = chart_.metric_inverse(q);
    const double quad = gi[0][0] * P * P + 2.0 * gi[0][1] * P * p + gi[1][1] * p * p;
    return quad / (2.0 * units_.mass);
}

PseudoHamiltonian::PseudoHamiltonian(Hamiltonian base, ScalingFunction alpha, double energy)
    : base_(std::move(base)), alpha_(alpha), energy_(energy) {
    if (alpha_.chart().kind() != base_.chart().kind())
        throw DomainError("scaling function and Hamiltonian live on different charts");
}

double PseudoHamiltonian::operator()(Point2 q, double P, double p) const {
    return alpha_(q) * (base_(q, P, p) - energy_);
}

std::array<double, 2> PseudoHamiltonian::momentum_weights(Point2 q) const {
    const Mat2 gi = chart().metric_inverse(q);
    const double a = alpha_(q);
    return {a * gi[0][0], a * gi[1][1]};
}

double PseudoHamiltonian::offset(Point2 q) const { return alpha_(q) * (base_.potential(q) - energy_); }

double eval_pseudo_hamiltonian(double r, double P, double p, double energy, double mass) {
    if (!(r > 0.0)) throw DomainError("pseudo-Hamiltonian requires r > 0");
    if (!(mass > 0.0)) throw DomainError("mass must be positive");
    return r * P * P / (2.0 * mass) + p * p / (2.0 * mass * r) - energy * r;
}

MixedGenerators generators_first_order(Point2 q_next, Point2 q_prev, double P, double p, double eps,
                                       const PseudoHamiltonian& h) {
    MixedGenerators g;
    g.s_pp = P * q_next.q1 + p * q_next.q2 - 0.5 * eps * h(q_next, P, p);
    g.s_mm = -P * q_prev.q1 - p * q_prev.q2 - 0.5 * eps * h(q_prev, P, p);
    return g;
}

double slice_action(Point2 q_next, Point2 q_prev, double P, double p, double eps,
                    const PseudoHamiltonian& h) {
    // Sum form of the endpoint average; see the reduced action for the same structure.
    return P * (q_next.q1 - q_prev.q1) + p * (q_next.q2 - q_prev.q2) -
           0.5 * eps * (h(q_next, P, p) + h(q_prev, P, p));
}

double slice_action(Point2 q_next, Point2 q_prev, double P, double p, double eps, double energy,
                    double mass) {
    const double h_next = eval_pseudo_hamiltonian(q_next.q1, P, p, energy, mass);
    const double h_prev = eval_pseudo_hamiltonian(q_prev.q1, P, p, energy, mass);
    return P * (q_next.q1 - q_prev.q1) + p * (q_next.q2 - q_prev.q2) - 0.5 * eps * (h_next + h_prev);
}

double reduced_slice_action(Point2 q_next, Point2 q_prev, double P, double p, double t_over_f,
                            double mass) {
    const double r1 = q_next.q1;
    const double r0 = q_prev.q1;
    if (!(r1 > 0.0) || !(r0 > 0.0)) throw DomainError("reduced slice action requires r > 0");
    const double kinetic = P * P / (2.0 * mass) * (r1 + r0) + p * p / (2.0 * mass) * (1.0 / r1 + 1.0 / r0);
    return P * (r1 - r0) + p * (q_next.q2 - q_prev.q2) - t_over_f * kinetic;
}

namespace {

// Mixed partial d^2 f / dx dy by central differences.
template <class F>
double mixed_partial(F&& f, double x, double y, double hx, double hy) {
    return (f(x + hx, y + hy) - f(x + hx, y - hy) - f(x - hx, y + hy) + f(x - hx, y - hy)) / (4.0 * hx * hy);
}

} // namespace

DeterminantReport generator_determinants(const PhasePoint& at, double eps, const PseudoHamiltonian& h) {
    // The generators are affine in the conjugate coordinate and quadratic in the
    // momenta, so a coarse step keeps the differences free of roundoff.
    const double step = 1e-2;
    const Point2 q = at.q;

    auto spp = [&](Point2 qq, double P, double p) { return generators_first_order(qq, qq, P, p, eps, h).s_pp; };
    auto smm = [&](Point2 qq, double P, double p) { return generators_first_order(qq, qq, P, p, eps, h).s_mm; };

    auto jac = [&](auto&& s) {
        Mat2 m{};
        m[0][0] = mixed_partial([&](double x, double P) { return s(Point2{x, q.q2}, P, at.p); }, q.q1, at.P, step, step);
        m[0][1] = mixed_partial([&](double x, double p) { return s(Point2{x, q.q2}, at.P, p); }, q.q1, at.p, step, step);
        m[1][0] = mixed_partial([&](double y, double P) { return s(Point2{q.q1, y}, P, at.p); }, q.q2, at.P, step, step);
        m[1][1] = mixed_partial([&](double y, double p) { return s(Point2{q.q1, y}, at.P, p); }, q.q2, at.p, step, step);
        return m[0][0] * m[1][1] - m[0][1] * m[1][0];
    };

    DeterminantReport rep;
    rep.d_pp = jac(spp);
    rep.d_mm = std::abs(jac(smm));
    rep.product = rep.d_pp * rep.d_mm;
    return rep;
}

double d_plusplus_check(double eps) {
    if (!(eps > 0.0)) throw DomainError("d_plusplus_check requires eps > 0");
    const Chart chart = Chart::polar();
    const PseudoHamiltonian h(Hamiltonian(chart), ScalingFunction::sqrt_g(chart), 0.0);
    const PhasePoint battery[] = {
        {{1.5, 0.3}, 0.7, 0.4},
        {{0.8, 2.0}, -1.2, 0.9},
        {{2.5, 5.0}, 2.0, -1.5},
        {{1.0, 0.0}, 0.5, 0.0},
    };
    double worst = 1.0;
    for (const auto& pt : battery) {
        const double d = generator_determinants(pt, eps, h).product;
        if (std::abs(d - 1.0) > std::abs(worst - 1.0)) worst = d;
    }
    return worst;
}

} // namespace polarpath
