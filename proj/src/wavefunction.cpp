#include "polarpath/wavefunction.hpp"

#include <cmath>

namespace polarpath {

Wavefunction Wavefunction::sample(const Grid2& grid, const Field& f) {
    Wavefunction w{grid, std::vector<Complex>(grid.size()), false, 0};
    for (std::size_t i = 0; i < grid.size(); ++i) w.samples[i] = f(grid.node(i));
    return w;
}

Wavefunction Wavefunction::sample(const Grid2& grid, const std::function<double(Point2)>& f) {
    return sample(grid, Field([&f](Point2 q) { return Complex(f(q), 0.0); }));
}

bool Wavefunction::interior(std::size_t i1, std::size_t i2) const {
    if (i1 < margin || i1 + margin >= grid.n1()) return false;
    if (!grid.periodic2() && (i2 < margin || i2 + margin >= grid.n2())) return false;
    return true;
}

Complex Wavefunction::inner(const Wavefunction& other) const {
    if (other.samples.size() != samples.size()) throw DomainError("inner product of wavefunctions on different grids");
    Complex s = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) s += std::conj(samples[i]) * other.samples[i] * grid.measure_weight(i);
    return s;
}

void Wavefunction::validate() const {
    for (const auto& v : samples)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw DomainError("wavefunction has non-finite samples");
}

Wavefunction Wavefunction::normalized_copy() const {
    const double n = norm();
    if (!(n > 0.0)) throw DomainError("cannot normalize a zero wavefunction");
    Wavefunction w = *this;
    for (auto& v : w.samples) v /= n;
    w.normalized = true;
    return w;
}

} // namespace polarpath
