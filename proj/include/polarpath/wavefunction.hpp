#pragma once

#include <complex>
#include <functional>
#include <type_traits>
#include <utility>
#include <vector>

#include "polarpath/kernel.hpp"

namespace polarpath {

using Complex = std::complex<double>;
using Field = std::function<Complex(Point2)>;

/// Complex samples psi(q) on a product grid (node order of Grid2).
struct Wavefunction {
    Grid2 grid;
    std::vector<Complex> samples;
    bool normalized = false;
    /// Nodes closer than `margin` cells to a non-periodic edge carry no operator output.
    std::size_t margin = 0;

    static Wavefunction sample(const Grid2& grid, const Field& f);
    static Wavefunction sample(const Grid2& grid, const std::function<double(Point2)>& f);
    template <class F>
        requires std::is_same_v<std::invoke_result_t<F&, Point2>, double>
    static Wavefunction sample(const Grid2& grid, F&& f) {
        const std::function<double(Point2)> g(std::forward<F>(f));
        return sample(grid, g);
    }

    Complex& at(std::size_t i1, std::size_t i2) { return samples[grid.index(i1, i2)]; }
    const Complex& at(std::size_t i1, std::size_t i2) const { return samples[grid.index(i1, i2)]; }
    bool interior(std::size_t i1, std::size_t i2) const;

    /// int conj(a) b rho dq with the grid's measure weights.
    Complex inner(const Wavefunction& other) const;
    double norm() const { return std::sqrt(inner(*this).real()); }
    /// Throws DomainError if any sample is not finite.
    void validate() const;
    Wavefunction normalized_copy() const;
};

} // namespace polarpath
