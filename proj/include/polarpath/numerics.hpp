#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace polarpath {

/// Nodes and weights for int e^{-x^2} f(x) dx ~ sum w_i f(x_i).
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;

    static const GaussHermite& rule(std::size_t n);
};

struct LinearFit {
    std::vector<double> coef;
    std::vector<double> std_err;
    double rss = 0.0;
    std::size_t dof = 0;
    double condition = 1.0;

    /// Half-width of the two-sided 95% interval for coefficient i (Student t).
    double half_width95(std::size_t i) const;
};

/// Ordinary least squares y ~ X b, X given row-major with `cols` columns.
LinearFit least_squares(std::span<const double> x_rowmajor, std::size_t cols, std::span<const double> y);

/// Slope of log|y| against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Two-sided 97.5% quantile of Student's t with `dof` degrees of freedom.
double student_t975(std::size_t dof);

/// Worker count: explicit value if > 0, else POLARPATH_THREADS, else hardware concurrency.
unsigned resolve_workers(unsigned requested);

/// Runs fn(i) for i in [0, n) on `workers` threads with a strided split.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

} // namespace polarpath
