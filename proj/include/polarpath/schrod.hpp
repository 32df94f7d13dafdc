#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polarpath/wavefunction.hpp"

namespace polarpath {

/// sum_{k<N} (2k+1) = N^2.
std::int64_t sum_odd(std::int64_t n);

struct OddSquares {
    std::int64_t exact = 0;   // N(2N-1)(2N+1)/3
    double asymptotic = 0.0;  // 4N^3/3
    double difference = 0.0;  // asymptotic - exact = N/3
};
/// sum_{k<N} (2k+1)^2 with the large-N form alongside.
OddSquares sum_odd_squares(std::int64_t n);

/// int_0^inf beta^n e^{-2 beta r N} d beta = n! / (2rN)^{n+1}; n <= 20.
double beta_moment(int n, double r, std::int64_t N);

/// Which value of sum (2k+1)^2 feeds the zeroth-derivative channel.
enum class SumVariant { exact, leading_order };

/// How the radial part of one X_k term is evaluated.
enum class XkRoute {
    moments,   // expanded second derivative with closed-form beta moments
    direct_fd  // d^2/dr0^2 [r0 (r + r0) psi(r0) / F_k(r0)^2] at r0 = r by finite differences
};

/// F_k = (2N - 1 - 2k) r + (2k + 1) r0.
double f_k(std::int64_t k, std::int64_t N, double r, double r0);

/// Contribution of X_k to the generator at a grid node (includes -hbar^2/2m).
Complex xk_apply(std::int64_t k, std::int64_t N, const Wavefunction& psi, Point2 eval_point, const Units& units = {},
                 XkRoute route = XkRoute::moments);

/// Channel coefficients of the summed generator, scaled to be r-independent:
/// G psi = -hbar^2/2m [a psi'' + (b/r) psi' + (c/r^2) psi + (d/r^2) psi_thth].
struct ChannelBreakdown {
    double d2psi = 0.0;   // a
    double dpsi = 0.0;    // b
    double psi = 0.0;     // c
    double theta = 0.0;   // d
};
ChannelBreakdown generator_channels(std::int64_t N, SumVariant variant = SumVariant::exact);

struct EffectiveGeneratorReport {
    std::int64_t N = 0;
    SumVariant variant = SumVariant::exact;
    Wavefunction generator;  // G_N psi
    Wavefunction target;     // -hbar^2/2m lap psi
    ChannelBreakdown channels;
    double residual_l2 = 0.0;   // ||G psi - target|| / ||target|| over the window
    double residual_max = 0.0;  // max |G psi - target| / max |target| over the window
    double fitted_order = 0.0;  // filled by convergence_study
};

struct GeneratorWindow {
    double r_lo = 0.0;
    double r_hi = 1e300;
};

/// G_N psi on every interior node as the sum of xk_apply over k. The target is
/// computed from `laplacian` if given, else by finite differences.
EffectiveGeneratorReport effective_generator(std::int64_t N, const Wavefunction& psi, const Units& units = {},
                                             SumVariant variant = SumVariant::exact,
                                             const std::function<double(Point2)>& laplacian = {},
                                             GeneratorWindow window = {});

struct ConvergenceStudy {
    std::vector<EffectiveGeneratorReport> reports;
    double fitted_slope = 0.0;  // d log residual_l2 / d log N
    double fitted_order = 0.0;  // -fitted_slope
};

ConvergenceStudy convergence_study(std::span<const std::int64_t> Ns, const Wavefunction& psi, const Units& units = {},
                                   SumVariant variant = SumVariant::exact,
                                   const std::function<double(Point2)>& laplacian = {}, GeneratorWindow window = {});

nlohmann::json to_json(const EffectiveGeneratorReport& r);
nlohmann::json to_json(const ConvergenceStudy& s);
/// Columns N,residual,order_estimate (local order between consecutive rows).
void write_convergence_csv(const ConvergenceStudy& s, std::ostream& out);

} // namespace polarpath
