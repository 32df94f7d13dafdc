#include "polarpath/numerics.hpp"

#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

namespace polarpath {

const GaussHermite& GaussHermite::rule(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, GaussHermite> cache;
    if (n == 0) throw std::invalid_argument("Gauss-Hermite rule needs at least one node");
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    // Golub-Welsch on the Hermite Jacobi matrix.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 1; k < n; ++k) {
        const double b = std::sqrt(0.5 * static_cast<double>(k));
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    GaussHermite gh;
    gh.nodes.resize(n);
    gh.weights.resize(n);
    const double mu0 = std::sqrt(std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
        gh.nodes[i] = es.eigenvalues()(i);
        const double v = es.eigenvectors()(0, i);
        gh.weights[i] = mu0 * v * v;
    }
    return cache.emplace(n, std::move(gh)).first->second;
}

double student_t975(std::size_t dof) {
    if (dof == 0) return std::numeric_limits<double>::infinity();
    boost::math::students_t dist(static_cast<double>(dof));
    return boost::math::quantile(dist, 0.975);
}

double LinearFit::half_width95(std::size_t i) const { return student_t975(dof) * std_err.at(i); }

LinearFit least_squares(std::span<const double> x_rowmajor, std::size_t cols, std::span<const double> y) {
    const std::size_t rows = y.size();
    if (cols == 0 || x_rowmajor.size() != rows * cols) throw std::invalid_argument("least_squares: shape mismatch");
    if (rows < cols) throw std::invalid_argument("least_squares: fewer observations than unknowns");
    Eigen::MatrixXd X(rows, cols);
    Eigen::VectorXd Y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        Y(i) = y[i];
        for (std::size_t j = 0; j < cols; ++j) X(i, j) = x_rowmajor[i * cols + j];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    LinearFit fit;
    fit.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    const Eigen::VectorXd b = svd.solve(Y);
    const Eigen::VectorXd res = Y - X * b;
    fit.rss = res.squaredNorm();
    fit.dof = rows - cols;
    const double s2 = fit.dof > 0 ? fit.rss / static_cast<double>(fit.dof) : 0.0;
    // Covariance s^2 (X^T X)^{-1} = s^2 V S^{-2} V^T.
    Eigen::MatrixXd V = svd.matrixV();
    fit.coef.resize(cols);
    fit.std_err.resize(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        fit.coef[j] = b(j);
        double var = 0.0;
        for (Eigen::Index k = 0; k < sv.size(); ++k) var += V(j, k) * V(j, k) / (sv(k) * sv(k));
        fit.std_err[j] = std::sqrt(s2 * var);
    }
    return fit;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope needs >= 2 matched points");
    std::vector<double> design;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        design.push_back(1.0);
        design.push_back(std::log(x[i]));
        ly.push_back(std::log(std::abs(y[i])));
    }
    return least_squares(design, 2, ly).coef[1];
}

unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("POLARPATH_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    const unsigned w = std::max(1u, std::min<unsigned>(resolve_workers(workers), static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (w == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex mu;
    for (unsigned t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += w) fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace polarpath
