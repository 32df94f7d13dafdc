#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "polarpath/kernel.hpp"
#include "polarpath/operators.hpp"
#include "polarpath/oracle.hpp"
#include "polarpath/scaling.hpp"
#include "polarpath/schrod.hpp"

#ifndef POLARPATH_VERSION
#define POLARPATH_VERSION "0.0.0"
#endif

namespace polarpath::cli {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids{"identities",         "effective_generator", "kernel_convergence",
                                              "scaled_vs_unscaled", "oracle_crosscheck",   "delta_limit"};
    return ids;
}

// ---------------------------------------------------------------------------
// Config

namespace {

std::int64_t positive_int(const json& v, const std::string& field) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1) throw ConfigError("field '" + field + "' must be a positive integer");
    return v.get<std::int64_t>();
}

double positive_real(const json& v, const std::string& field) {
    if (!v.is_number() || !(v.get<double>() > 0.0) || !std::isfinite(v.get<double>()))
        throw ConfigError("field '" + field + "' must be a positive number");
    return v.get<double>();
}

std::string text(const json& v, const std::string& field) {
    if (!v.is_string()) throw ConfigError("field '" + field + "' must be a string");
    return v.get<std::string>();
}

void check_positive(std::optional<std::int64_t> v, const std::string& field) {
    if (v && *v < 1) throw ConfigError("field '" + field + "' must be a positive integer");
}

void check_positive(std::optional<double> v, const std::string& field) {
    if (v && !(*v > 0.0 && std::isfinite(*v))) throw ConfigError("field '" + field + "' must be a positive number");
}

template <class T>
void set_default(std::optional<T>& v, T d) {
    if (!v) v = d;
}

} // namespace

ExperimentConfig parse_config(const json& j, ExperimentConfig c) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "experiment") c.experiment = text(v, key);
        else if (key == "chart") c.chart = text(v, key);
        else if (key == "hbar") c.hbar = positive_real(v, key);
        else if (key == "mass") c.mass = positive_real(v, key);
        else if (key == "n_slices" || key == "N") c.n_slices = positive_int(v, key);
        else if (key == "eps") c.eps = positive_real(v, key);
        else if (key == "tau") c.tau = positive_real(v, key);
        else if (key == "quadrature") c.quadrature = text(v, key);
        else if (key == "n1") c.n1 = positive_int(v, key);
        else if (key == "n2") c.n2 = positive_int(v, key);
        else if (key == "extent") c.extent = positive_real(v, key);
        else if (key == "r_lo") {
            if (!v.is_number() || v.get<double>() < 0.0) throw ConfigError("field 'r_lo' must be a non-negative number");
            c.r_lo = v.get<double>();
        } else if (key == "samples") c.samples = positive_int(v, key);
        else if (key == "seed") {
            if (!v.is_number_unsigned()) throw ConfigError("field 'seed' must be a non-negative integer");
            c.seed = v.get<std::uint64_t>();
        } else if (key == "alpha") c.alpha = text(v, key);
        else if (key == "n_max") c.n_max = positive_int(v, key);
        else if (key == "Ns") {
            if (!v.is_array()) throw ConfigError("field 'Ns' must be an array of positive integers");
            c.Ns.clear();
            for (const auto& e : v) c.Ns.push_back(positive_int(e, key));
        } else if (key == "eps_list") {
            if (!v.is_array()) throw ConfigError("field 'eps_list' must be an array of positive numbers");
            c.eps_list.clear();
            for (const auto& e : v) c.eps_list.push_back(positive_real(e, key));
        } else if (key == "tolerance") c.tolerance = positive_real(v, key);
        else if (key == "output_dir") c.output_dir = text(v, key);
        else if (key == "threads") c.threads = static_cast<unsigned>(positive_int(v, key));
        else throw ConfigError("unknown config field '" + key + "'");
    }
    return c;
}

ExperimentConfig resolve(ExperimentConfig c) {
    const auto& ids = experiment_ids();
    if (std::find(ids.begin(), ids.end(), c.experiment) == ids.end())
        throw ConfigError("field 'experiment' must be one of the listed experiments (got '" + c.experiment + "')");
    set_default<std::string>(c.chart, c.experiment == "kernel_convergence" ? "cartesian2d" : "polar2d");
    if (c.chart != "polar2d" && c.chart != "cartesian2d") throw ConfigError("field 'chart' must be polar2d or cartesian2d");
    if (c.alpha != "one" && c.alpha != "sqrt_g") throw ConfigError("field 'alpha' must be one or sqrt_g");
    if (c.quadrature != "grid" && c.quadrature != "monte_carlo") throw ConfigError("field 'quadrature' must be grid or monte_carlo");
    if (!(c.hbar > 0.0)) throw ConfigError("field 'hbar' must be a positive number");
    if (!(c.mass > 0.0)) throw ConfigError("field 'mass' must be a positive number");
    check_positive(c.n_slices, "n_slices");
    check_positive(c.n1, "n1");
    check_positive(c.n2, "n2");
    check_positive(c.eps, "eps");
    check_positive(c.tau, "tau");
    check_positive(c.extent, "extent");
    if (c.samples < 1) throw ConfigError("field 'samples' must be a positive integer");
    if (c.n_max < 1) throw ConfigError("field 'n_max' must be a positive integer");
    for (auto n : c.Ns)
        if (n < 1) throw ConfigError("field 'N' must hold positive integers");
    for (auto e : c.eps_list)
        if (!(e > 0.0)) throw ConfigError("field 'eps_list' must hold positive numbers");
    if (c.r_lo && *c.r_lo < 0.0) throw ConfigError("field 'r_lo' must be a non-negative number");
    check_positive(c.tolerance, "tolerance");

    const std::string& e = c.experiment;
    if (e == "identities") {
        if (c.n_max > 1000000) throw ConfigError("field 'n_max' must be <= 1000000");
    } else if (e == "effective_generator") {
        if (c.chart != "polar2d") throw ConfigError("field 'chart': effective_generator runs on polar2d");
        set_default<std::int64_t>(c.n1, 301);
        set_default<std::int64_t>(c.n2, 256);
        set_default(c.extent, 3.5);
        set_default(c.r_lo, 0.5);
        if (c.Ns.empty()) c.Ns = {16, 32, 64, 128, 256};
        set_default(c.tolerance, 1e-3);
    } else if (e == "kernel_convergence") {
        set_default<std::int64_t>(c.n_slices, 8);
        set_default(c.tau, 0.5);
        if (c.chart == "cartesian2d") c.alpha = "one";
        set_default<std::int64_t>(c.n1, c.chart == "cartesian2d" ? 32 : 24);
        set_default<std::int64_t>(c.n2, c.chart == "cartesian2d" ? *c.n1 : 32);
        set_default(c.extent, 6.0);
        if (c.chart == "polar2d" && c.alpha != "one" && c.quadrature == "grid" && *c.n_slices > 2)
            throw ConfigError("field 'quadrature': the scaled polar kernel with N > 2 needs monte_carlo");
        set_default(c.r_lo, 0.0);
        set_default(c.tolerance, 0.02);
    } else if (e == "scaled_vs_unscaled") {
        if (c.chart != "polar2d") throw ConfigError("field 'chart': scaled_vs_unscaled runs on polar2d");
        set_default<std::int64_t>(c.n_slices, 2);
        set_default(c.tau, 0.2);
        set_default<std::int64_t>(c.n1, 16);
        set_default<std::int64_t>(c.n2, 24);
        set_default(c.extent, 4.0);
        set_default(c.r_lo, 0.0);
        if (c.alpha != "one" && *c.n_slices > 2)
            throw ConfigError("field 'n_slices': grid quadrature of the scaled kernel supports N <= 2");
    } else if (e == "oracle_crosscheck") {
        if (c.chart != "polar2d") throw ConfigError("field 'chart': oracle_crosscheck runs on polar2d");
        set_default(c.tau, 0.5);
        set_default(c.tolerance, 1e-4);
    } else if (e == "delta_limit") {
        set_default<std::int64_t>(c.n_slices, 4);
        if (c.eps_list.empty()) c.eps_list = {1e-2, 3e-3, 1e-3};
        for (std::size_t i = 1; i < c.eps_list.size(); ++i)
            if (!(c.eps_list[i] < c.eps_list[i - 1])) throw ConfigError("field 'eps_list' must be decreasing");
        if (c.chart == "cartesian2d" && c.alpha != "one") c.alpha = "one";
        set_default(c.tolerance, 1e-3);
    }
    if (c.n1 && *c.n1 < 8) throw ConfigError("field 'n1' must be >= 8");
    if (c.n2 && *c.n2 < 8) throw ConfigError("field 'n2' must be >= 8");
    return c;
}

json hashed_fields(const ExperimentConfig& c) {
    json j;
    j["experiment"] = c.experiment;
    j["hbar"] = c.hbar;
    j["mass"] = c.mass;
    auto put = [&](const char* k, const auto& v) {
        if (v) j[k] = *v;
    };
    put("chart", c.chart);
    put("n_slices", c.n_slices);
    put("eps", c.eps);
    put("tau", c.tau);
    put("n1", c.n1);
    put("n2", c.n2);
    put("extent", c.extent);
    put("r_lo", c.r_lo);
    j["quadrature"] = c.quadrature;
    j["samples"] = c.samples;
    j["seed"] = c.seed;
    j["alpha"] = c.alpha;
    j["n_max"] = c.n_max;
    j["Ns"] = c.Ns;
    j["eps_list"] = c.eps_list;
    put("tolerance", c.tolerance);
    return j;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
    const std::string s = hashed_fields(c).dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

// ---------------------------------------------------------------------------
// Outputs

namespace {

std::string utc_stamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

class Outputs {
public:
    Outputs(const ExperimentConfig& c, std::uint64_t hash) : c_(c), hash_(hash) {
        fs::create_directories(c.output_dir);
        stamp_ = utc_stamp();
        stem_ = c.experiment + "_" + stamp_;
        for (int k = 1; fs::exists(path(".csv")) || fs::exists(path(".json")) || fs::exists(path(".manifest.json")); ++k)
            stem_ = c.experiment + "_" + stamp_ + "-" + std::to_string(k);
    }

    std::string path(const std::string& suffix) const { return (fs::path(c_.output_dir) / (stem_ + suffix)).string(); }

    std::ofstream open(const std::string& suffix, bool binary = false) {
        const std::string p = path(suffix);
        std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
        if (!out) throw std::runtime_error("cannot write " + p);
        files_.push_back(p);
        if (!binary) out << std::setprecision(17);
        return out;
    }

    /// CSV stream with the hash comment line and the column header written.
    std::ofstream csv(const std::string& columns, const std::string& suffix = ".csv") {
        auto out = open(suffix);
        out << "# experiment=" << c_.experiment << " config_hash=" << hash_hex(hash_) << '\n' << columns << '\n';
        return out;
    }

    void json_file(json body, const std::string& suffix = ".json") {
        body["experiment"] = c_.experiment;
        body["config_hash"] = hash_hex(hash_);
        body["config"] = hashed_fields(c_);
        auto out = open(suffix);
        out << body.dump(2) << '\n';
    }

    void kernel(KernelGrid k, const std::string& suffix) {
        k.config_hash = hash_;
        auto out = open(suffix, true);
        write_binary(k, out);
    }

    std::vector<std::string> finish() {
        json m;
        m["experiment"] = c_.experiment;
        m["config_hash"] = hash_hex(hash_);
        m["config"] = hashed_fields(c_);
        m["software_version"] = POLARPATH_VERSION;
        m["timestamp"] = stamp_;
        json names = json::array();
        for (const auto& f : files_) names.push_back(fs::path(f).filename().string());
        m["outputs"] = names;
        const std::string p = path(".manifest.json");
        std::ofstream out(p);
        out << m.dump(2) << '\n';
        files_.push_back(p);
        return files_;
    }

private:
    const ExperimentConfig& c_;
    std::uint64_t hash_;
    std::string stamp_, stem_;
    std::vector<std::string> files_;
};

Units units_of(const ExperimentConfig& c) { return Units{c.hbar, c.mass}; }
Chart chart_of(const ExperimentConfig& c) { return Chart::from_id(*c.chart); }

SliceConfig slice_config(const ExperimentConfig& c, std::size_t n, double eps, std::int64_t n1, std::int64_t n2) {
    SliceConfig s;
    s.n_slices = n;
    s.eps = eps;
    s.workers = c.threads;
    if (c.quadrature == "monte_carlo")
        s.quadrature = MonteCarloQuadrature{static_cast<std::size_t>(c.samples), c.seed};
    else
        s.quadrature = GridQuadrature{static_cast<std::size_t>(n1), static_cast<std::size_t>(n2), *c.extent};
    return s;
}

// Experiment bodies return the exit code and a one-line summary.
struct Outcome {
    int code = ok;
    std::string summary;
};

Outcome run_identities(const ExperimentConfig& c, Outputs& o) {
    auto csv = o.csv("N,sum_odd,n_squared,sum_odd_squares,closed_form,mismatch");
    std::int64_t s1 = 0, s2 = 0, bad = 0;
    for (std::int64_t n = 1; n <= c.n_max; ++n) {
        s1 += 2 * n - 1;
        s2 += (2 * n - 1) * (2 * n - 1);
        const std::int64_t a = sum_odd(n), b = sum_odd_squares(n).exact;
        const std::int64_t closed = n * (2 * n - 1) * (2 * n + 1) / 3;
        const bool miss = a != s1 || a != n * n || b != s2 || b != closed;
        bad += miss;
        csv << n << ',' << a << ',' << n * n << ',' << b << ',' << closed << ',' << (miss ? 1 : 0) << '\n';
    }
    o.json_file({{"n_max", c.n_max}, {"mismatches", bad}});
    return {bad == 0 ? ok : tolerance_breach, std::to_string(bad) + " mismatches up to N = " + std::to_string(c.n_max)};
}

Outcome run_effective_generator(const ExperimentConfig& c, Outputs& o) {
    const Grid2 g = Grid2::polar(chart_of(c), static_cast<std::size_t>(*c.n1), static_cast<std::size_t>(*c.n2), *c.extent, *c.r_lo);
    const Probe ring = unit_ring(2.0, 1);
    const auto psi = Wavefunction::sample(g, ring.value);
    const Units u = units_of(c);
    const auto study = convergence_study(c.Ns, psi, u, SumVariant::exact, ring.laplacian, {1.5, 2.5});
    auto csv = o.csv("N,residual,order_estimate");
    std::ostringstream body;
    write_convergence_csv(study, body);
    const std::string text = body.str();
    csv << text.substr(text.find('\n') + 1);
    json j = to_json(study);
    o.json_file(j);
    const double last = study.reports.back().residual_l2;
    std::ostringstream s;
    s << "residual at N = " << study.reports.back().N << ": " << last << ", fitted order " << study.fitted_order;
    return {last <= *c.tolerance ? ok : tolerance_breach, s.str()};
}

Outcome run_kernel_convergence(const ExperimentConfig& c, Outputs& o) {
    const Chart chart = chart_of(c);
    const Units u = units_of(c);
    const auto n = static_cast<std::size_t>(*c.n_slices);
    const double tau = *c.tau;
    const PseudoHamiltonian h(Hamiltonian(chart, u), ScalingFunction::unit(chart));
    const auto spec = ScaledKernelSpec::free(chart, c.alpha == "one" ? FieldKind::one : FieldKind::sqrt_g, u);
    auto exact = [&](Point2 q, Point2 q0) {
        return chart.is_polar() ? free_polar_kernel(q.q1, q.q2, q0.q1, q0.q2, tau, u) : heat_kernel_cartesian(q, q0, tau, u);
    };

    if (c.quadrature == "monte_carlo") {
        auto csv = o.csv("q1,q2,q1_0,q2_0,estimate,std_err,exact,rel_error");
        double worst = 0.0;
        json rows = json::array();
        for (auto [r, t, r0, t0] : standard_battery(8)) {
            Point2 q{r, t}, q0{r0, t0};
            if (!chart.is_polar()) {
                q = {r * std::cos(t), r * std::sin(t)};
                q0 = {r0 * std::cos(t0), r0 * std::sin(t0)};
            }
            SliceConfig mc;
            mc.n_slices = n;
            mc.quadrature = MonteCarloQuadrature{static_cast<std::size_t>(c.samples), c.seed};
            const auto est = scaled_kernel_euclidean(mc, spec, q, q0, tau);
            const double ex = exact(q, q0);
            const double rel = std::abs(est.value - ex) / ex;
            worst = std::max(worst, rel);
            csv << q.q1 << ',' << q.q2 << ',' << q0.q1 << ',' << q0.q2 << ',' << est.value << ',' << est.std_err << ','
                << ex << ',' << rel << '\n';
        }
        o.json_file({{"max_rel_error", worst}});
        return {worst <= *c.tolerance ? ok : tolerance_breach, "max relative error " + std::to_string(worst)};
    }

    auto csv = o.csv("level,n1,n2,h1,max_rel_error,max_mass_loss");
    json levels = json::array();
    std::vector<double> errors;
    const double half = *c.extent;
    for (int level = 0; level < 2; ++level) {
        const std::int64_t n1 = *c.n1 << level, n2 = *c.n2 << level;
        const SliceConfig cfg = slice_config(c, n, tau / static_cast<double>(n), n1, n2);
        const Grid2 g = cfg.make_grid(chart);
        std::vector<std::size_t> src;
        if (chart.is_polar()) {
            for (std::size_t i = 0; i < g.n1(); ++i)
                if (g.q1(i) >= half / 4.0 && g.q1(i) <= half / 2.0) src.push_back(g.index(i, 0));
        } else {
            src = g.box(0.0, 0.0, half / 4.0, half / 4.0, 2);
        }
        const KernelGrid k = spec.unscaled() ? iterate_kernel(cfg, h, src) : scaled_kernel_grid(cfg, spec, tau, src);
        double worst = 0.0;
        for (std::size_t s = 0; s < src.size(); ++s)
            for (std::size_t t = 0; t < g.size(); ++t) {
                const Point2 q = g.node(t);
                const bool central = chart.is_polar() ? q.q1 <= half / 2.0
                                                      : std::abs(q.q1) <= half / 2.0 && std::abs(q.q2) <= half / 2.0;
                if (!central) continue;
                const double ex = exact(q, g.node(src[s]));
                const double v = k.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s));
                worst = std::max(worst, std::abs(v - ex) / ex);
            }
        errors.push_back(worst);
        csv << level << ',' << n1 << ',' << n2 << ',' << g.h1() << ',' << worst << ',' << k.max_mass_loss() << '\n';
        levels.push_back({{"n1", n1}, {"n2", n2}, {"h1", g.h1()}, {"max_rel_error", worst}, {"max_mass_loss", k.max_mass_loss()}});
        if (level == 1) o.kernel(k, "_kernel.bin");
    }
    const bool decreasing = errors[1] < errors[0];
    o.json_file({{"levels", levels}, {"error_decreases", decreasing}});
    std::ostringstream s;
    s << "max relative error " << errors[0] << " -> " << errors[1];
    return {decreasing && errors[1] <= *c.tolerance ? ok : tolerance_breach, s.str()};
}

Outcome run_scaled_vs_unscaled(const ExperimentConfig& c, Outputs& o) {
    const Chart chart = chart_of(c);
    const Units u = units_of(c);
    const auto n = static_cast<std::size_t>(*c.n_slices);
    const double tau = *c.tau;
    const SliceConfig cfg = slice_config(c, n, tau / static_cast<double>(n), *c.n1, *c.n2);
    if (c.quadrature != "grid") throw ConfigError("field 'quadrature': scaled_vs_unscaled compares grid kernels");
    const auto spec = ScaledKernelSpec::free(chart, c.alpha == "one" ? FieldKind::one : FieldKind::sqrt_g, u);
    const KernelGrid scaled = scaled_kernel_grid(cfg, spec, tau);
    const KernelGrid plain = iterate_kernel(cfg, PseudoHamiltonian(Hamiltonian(chart, u), ScalingFunction::unit(chart)));
    o.kernel(scaled, "_scaled.bin");
    o.kernel(plain, "_unscaled.bin");
    auto csv = o.csv("r0,theta0,max_abs_diff,max_rel_diff");
    double worst_abs = 0.0, worst_rel = 0.0;
    for (Eigen::Index s = 0; s < scaled.values.cols(); ++s) {
        const double d = (scaled.values.col(s) - plain.values.col(s)).cwiseAbs().maxCoeff();
        const double rel = d / plain.values.col(s).cwiseAbs().maxCoeff();
        worst_abs = std::max(worst_abs, d);
        worst_rel = std::max(worst_rel, rel);
        const Point2 q0 = scaled.grid.node(scaled.sources[static_cast<std::size_t>(s)]);
        csv << q0.q1 << ',' << q0.q2 << ',' << d << ',' << rel << '\n';
    }
    o.json_file({{"alpha", c.alpha}, {"max_abs_diff", worst_abs}, {"max_rel_diff", worst_rel}});
    std::ostringstream s;
    s << "alpha = " << c.alpha << ": max |scaled - unscaled| = " << worst_abs << " (relative " << worst_rel << ")";
    return {ok, s.str()};
}

Outcome run_oracle_crosscheck(const ExperimentConfig& c, Outputs& o) {
    const Units u = units_of(c);
    const double tau = *c.tau;
    const ImageBase base = sheet_base(u);
    const Chart chart = Chart::polar();
    const OperatorSpec lb = OperatorSpec::laplace_beltrami(chart, u);
    auto heat_residual = [&](const std::function<double(double, double, double)>& k, Point2 q) {
        const double dt = 1e-4 * tau;
        const double lhs = -u.hbar * (k(q.q1, q.q2, tau + dt) - k(q.q1, q.q2, tau - dt)) / (2.0 * dt);
        const double rhs = apply_at(lb, [&](Point2 p) { return Complex(k(p.q1, p.q2, tau)); }, q, 1e-3).real();
        return std::pair{lhs, rhs};
    };
    auto csv = o.csv("r,theta,r0,theta0,closed,bessel,image,image_tail,d_closed_bessel,d_closed_image,d_bessel_image,"
                     "heat_residual_closed,heat_residual_bessel");
    double worst_pair = 0.0, worst_heat = 0.0;
    std::vector<std::array<double, 2>> lhs_rhs;
    struct Row {
        PointPair p;
        double closed, bessel, image, tail;
        std::pair<double, double> hc, hb;
    };
    std::vector<Row> rows;
    double scale = 0.0;
    for (const auto& p : standard_battery()) {
        const auto [r, t, r0, t0] = p;
        Row row{p, free_polar_kernel(r, t, r0, t0, tau, u), bessel_series_kernel(r, t, r0, t0, tau, 64, u).value, 0.0, 0.0, {}, {}};
        const auto im = image_sum_kernel(base, r, t, r0, t0, tau, 8);
        row.image = im.value;
        row.tail = im.tail;
        row.hc = heat_residual([&](double a, double b, double s) { return free_polar_kernel(a, b, r0, t0, s, u); }, {r, t});
        row.hb = heat_residual([&](double a, double b, double s) { return bessel_series_kernel(a, b, r0, t0, s, 64, u).value; },
                               {r, t});
        scale = std::max({scale, std::abs(row.hc.first), std::abs(row.hc.second)});
        rows.push_back(row);
    }
    json out = json::array();
    for (const auto& row : rows) {
        const double dcb = std::abs(row.closed - row.bessel), dci = std::abs(row.closed - row.image),
                     dbi = std::abs(row.bessel - row.image);
        const double rc = std::abs(row.hc.first - row.hc.second) / scale;
        const double rb = std::abs(row.hb.first - row.hb.second) / scale;
        worst_pair = std::max({worst_pair, dcb, dci, dbi});
        worst_heat = std::max({worst_heat, rc, rb});
        csv << row.p[0] << ',' << row.p[1] << ',' << row.p[2] << ',' << row.p[3] << ',' << row.closed << ',' << row.bessel
            << ',' << row.image << ',' << row.tail << ',' << dcb << ',' << dci << ',' << dbi << ',' << rc << ',' << rb << '\n';
    }
    o.json_file({{"tau", tau}, {"max_pairwise_abs_diff", worst_pair}, {"max_heat_residual", worst_heat}});
    std::ostringstream s;
    s << "max pairwise difference " << worst_pair << ", max heat-equation residual " << worst_heat;
    return {worst_pair <= *c.tolerance && worst_heat <= *c.tolerance ? ok : tolerance_breach, s.str()};
}

Outcome run_delta_limit(const ExperimentConfig& c, Outputs& o) {
    const Chart chart = chart_of(c);
    const Units u = units_of(c);
    std::vector<Probe> probes;
    Point2 at;
    std::function<ProbeAction(double)> action;
    if (chart.is_polar()) {
        probes = {gaussian_ring(2.0, 1.0, 0), gaussian_ring(2.0, 1.0, 1), gaussian_ring(2.0, 1.5, 2)};
        at = {2.0, 0.0};
        const auto spec = ScaledKernelSpec::free(chart, c.alpha == "one" ? FieldKind::one : FieldKind::sqrt_g, u);
        const auto n = static_cast<std::size_t>(*c.n_slices);
        action = [spec, n](double eps) { return scaled_probe_action(spec, n, eps); };
    } else {
        probes = {cartesian_bump(0.0, 0.0, 1.5), cartesian_bump(0.3, -0.2, 2.0), cartesian_bump(-0.4, 0.5, 1.25)};
        at = {0.1, 0.2};
        const PseudoHamiltonian h(Hamiltonian(chart, u), ScalingFunction::unit(chart));
        action = [h](double eps) { return short_time_action(h, eps); };
    }
    const auto rep = delta_limit_check(action, probes, at, c.eps_list);
    auto csv = o.csv("eps,probe,rel_error");
    json rows = json::array();
    for (const auto& row : rep.rows) {
        for (std::size_t i = 0; i < probes.size(); ++i) csv << row.eps << ',' << probes[i].name << ',' << row.rel_error[i] << '\n';
        rows.push_back({{"eps", row.eps}, {"max_rel_error", row.max_rel_error}});
    }
    o.json_file({{"rows", rows}, {"fitted_slope", rep.fitted_slope}});
    const double last = rep.rows.back().max_rel_error;
    std::ostringstream s;
    s << "error " << last << " at eps = " << rep.rows.back().eps << ", slope " << rep.fitted_slope;
    return {last <= *c.tolerance ? ok : tolerance_breach, s.str()};
}

} // namespace

RunResult run_experiment(const ExperimentConfig& config, std::ostream& log) {
    const ExperimentConfig c = resolve(config);
    if (c.threads > 0) setenv("POLARPATH_THREADS", std::to_string(c.threads).c_str(), 1);
    const std::uint64_t hash = config_hash(c);
    Outputs o(c, hash);
    Outcome out;
    if (c.experiment == "identities") out = run_identities(c, o);
    else if (c.experiment == "effective_generator") out = run_effective_generator(c, o);
    else if (c.experiment == "kernel_convergence") out = run_kernel_convergence(c, o);
    else if (c.experiment == "scaled_vs_unscaled") out = run_scaled_vs_unscaled(c, o);
    else if (c.experiment == "oracle_crosscheck") out = run_oracle_crosscheck(c, o);
    else out = run_delta_limit(c, o);
    RunResult r;
    r.exit_code = out.code;
    r.summary = out.summary;
    r.files = o.finish();
    log << c.experiment << ": " << out.summary << (out.code == ok ? "" : " [tolerance breached]") << '\n';
    for (const auto& f : r.files) log << "  wrote " << f << '\n';
    return r;
}

// ---------------------------------------------------------------------------
// Compare

namespace {

struct Table {
    std::string hash;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::optional<double> as_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    Table t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind('#', 0) == 0) {
            const auto at = line.find("config_hash=");
            if (at != std::string::npos) t.hash = line.substr(at + 12, 16);
            continue;
        }
        if (t.columns.empty()) t.columns = split(line, ',');
        else t.rows.push_back(split(line, ','));
    }
    return t;
}

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
    } else {
        out[prefix] = j;
    }
}

struct FieldDiff {
    double max_abs = 0.0;
    double sum2 = 0.0;
    void add(double a, double b) {
        const double d = (std::isnan(a) && std::isnan(b)) ? 0.0 : std::abs(a - b);
        max_abs = std::max(max_abs, std::isnan(d) ? INFINITY : d);
        sum2 += d * d;
    }
};

class SchemaMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace

CompareResult compare_files(const std::string& a, const std::string& b, double tolerance, bool force) {
    CompareResult res;
    const std::string ext = fs::path(a).extension().string();
    std::map<std::string, FieldDiff> fields;
    std::vector<std::string> order;
    auto field = [&](const std::string& name) -> FieldDiff& {
        if (!fields.count(name)) order.push_back(name);
        return fields[name];
    };
    std::string ha, hb;
    try {
        if (ext != fs::path(b).extension().string()) throw SchemaMismatch("file types differ");
        if (ext == ".csv") {
            const Table ta = read_table(a), tb = read_table(b);
            ha = ta.hash;
            hb = tb.hash;
            if (ta.columns != tb.columns) throw SchemaMismatch("CSV columns differ");
            if (ta.rows.size() != tb.rows.size()) throw SchemaMismatch("CSV row counts differ");
            for (const auto& c : ta.columns) field(c);
            for (std::size_t r = 0; r < ta.rows.size(); ++r) {
                if (ta.rows[r].size() != ta.columns.size() || tb.rows[r].size() != ta.columns.size())
                    throw SchemaMismatch("CSV row " + std::to_string(r + 1) + " has the wrong width");
                for (std::size_t k = 0; k < ta.columns.size(); ++k) {
                    const auto x = as_number(ta.rows[r][k]), y = as_number(tb.rows[r][k]);
                    if (x && y) field(ta.columns[k]).add(*x, *y);
                    else if (ta.rows[r][k] != tb.rows[r][k])
                        throw SchemaMismatch("non-numeric field '" + ta.columns[k] + "' differs in row " + std::to_string(r + 1));
                }
            }
        } else if (ext == ".json") {
            std::ifstream ia(a), ib(b);
            if (!ia || !ib) throw ConfigError("cannot read input files");
            json ja = json::parse(ia), jb = json::parse(ib);
            ha = ja.value("config_hash", "");
            hb = jb.value("config_hash", "");
            for (auto* j : {&ja, &jb}) {
                j->erase("config_hash");
                j->erase("config");
                j->erase("timestamp");
                j->erase("outputs");
            }
            std::map<std::string, json> fa, fb;
            flatten(ja, "", fa);
            flatten(jb, "", fb);
            std::set<std::string> ka, kb;
            for (const auto& [k, v] : fa) ka.insert(k);
            for (const auto& [k, v] : fb) kb.insert(k);
            if (ka != kb) throw SchemaMismatch("JSON fields differ");
            for (const auto& [k, va] : fa) {
                const json& vb = fb.at(k);
                if (va.is_number() && vb.is_number()) field(k).add(va.get<double>(), vb.get<double>());
                else if (va.is_boolean() && vb.is_boolean()) field(k).add(va.get<bool>(), vb.get<bool>());
                else if (va != vb) throw SchemaMismatch("field '" + k + "' differs in kind or text");
            }
        } else if (ext == ".bin") {
            std::ifstream ia(a, std::ios::binary), ib(b, std::ios::binary);
            if (!ia || !ib) throw ConfigError("cannot read input files");
            auto load = [](std::istream& in) {
                try {
                    return read_binary(in);
                } catch (const DomainError& e) {
                    throw SchemaMismatch(e.what());
                }
            };
            const KernelGrid ka = load(ia), kb = load(ib);
            ha = hash_hex(ka.config_hash);
            hb = hash_hex(kb.config_hash);
            if (ka.grid.chart().is_polar() != kb.grid.chart().is_polar() || ka.grid.n1() != kb.grid.n1() ||
                ka.grid.n2() != kb.grid.n2() || ka.sources != kb.sources)
                throw SchemaMismatch("kernel grids differ");
            auto& v = field("values");
            for (Eigen::Index i = 0; i < ka.values.size(); ++i) v.add(ka.values.data()[i], kb.values.data()[i]);
            field("time").add(ka.time, kb.time);
        } else {
            throw SchemaMismatch("unsupported file type '" + ext + "'");
        }
    } catch (const SchemaMismatch& e) {
        res.exit_code = config_error;
        res.lines.push_back(std::string("schema mismatch: ") + e.what());
        return res;
    }
    if (ha != hb && !force) {
        res.exit_code = config_error;
        res.lines.push_back("config hash mismatch (" + ha + " vs " + hb + "); pass --force to compare anyway");
        return res;
    }
    double total2 = 0.0;
    for (const auto& name : order) {
        const FieldDiff& f = fields[name];
        std::ostringstream line;
        line << std::setprecision(6) << name << ": max_abs=" << f.max_abs << " l2=" << std::sqrt(f.sum2);
        res.lines.push_back(line.str());
        res.max_abs = std::max(res.max_abs, f.max_abs);
        total2 += f.sum2;
    }
    res.l2 = std::sqrt(total2);
    res.exit_code = res.max_abs <= tolerance ? ok : tolerance_breach;
    return res;
}

// ---------------------------------------------------------------------------
// Command line

namespace {

std::vector<std::int64_t> parse_int_list(const std::string& s, const std::string& field) {
    std::vector<std::int64_t> out;
    for (const auto& cell : split(s, ',')) {
        std::size_t used = 0;
        std::int64_t v = 0;
        try {
            v = std::stoll(cell, &used);
        } catch (const std::exception&) {
            throw ConfigError("field '" + field + "' must hold positive integers (got '" + cell + "')");
        }
        if (used != cell.size() || v < 1) throw ConfigError("field '" + field + "' must hold positive integers (got '" + cell + "')");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("field '" + field + "' is empty");
    return out;
}

const std::map<std::string, std::string>& descriptions() {
    static const std::map<std::string, std::string> d{
        {"identities", "odd-sum identities checked exactly up to --N-max"},
        {"effective_generator", "convergence of the finite-N generator to the Laplacian over --N"},
        {"kernel_convergence", "sliced kernel against the exact kernel on a grid and its refinement"},
        {"scaled_vs_unscaled", "scaled and unscaled grid kernels with kernel dumps for compare"},
        {"oracle_crosscheck", "closed-form, Bessel-series and image-sum kernels on the point battery"},
        {"delta_limit", "probe reproduction of the short-time kernel as eps -> 0"}};
    return d;
}

} // namespace

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Path-integral kernels in polar coordinates: experiments and comparisons"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run one experiment");
    std::string experiment, config_file, n_list, n_max;
    std::optional<double> tau, eps, extent, tolerance, hbar, mass;
    std::optional<std::int64_t> n1, n2, samples;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> alpha, chart, quadrature, output_dir;
    std::optional<unsigned> threads;
    run->add_option("experiment", experiment, "experiment id (see list-experiments)");
    run->add_option("--config", config_file, "JSON config; flags override its fields");
    run->add_option("--N", n_list, "comma-separated N values (slice count for single-N experiments)");
    run->add_option("--N-max", n_max, "largest N for identities");
    run->add_option("--tau", tau);
    run->add_option("--eps", eps);
    run->add_option("--extent", extent, "r_max or Cartesian half-width");
    run->add_option("--n1", n1);
    run->add_option("--n2", n2);
    run->add_option("--samples", samples);
    run->add_option("--seed", seed);
    run->add_option("--alpha", alpha, "one | sqrt_g");
    run->add_option("--chart", chart, "polar2d | cartesian2d");
    run->add_option("--quadrature", quadrature, "grid | monte_carlo");
    run->add_option("--tolerance", tolerance);
    run->add_option("--hbar", hbar);
    run->add_option("--mass", mass);
    run->add_option("--output-dir", output_dir);
    run->add_option("--threads", threads, "worker threads (default: POLARPATH_THREADS, then hardware)");

    auto* cmp = app.add_subcommand("compare", "fieldwise diff of two output files");
    std::string file_a, file_b;
    double cmp_tol = 1e-12;
    bool force = false;
    cmp->add_option("file_a", file_a)->required();
    cmp->add_option("file_b", file_b)->required();
    cmp->add_option("--tolerance", cmp_tol, "largest allowed absolute difference");
    cmp->add_flag("--force", force, "compare files with different config hashes");

    auto* list = app.add_subcommand("list-experiments", "print the experiment ids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : config_error;
    }

    try {
        if (list->parsed()) {
            for (const auto& id : experiment_ids()) out << id << "  " << descriptions().at(id) << '\n';
            return ok;
        }
        if (cmp->parsed()) {
            const CompareResult r = compare_files(file_a, file_b, cmp_tol, force);
            for (const auto& l : r.lines) (r.exit_code == config_error ? err : out) << l << '\n';
            if (r.exit_code != config_error)
                out << "overall: max_abs=" << r.max_abs << " l2=" << r.l2 << (r.exit_code == ok ? " (within " : " (exceeds ")
                    << cmp_tol << ")\n";
            return r.exit_code;
        }

        ExperimentConfig c;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw ConfigError("cannot read config file " + config_file);
            json j;
            try {
                j = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
            c = parse_config(j, c);
        }
        if (!experiment.empty()) {
            if (!c.experiment.empty() && c.experiment != experiment)
                throw ConfigError("field 'experiment': command line says '" + experiment + "', config says '" + c.experiment + "'");
            c.experiment = experiment;
        }
        if (c.experiment.empty()) throw ConfigError("field 'experiment' is missing");
        if (!n_max.empty()) c.n_max = parse_int_list(n_max, "N-max").at(0);
        if (!n_list.empty()) {
            const auto ns = parse_int_list(n_list, "N");
            if (c.experiment == "effective_generator") c.Ns = ns;
            else if (ns.size() == 1) c.n_slices = ns[0];
            else throw ConfigError("field 'N': " + c.experiment + " takes a single slice count");
        }
        if (tau) c.tau = tau;
        if (eps) c.eps = eps;
        if (extent) c.extent = extent;
        if (n1) c.n1 = n1;
        if (n2) c.n2 = n2;
        if (samples) c.samples = *samples;
        if (seed) c.seed = *seed;
        if (alpha) c.alpha = *alpha;
        if (chart) c.chart = *chart;
        if (quadrature) c.quadrature = *quadrature;
        if (tolerance) c.tolerance = tolerance;
        if (hbar) c.hbar = *hbar;
        if (mass) c.mass = *mass;
        if (output_dir) c.output_dir = *output_dir;
        if (threads) c.threads = *threads;
        return run_experiment(c, out).exit_code;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return numeric_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return numeric_error;
    }
}

} // namespace polarpath::cli
