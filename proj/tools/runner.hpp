#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace polarpath::cli {

enum ExitCode : int { ok = 0, tolerance_breach = 1, config_error = 2, numeric_error = 3 };

/// Bad configuration; the message names the field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::vector<std::string>& experiment_ids();

/// Fully resolved experiment configuration. Optional fields fall back to
/// per-experiment defaults in resolve().
struct ExperimentConfig {
    std::string experiment;
    std::optional<std::string> chart;  // default polar2d (cartesian2d for kernel_convergence)
    double hbar = 1.0;
    double mass = 1.0;
    std::optional<std::int64_t> n_slices;
    std::optional<double> eps;
    std::optional<double> tau;
    std::string quadrature = "grid";  // grid | monte_carlo
    std::optional<std::int64_t> n1, n2;
    std::optional<double> extent;     // r_max or Cartesian half-width
    std::optional<double> r_lo;
    std::int64_t samples = 100000;
    std::uint64_t seed = 12345;
    std::string alpha = "sqrt_g";
    std::int64_t n_max = 10000;
    std::vector<std::int64_t> Ns;
    std::vector<double> eps_list;
    std::optional<double> tolerance;  // pass threshold of the experiment's headline metric
    std::string output_dir = ".";
    unsigned threads = 0;
};

/// Reads a JSON config; unknown or ill-typed fields raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j, ExperimentConfig base = {});
/// Fills per-experiment defaults and validates every field.
ExperimentConfig resolve(ExperimentConfig c);
/// Canonical JSON of the result-affecting fields (no output_dir, no threads).
nlohmann::json hashed_fields(const ExperimentConfig& c);
/// FNV-1a 64 of the canonical JSON.
std::uint64_t config_hash(const ExperimentConfig& c);
std::string hash_hex(std::uint64_t h);

struct RunResult {
    int exit_code = ok;
    std::vector<std::string> files;  // written artifacts, manifest last
    std::string summary;
};

/// Runs one experiment and writes <experiment>_<timestamp>.{csv,json}, extra dumps and a manifest.
RunResult run_experiment(const ExperimentConfig& config, std::ostream& log);

struct CompareResult {
    int exit_code = ok;
    double max_abs = 0.0;
    double l2 = 0.0;
    std::vector<std::string> lines;  // one per field
};

/// Fieldwise diff of two CSV, JSON or binary kernel files of the same schema.
CompareResult compare_files(const std::string& a, const std::string& b, double tolerance, bool force);

/// Full command line: run, compare, list-experiments.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace polarpath::cli
