#pragma once

#include "masense/report.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace masense {

enum class Command { Solve, Sensitivity, Validate, Qreg, Convergence };

Command parse_command(std::string_view name);
std::string to_string(Command command);

/// Validated experiment description. The reference/target sub-documents stay
/// in JSON form and are turned into models when the run starts.
///
///   dimension      1 | 2
///   reference      {domain: {kind: "ball", center, radius}}
///   target         {family, interval, rate | velocity | amplitude, support}
///   t_values       parameter values (covariates for qreg)
///   resolution     lattice resolution n >= 16
///   eps            finite-difference step
///   solver         {tol_nl, max_newton, armijo, backtrack, min_step, init_shrink, reference_node}
///   qreg           {u_points: [[...], ...]}
///   convergence    {resolutions: [...], eps_values: [...]}
///   output_dir     artifacts directory
///   threads        parallel sweep items (capped by MASENSE_THREADS)
struct ExperimentConfig {
    Command command = Command::Solve;
    int dimension = 2;
    nlohmann::json reference;
    nlohmann::json target;
    std::vector<double> t_values;
    int resolution = 64;
    double eps = 1e-3;
    SolverOptions solver;
    std::vector<std::vector<double>> u_points;
    std::vector<int> resolutions{32, 64, 128};
    std::vector<double> eps_values{4e-3, 2e-3, 1e-3};
    std::filesystem::path output_dir = "masense-out";
    int threads = 1;
    nlohmann::json document;
};

/// Applies "a.b.c=value"; the value is parsed as JSON when possible and kept
/// as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

ExperimentConfig parse_config(Command command, const nlohmann::json& doc);
ExperimentConfig load_config(Command command, const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

/// Effective parallelism: requested, capped by MASENSE_THREADS when set.
int thread_cap(int requested);

/// Runs the experiment, writing artifacts and report.json into output_dir.
/// Per-item failures are recorded in the report without aborting the sweep.
RunReport run(const ExperimentConfig& config);

}  // namespace masense
