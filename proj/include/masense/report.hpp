#pragma once

#include "masense/linearized.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace masense {

inline constexpr int kSchemaVersion = 1;

/// One attempted sweep item (a parameter value, a resolution, an eps).
struct ItemReport {
    std::string label;
    double t = 0.0;
    std::string status = "ok";  // "ok" | "failed" | "error"
    std::string error;
    std::map<std::string, double> metrics;
    std::map<std::string, bool> checks;

    bool operator==(const ItemReport&) const = default;
};

/// Error against a refinement parameter with the fitted log-log slope.
/// Errors at round-off level throughout are marked exact and carry no slope.
struct ConvergenceTable {
    std::string name;
    std::string parameter;
    std::vector<double> parameters;
    std::vector<double> errors;
    double order = 0.0;
    bool exact = false;

    bool operator==(const ConvergenceTable&) const = default;
};

struct RunReport {
    int schema_version = kSchemaVersion;
    std::string command;
    nlohmann::json config;
    std::vector<ItemReport> items;
    std::vector<ConvergenceTable> tables;
    double wall_time = 0.0;

    bool succeeded() const;
    bool operator==(const RunReport&) const = default;
};

nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& doc);

void emit_report(const std::filesystem::path& path, const RunReport& report);
RunReport read_report(const std::filesystem::path& path);

/// Node table: node_id,kind,x[,y],phi,gx[,gy] plus xi,xi_gx[,xi_gy] when a
/// linearized solution is given.
template <int Dim>
void emit_fields(const std::filesystem::path& path, const PotentialSolution<Dim>& sol,
                 const LinearizedSolution<Dim>* lin = nullptr);

/// Least-squares slope of log(error) against log(parameter).
double fitted_order(const std::vector<double>& parameters, const std::vector<double>& errors);

/// Fills order/exact; errors all below floor count as exact reproduction.
ConvergenceTable make_table(std::string name, std::string parameter, std::vector<double> parameters,
                            std::vector<double> errors, double floor = 1e-8);

}  // namespace masense
