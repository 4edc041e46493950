#include "masense/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace masense {

bool RunReport::succeeded() const {
    return std::all_of(items.begin(), items.end(),
                       [](const ItemReport& item) { return item.status == "ok"; });
}

nlohmann::json to_json(const RunReport& report) {
    nlohmann::json doc;
    doc["schema_version"] = report.schema_version;
    doc["command"] = report.command;
    doc["config"] = report.config;
    doc["wall_time"] = report.wall_time;
    doc["items"] = nlohmann::json::array();
    for (const auto& item : report.items) {
        doc["items"].push_back({{"label", item.label},
                                {"t", item.t},
                                {"status", item.status},
                                {"error", item.error},
                                {"metrics", item.metrics},
                                {"checks", item.checks}});
    }
    doc["tables"] = nlohmann::json::array();
    for (const auto& table : report.tables) {
        doc["tables"].push_back({{"name", table.name},
                                 {"parameter", table.parameter},
                                 {"parameters", table.parameters},
                                 {"errors", table.errors},
                                 {"order", table.order},
                                 {"exact", table.exact}});
    }
    return doc;
}

RunReport report_from_json(const nlohmann::json& doc) {
    try {
        RunReport report;
        report.schema_version = doc.at("schema_version").get<int>();
        report.command = doc.at("command").get<std::string>();
        report.config = doc.at("config");
        report.wall_time = doc.at("wall_time").get<double>();
        for (const auto& j : doc.at("items")) {
            ItemReport item;
            item.label = j.at("label").get<std::string>();
            item.t = j.at("t").get<double>();
            item.status = j.at("status").get<std::string>();
            item.error = j.at("error").get<std::string>();
            item.metrics = j.at("metrics").get<std::map<std::string, double>>();
            item.checks = j.at("checks").get<std::map<std::string, bool>>();
            report.items.push_back(std::move(item));
        }
        for (const auto& j : doc.at("tables")) {
            ConvergenceTable table;
            table.name = j.at("name").get<std::string>();
            table.parameter = j.at("parameter").get<std::string>();
            table.parameters = j.at("parameters").get<std::vector<double>>();
            table.errors = j.at("errors").get<std::vector<double>>();
            table.order = j.at("order").get<double>();
            table.exact = j.at("exact").get<bool>();
            report.tables.push_back(std::move(table));
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
}

void emit_report(const std::filesystem::path& path, const RunReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << to_json(report).dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

RunReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return report_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

namespace {

void put(std::string& line, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    line += buf;
}

}  // namespace

template <int Dim>
void emit_fields(const std::filesystem::path& path, const PotentialSolution<Dim>& sol,
                 const LinearizedSolution<Dim>* lin) {
    const auto& mesh = *sol.mesh();
    if (lin && lin->xi.mesh() != sol.mesh()) {
        throw InvalidArgument("emit_fields: sensitivity lives on a different mesh");
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << (Dim == 1 ? "node_id,kind,x,phi,gx" : "node_id,kind,x,y,phi,gx,gy");
    if (lin) out << (Dim == 1 ? ",xi,xi_gx" : ",xi,xi_gx,xi_gy");
    out << '\n';
    for (int i = 0; i < mesh.size(); ++i) {
        std::string line = std::to_string(i) + (mesh.is_boundary(i) ? ",boundary" : ",interior");
        for (int d = 0; d < Dim; ++d) put(line, mesh.node(i)[d]);
        put(line, sol.phi[i]);
        for (int d = 0; d < Dim; ++d) put(line, sol.grad_phi[i][d]);
        if (lin) {
            put(line, lin->xi[i]);
            for (int d = 0; d < Dim; ++d) put(line, lin->grad_xi[i][d]);
        }
        out << line << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

double fitted_order(const std::vector<double>& parameters, const std::vector<double>& errors) {
    if (parameters.size() != errors.size() || parameters.size() < 2) {
        throw InvalidArgument("fitted_order: need at least two matching samples");
    }
    const double n = static_cast<double>(parameters.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < parameters.size(); ++k) {
        const double x = std::log(parameters[k]);
        const double y = std::log(std::max(errors[k], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceTable make_table(std::string name, std::string parameter, std::vector<double> parameters,
                            std::vector<double> errors, double floor) {
    ConvergenceTable table{std::move(name), std::move(parameter), std::move(parameters),
                           std::move(errors), 0.0, false};
    table.exact = std::all_of(table.errors.begin(), table.errors.end(),
                              [&](double e) { return e <= floor; });
    if (!table.exact) table.order = fitted_order(table.parameters, table.errors);
    return table;
}

template void emit_fields<1>(const std::filesystem::path&, const PotentialSolution<1>&,
                             const LinearizedSolution<1>*);
template void emit_fields<2>(const std::filesystem::path&, const PotentialSolution<2>&,
                             const LinearizedSolution<2>*);

}  // namespace masense
