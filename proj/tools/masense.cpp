// masense: Monge-Ampere transport solves and their parameter sensitivity.
//
//   masense <solve|sensitivity|validate|qreg|convergence> --config FILE [--set key=value]...

#include "masense/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

void print_summary(const masense::RunReport& report) {
    for (const auto& item : report.items) {
        std::printf("%-12s %-6s", item.label.c_str(), item.status.c_str());
        for (const char* key : {"newton_iters", "residual_interior", "rho", "beta", "map_error",
                                "rate_error", "fd_error", "taylor_remainder"}) {
            const auto it = item.metrics.find(key);
            if (it != item.metrics.end()) std::printf("  %s=%.3g", key, it->second);
        }
        if (!item.error.empty()) std::printf("  (%s)", item.error.c_str());
        std::printf("\n");
    }
    for (const auto& table : report.tables) {
        if (table.exact) {
            std::printf("%s vs %s: exact\n", table.name.c_str(), table.parameter.c_str());
        } else {
            std::printf("%s vs %s: order %.3f\n", table.name.c_str(), table.parameter.c_str(),
                        table.order);
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monge-Ampere transport maps and their sensitivity"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> overrides;
    for (const char* name : {"solve", "sensitivity", "validate", "qreg", "convergence"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment JSON")->required();
        sub->add_option("--set", overrides, "override, e.g. solver.tol_nl=1e-8");
    }
    CLI11_PARSE(app, argc, argv);

    try {
        const auto command = masense::parse_command(app.get_subcommands().front()->get_name());
        const auto config = masense::load_config(command, config_path, overrides);
        const auto report = masense::run(config);
        print_summary(report);
        std::printf("report: %s\n", (config.output_dir / "report.json").string().c_str());
        return report.succeeded() ? 0 : 1;
    } catch (const masense::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
