#include "masense/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <thread>

namespace masense {

using nlohmann::json;

Command parse_command(std::string_view name) {
    if (name == "solve") return Command::Solve;
    if (name == "sensitivity") return Command::Sensitivity;
    if (name == "validate") return Command::Validate;
    if (name == "qreg") return Command::Qreg;
    if (name == "convergence") return Command::Convergence;
    throw ConfigError("unknown command '" + std::string(name) + "'");
}

std::string to_string(Command command) {
    switch (command) {
        case Command::Solve: return "solve";
        case Command::Sensitivity: return "sensitivity";
        case Command::Validate: return "validate";
        case Command::Qreg: return "qreg";
        case Command::Convergence: return "convergence";
    }
    return "unknown";
}

int thread_cap(int requested) {
    int threads = std::max(1, requested);
    if (const char* env = std::getenv("MASENSE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) threads = std::min(threads, cap);
    }
    return threads;
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (part.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
        if (!node->is_object()) *node = json::object();
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    json value = json::parse(text, nullptr, false);
    *node = value.is_discarded() ? json(text) : value;
}

namespace {

template <int Dim>
using Oracle = std::function<std::pair<Vec<Dim>, Vec<Dim>>(double, const Vec<Dim>&)>;

template <int Dim>
struct Setup {
    ReferenceDensity<Dim> q;
    DensityCurve<Dim> p;
    Oracle<Dim> oracle;
};

template <int Dim>
Vec<Dim> read_vec(const json& spec, const char* key, const Vec<Dim>& fallback) {
    if (!spec.contains(key)) return fallback;
    const auto values = spec.at(key).get<std::vector<double>>();
    if (values.size() != static_cast<std::size_t>(Dim)) {
        throw ConfigError(std::string("'") + key + "' must have " + std::to_string(Dim) + " entries");
    }
    Vec<Dim> v;
    for (int d = 0; d < Dim; ++d) v[d] = values[d];
    return v;
}

template <int Dim>
MovingBall<Dim> parse_support(const json& spec) {
    const std::string kind = spec.value("kind", "ball");
    MovingBall<Dim> ball;
    if (kind == "ball") {
        const Vec<Dim> c = read_vec<Dim>(spec, "center", Vec<Dim>::Zero());
        const double r = spec.value("radius", 1.0);
        ball = {[c](double) { return c; }, [](double) { return Vec<Dim>::Zero().eval(); },
                [r](double) { return r; }, [](double) { return 0.0; }};
    } else if (kind == "dilation") {
        const double rate = spec.value("rate", 1.0);
        ball = {[](double) { return Vec<Dim>::Zero().eval(); },
                [](double) { return Vec<Dim>::Zero().eval(); },
                [rate](double t) { return 1.0 + rate * t; }, [rate](double) { return rate; }};
    } else if (kind == "translation") {
        const Vec<Dim> v = read_vec<Dim>(spec, "velocity", Vec<Dim>::UnitX());
        ball = {[v](double t) { return (t * v).eval(); }, [v](double) { return v; },
                [](double) { return 1.0; }, [](double) { return 0.0; }};
    } else {
        throw ConfigError("unknown domain kind '" + kind + "'");
    }
    return ball;
}

Interval parse_interval(const json& target) {
    if (!target.contains("interval")) return {-0.25, 1.25};
    const auto v = target.at("interval").get<std::vector<double>>();
    if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError("'target.interval' must be [lo, hi]");
    return {v[0], v[1]};
}

template <int Dim>
Setup<Dim> make_setup(const ExperimentConfig& cfg) {
    const json ref_domain = cfg.reference.value("domain", json{{"kind", "ball"}});
    if (ref_domain.value("kind", "ball") != "ball") {
        throw ConfigError("reference domain must be a ball");
    }
    if (cfg.reference.value("density", "uniform") != "uniform") {
        throw ConfigError("reference density must be 'uniform'");
    }
    const Vec<Dim> c0 = read_vec<Dim>(ref_domain, "center", Vec<Dim>::Zero());
    const double r0 = ref_domain.value("radius", 1.0);
    const auto domain = make_ball_domain<Dim>(c0, r0);
    auto q = uniform_reference<Dim>(domain);

    const Interval I = parse_interval(cfg.target);
    const std::string family = cfg.target.value("family", "");
    const json support_spec = cfg.target.value("support", ref_domain);

    auto affine_oracle = [c0, r0](const MovingBall<Dim>& ball) -> Oracle<Dim> {
        return [=](double t, const Vec<Dim>& x) {
            const Vec<Dim> d = (x - c0) / r0;
            return std::pair<Vec<Dim>, Vec<Dim>>{ball.center(t) + ball.radius(t) * d,
                                                 ball.center_rate(t) + ball.radius_rate(t) * d};
        };
    };

    if (family == "uniform" || family == "uniform-dilation" || family == "translation") {
        json spec = support_spec;
        if (family == "uniform-dilation") spec = {{"kind", "dilation"}, {"rate", cfg.target.value("rate", 1.0)}};
        if (family == "translation") {
            spec = {{"kind", "translation"}};
            if (cfg.target.contains("velocity")) spec["velocity"] = cfg.target["velocity"];
        }
        const auto ball = parse_support<Dim>(spec);
        return {q, uniform_ball_curve<Dim>(ball, I), affine_oracle(ball)};
    }

    std::optional<DensityCurve<Dim>> p;
    if (family == "gaussian-bump") {
        const auto support = moving_ball_curve<Dim>(parse_support<Dim>(support_spec), I);
        p.emplace(gaussian_bump_curve<Dim>(support, cfg.target.value("amplitude", 1.0)));
    } else if (family == "exponential-tilt") {
        if constexpr (Dim == 1) {
            const auto support = moving_ball_curve<1>(parse_support<1>(support_spec), I);
            p.emplace(exponential_tilt_curve(support, cfg.target.value("rate", 1.0)));
        } else {
            throw ConfigError("'exponential-tilt' is a one-dimensional family");
        }
    } else {
        throw ConfigError("unknown target family '" + family + "'");
    }

    Oracle<Dim> oracle;
    if constexpr (Dim == 1) {
        auto o = std::make_shared<TransportOracle1D>(*p, q);
        oracle = [o](double t, const Vec<1>& x) {
            return std::pair<Vec<1>, Vec<1>>{Vec<1>::Constant(o->map(t, x[0])),
                                             Vec<1>::Constant(o->map_rate(t, x[0]))};
        };
    } else {
        try {
            auto o = std::make_shared<RadialOracle>(*p, q);
            oracle = [o](double t, const Vec<2>& x) { return (*o)(t, x); };
        } catch (const OracleError&) {
            // Not radially symmetric: no semi-analytic reference.
        }
    }
    return {q, *p, oracle};
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    threads = std::clamp(threads, 1, std::max(count, 1));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < count; k = next++) body(k);
    };
    std::vector<std::jthread> pool;
    for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string numbered(const char* stem, int k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03d.csv", stem, k);
    return buf;
}

template <int Dim>
void record_solution(ItemReport& item, const PotentialSolution<Dim>& sol) {
    item.metrics["newton_iters"] = sol.newton_iters;
    item.metrics["residual_interior"] = sol.residual_interior;
    item.metrics["residual_boundary"] = sol.residual_boundary;
    item.metrics["mass_defect"] = sol.mass_defect;
    item.metrics["beta"] = sol.beta;
    item.metrics["rho"] = sol.rho;
    item.metrics["rho_floor"] = sol.rho_floor;
}

template <int Dim>
void record_linearized(ItemReport& item, const LinearizedSolution<Dim>& lin) {
    item.metrics["compat_residual"] = lin.compat_residual;
    item.metrics["constraint_residual"] = lin.constraint_residual;
    item.metrics["fredholm_multiplier"] = lin.fredholm_multiplier;
    item.metrics["discretization_defect"] = lin.discretization_defect;
    item.metrics["linear_residual"] = lin.linear_residual;
}

// sup over nodes of |grad phi - T| and, when given, |grad xi - dT|.
template <int Dim>
void record_oracle(ItemReport& item, const Oracle<Dim>& oracle, const PotentialSolution<Dim>& sol,
                   const LinearizedSolution<Dim>* lin) {
    if (!oracle) return;
    double map_err = 0.0, rate_err = 0.0;
    const auto& mesh = *sol.mesh();
    for (int i = 0; i < mesh.size(); ++i) {
        const auto [T, dT] = oracle(sol.t, mesh.node(i));
        map_err = std::max(map_err, (sol.grad_phi[i] - T).norm());
        if (lin) rate_err = std::max(rate_err, (lin->grad_xi[i] - dT).norm());
    }
    item.metrics["map_error"] = map_err;
    if (lin) item.metrics["rate_error"] = rate_err;
}

template <int Dim>
void validate_item(ItemReport& item, const ExperimentConfig& cfg, const Setup<Dim>& setup,
                   const PotentialSolution<Dim>& sol) {
    const auto& mesh = *sol.mesh();
    item.checks["obliqueness"] = sol.rho > 0.0;
    item.checks["hessian_bound"] = std::isfinite(sol.beta);

    const auto lin = sensitivity(sol, setup.q, setup.p);
    record_linearized(item, lin);
    item.checks["compatibility"] = std::abs(lin.fredholm_multiplier) <= 1e-8 * lin.rhs_scale;

    const Eigen::VectorXd zf = Eigen::VectorXd::Zero(mesh.n_interior());
    const Eigen::VectorXd zg = Eigen::VectorXd::Zero(mesh.n_boundary());
    const auto zero = solve_linearized(sol, setup.q, setup.p, make_rhs(zf, zg, sol, setup.q));
    item.metrics["zero_rhs_norm"] = zero.xi.values().template lpNorm<Eigen::Infinity>();
    item.checks["uniqueness"] = item.metrics["zero_rhs_norm"] <= 1e-9;

    const Interval I = setup.p.support().param_interval();
    if (I.contains(sol.t - cfg.eps) && I.contains(sol.t + cfg.eps)) {
        const auto rey = reynolds_check(density_integrand(setup.p), setup.p.support(), sol.t, cfg.eps);
        item.metrics["reynolds_residual"] = rey.residual;
        item.checks["reynolds"] = rey.residual <= 1e-4;
    }

    item.metrics["pushforward"] = pushforward_check(sol, setup.q, setup.p, 4);
    item.checks["pushforward"] = item.metrics["pushforward"] <= 1e-2;
    item.metrics["monotonicity"] = monotonicity_check(sol);
    item.checks["monotonicity"] = item.metrics["monotonicity"] >= -1e-8;

    for (const auto& [name, ok] : item.checks) {
        if (!ok) {
            item.status = "failed";
            item.error += (item.error.empty() ? "" : ", ") + name;
        }
    }
}

template <int Dim>
void guarded(ItemReport& item, const std::function<void()>& body) {
    const auto start = std::chrono::steady_clock::now();
    try {
        body();
    } catch (const std::exception& e) {
        item.status = "error";
        item.error = e.what();
    }
    item.metrics["wall_time"] = seconds_since(start);
}

template <int Dim>
std::vector<Vec<Dim>> u_points(const ExperimentConfig& cfg, const ConvexDomain<Dim>& domain) {
    std::vector<Vec<Dim>> out;
    if (cfg.u_points.empty()) {
        if constexpr (Dim == 1) {
            for (int a = -4; a <= 4; ++a) out.push_back(domain.witness() + Vec<1>::Constant(0.2 * a));
        } else {
            for (int a = -2; a <= 2; ++a)
                for (int b = -2; b <= 2; ++b) out.push_back(domain.witness() + Vec<2>(0.25 * a, 0.25 * b));
        }
    } else {
        for (const auto& u : cfg.u_points) {
            Vec<Dim> v;
            for (int d = 0; d < Dim; ++d) v[d] = u[d];
            out.push_back(v);
        }
    }
    for (const auto& u : out) {
        if (!domain.contains(u)) throw ConfigError("qreg u-point outside the reference domain");
    }
    return out;
}

template <int Dim>
RunReport run_dim(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    RunReport report;
    report.command = to_string(cfg.command);
    report.config = cfg.document;

    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create " + cfg.output_dir.string() + ": " + ec.message());

    const Setup<Dim> setup = make_setup<Dim>(cfg);
    const auto& domain = setup.q.domain();
    const int threads = thread_cap(cfg.threads);
    const auto& ts = cfg.t_values;

    switch (cfg.command) {
        case Command::Solve:
        case Command::Sensitivity:
        case Command::Validate: {
            const auto mesh = build_mesh<Dim>(domain, cfg.resolution);
            report.items.resize(ts.size());
            parallel_for(static_cast<int>(ts.size()), threads, [&](int k) {
                ItemReport& item = report.items[k];
                item.label = "t=" + std::to_string(ts[k]);
                item.t = ts[k];
                guarded<Dim>(item, [&] {
                    const auto sol = solve_monge_ampere<Dim>(ts[k], setup.q, setup.p, mesh, std::nullopt,
                                                             cfg.solver);
                    record_solution(item, sol);
                    if (cfg.command == Command::Solve) {
                        record_oracle<Dim>(item, setup.oracle, sol, nullptr);
                        emit_fields(cfg.output_dir / numbered("fields", k), sol);
                    } else if (cfg.command == Command::Sensitivity) {
                        const auto lin = sensitivity(sol, setup.q, setup.p);
                        record_linearized(item, lin);
                        record_oracle<Dim>(item, setup.oracle, sol, &lin);
                        const auto fd = fd_sensitivity_oracle(sol, setup.q, setup.p, cfg.eps);
                        item.metrics["fd_error"] = (fd.values() - lin.xi.values()).template lpNorm<Eigen::Infinity>();
                        emit_fields(cfg.output_dir / numbered("fields", k), sol, &lin);
                    } else {
                        validate_item(item, cfg, setup, sol);
                    }
                });
            });
            break;
        }
        case Command::Qreg: {
            const auto mesh = build_mesh<Dim>(domain, cfg.resolution);
            const auto us = u_points<Dim>(cfg, domain);
            std::ofstream csv(cfg.output_dir / "qreg.csv");
            if (!csv) throw IoError("cannot write qreg.csv in " + cfg.output_dir.string());
            csv << (Dim == 1 ? "x,u,Q,dQ\n" : "x,u_x,u_y,Q_x,Q_y,dQ_x,dQ_y\n");
            std::optional<ScalarField<Dim>> warm;
            std::vector<Vec<Dim>> prev_Q, prev_dQ;
            double prev_x = 0.0;
            for (std::size_t k = 0; k < ts.size(); ++k) {
                ItemReport item;
                item.label = "x=" + std::to_string(ts[k]);
                item.t = ts[k];
                guarded<Dim>(item, [&] {
                    const auto sol =
                        solve_monge_ampere<Dim>(ts[k], setup.q, setup.p, mesh, warm, cfg.solver);
                    record_solution(item, sol);
                    const auto lin = sensitivity(sol, setup.q, setup.p);
                    record_linearized(item, lin);
                    const auto xi_hess = hessian(lin.xi);
                    std::vector<Vec<Dim>> Q, dQ;
                    for (const auto& u : us) {
                        Q.push_back(interpolate_gradient(sol.grad_phi, sol.hess_phi, u));
                        dQ.push_back(interpolate_gradient(lin.grad_xi, xi_hess, u));
                        char buf[256];
                        if constexpr (Dim == 1) {
                            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", ts[k], u[0],
                                          Q.back()[0], dQ.back()[0]);
                        } else {
                            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                                          ts[k], u[0], u[1], Q.back()[0], Q.back()[1], dQ.back()[0],
                                          dQ.back()[1]);
                        }
                        csv << buf;
                    }
                    if (!prev_Q.empty()) {
                        const double dx = ts[k] - prev_x;
                        double remainder = 0.0, jump = 0.0;
                        for (std::size_t j = 0; j < us.size(); ++j) {
                            remainder = std::max(remainder, (Q[j] - prev_Q[j] - dx * prev_dQ[j]).norm());
                            jump = std::max(jump, (dQ[j] - prev_dQ[j]).norm());
                        }
                        item.metrics["taylor_remainder"] = remainder;
                        item.metrics["gradient_jump"] = jump;
                    }
                    emit_fields(cfg.output_dir / numbered("qreg_fields", static_cast<int>(k)), sol, &lin);
                    prev_Q = std::move(Q);
                    prev_dQ = std::move(dQ);
                    prev_x = ts[k];
                    warm = sol.phi;
                });
                if (item.status != "ok") prev_Q.clear();
                report.items.push_back(std::move(item));
            }
            break;
        }
        case Command::Convergence: {
            const double t = ts.front();
            const auto& ns = cfg.resolutions;
            std::vector<ItemReport> by_n(ns.size());
            parallel_for(static_cast<int>(ns.size()), threads, [&](int k) {
                ItemReport& item = by_n[k];
                item.label = "n=" + std::to_string(ns[k]);
                item.t = t;
                guarded<Dim>(item, [&] {
                    const auto mesh = build_mesh<Dim>(domain, ns[k]);
                    item.metrics["spacing"] = mesh->spacing();
                    const auto sol =
                        solve_monge_ampere<Dim>(t, setup.q, setup.p, mesh, std::nullopt, cfg.solver);
                    record_solution(item, sol);
                    const auto lin = sensitivity(sol, setup.q, setup.p);
                    record_linearized(item, lin);
                    record_oracle<Dim>(item, setup.oracle, sol, &lin);
                });
            });
            report.items = by_n;

            std::vector<double> hs, map_errs, rate_errs;
            for (const auto& item : by_n) {
                if (item.status != "ok" || !item.metrics.count("map_error")) continue;
                hs.push_back(item.metrics.at("spacing"));
                map_errs.push_back(item.metrics.at("map_error"));
                rate_errs.push_back(item.metrics.at("rate_error"));
            }
            if (hs.size() >= 2) {
                report.tables.push_back(make_table("map_error", "h", hs, map_errs));
                report.tables.push_back(make_table("rate_error", "h", hs, rate_errs));
            }

            ItemReport base;
            base.label = "eps-study";
            base.t = t;
            std::vector<double> errs;
            guarded<Dim>(base, [&] {
                const auto mesh = build_mesh<Dim>(domain, cfg.resolution);
                const auto sol = solve_monge_ampere<Dim>(t, setup.q, setup.p, mesh, std::nullopt, cfg.solver);
                const auto lin = sensitivity(sol, setup.q, setup.p);
                for (double eps : cfg.eps_values) {
                    const auto fd = fd_sensitivity_oracle(sol, setup.q, setup.p, eps);
                    errs.push_back((fd.values() - lin.xi.values()).template lpNorm<Eigen::Infinity>());
                    base.metrics["fd_error_eps_" + std::to_string(eps)] = errs.back();
                }
            });
            report.items.push_back(base);
            if (base.status == "ok" && errs.size() >= 2) {
                report.tables.push_back(make_table("fd_error", "eps", cfg.eps_values, errs));
            }
            break;
        }
    }

    report.wall_time = seconds_since(start);
    emit_report(cfg.output_dir / "report.json", report);
    return report;
}

const std::set<std::string> kTopLevelKeys = {
    "dimension", "reference", "target", "t_values", "resolution", "eps", "solver",
    "qreg",      "convergence", "output_dir", "threads"};

}  // namespace

ExperimentConfig parse_config(Command command, const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!kTopLevelKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    ExperimentConfig cfg;
    cfg.command = command;
    cfg.document = doc;
    try {
        cfg.dimension = doc.value("dimension", 2);
        cfg.reference = doc.value("reference", json::object());
        cfg.target = doc.at("target");
        cfg.t_values = doc.at("t_values").get<std::vector<double>>();
        cfg.resolution = doc.value("resolution", 64);
        cfg.eps = doc.value("eps", 1e-3);
        cfg.output_dir = doc.value("output_dir", std::string("masense-out"));
        cfg.threads = doc.value("threads", 1);
        const json solver = doc.value("solver", json::object());
        for (const auto& [key, value] : solver.items()) {
            static const std::set<std::string> known = {"tol_nl",   "max_newton", "armijo",
                                                        "backtrack", "min_step",  "init_shrink",
                                                        "reference_node"};
            if (!known.count(key)) throw ConfigError("unknown solver option '" + key + "'");
        }
        cfg.solver.tol_nl = solver.value("tol_nl", cfg.solver.tol_nl);
        cfg.solver.max_newton = solver.value("max_newton", cfg.solver.max_newton);
        cfg.solver.armijo = solver.value("armijo", cfg.solver.armijo);
        cfg.solver.backtrack = solver.value("backtrack", cfg.solver.backtrack);
        cfg.solver.min_step = solver.value("min_step", cfg.solver.min_step);
        cfg.solver.init_shrink = solver.value("init_shrink", cfg.solver.init_shrink);
        cfg.solver.reference_node = solver.value("reference_node", cfg.solver.reference_node);
        const json qreg = doc.value("qreg", json::object());
        if (qreg.contains("u_points")) {
            cfg.u_points = qreg.at("u_points").get<std::vector<std::vector<double>>>();
        }
        const json conv = doc.value("convergence", json::object());
        cfg.resolutions = conv.value("resolutions", cfg.resolutions);
        cfg.eps_values = conv.value("eps_values", cfg.eps_values);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    if (cfg.dimension != 1 && cfg.dimension != 2) throw ConfigError("dimension must be 1 or 2");
    if (cfg.resolution < 16) throw ConfigError("resolution must be at least 16");
    if (!(cfg.eps > 0.0)) throw ConfigError("eps must be positive");
    if (cfg.t_values.empty()) throw ConfigError("t_values must not be empty");
    if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
    for (int n : cfg.resolutions) {
        if (n < 16) throw ConfigError("convergence resolutions must be at least 16");
    }
    for (double e : cfg.eps_values) {
        if (!(e > 0.0)) throw ConfigError("convergence eps values must be positive");
    }
    for (const auto& u : cfg.u_points) {
        if (u.size() != static_cast<std::size_t>(cfg.dimension)) {
            throw ConfigError("qreg u-points must have 'dimension' coordinates");
        }
    }
    if (!(cfg.solver.tol_nl > 0.0) || cfg.solver.max_newton < 0 || !(cfg.solver.backtrack > 0.0) ||
        !(cfg.solver.backtrack < 1.0) || !(cfg.solver.min_step > 0.0)) {
        throw ConfigError("invalid solver options");
    }
    const Interval I = parse_interval(cfg.target);
    for (double t : cfg.t_values) {
        if (!I.contains(t)) throw ConfigError("t value " + std::to_string(t) + " outside the interval");
    }
    try {
        if (cfg.dimension == 1) {
            make_setup<1>(cfg);
        } else {
            make_setup<2>(cfg);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(Command command, const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
    for (const auto& o : overrides) apply_override(doc, o);
    return parse_config(command, doc);
}

RunReport run(const ExperimentConfig& config) {
    return config.dimension == 1 ? run_dim<1>(config) : run_dim<2>(config);
}

}  // namespace masense
