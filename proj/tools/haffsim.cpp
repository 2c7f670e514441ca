// haffsim: command-line front end for the inelastic billiard simulator.
//
// Exit codes: 0 success, 2 config/parse, 3 geometry, 4 model, 5 numeric, 6 internal.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "haffsim/averaging.hpp"
#include "haffsim/cones.hpp"
#include "haffsim/dynamics.hpp"
#include "haffsim/ensemble.hpp"
#include "haffsim/errors.hpp"
#include "haffsim/experiment.hpp"
#include "haffsim/io.hpp"

using namespace haffsim;
using io::json;

namespace {

struct Globals {
    bool json_out = false;
    int precision = io::kDefaultPrecision;
};

std::string fmt(double x, const Globals& g) { return io::format_double(x, g.precision); }

void emit(const std::string& content, const std::string& out_path) {
    if (out_path.empty())
        std::cout << content;
    else
        io::write_file_atomic(out_path, content);
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

int default_workers() {
    if (const char* env = std::getenv("HAFFSIM_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1 && v <= 4096) return static_cast<int>(v);
        throw ConfigError("HAFFSIM_WORKERS must be an integer in [1, 4096]");
    }
    return 0;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (item.empty() || *end != '\0') throw ConfigError(std::string("bad number in ") + flag + ": '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(std::string(flag) + " needs at least one value");
    return out;
}

// ---------------------------------------------------------------- table-info

int cmd_table_info(const std::string& path, const Globals& g) {
    json source = io::read_json_file(path);
    const auto spec = io::parse_table(source);
    try {
        const auto table = io::build_table(spec);
        json j = io::table_info_json(table);
        j["table_hash"] = io::content_hash(source);
        if (g.json_out) {
            print_json(j);
            return 0;
        }
        std::cout << "scatterers        " << table.size() << "\n"
                  << "perimeter         " << fmt(table.perimeter(), g) << "\n"
                  << "area              " << fmt(table.area(), g) << "\n"
                  << "curvature         [" << fmt(table.curvature_min(), g) << ", " << fmt(table.curvature_max(), g)
                  << "]\n"
                  << "tau_min           " << fmt(table.tau_min(), g) << "\n"
                  << "tau_max           " << fmt(*table.tau_max(), g) << "\n"
                  << "horizon           finite (scan bound p^2+q^2 <= "
                  << table.horizon_certificate()->scanned_bound_sq << ")\n"
                  << "mean_free_path    " << fmt(table.mean_free_path(), g) << "\n";
        return 0;
    } catch (const InfiniteHorizonError& e) {
        if (g.json_out) {
            print_json({{"horizon", "infinite"},
                        {"corridor", {{"p", e.p()}, {"q", e.q()}, {"offset", e.offset()}, {"width", e.width()}}},
                        {"error", e.what()}});
        } else {
            std::cerr << "infinite horizon: corridor in direction (" << e.p() << ", " << e.q() << "), width "
                      << fmt(e.width(), g) << "\n";
        }
        return e.exit_code();
    }
}

// ---------------------------------------------------------------- certify

int cmd_certify(const std::string& path, int scan_bound, const Globals& g) {
    json source = io::read_json_file(path);
    auto spec = io::parse_table(source);
    if (scan_bound > 0) spec.horizon_scan_bound = scan_bound;
    try {
        const auto table = io::build_table(spec, false);
        const auto cert = geometry::certify_finite_horizon(table, spec.horizon_scan_bound);
        if (g.json_out) {
            print_json({{"horizon", "finite"},
                        {"requested_bound_sq", cert.requested_bound_sq},
                        {"scanned_bound_sq", cert.scanned_bound_sq},
                        {"directions_scanned", cert.directions_scanned},
                        {"min_coverage_slack", cert.min_coverage_slack},
                        {"tau_max_directions", cert.tau_max_directions},
                        {"tau_max_raw", cert.tau_max_raw},
                        {"tau_max", cert.tau_max}});
        } else {
            std::cout << "finite horizon certified\n"
                      << "scan bound        p^2+q^2 <= " << cert.scanned_bound_sq << " (requested "
                      << cert.requested_bound_sq << ")\n"
                      << "directions        " << cert.directions_scanned << "\n"
                      << "coverage slack    " << fmt(cert.min_coverage_slack, g) << "\n"
                      << "tau_max           " << fmt(cert.tau_max, g) << " (raw " << fmt(cert.tau_max_raw, g)
                      << ")\n";
        }
        return 0;
    } catch (const InfiniteHorizonError& e) {
        if (g.json_out)
            print_json({{"horizon", "infinite"},
                        {"corridor", {{"p", e.p()}, {"q", e.q()}, {"offset", e.offset()}, {"width", e.width()}}},
                        {"error", e.what()}});
        else
            std::cerr << "infinite horizon: corridor in direction (" << e.p() << ", " << e.q() << "), width "
                      << fmt(e.width(), g) << "\n";
        return e.exit_code();
    }
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string table, model, out;
    bool elastic = false;
    long long steps = 1000;
    std::optional<double> s, phi;
    double c0 = 1.0;
    std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a, const Globals& g) {
    const auto table = io::load_table(a.table);
    auto model = a.model.empty() ? dissipation::RestitutionModel::constant(0.0)
                                 : io::parse_model(io::read_json_file(a.model));
    if (a.elastic) model = model.with_epsilon(0.0);
    if (a.steps < 0) throw ConfigError("--steps must be nonnegative");
    if (!(a.c0 > 0.0)) throw ConfigError("--c0 must be positive");

    dynamics::ExtPhasePoint x;
    if (a.s.has_value() != a.phi.has_value()) throw ConfigError("--s and --phi must be given together");
    if (a.s) {
        x.base = {*a.s, *a.phi};
        x.c = a.c0;
        dynamics::validate(table.geometry, x.base);
    } else {
        ensemble::InitialDistribution dist;
        dist.c0 = a.c0;
        x = ensemble::sample_initial(table.geometry, dist, a.seed);
    }

    std::string csv = std::string(io::kTrajectoryHeader) + "\n";
    csv += io::trajectory_row(0, x, 0.0, 0.0, 0.0, g.precision);
    // An empty run prints only the header.
    if (a.steps == 0) csv = std::string(io::kTrajectoryHeader) + "\n";
    dynamics::TimeAccumulator clock;
    double tau_sum = 0.0;
    for (long long n = 1; n <= a.steps; ++n) {
        const auto step = dynamics::step_map(table.geometry, x, model);
        clock.add(model.epsilon() * step.tau / x.c);
        tau_sum += step.tau;
        x = step.next;
        csv += io::trajectory_row(static_cast<std::size_t>(n), x, step.tau, clock.value(), step.eta_used, g.precision);
    }
    const double mean_tau = a.steps > 0 ? tau_sum / static_cast<double>(a.steps) : 0.0;

    if (g.json_out) {
        if (!a.out.empty()) io::write_file_atomic(a.out, csv);
        print_json({{"steps", a.steps},
                    {"epsilon", model.epsilon()},
                    {"mean_tau", mean_tau},
                    {"mean_free_path", table.geometry.mean_free_path()},
                    {"final", {{"s", x.base.s}, {"phi", x.base.phi}, {"c", x.c}, {"t", clock.value()}}},
                    {"output", a.out.empty() ? json(nullptr) : json(a.out)}});
        return 0;
    }
    emit(csv, a.out);
    std::ostream& foot = a.out.empty() ? std::cerr : std::cout;
    foot << "# steps " << a.steps << "  mean_tau " << fmt(mean_tau, g) << "  mean_free_path "
         << fmt(table.geometry.mean_free_path(), g) << "  final_c " << fmt(x.c, g) << "\n";
    return 0;
}

// ---------------------------------------------------------------- drift

struct DriftArgs {
    std::string model, out;
    double c_min = 0.1, c_max = 10.0;
    int points = 50;
    bool log_grid = false;
    bool check_gbar = false;
    int order = averaging::kDefaultQuadratureOrder;
};

int cmd_drift(const DriftArgs& a, const Globals& g) {
    const auto model = io::parse_model(io::read_json_file(a.model));
    if (!(a.c_min > 0.0 && a.c_max >= a.c_min)) throw ConfigError("need 0 < --c-min <= --c-max");
    if (a.points < 1) throw ConfigError("--points must be positive");
    const bool gbar_ok = a.check_gbar && model.epsilon() > 0.0;
    if (a.check_gbar && !gbar_ok) throw ConfigError("--check-gbar needs a model with epsilon > 0");

    std::string csv = a.check_gbar ? "c,h,h_over_c,gbar_over_eps,abs_diff\n" : "c,h,h_over_c\n";
    json rows = json::array();
    double max_dev = 0.0;
    for (int i = 0; i < a.points; ++i) {
        const double f = a.points == 1 ? 0.0 : static_cast<double>(i) / (a.points - 1);
        const double c = a.log_grid ? a.c_min * std::pow(a.c_max / a.c_min, f) : a.c_min + f * (a.c_max - a.c_min);
        const double h = averaging::drift_h(c, model, a.order);
        csv += fmt(c, g) + "," + fmt(h, g) + "," + fmt(h / c, g);
        json row = {{"c", c}, {"h", h}, {"h_over_c", h / c}};
        if (gbar_ok) {
            const double ge = averaging::gbar(c, model, a.order) / model.epsilon();
            const double d = std::abs(ge - h);
            max_dev = std::max(max_dev, d);
            csv += "," + fmt(ge, g) + "," + fmt(d, g);
            row["gbar_over_eps"] = ge;
            row["abs_diff"] = d;
        }
        csv += "\n";
        rows.push_back(row);
    }
    if (g.json_out) {
        if (!a.out.empty()) io::write_file_atomic(a.out, csv);
        json j = {{"model", io::model_to_json(model)}, {"quadrature_order", a.order}, {"rows", rows}};
        if (gbar_ok) j["max_deviation"] = max_dev;
        print_json(j);
        return 0;
    }
    emit(csv, a.out);
    if (gbar_ok) (a.out.empty() ? std::cerr : std::cout) << "# max |gbar/eps - h| = " << fmt(max_dev, g) << "\n";
    return 0;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
    std::string table, model, out;
    double c0 = 1.0, tbar = 1.0;
    std::optional<double> step;
    int order = averaging::kDefaultQuadratureOrder;
};

int cmd_solve(const SolveArgs& a, const Globals& g) {
    const auto table = io::load_table(a.table);
    const auto model = io::parse_model(io::read_json_file(a.model));
    const double step = a.step ? *a.step : a.tbar / averaging::kDefaultStepsPerUnit;
    averaging::SolveOptions opts;
    opts.quadrature_order = a.order;
    const auto sol = averaging::solve_averaged(a.c0, model, table.geometry.mean_free_path(), a.tbar, step, opts);
    const json meta = io::averaged_metadata(sol, model, io::content_hash(table.source));
    if (!a.out.empty()) {
        io::write_file_atomic(a.out, io::averaged_csv(sol, g.precision));
        io::write_file_atomic(a.out + ".json", meta.dump(2) + "\n");
    }
    if (g.json_out) {
        json j = meta;
        j["c_end"] = sol.cbar.back();
        j["t_end"] = sol.t.back();
        j["output"] = a.out.empty() ? json(nullptr) : json(a.out);
        print_json(j);
        return 0;
    }
    if (a.out.empty()) std::cout << io::averaged_csv(sol, g.precision);
    else
        std::cout << "c(tbar_end) " << fmt(sol.cbar.back(), g) << "  t(tbar_end) " << fmt(sol.t.back(), g) << "\n";
    return 0;
}

// ---------------------------------------------------------------- ensemble / haff

struct EnsembleArgs {
    std::string config, eps_sweep, outputs;
    int workers = 0;
};

int cmd_ensemble(const EnsembleArgs& a, bool haff, const Globals& g) {
    auto cfg = io::load_experiment(a.config);
    if (!a.eps_sweep.empty()) cfg.eps_sweep = parse_list(a.eps_sweep, "--eps-sweep");
    if (!a.outputs.empty()) cfg.outputs = a.outputs;
    experiment::RunSettings settings;
    settings.workers = a.workers > 0 ? a.workers : default_workers();
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = experiment::run_experiment(cfg, settings);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (g.json_out) {
        json j = {{"outputs", cfg.outputs.string()}, {"levels", res.report["levels"]},
                  {"c_deviation_strictly_decreasing", res.report["c_deviation_strictly_decreasing"]},
                  {"measured_exponent", res.report["measured_exponent"]}, {"haff", res.haff},
                  {"wall_seconds", wall}};
        print_json(j);
        return 0;
    }
    std::cout << "epsilon            mean_sup|c-cbar|   mean_sup|t-t(tbar)|/T   discarded  wall_s\n";
    for (const auto& l : res.convergence.levels) {
        std::cout << fmt(l.epsilon, g) << "  " << fmt(l.c_dev.mean, g) << "  " << fmt(l.t_dev.mean / l.t_phys_total, g)
                  << "  " << l.discarded_grazing << "  " << io::format_double(l.wall_seconds, 4) << "\n";
    }
    if (res.convergence.levels.size() > 1)
        std::cout << "monotone decrease: " << (res.convergence.c_dev_strictly_decreasing ? "yes" : "no")
                  << "  (measured exponent " << io::format_double(res.convergence.measured_exponent, 4) << ")\n";
    if (haff) {
        for (const auto& f : res.fits) {
            if (!f.fit) {
                std::cout << "eps " << fmt(f.epsilon, g) << ": no fit (" << f.note << ")\n";
                continue;
            }
            std::cout << "eps " << fmt(f.epsilon, g) << ": fitted slope " << fmt(f.fit->slope, g);
            if (res.theory_slope)
                std::cout << "  theory " << fmt(*res.theory_slope, g) << "  relative error "
                          << fmt(std::abs(f.fit->slope - *res.theory_slope) / *res.theory_slope, g);
            std::cout << "  r^2 " << fmt(f.fit->r_squared, g) << "\n";
        }
    }
    std::cout << "artifacts in " << cfg.outputs.string() << " (" << io::format_double(wall, 4) << " s)\n";
    return 0;
}

// ---------------------------------------------------------------- cone-check

struct ConeArgs {
    std::string table, model;
    bool lambda_only = false;
    int samples = 10000;
    std::uint64_t seed = 1;
    int k0 = dissipation::kDefaultStripK0;
};

int cmd_cone_check(const ConeArgs& a, const Globals& g) {
    const auto table = io::load_table(a.table);
    const auto model = io::parse_model(io::read_json_file(a.model));
    const auto rep = dissipation::check_condition_C(table.geometry, model);
    if (a.lambda_only) {
        const auto p = dissipation::cone_params(table.geometry, model);
        if (g.json_out)
            print_json({{"lambda", p.lambda}});
        else
            std::cout << fmt(p.lambda, g) << "\n";
        return 0;
    }
    auto cond_json = json{{"holds", rep.holds},
                          {"lhs1", rep.lhs1},
                          {"rhs1", rep.rhs1},
                          {"margin1", rep.margin1()},
                          {"lhs2", std::isfinite(rep.lhs2) ? json(rep.lhs2) : json(nullptr)},
                          {"rhs2", rep.rhs2},
                          {"margin2", std::isfinite(rep.margin2()) ? json(rep.margin2()) : json(nullptr)}};
    json j = {{"model", io::model_to_json(model)}, {"table_hash", io::content_hash(table.source)},
              {"condition_C", cond_json}, {"strip_k0", a.k0}};
    if (!rep.holds) {
        if (g.json_out) {
            j["feasible"] = false;
            print_json(j);
        } else {
            std::cout << "condition (C) fails\n"
                      << "  first inequality margin   " << fmt(rep.margin1(), g) << "\n"
                      << "  second inequality margin  " << fmt(rep.margin2(), g) << "\n";
        }
        return ConditionCError("").exit_code();
    }
    const auto p = dissipation::cone_params(table.geometry, model);
    const auto sweep = dissipation::sweep_cone(table.geometry, model, p, a.samples, a.seed);
    j["feasible"] = true;
    j["cone"] = {{"kappa", p.kappa}, {"v_min", p.v_min}, {"v_max", p.v_max}, {"lambda", p.lambda}};
    j["sweep"] = {{"samples", sweep.samples},
                  {"in_cone", sweep.in_cone},
                  {"grazing_skipped", sweep.grazing_skipped},
                  {"pass_rate", sweep.pass_rate()},
                  {"min_expansion", sweep.min_expansion},
                  {"min_image_slope", sweep.min_image_slope},
                  {"max_image_slope", sweep.max_image_slope},
                  {"max_image_tilt", sweep.max_image_tilt},
                  {"seed", a.seed}};
    if (g.json_out) {
        print_json(j);
        return 0;
    }
    std::cout << "condition (C) holds\n"
              << "  first inequality margin   " << fmt(rep.margin1(), g) << "\n"
              << "  second inequality margin  " << fmt(rep.margin2(), g) << "\n"
              << "kappa   " << fmt(p.kappa, g) << "\n"
              << "V_min   " << fmt(p.v_min, g) << "\n"
              << "V_max   " << fmt(p.v_max, g) << "\n"
              << "Lambda  " << fmt(p.lambda, g) << "\n"
              << "sweep   " << sweep.in_cone << "/" << sweep.samples << " images in cone ("
              << io::format_double(100.0 * sweep.pass_rate(), 6) << "%), min expansion "
              << fmt(sweep.min_expansion, g) << ", grazing skipped " << sweep.grazing_skipped << "\n"
              << "strip k0 " << a.k0 << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inelastic dispersing billiards: simulation, averaging and Haff's law"};
    app.require_subcommand(1, 1);
    Globals g;
    app.add_flag("--json", g.json_out, "Machine-readable JSON on stdout");
    app.add_option("--precision", g.precision, "Significant digits for floating-point output")
        ->check(CLI::Range(1, 17));

    std::string table_path;
    int scan_bound = 0;
    auto* info = app.add_subcommand("table-info", "Geometry summary of a table file");
    info->add_option("table", table_path, "Table JSON")->required();
    auto* cert = app.add_subcommand("certify", "Finite-horizon certificate of a table file");
    cert->add_option("table", table_path, "Table JSON")->required();
    cert->add_option("--scan-bound", scan_bound, "Bound on p^2+q^2 for the corridor scan");

    SimulateArgs sim;
    auto* simc = app.add_subcommand("simulate", "Iterate the collision map and dump a trajectory CSV");
    simc->add_option("--table", sim.table, "Table JSON")->required();
    simc->add_option("--model", sim.model, "Model JSON (default: elastic)");
    simc->add_flag("--elastic", sim.elastic, "Force epsilon = 0");
    simc->add_option("--steps", sim.steps, "Number of collisions");
    simc->add_option("--s", sim.s, "Initial global arc length");
    simc->add_option("--phi", sim.phi, "Initial angle");
    simc->add_option("--c0", sim.c0, "Initial speed");
    simc->add_option("--seed", sim.seed, "Seed for sampling the initial point from the invariant measure");
    simc->add_option("--out", sim.out, "Output CSV (default stdout)");

    DriftArgs dr;
    auto* drc = app.add_subcommand("drift", "Tabulate the averaged drift h(c)");
    drc->add_option("--model", dr.model, "Model JSON")->required();
    drc->add_option("--c-min", dr.c_min, "Smallest speed");
    drc->add_option("--c-max", dr.c_max, "Largest speed");
    drc->add_option("--points", dr.points, "Grid points");
    drc->add_flag("--log", dr.log_grid, "Logarithmic grid");
    drc->add_flag("--check-gbar", dr.check_gbar, "Add gbar/eps columns and max deviation");
    drc->add_option("--order", dr.order, "Gauss-Legendre order");
    drc->add_option("--out", dr.out, "Output CSV (default stdout)");

    SolveArgs so;
    auto* soc = app.add_subcommand("solve", "Solve the averaged equations for c(tbar), t(tbar)");
    soc->add_option("--table", so.table, "Table JSON")->required();
    soc->add_option("--model", so.model, "Model JSON")->required();
    soc->add_option("--c0", so.c0, "Initial speed");
    soc->add_option("--tbar", so.tbar, "Slow-time horizon");
    soc->add_option("--step", so.step, "RK4 step (default tbar/4096)");
    soc->add_option("--order", so.order, "Gauss-Legendre order");
    soc->add_option("--out", so.out, "Output CSV; metadata goes to <out>.json");

    EnsembleArgs en;
    auto* enc = app.add_subcommand("ensemble", "Run an ensemble experiment");
    auto* hac = app.add_subcommand("haff", "Run an ensemble experiment and compare with Haff's law");
    for (auto* c : {enc, hac}) {
        c->add_option("config", en.config, "Experiment config JSON")->required();
        c->add_option("--eps-sweep", en.eps_sweep, "Comma-separated epsilon levels");
        c->add_option("--workers", en.workers, "Worker threads (default: $HAFFSIM_WORKERS or config)");
        c->add_option("--outputs", en.outputs, "Override the output directory");
    }

    ConeArgs co;
    auto* coc = app.add_subcommand("cone-check", "Condition (C), cone parameters and a cone sweep");
    coc->add_option("--table", co.table, "Table JSON")->required();
    coc->add_option("--model", co.model, "Model JSON")->required();
    coc->add_flag("--lambda-only", co.lambda_only, "Print the expansion rate and exit");
    coc->add_option("--samples", co.samples, "Sweep samples");
    coc->add_option("--seed", co.seed, "Sweep seed");
    coc->add_option("--k0", co.k0, "Homogeneity strip threshold (diagnostic)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ErrorClass::config);
    }

    try {
        if (*info) return cmd_table_info(table_path, g);
        if (*cert) return cmd_certify(table_path, scan_bound, g);
        if (*simc) return cmd_simulate(sim, g);
        if (*drc) return cmd_drift(dr, g);
        if (*soc) return cmd_solve(so, g);
        if (*enc) return cmd_ensemble(en, false, g);
        if (*hac) return cmd_ensemble(en, true, g);
        if (*coc) return cmd_cone_check(co, g);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return static_cast<int>(ErrorClass::internal);
    }
    return static_cast<int>(ErrorClass::internal);
}
