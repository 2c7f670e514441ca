#include "haffsim/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "haffsim/errors.hpp"

namespace haffsim::io {

namespace {

const json& require(const json& j, const char* field, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
    auto it = j.find(field);
    if (it == j.end()) throw ParseError(where + ": missing field '" + field + "'");
    return *it;
}

double number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ParseError("field '" + field + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ParseError("field '" + field + "' must be finite");
    return x;
}

long long integer(const json& v, const std::string& field) {
    if (!v.is_number_integer()) throw ParseError("field '" + field + "' must be an integer");
    return v.get<long long>();
}

double optional_number(const json& j, const char* field, double fallback) {
    auto it = j.find(field);
    return it == j.end() ? fallback : number(*it, field);
}

}  // namespace

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON in '" + path.string() + "': " + e.what());
    }
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ConfigError("cannot rename onto '" + path.string() + "'");
    }
}

std::string format_double(double x, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, x);
    return buf;
}

std::string content_hash(const json& j) {
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

TableSpec parse_table(const json& j) {
    TableSpec spec;
    const json& list = require(j, "scatterers", "table");
    if (!list.is_array()) throw ParseError("field 'scatterers' must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string where = "scatterers[" + std::to_string(i) + "]";
        const json& center = require(list[i], "center", where);
        if (!center.is_array() || center.size() != 2)
            throw ParseError("field '" + where + ".center' must be [x, y]");
        geometry::Scatterer sc;
        sc.center = {number(center[0], where + ".center"), number(center[1], where + ".center")};
        sc.radius = number(require(list[i], "radius", where), where + ".radius");
        spec.scatterers.push_back(sc);
    }
    if (auto it = j.find("horizon_scan_bound"); it != j.end()) {
        const long long b = integer(*it, "horizon_scan_bound");
        if (b < 1 || b > 1'000'000) throw ParseError("field 'horizon_scan_bound' must lie in [1, 1000000]");
        spec.horizon_scan_bound = static_cast<int>(b);
    }
    return spec;
}

json table_to_json(const TableSpec& spec) {
    json list = json::array();
    for (const auto& s : spec.scatterers) list.push_back({{"center", {s.center.x, s.center.y}}, {"radius", s.radius}});
    return {{"scatterers", list}, {"horizon_scan_bound", spec.horizon_scan_bound}};
}

geometry::TableGeometry build_table(const TableSpec& spec, bool certify) {
    geometry::BuildOptions opts;
    opts.certify_horizon = certify;
    opts.horizon_scan_bound = spec.horizon_scan_bound;
    return geometry::build_table(spec.scatterers, opts);
}

LoadedTable load_table(const fs::path& path, bool certify) {
    json source = read_json_file(path);
    TableSpec spec = parse_table(source);
    auto geom = build_table(spec, certify);
    return {std::move(spec), std::move(source), std::move(geom)};
}

dissipation::RestitutionModel parse_model(const json& j) {
    using dissipation::RestitutionModel;
    const json& kind_v = require(j, "kind", "model");
    if (!kind_v.is_string()) throw ParseError("field 'kind' must be a string");
    const std::string kind = kind_v.get<std::string>();
    const double eps = number(require(j, "epsilon", "model"), "epsilon");
    if (kind == "constant") return RestitutionModel::constant(eps);
    if (kind == "power_law") {
        const double p = number(require(j, "p", "model"), "p");
        const json& prof = require(j, "q_profile", "model");
        if (!prof.is_string()) throw ParseError("field 'q_profile' must name a profile for power_law models");
        return RestitutionModel::power_law(eps, p, dissipation::profile_from_string(prof.get<std::string>()));
    }
    if (kind == "tabulated") {
        const json& prof = require(j, "q_profile", "model");
        if (!prof.is_array()) throw ParseError("field 'q_profile' must be [[c, q], ...] for tabulated models");
        std::vector<std::pair<double, double>> knots;
        for (const json& k : prof) {
            if (!k.is_array() || k.size() != 2) throw ParseError("field 'q_profile' entries must be [c, q] pairs");
            knots.emplace_back(number(k[0], "q_profile"), number(k[1], "q_profile"));
        }
        return RestitutionModel::tabulated(eps, std::move(knots));
    }
    throw ParseError("field 'kind' must be constant, power_law or tabulated, got '" + kind + "'");
}

json model_to_json(const dissipation::RestitutionModel& model) {
    using dissipation::ModelKind;
    json j = {{"kind", dissipation::to_string(model.kind())}, {"epsilon", model.epsilon()}};
    switch (model.kind()) {
        case ModelKind::constant: break;
        case ModelKind::power_law:
            j["p"] = model.exponent();
            j["q_profile"] = dissipation::to_string(model.profile());
            break;
        case ModelKind::tabulated: {
            json knots = json::array();
            for (std::size_t i = 0; i < model.table().xs().size(); ++i)
                knots.push_back({model.table().xs()[i], model.table().ys()[i]});
            j["q_profile"] = knots;
            break;
        }
    }
    return j;
}

json table_info_json(const geometry::TableGeometry& table) {
    json j;
    j["scatterers"] = table.size();
    j["perimeter"] = table.perimeter();
    j["area"] = table.area();
    j["curvature_min"] = table.curvature_min();
    j["curvature_max"] = table.curvature_max();
    j["tau_min"] = table.tau_min();
    j["mean_free_path"] = table.mean_free_path();
    if (const auto& cert = table.horizon_certificate()) {
        j["horizon"] = "finite";
        j["tau_max"] = cert->tau_max;
        j["certificate"] = {{"requested_bound_sq", cert->requested_bound_sq},
                            {"scanned_bound_sq", cert->scanned_bound_sq},
                            {"directions_scanned", cert->directions_scanned},
                            {"min_coverage_slack", cert->min_coverage_slack},
                            {"tau_max_directions", cert->tau_max_directions},
                            {"tau_max_raw", cert->tau_max_raw},
                            {"tau_max_safety_factor", geometry::kTauMaxSafetyFactor}};
    } else {
        j["horizon"] = "uncertified";
        j["tau_max"] = nullptr;
    }
    return j;
}

ExperimentConfig parse_experiment(const json& j, const fs::path& base_dir) {
    ExperimentConfig cfg;
    cfg.source = j;
    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    };

    const json& table_v = require(j, "table", "config");
    if (!table_v.is_string()) throw ParseError("field 'table' must be a file path");
    cfg.table_path = resolve(table_v.get<std::string>());

    const json& model_v = require(j, "model", "config");
    if (model_v.is_string())
        cfg.model_json = read_json_file(resolve(model_v.get<std::string>()));
    else if (model_v.is_object())
        cfg.model_json = model_v;
    else
        throw ParseError("field 'model' must be an object or a file path");
    parse_model(cfg.model_json);  // validate early

    cfg.c0 = number(require(j, "c0", "config"), "c0");
    cfg.tbar_end = number(require(j, "T_bar", "config"), "T_bar");
    if (!(cfg.tbar_end > 0.0)) throw ConfigError("field 'T_bar' must be positive");
    const long long n = integer(require(j, "trajectories", "config"), "trajectories");
    if (n <= 0 || n > 100'000'000) throw ConfigError("field 'trajectories' must be a positive count");
    cfg.trajectories = static_cast<int>(n);
    const json& seed_v = require(j, "master_seed", "config");
    if (!seed_v.is_number_integer()) throw ParseError("field 'master_seed' must be an integer");
    cfg.master_seed = seed_v.is_number_unsigned() ? seed_v.get<std::uint64_t>()
                                                  : static_cast<std::uint64_t>(seed_v.get<long long>());
    if (auto it = j.find("workers"); it != j.end()) {
        const long long w = integer(*it, "workers");
        if (w < 1 || w > 4096) throw ConfigError("field 'workers' must lie in [1, 4096]");
        cfg.workers = static_cast<int>(w);
    }
    cfg.initial.c0 = cfg.c0;
    if (auto it = j.find("initial"); it != j.end()) {
        const json& kind_v = require(*it, "kind", "initial");
        const std::string kind = kind_v.is_string() ? kind_v.get<std::string>() : "";
        if (kind == "invariant_measure") {
            cfg.initial.kind = ensemble::InitialKind::invariant_measure;
        } else if (kind == "boundary_curve") {
            cfg.initial.kind = ensemble::InitialKind::boundary_curve;
            const long long idx = integer(require(*it, "scatterer", "initial"), "initial.scatterer");
            if (idx < 0) throw CurveSpecError("field 'initial.scatterer' must be nonnegative");
            cfg.initial.curve.scatterer = static_cast<std::size_t>(idx);
            auto pair = [&](const char* name) {
                const json& v = require(*it, name, "initial");
                if (!v.is_array() || v.size() != 2)
                    throw ParseError(std::string("field 'initial.") + name + "' must be [lo, hi]");
                return std::pair{number(v[0], name), number(v[1], name)};
            };
            std::tie(cfg.initial.curve.s_start, cfg.initial.curve.s_end) = pair("s");
            std::tie(cfg.initial.curve.phi_start, cfg.initial.curve.phi_end) = pair("phi");
        } else {
            throw ParseError("field 'initial.kind' must be invariant_measure or boundary_curve");
        }
    }
    if (auto it = j.find("outputs"); it != j.end()) {
        if (!it->is_string()) throw ParseError("field 'outputs' must be a directory path");
        cfg.outputs = resolve(it->get<std::string>());
    } else {
        cfg.outputs = base_dir / "out";
    }
    if (auto it = j.find("eps_sweep"); it != j.end()) {
        if (!it->is_array()) throw ParseError("field 'eps_sweep' must be an array");
        for (const json& e : *it) cfg.eps_sweep.push_back(number(e, "eps_sweep"));
    }
    if (auto it = j.find("haff_window"); it != j.end()) {
        if (!it->is_array() || it->size() != 2) throw ParseError("field 'haff_window' must be [lo, hi]");
        cfg.haff_window = std::pair{number((*it)[0], "haff_window"), number((*it)[1], "haff_window")};
    }
    cfg.ode_step = optional_number(j, "ode_step", 0.0);
    if (auto it = j.find("quadrature_order"); it != j.end())
        cfg.quadrature_order = static_cast<int>(integer(*it, "quadrature_order"));
    if (auto it = j.find("elastic_collisions"); it != j.end()) {
        const long long e = integer(*it, "elastic_collisions");
        if (e < 1) throw ConfigError("field 'elastic_collisions' must be positive");
        cfg.elastic_collisions = static_cast<std::size_t>(e);
    }
    return cfg;
}

ExperimentConfig load_experiment(const fs::path& path) {
    const json j = read_json_file(path);
    return parse_experiment(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

std::string trajectory_row(std::size_t n, const dynamics::ExtPhasePoint& x, double tau, double t, double eta,
                           int precision) {
    std::string row = std::to_string(n);
    for (double v : {x.base.s, x.base.phi, x.c, tau, t, eta}) {
        row += ',';
        row += format_double(v, precision);
    }
    row += '\n';
    return row;
}

std::string averaged_csv(const averaging::AveragedSolution& sol, int precision) {
    std::string out = "tbar,cbar,t\n";
    for (std::size_t i = 0; i < sol.tbar.size(); ++i) {
        out += format_double(sol.tbar[i], precision);
        out += ',';
        out += format_double(sol.cbar[i], precision);
        out += ',';
        out += format_double(sol.t[i], precision);
        out += '\n';
    }
    return out;
}

json averaged_metadata(const averaging::AveragedSolution& sol, const dissipation::RestitutionModel& model,
                       const std::string& table_hash) {
    return {{"model", model_to_json(model)},
            {"table_hash", table_hash},
            {"method", sol.method},
            {"step", sol.step},
            {"quadrature_order", sol.quadrature_order},
            {"mean_free_path", sol.mean_free_path},
            {"nodes", sol.tbar.size()},
            {"tbar_end", sol.tbar.back()},
            {"status", sol.status == averaging::SolveStatus::completed ? "completed" : "speed_floor"}};
}

std::string paths_csv(const std::vector<ensemble::SlowPath>& paths, int precision) {
    std::string out = "traj,n,tbar,c,t\n";
    for (std::size_t k = 0; k < paths.size(); ++k) {
        const auto& p = paths[k];
        for (std::size_t n = 0; n < p.c.size(); ++n) {
            out += std::to_string(k);
            out += ',';
            out += std::to_string(n);
            out += ',';
            out += format_double(p.tbar_at(n), precision);
            out += ',';
            out += format_double(p.c[n], precision);
            out += ',';
            out += format_double(p.t[n], precision);
            out += '\n';
        }
    }
    return out;
}

std::string paths_file_name(double epsilon) {
    // Shortest representation that round-trips, e.g. 0.001 -> "0.001".
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, epsilon);
    return "paths_eps" + std::string(buf, r.ptr) + ".csv";
}

}  // namespace haffsim::io
