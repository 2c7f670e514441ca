#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "haffsim/averaging.hpp"
#include "haffsim/dynamics.hpp"
#include "haffsim/ensemble.hpp"
#include "haffsim/geometry.hpp"
#include "haffsim/restitution.hpp"

// File formats: table / model / experiment JSON, trajectory and solution CSV.
namespace haffsim::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kDefaultPrecision = 17;

/// Reads and parses a JSON file. Missing file -> ConfigError, bad JSON -> ParseError.
json read_json_file(const fs::path& path);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const fs::path& path, const std::string& content);

/// printf("%.*g") with the given significant digits.
std::string format_double(double x, int precision = kDefaultPrecision);

/// 64-bit FNV-1a of the canonical (sorted-key, compact) JSON dump, as 16 hex digits.
std::string content_hash(const json& j);

struct TableSpec {
    std::vector<geometry::Scatterer> scatterers;
    int horizon_scan_bound = geometry::kDefaultHorizonScanBound;
};

TableSpec parse_table(const json& j);
json table_to_json(const TableSpec& spec);
geometry::TableGeometry build_table(const TableSpec& spec, bool certify = true);

/// Loaded table plus its JSON for hashing.
struct LoadedTable {
    TableSpec spec;
    json source;
    geometry::TableGeometry geometry;
};
LoadedTable load_table(const fs::path& path, bool certify = true);

dissipation::RestitutionModel parse_model(const json& j);
json model_to_json(const dissipation::RestitutionModel& model);

json table_info_json(const geometry::TableGeometry& table);

struct ExperimentConfig {
    fs::path table_path;
    json model_json;
    double c0 = 1.0;
    double tbar_end = 1.0;
    int trajectories = 0;
    std::uint64_t master_seed = 0;
    int workers = 1;
    ensemble::InitialDistribution initial;
    fs::path outputs = "out";
    std::vector<double> eps_sweep;  ///< empty -> the model's own epsilon
    std::optional<std::pair<double, double>> haff_window;  ///< default [0, T_bar]
    double ode_step = 0.0;  ///< 0 -> T_bar / 4096
    int quadrature_order = averaging::kDefaultQuadratureOrder;
    std::size_t elastic_collisions = 1000;
    json source;  ///< the config as read, embedded in reports
};

/// Paths inside the config are resolved relative to `base_dir`.
ExperimentConfig parse_experiment(const json& j, const fs::path& base_dir);
ExperimentConfig load_experiment(const fs::path& path);

/// CSV header line for trajectory dumps.
inline constexpr const char* kTrajectoryHeader = "n,s,phi,c,tau,t,eta";

std::string trajectory_row(std::size_t n, const dynamics::ExtPhasePoint& x, double tau, double t, double eta,
                           int precision = kDefaultPrecision);

std::string averaged_csv(const averaging::AveragedSolution& sol, int precision = kDefaultPrecision);
json averaged_metadata(const averaging::AveragedSolution& sol, const dissipation::RestitutionModel& model,
                       const std::string& table_hash);

/// Long-format slow paths: traj,n,tbar,c,t.
std::string paths_csv(const std::vector<ensemble::SlowPath>& paths, int precision = kDefaultPrecision);

/// File name paths_eps<eps>.csv with eps in shortest round-trip form.
std::string paths_file_name(double epsilon);

}  // namespace haffsim::io
