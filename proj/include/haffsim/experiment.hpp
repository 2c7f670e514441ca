#pragma once

#include <optional>
#include <vector>

#include "haffsim/ensemble.hpp"
#include "haffsim/io.hpp"

// The full ensemble experiment: every epsilon level, comparison with the
// averaged solution, Haff fits, and the written artifacts.
namespace haffsim::experiment {

using io::json;

/// Grazing-discard fraction above which a level is flagged.
inline constexpr double kGrazingFlagFraction = 1e-4;

struct LevelFit {
    double epsilon = 0.0;
    std::optional<ensemble::HaffFit> fit;  ///< empty when there is no data to fit
    std::string note;
};

struct ExperimentResult {
    ensemble::ConvergenceReport convergence;
    std::vector<LevelFit> fits;
    std::optional<double> theory_slope;  ///< only for constant restitution
    double ode_dense_output_error = 0.0;
    json report;
    json haff;
    std::vector<io::fs::path> written;
};

struct RunSettings {
    int workers = 0;     ///< 0 -> take the config value
    bool write = true;   ///< write artifacts under config.outputs
};

/// Deterministic in (config, master seed); worker count does not affect any artifact.
ExperimentResult run_experiment(const io::ExperimentConfig& config, const RunSettings& settings = {});

}  // namespace haffsim::experiment
