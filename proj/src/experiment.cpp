#include "haffsim/experiment.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "haffsim/errors.hpp"

namespace haffsim::experiment {

namespace {

json stats_json(const ensemble::DeviationStats& s) {
    return {{"mean", s.mean}, {"median", s.median}, {"max", s.max}};
}

json nan_to_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

ExperimentResult run_experiment(const io::ExperimentConfig& config, const RunSettings& settings) {
    const io::LoadedTable table = io::load_table(config.table_path);
    const auto base_model = io::parse_model(config.model_json);
    const std::string table_hash = io::content_hash(table.source);
    const int workers = settings.workers > 0 ? settings.workers : config.workers;
    const double mfp = table.geometry.mean_free_path();

    std::vector<double> epsilons = config.eps_sweep;
    if (epsilons.empty()) epsilons.push_back(base_model.epsilon());
    for (double e : epsilons)
        if (!(e >= 0.0)) throw ConfigError("epsilon levels must be nonnegative");

    // The averaged equation does not depend on epsilon: solve it once.
    const double step = config.ode_step > 0.0 ? config.ode_step : config.tbar_end / averaging::kDefaultStepsPerUnit;
    averaging::SolveOptions sopts;
    sopts.quadrature_order = config.quadrature_order;
    const auto averaged = averaging::solve_averaged(config.c0, base_model, mfp, config.tbar_end, step, sopts);
    // Dense-output error estimate: coarse interpolant against a half-step solution at the midpoints.
    const auto fine = averaging::solve_averaged(config.c0, base_model, mfp, config.tbar_end, 0.5 * step, sopts);
    ExperimentResult result;
    for (std::size_t k = 0; k + 1 < averaged.tbar.size(); ++k) {
        const double mid = 0.5 * (averaged.tbar[k] + averaged.tbar[k + 1]);
        result.ode_dense_output_error =
            std::max(result.ode_dense_output_error, std::abs(averaged.c_at(mid) - fine.c_at(mid)));
    }

    ensemble::InitialDistribution dist = config.initial;
    dist.c0 = config.c0;
    ensemble::RunOptions ropts;
    ropts.elastic_collisions = config.elastic_collisions;

    const bool constant = base_model.kind() == dissipation::ModelKind::constant;
    if (constant) result.theory_slope = averaging::haff_line(config.c0, base_model, table.geometry).slope;
    const double win_lo = config.haff_window ? config.haff_window->first : 0.0;
    const double win_hi = config.haff_window ? config.haff_window->second : config.tbar_end;

    std::vector<std::pair<std::string, std::string>> files;  // name, content
    json levels = json::array();
    json fits = json::array();
    for (double eps : epsilons) {
        const auto model = base_model.with_epsilon(eps);
        const auto t0 = std::chrono::steady_clock::now();
        const auto paths = ensemble::run_level(table.geometry, model, dist, config.tbar_end, config.trajectories,
                                               config.master_seed, workers, ropts);
        auto level = ensemble::compare_to_averaged(paths, averaged);
        level.epsilon = eps;
        level.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.convergence.levels.push_back(level);
        files.emplace_back(io::paths_file_name(eps), io::paths_csv(paths));

        const double discard_fraction = static_cast<double>(level.discarded_grazing) / level.trajectories;
        levels.push_back({{"epsilon", eps},
                          {"trajectories", level.trajectories},
                          {"collisions_per_trajectory",
                           eps > 0.0 ? ensemble::collision_count(config.tbar_end, eps) : config.elastic_collisions},
                          {"discarded_grazing", level.discarded_grazing},
                          {"grazing_flagged", discard_fraction >= kGrazingFlagFraction},
                          {"c_sup_deviation", stats_json(level.c_dev)},
                          {"t_sup_deviation", stats_json(level.t_dev)},
                          {"t_phys_total", level.t_phys_total},
                          {"t_sup_deviation_relative", level.t_dev.mean / level.t_phys_total},
                          {"mean_tau", level.mean_tau},
                          {"mean_tau_stderr", level.mean_tau_stderr}});

        LevelFit lf;
        lf.epsilon = eps;
        json fj = {{"epsilon", eps}};
        try {
            lf.fit = ensemble::haff_fit(paths, win_lo, win_hi);
            fj["slope"] = lf.fit->slope;
            fj["intercept"] = lf.fit->intercept;
            fj["r_squared"] = nan_to_null(lf.fit->r_squared);
            fj["points"] = lf.fit->points;
            fj["degenerate"] = lf.fit->degenerate;
            if (result.theory_slope) {
                fj["theory_slope"] = *result.theory_slope;
                fj["relative_slope_error"] = std::abs(lf.fit->slope - *result.theory_slope) / *result.theory_slope;
            }
        } catch (const InsufficientDataError& e) {
            lf.note = e.what();
            fj["degenerate"] = true;
            fj["note"] = lf.note;
        }
        result.fits.push_back(lf);
        fits.push_back(fj);
    }
    ensemble::summarize(result.convergence);
    const bool multi = result.convergence.levels.size() >= 2;

    json config_json = config.source;
    config_json.erase("workers");  // execution detail, not part of the experiment

    result.report = {
        {"table_hash", table_hash},
        {"table", table.source},
        {"config", config_json},
        {"model", io::model_to_json(base_model)},
        {"initial_distribution", ensemble::to_string(dist.kind)},
        {"c0", config.c0},
        {"T_bar", config.tbar_end},
        {"trajectories", config.trajectories},
        {"master_seed", config.master_seed},
        {"mean_free_path", mfp},
        {"averaged_solution", io::averaged_metadata(averaged, base_model, table_hash)},
        {"ode_dense_output_error", result.ode_dense_output_error},
        {"levels", levels},
        {"c_deviation_strictly_decreasing", multi ? json(result.convergence.c_dev_strictly_decreasing) : json()},
        {"measured_exponent", multi ? json(result.convergence.measured_exponent) : json()},
        {"haff", fits},
    };
    if (result.theory_slope) result.report["theory_slope"] = *result.theory_slope;
    result.haff = {{"table_hash", table_hash},
                   {"window", {win_lo, win_hi}},
                   {"theory_slope", result.theory_slope ? json(*result.theory_slope) : json(nullptr)},
                   {"theory_intercept", 1.0 / config.c0},
                   {"fits", fits}};

    if (settings.write) {
        files.emplace_back("report.json", result.report.dump(2) + "\n");
        files.emplace_back("haff_fit.json", result.haff.dump(2) + "\n");
        try {
            for (const auto& [name, content] : files) {
                const auto path = config.outputs / name;
                io::write_file_atomic(path, content);
                result.written.push_back(path);
            }
        } catch (...) {
            std::error_code ec;
            for (const auto& p : result.written) io::fs::remove(p, ec);
            result.written.clear();
            throw;
        }
    }
    return result;
}

}  // namespace haffsim::experiment
