#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "haffsim/averaging.hpp"
#include "haffsim/dynamics.hpp"
#include "haffsim/geometry.hpp"
#include "haffsim/restitution.hpp"
#include "haffsim/rng.hpp"

// Monte Carlo ensembles of the microscopic dynamics, their interpolated slow
// paths, and comparison against the averaged solution.
namespace haffsim::ensemble {

using dissipation::RestitutionModel;
using dynamics::ExtPhasePoint;
using geometry::TableGeometry;

enum class InitialKind { invariant_measure, boundary_curve };

/// A curve phi(s) on one scatterer, linear in local arc length.
struct BoundaryCurve {
    std::size_t scatterer = 0;
    double s_start = 0.0;  ///< local arc length
    double s_end = 0.0;
    double phi_start = 0.0;
    double phi_end = 0.0;

    double slope() const { return (phi_end - phi_start) / (s_end - s_start); }
};

struct InitialDistribution {
    InitialKind kind = InitialKind::invariant_measure;
    double c0 = 1.0;
    BoundaryCurve curve;
};

std::string to_string(InitialKind kind);

/// Throws CurveSpecError for a bad curve (range, angle, or slope outside
/// [K_min, K_max + 1/tau_min]) and ConfigError for c0 <= 0.
void validate(const TableGeometry& table, const InitialDistribution& dist);

/// Inverse CDF of the density cos(phi)/2 on (-pi/2, pi/2).
double phi_from_uniform(double u);

ExtPhasePoint sample_initial(const TableGeometry& table, const InitialDistribution& dist, Rng& rng);
ExtPhasePoint sample_initial(const TableGeometry& table, const InitialDistribution& dist, std::uint64_t seed);

/// floor(tbar_end / epsilon), robust to representation error in the ratio.
std::size_t collision_count(double tbar_end, double epsilon);

enum class PathStatus { completed, grazing_discard };

/// Collision-indexed path: node n sits at tbar = n * spacing.
struct SlowPath {
    double epsilon = 0.0;
    double tbar_end = 0.0;
    double spacing = 0.0;  ///< epsilon, or tbar_end / collisions for elastic runs
    std::vector<double> c;  ///< c_n, n = 0..N
    std::vector<double> t;  ///< physical time t_n
    PathStatus status = PathStatus::completed;
    std::string reason;
    double tau_sum = 0.0;
    double tau_sq_sum = 0.0;
    double tau_max_seen = 0.0;
    double tau_min_seen = 0.0;

    std::size_t collisions() const { return c.empty() ? 0 : c.size() - 1; }
    double tbar_at(std::size_t n) const { return static_cast<double>(n) * spacing; }
    /// Piecewise-linear interpolation; clamped to the last node.
    double c_at(double tb) const;
    double t_at(double tb) const;
};

struct RunOptions {
    /// Collision count used when epsilon == 0 (no collision-time scaling exists).
    std::size_t elastic_collisions = 1000;
};

/// Iterates F-hat floor(tbar_end/epsilon) times recording (c_n, t_n). Grazing
/// collisions end the path with status grazing_discard; HorizonViolation propagates.
SlowPath run_slow_path(const TableGeometry& table, const RestitutionModel& model, const ExtPhasePoint& x0,
                       double tbar_end, const RunOptions& options = {});

struct DeviationStats {
    double mean = 0.0;
    double median = 0.0;
    double max = 0.0;
};

struct LevelReport {
    double epsilon = 0.0;
    int trajectories = 0;
    int discarded_grazing = 0;
    DeviationStats c_dev;
    DeviationStats t_dev;
    double t_phys_total = 0.0;  ///< t(tbar_end) of the averaged solution
    double mean_tau = 0.0;       ///< ensemble mean free path over all collisions
    double mean_tau_stderr = 0.0;
    double wall_seconds = 0.0;   ///< not part of deterministic artifacts
};

struct ConvergenceReport {
    std::vector<LevelReport> levels;
    bool c_dev_strictly_decreasing = false;
    double measured_exponent = 0.0;  ///< slope of log mean c-deviation vs log epsilon (information only)
};

/// Sup deviations over the union of path and solution nodes. Throws
/// GridMismatchError if the horizons differ.
LevelReport compare_to_averaged(std::span<const SlowPath> paths, const averaging::AveragedSolution& averaged);

void summarize(ConvergenceReport& report);

struct HaffFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
    bool degenerate = false;  ///< 1/c constant; r^2 undefined
};

/// OLS of the ensemble-mean 1/c_n against the ensemble-mean t_n over node
/// indices with tbar in [window_lo, window_hi]. Throws InsufficientDataError.
HaffFit haff_fit(std::span<const SlowPath> paths, double window_lo, double window_hi);

/// Runs fn(i) for i in [0, count) on `workers` threads. The exception of the
/// lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

/// All trajectories of one epsilon level, in trajectory-index order.
std::vector<SlowPath> run_level(const TableGeometry& table, const RestitutionModel& model,
                                const InitialDistribution& dist, double tbar_end, int trajectories,
                                std::uint64_t master_seed, int workers, const RunOptions& options = {});

}  // namespace haffsim::ensemble
