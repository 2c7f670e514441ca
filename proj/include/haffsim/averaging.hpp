#pragma once

#include <span>
#include <string>
#include <vector>

#include "haffsim/geometry.hpp"
#include "haffsim/restitution.hpp"

// The one-step speed loss g, its invariant-measure average, the limiting
// drift h(c) and the averaged initial value problems.
namespace haffsim::averaging {

using dissipation::RestitutionModel;

inline constexpr int kDefaultQuadratureOrder = 64;
inline constexpr int kDefaultStepsPerUnit = 4096;  // default RK4 step is tbar_end / 4096
inline constexpr double kDefaultSpeedFloor = 1e-6;  // relative to c0

/// c_{n+1} - c_n for incidence angle phi_pre and speed c, in the cancellation-free form.
double g_increment(double phi_pre, double c, const RestitutionModel& model);

/// Average of g over the invariant measure cos(phi) dphi ds / (2 |dQ|).
/// Throws QuadratureError if order < 2.
double gbar(double c, const RestitutionModel& model, int order = kDefaultQuadratureOrder);

/// h(c) = -c * int_0^{pi/2} q(c cos phi) cos^3 phi dphi.
double drift_h(double c, const RestitutionModel& model, int order = kDefaultQuadratureOrder);

/// h bound to a model and quadrature order.
class DriftFunction {
public:
    explicit DriftFunction(RestitutionModel model, int order = kDefaultQuadratureOrder)
        : model_(std::move(model)), order_(order) {}
    double operator()(double c) const { return drift_h(c, model_, order_); }
    int order() const noexcept { return order_; }
    const RestitutionModel& model() const noexcept { return model_; }

private:
    RestitutionModel model_;
    int order_;
};

struct ConsistencyReport {
    std::vector<double> epsilons;
    std::vector<double> max_error;  ///< max over the c-grid of |gbar/eps - h|
    double fitted_order = 0.0;      ///< slope of log(error) against log(eps)
};

ConsistencyReport consistency_h_vs_gbar(const RestitutionModel& family, std::span<const double> c_grid,
                                        std::span<const double> eps_list, int order = kDefaultQuadratureOrder);

enum class SolveStatus { completed, speed_floor };

/// Fixed-step RK4 solution of dc/dtbar = h(c), dt/dtbar = mfp / c with cubic
/// Hermite dense output.
struct AveragedSolution {
    std::vector<double> tbar, cbar, t;
    std::vector<double> dcbar, dt;  ///< right-hand sides at the nodes
    double step = 0.0;
    double mean_free_path = 0.0;
    int quadrature_order = kDefaultQuadratureOrder;
    std::string method = "rk4-fixed";
    SolveStatus status = SolveStatus::completed;

    double tbar_end() const { return tbar.back(); }
    double c_at(double tb) const;
    double t_at(double tb) const;
};

struct SolveOptions {
    double speed_floor = kDefaultSpeedFloor;
    int quadrature_order = kDefaultQuadratureOrder;
    /// Return the truncated solution with status speed_floor instead of throwing.
    bool halt_at_floor = false;
};

/// Throws StepSizeError for a non-positive or oversized step and SpeedFloorError
/// if c drops below speed_floor * c0 (unless halt_at_floor).
AveragedSolution solve_averaged(double c0, const RestitutionModel& model, double mean_free_path, double tbar_end,
                                double step, const SolveOptions& options = {});

struct HaffLine {
    double slope = 0.0;
    double intercept = 0.0;
};

/// 1/c(t) = 1/c0 + (2/3) (|dQ| / (pi |Q|)) t. Throws ModelKindError unless the model is constant.
HaffLine haff_line(double c0, const RestitutionModel& model, const geometry::TableGeometry& table);

}  // namespace haffsim::averaging
