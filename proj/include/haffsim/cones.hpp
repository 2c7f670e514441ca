#pragma once

#include <cstdint>

#include "haffsim/dynamics.hpp"
#include "haffsim/geometry.hpp"
#include "haffsim/restitution.hpp"

// Unstable-cone diagnostics for the inelastic map: the smallness condition on
// the restitution bounds, cone parameters taken at equality, and numerical
// checks of cone invariance and uniform expansion.
namespace haffsim::dissipation {

using dynamics::ExtPhasePoint;
using geometry::TableGeometry;

struct ConditionCReport {
    bool holds = false;
    // first inequality: eta_max + eta1_max < (1 - eta_max) tau_min K_min
    double lhs1 = 0.0, rhs1 = 0.0;
    // second inequality (lhs2 is +inf when its denominator is not positive)
    double lhs2 = 0.0, rhs2 = 0.0;

    double margin1() const { return rhs1 - lhs1; }
    double margin2() const { return rhs2 - lhs2; }
};

struct ConeParams {
    double kappa = 0.0;
    double v_min = 0.0;
    double v_max = 0.0;
    double lambda = 0.0;  ///< minimal adapted-norm expansion rate
};

struct TangentVector3 {
    double ds = 0.0;
    double dphi = 0.0;
    double dc = 0.0;
};

struct ConeStepReport {
    bool image_in_cone = false;
    double expansion_factor = 0.0;  ///< |v'|_* / |v|_*
    double image_slope = 0.0;       ///< dphi'/ds'
    double image_tilt = 0.0;        ///< |dc' / (c' cos phi' ds')|
};

ConditionCReport check_condition_C(const TableGeometry& table, const RestitutionModel& model);

/// Cone parameters with the three parameter bounds taken as equalities.
/// Throws ConditionCError if (C) fails and InfeasibleError if v_min <= 0 or
/// lambda <= 1 + tau_min K_min.
ConeParams cone_params(const TableGeometry& table, const RestitutionModel& model);

/// Same arithmetic without the feasibility checks (diagnostic sweeps).
ConeParams cone_params_unchecked(const TableGeometry& table, const RestitutionModel& model);

/// v_min <= dphi/ds <= v_max and |dc / (c cos phi ds)| <= kappa; ds == 0 is outside.
bool in_cone(const ConeParams& params, const TangentVector3& v, const ExtPhasePoint& base);

/// |v|_* = cos(phi) |ds|.
double adapted_norm(const TangentVector3& v, const ExtPhasePoint& base);

/// Maps v by DF-hat(x) and reports cone membership of the image at F-hat(x)
/// together with the adapted-norm expansion.
ConeStepReport verify_cone_step(const TableGeometry& table, const RestitutionModel& model,
                                const ConeParams& params, const ExtPhasePoint& x, const TangentVector3& v);

struct ConeSweepReport {
    int samples = 0;
    int in_cone = 0;
    int grazing_skipped = 0;
    double min_expansion = 0.0;
    double min_image_slope = 0.0;
    double max_image_slope = 0.0;
    double max_image_tilt = 0.0;

    double pass_rate() const { return samples == 0 ? 0.0 : double(in_cone) / samples; }
};

/// verify_cone_step on `samples` random (x, v) pairs: x drawn from the invariant
/// measure with speed in [0.5, 2], v uniform in the cone.
ConeSweepReport sweep_cone(const TableGeometry& table, const RestitutionModel& model, const ConeParams& params,
                           int samples, std::uint64_t seed);

inline constexpr int kDefaultStripK0 = 5;

/// Homogeneity-strip index: 0 for |phi| <= pi/2 - 1/k0^2, otherwise the signed k >= k0
/// with pi/2 - 1/k^2 < |phi| <= pi/2 - 1/(k+1)^2.
int strip_index(double phi, int k0 = kDefaultStripK0);

}  // namespace haffsim::dissipation
