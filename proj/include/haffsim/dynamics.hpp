#pragma once

#include <cstddef>

#include "haffsim/geometry.hpp"
#include "haffsim/linalg.hpp"
#include "haffsim/restitution.hpp"

// Elastic billiard map F, the inelastic extended map F-hat = P-hat o F-hat_0,
// their derivatives, and physical-time bookkeeping.
//
// Coordinates: s is global arc length (counterclockwise on each circle, starting
// at the point of largest x); phi is the angle of the outgoing velocity from the
// inward normal, positive toward increasing s. With this orientation elastic
// reflection is the identity in (s, phi).
namespace haffsim::dynamics {

using geometry::TableGeometry;
using dissipation::RestitutionModel;

struct PhasePoint {
    double s = 0.0;
    double phi = 0.0;
};

struct ExtPhasePoint {
    PhasePoint base;
    double c = 1.0;
};

/// Collisions with cos(phi_pre) below this are rejected as grazing.
inline constexpr double kGrazingTolerance = 1e-9;

struct Flight {
    double s1 = 0.0;       ///< arc length of the hit point
    double phi_pre = 0.0;  ///< incidence angle at the hit point
    double tau = 0.0;      ///< free-path length
    std::size_t from_scatterer = 0;
    std::size_t to_scatterer = 0;
};

struct CollisionStep {
    ExtPhasePoint next;
    double tau = 0.0;
    double phi_pre = 0.0;
    double eta_used = 0.0;
};

/// Result of the collision rule (phi_pre, c0) -> (phi1, c1).
struct Perturbed {
    double phi = 0.0;
    double c = 0.0;
    double eta = 0.0;
    double eta1 = 0.0;
};

/// Throws RangeError for s outside the boundary or |phi| >= pi/2.
void validate(const TableGeometry& table, const PhasePoint& x);

/// Straight flight from x to the next scatterer. Throws GrazingError at
/// near-tangent incidence and HorizonViolation if no hit lies within the
/// certified tau_max.
Flight free_flight(const TableGeometry& table, const PhasePoint& x);

/// Elastic reflection; the identity in these coordinates.
constexpr double reflect_elastic(double phi_pre) noexcept { return phi_pre; }

/// The elastic billiard map F.
PhasePoint billiard_map(const TableGeometry& table, const PhasePoint& x);

/// Time reversal (s, phi) -> (s, -phi).
constexpr PhasePoint reversed(const PhasePoint& x) noexcept { return {x.s, -x.phi}; }

/// The collision rule P: normal velocity scaled by 1 - eta(c0 cos phi_pre),
/// tangential velocity kept.
Perturbed apply_P(double phi_pre, double c0, const RestitutionModel& model);

/// One application of F-hat.
CollisionStep step_map(const TableGeometry& table, const ExtPhasePoint& x, const RestitutionModel& model);

/// DF at x in (s, phi) coordinates.
Mat2 jacobian_F(const TableGeometry& table, const PhasePoint& x);
/// DF from already-computed flight data.
Mat2 jacobian_F(double tau, double cos_phi0, double cos_phi_pre, double k0, double k1);

/// d(phi1, c1)/d(phi_pre, c0).
Mat2 jacobian_P(double phi_pre, double c0, const RestitutionModel& model);

/// The two closed forms of d phi1/d phi_pre; they agree wherever both are defined.
double dphi1_dphipre_rational(double phi_pre, double eta, double eta1);
double dphi1_dphipre_sine_product(double phi_pre, double eta, double eta1);

/// DF-hat at x-hat in (s, phi, c) coordinates.
Mat3 jacobian_Fhat(const TableGeometry& table, const ExtPhasePoint& x, const RestitutionModel& model);

/// t_{n+1} = t_n + epsilon * tau / c_n.
double advance_time(double t, double tau, double c, double epsilon);

/// Kahan-compensated running sum of collision times.
class TimeAccumulator {
public:
    void add(double increment) noexcept {
        const double y = increment - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const noexcept { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace haffsim::dynamics
