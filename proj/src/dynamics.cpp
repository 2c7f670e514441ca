#include "haffsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "haffsim/errors.hpp"

namespace haffsim::dynamics {

namespace {

// Search lengths for tables without a horizon certificate.
constexpr double kUncertifiedFirstSearch = 2.0;
constexpr double kUncertifiedMaxSearch = 64.0;

// sin(phi_pre) below which the rational form of d phi1/d phi_pre is used.
constexpr double kSineFormCutoff = 1e-6;

}  // namespace

void validate(const TableGeometry& table, const PhasePoint& x) {
    if (!(x.s >= 0.0 && x.s < table.perimeter())) {
        std::ostringstream os;
        os << "arc length " << x.s << " outside [0, " << table.perimeter() << ")";
        throw RangeError(os.str());
    }
    if (!(std::abs(x.phi) < 0.5 * std::numbers::pi)) {
        std::ostringstream os;
        os << "angle " << x.phi << " outside (-pi/2, pi/2)";
        throw RangeError(os.str());
    }
}

Flight free_flight(const TableGeometry& table, const PhasePoint& x) {
    validate(table, x);
    const geometry::BoundaryPoint bp = table.boundary_point(x.s);
    const auto& from = table.scatterers()[bp.scatterer_index];
    const Vec2 origin = from.center + bp.normal * from.radius;
    const Vec2 dir = bp.normal * std::cos(x.phi) + bp.normal.perp() * std::sin(x.phi);
    const geometry::DiskId self{bp.scatterer_index, 0, 0};

    std::optional<geometry::RayHit> hit;
    if (const auto tau_max = table.tau_max()) {
        hit = table.cast_ray(origin, dir, *tau_max, self);
        if (!hit) {
            std::ostringstream os;
            os << "no collision within certified tau_max = " << *tau_max << " from s = " << x.s
               << ", phi = " << x.phi;
            throw HorizonViolation(os.str());
        }
    } else {
        for (double len = kUncertifiedFirstSearch; !hit && len <= kUncertifiedMaxSearch; len *= 2.0)
            hit = table.cast_ray(origin, dir, len, self);
        if (!hit) throw HorizonViolation("no collision within the search range of an uncertified table");
    }

    const double cos_pre = -dir.dot(hit->normal);
    const double sin_pre = dir.dot(hit->normal.perp());
    if (!(cos_pre >= kGrazingTolerance)) {
        std::ostringstream os;
        os << "grazing collision (cos phi = " << cos_pre << ")";
        throw GrazingError(os.str());
    }
    Flight f;
    f.from_scatterer = bp.scatterer_index;
    f.to_scatterer = hit->disk.scatterer;
    f.tau = hit->t;
    f.phi_pre = std::atan2(sin_pre, cos_pre);
    f.s1 = table.s_global_from_angle(hit->disk.scatterer, std::atan2(hit->normal.y, hit->normal.x));
    return f;
}

PhasePoint billiard_map(const TableGeometry& table, const PhasePoint& x) {
    const Flight f = free_flight(table, x);
    return {f.s1, reflect_elastic(f.phi_pre)};
}

Perturbed apply_P(double phi_pre, double c0, const RestitutionModel& model) {
    const double cp = std::cos(phi_pre);
    const dissipation::EtaValues e = model.eval(c0 * cp);
    if (e.eta == 0.0) return {phi_pre, c0, 0.0, e.eta1};
    const double sp = std::sin(phi_pre);
    const double normal = (1.0 - e.eta) * cp;
    Perturbed r;
    r.phi = std::atan2(sp, normal);
    // The bracket (1 - eta) c0 <= c1 <= c0 is exact; near grazing the sum of
    // squares can round one ulp above 1.
    r.c = std::clamp(c0 * std::sqrt(normal * normal + sp * sp), (1.0 - e.eta) * c0, c0);
    r.eta = e.eta;
    r.eta1 = e.eta1;
    return r;
}

CollisionStep step_map(const TableGeometry& table, const ExtPhasePoint& x, const RestitutionModel& model) {
    const Flight f = free_flight(table, x.base);
    const Perturbed p = apply_P(f.phi_pre, x.c, model);
    CollisionStep step;
    step.next = {{f.s1, p.phi}, p.c};
    step.tau = f.tau;
    step.phi_pre = f.phi_pre;
    step.eta_used = p.eta;
    return step;
}

Mat2 jacobian_F(double tau, double cos_phi0, double cos_phi_pre, double k0, double k1) {
    const double pre = -1.0 / cos_phi_pre;
    Mat2 m;
    m(0, 0) = pre * (tau * k0 + cos_phi0);
    m(0, 1) = pre * tau;
    m(1, 0) = pre * (tau * k0 * k1 + k0 * cos_phi_pre + k1 * cos_phi0);
    m(1, 1) = pre * (tau * k1 + cos_phi_pre);
    return m;
}

Mat2 jacobian_F(const TableGeometry& table, const PhasePoint& x) {
    const Flight f = free_flight(table, x);
    return jacobian_F(f.tau, std::cos(x.phi), std::cos(f.phi_pre), table.curvature(f.from_scatterer),
                      table.curvature(f.to_scatterer));
}

double dphi1_dphipre_rational(double phi_pre, double eta, double eta1) {
    const double cp = std::cos(phi_pre), sp = std::sin(phi_pre);
    const double d = (1.0 - eta) * (1.0 - eta) * cp * cp + sp * sp;
    const double sin_phi1_sq = sp * sp / d;
    return (1.0 - eta) / d - sin_phi1_sq * eta1;
}

double dphi1_dphipre_sine_product(double phi_pre, double eta, double eta1) {
    const double cp = std::cos(phi_pre), sp = std::sin(phi_pre);
    const double phi1 = std::atan2(sp, (1.0 - eta) * cp);
    const double s1 = std::sin(phi1), c1 = std::cos(phi1);
    return s1 * c1 / (sp * cp) - s1 * s1 * eta1;
}

Mat2 jacobian_P(double phi_pre, double c0, const RestitutionModel& model) {
    const double cp = std::cos(phi_pre), sp = std::sin(phi_pre);
    const dissipation::EtaValues e = model.eval(c0 * cp);
    const double eta = e.eta, eta1 = e.eta1;
    const double d = (1.0 - eta) * (1.0 - eta) * cp * cp + sp * sp;
    const double phi1 = std::atan2(sp, (1.0 - eta) * cp);
    const double c1 = c0 * std::sqrt(d);
    const double cos_phi1 = std::cos(phi1);

    Mat2 m;
    m(0, 0) = std::abs(sp) < kSineFormCutoff ? dphi1_dphipre_rational(phi_pre, eta, eta1)
                                              : dphi1_dphipre_sine_product(phi_pre, eta, eta1);
    m(0, 1) = sp * cp * eta1 / (c0 * d);
    m(1, 0) = c0 * sp * cos_phi1 * ((2.0 - eta) * eta / (1.0 - eta) + eta1);
    m(1, 1) = c1 / c0 - cos_phi1 * cp * eta1;
    return m;
}

Mat3 jacobian_Fhat(const TableGeometry& table, const ExtPhasePoint& x, const RestitutionModel& model) {
    const Flight f = free_flight(table, x.base);
    const Mat2 df = jacobian_F(f.tau, std::cos(x.base.phi), std::cos(f.phi_pre), table.curvature(f.from_scatterer),
                               table.curvature(f.to_scatterer));
    const Mat2 dp = jacobian_P(f.phi_pre, x.c, model);

    Mat3 bordered;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) bordered(i, j) = df(i, j);
    bordered(2, 2) = 1.0;

    Mat3 pert;
    pert(0, 0) = 1.0;
    pert(1, 1) = dp(0, 0);
    pert(1, 2) = dp(0, 1);
    pert(2, 1) = dp(1, 0);
    pert(2, 2) = dp(1, 1);
    return pert * bordered;
}

double advance_time(double t, double tau, double c, double epsilon) {
    return t + epsilon * tau / c;
}

}  // namespace haffsim::dynamics
