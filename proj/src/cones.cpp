#include "haffsim/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "haffsim/errors.hpp"
#include "haffsim/rng.hpp"

namespace haffsim::dissipation {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Shorthand {
    double eta, eta1, tau, kmin, kmax;
    // (2 - eta)/(1 - eta) eta + eta1
    double a() const { return (2.0 - eta) / (1.0 - eta) * eta + eta1; }
    // tau K_min - (eta + eta1)/(1 - eta)
    double b() const { return tau * kmin - (eta + eta1) / (1.0 - eta); }
};

Shorthand shorthand(const TableGeometry& table, const RestitutionModel& model) {
    const EtaBounds& bd = model.bounds();
    return {bd.eta_max, bd.eta1_max, table.tau_min(), table.curvature_min(), table.curvature_max()};
}

}  // namespace

ConditionCReport check_condition_C(const TableGeometry& table, const RestitutionModel& model) {
    const Shorthand h = shorthand(table, model);
    ConditionCReport r;
    r.lhs1 = h.eta + h.eta1;
    r.rhs1 = (1.0 - h.eta) * h.tau * h.kmin;
    r.rhs2 = (1.0 - h.eta - h.eta1) * h.tau * h.kmin / (1.0 + h.tau * h.kmax);
    if (!std::isfinite(r.lhs1) || h.eta >= 1.0) {
        r.lhs2 = kInf;
        r.holds = false;
        return r;
    }
    const double denom = h.b();
    if (denom > 0.0)
        r.lhs2 = h.eta1 / std::pow(1.0 - h.eta, 2.5) * h.a() / denom;
    else
        r.lhs2 = h.eta1 == 0.0 ? 0.0 : kInf;
    r.holds = r.lhs1 < r.rhs1 && r.lhs2 < r.rhs2;
    return r;
}

ConeParams cone_params_unchecked(const TableGeometry& table, const RestitutionModel& model) {
    const Shorthand h = shorthand(table, model);
    ConeParams p;
    const double kv = h.kmax + 1.0 / h.tau;
    p.kappa = h.a() == 0.0 ? 0.0 : (1.0 + h.tau * h.kmin) / std::sqrt(1.0 - h.eta) * h.a() / h.b() * kv;
    const double tilt = h.eta1 / ((1.0 - h.eta) * (1.0 - h.eta)) * p.kappa / (1.0 + h.tau * h.kmin);
    p.v_min = (1.0 - h.eta - h.eta1) * h.kmin - tilt;
    p.v_max = (1.0 / (1.0 - h.eta) + h.eta1) * kv + tilt;
    p.lambda = (1.0 - h.eta) * (1.0 + h.tau * (h.kmin + p.v_min));
    return p;
}

ConeParams cone_params(const TableGeometry& table, const RestitutionModel& model) {
    const ConditionCReport c = check_condition_C(table, model);
    if (!c.holds) {
        std::ostringstream os;
        os << "condition (C) fails: margins " << c.margin1() << ", " << c.margin2();
        throw ConditionCError(os.str());
    }
    const ConeParams p = cone_params_unchecked(table, model);
    if (!(p.v_min > 0.0)) {
        std::ostringstream os;
        os << "cone parameters infeasible: v_min = " << p.v_min;
        throw InfeasibleError(os.str());
    }
    const double floor = 1.0 + table.tau_min() * table.curvature_min();
    if (!(p.lambda > floor)) {
        std::ostringstream os;
        os << "cone parameters infeasible: lambda = " << p.lambda << " <= 1 + tau_min K_min = " << floor;
        throw InfeasibleError(os.str());
    }
    return p;
}

bool in_cone(const ConeParams& params, const TangentVector3& v, const ExtPhasePoint& base) {
    if (v.ds == 0.0) return false;
    const double slope = v.dphi / v.ds;
    if (!(slope >= params.v_min && slope <= params.v_max)) return false;
    const double tilt = std::abs(v.dc / (base.c * std::cos(base.base.phi) * v.ds));
    return tilt <= params.kappa;
}

double adapted_norm(const TangentVector3& v, const ExtPhasePoint& base) {
    return std::cos(base.base.phi) * std::abs(v.ds);
}

ConeStepReport verify_cone_step(const TableGeometry& table, const RestitutionModel& model,
                                const ConeParams& params, const ExtPhasePoint& x, const TangentVector3& v) {
    const Mat3 d = dynamics::jacobian_Fhat(table, x, model);
    const auto img = d * std::array<double, 3>{v.ds, v.dphi, v.dc};
    const TangentVector3 w{img[0], img[1], img[2]};
    const ExtPhasePoint next = dynamics::step_map(table, x, model).next;
    ConeStepReport r;
    r.image_in_cone = in_cone(params, w, next);
    r.expansion_factor = adapted_norm(w, next) / adapted_norm(v, x);
    r.image_slope = w.dphi / w.ds;
    r.image_tilt = std::abs(w.dc / (next.c * std::cos(next.base.phi) * w.ds));
    return r;
}

ConeSweepReport sweep_cone(const TableGeometry& table, const RestitutionModel& model, const ConeParams& params,
                           int samples, std::uint64_t seed) {
    Rng rng(seed);
    ConeSweepReport rep;
    rep.min_expansion = kInf;
    rep.min_image_slope = kInf;
    rep.max_image_slope = -kInf;
    for (int k = 0; k < samples; ++k) {
        ExtPhasePoint x;
        x.base.s = rng.uniform() * table.perimeter();
        x.base.phi = std::asin(2.0 * rng.uniform() - 1.0);
        x.c = rng.uniform(0.5, 2.0);
        const double ds = rng.uniform(0.1, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        const double slope = rng.uniform(params.v_min, params.v_max);
        const double tilt = params.kappa * (2.0 * rng.uniform() - 1.0);
        const TangentVector3 v{ds, slope * ds, tilt * x.c * std::cos(x.base.phi) * ds};
        if (std::abs(x.base.phi) >= 0.5 * std::numbers::pi) {
            ++rep.grazing_skipped;
            continue;
        }
        try {
            const ConeStepReport r = verify_cone_step(table, model, params, x, v);
            ++rep.samples;
            if (r.image_in_cone) ++rep.in_cone;
            rep.min_expansion = std::min(rep.min_expansion, r.expansion_factor);
            rep.min_image_slope = std::min(rep.min_image_slope, r.image_slope);
            rep.max_image_slope = std::max(rep.max_image_slope, r.image_slope);
            rep.max_image_tilt = std::max(rep.max_image_tilt, r.image_tilt);
        } catch (const GrazingError&) {
            ++rep.grazing_skipped;
        }
    }
    return rep;
}

int strip_index(double phi, int k0) {
    const double gap = 0.5 * std::numbers::pi - std::abs(phi);
    if (gap >= 1.0 / (double(k0) * k0)) return 0;
    long k = static_cast<long>(std::ceil(1.0 / std::sqrt(gap))) - 1;
    while (k > k0 && !(gap < 1.0 / (double(k) * k))) --k;
    while (!(gap >= 1.0 / (double(k + 1) * (k + 1)))) ++k;
    k = std::max<long>(k, k0);
    return static_cast<int>(phi < 0.0 ? -k : k);
}

}  // namespace haffsim::dissipation
