#pragma once

// Independent reference computations used by the tests: they avoid the code
// paths they check (ray marching instead of closed-form intersection, finite
// differences instead of analytic derivatives, sampling instead of formulas).

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "haffsim/dynamics.hpp"
#include "haffsim/geometry.hpp"
#include "haffsim/rng.hpp"

namespace oracle {

using namespace haffsim;

inline geometry::TableGeometry flagship() {
    return geometry::build_table({{{0.0, 0.0}, 0.4}, {{0.5, 0.5}, 0.3}});
}

/// Boundary point relative to the (0, 0) translate of its scatterer, as cast_ray expects.
inline Vec2 unwrapped(const geometry::TableGeometry& t, const geometry::BoundaryPoint& bp) {
    const auto& sc = t.scatterers()[bp.scatterer_index];
    return sc.center + bp.normal * sc.radius;
}

/// Signed distance from p to the nearest disk translate (negative inside).
inline double torus_sdf(const std::vector<geometry::Scatterer>& sc, Vec2 p) {
    double best = 1e300;
    for (const auto& s : sc) {
        double dx = p.x - s.center.x, dy = p.y - s.center.y;
        dx -= std::round(dx);
        dy -= std::round(dy);
        best = std::min(best, std::hypot(dx, dy) - s.radius);
    }
    return best;
}

/// Sphere tracing along origin + t dir; returns the first t with sdf == 0.
inline std::optional<double> ray_march(const std::vector<geometry::Scatterer>& sc, Vec2 origin, Vec2 dir,
                                       double max_len) {
    double t = 1e-9;
    // Leave the starting disk: the ray starts on a boundary pointing outward.
    while (t < max_len) {
        const double d = torus_sdf(sc, origin + dir * t);
        if (d < 1e-13) {
            if (t > 1e-7) return t;
            t += 1e-7;
            continue;
        }
        t += d;
    }
    return std::nullopt;
}

/// Fraction of the unit square outside every disk, by stratified sampling.
inline double monte_carlo_area(const std::vector<geometry::Scatterer>& sc, int per_side) {
    long inside = 0;
    Rng rng(7);
    for (int i = 0; i < per_side; ++i)
        for (int j = 0; j < per_side; ++j) {
            const Vec2 p{(i + rng.uniform()) / per_side, (j + rng.uniform()) / per_side};
            if (torus_sdf(sc, p) > 0.0) ++inside;
        }
    return static_cast<double>(inside) / (static_cast<double>(per_side) * per_side);
}

/// Brute-force minimum distance between distinct disk translates.
inline double brute_tau_min(const std::vector<geometry::Scatterer>& sc) {
    double best = 1e300;
    for (std::size_t i = 0; i < sc.size(); ++i)
        for (std::size_t j = 0; j < sc.size(); ++j)
            for (int a = -3; a <= 3; ++a)
                for (int b = -3; b <= 3; ++b) {
                    if (i == j && a == 0 && b == 0) continue;
                    const double d = std::hypot(sc[j].center.x + a - sc[i].center.x, sc[j].center.y + b - sc[i].center.y);
                    best = std::min(best, d - sc[i].radius - sc[j].radius);
                }
    return best;
}

/// Random phase point with local arc length away from the arc anchor and
/// |phi| bounded away from grazing.
inline dynamics::PhasePoint random_point(const geometry::TableGeometry& t, Rng& rng, double max_abs_phi = 1.45) {
    for (;;) {
        const double s = rng.uniform() * t.perimeter();
        const auto bp = t.boundary_point(s);
        const double circ = t.circumference(bp.scatterer_index);
        if (bp.s_local < 1e-3 || bp.s_local > circ - 1e-3) continue;
        return {s, rng.uniform(-max_abs_phi, max_abs_phi)};
    }
}

struct FdJacobian {
    bool valid = false;
    Mat3 jac;
};

/// Five-point central differences of F-hat in (s, phi, c). Invalid when a
/// stencil point crosses a singularity (different scatterer pair, near-grazing
/// incidence, or an arc-length wrap of the starting point).
inline FdJacobian fd_jacobian_fhat(const geometry::TableGeometry& table, const dynamics::ExtPhasePoint& x,
                                   const dissipation::RestitutionModel& model, double h = 1e-6) {
    FdJacobian out;
    const auto base_flight = dynamics::free_flight(table, x.base);
    if (std::cos(x.base.phi) < 1e-2 || std::cos(base_flight.phi_pre) < 1e-2) return out;
    const double circ1 = table.circumference(base_flight.to_scatterer);
    const auto base_step = dynamics::step_map(table, x, model);
    const std::size_t from = base_flight.from_scatterer;

    const double offsets[4] = {2, 1, -1, -2};
    const double weights[4] = {-1, 8, -8, 1};
    for (int k = 0; k < 3; ++k) {
        double col[3] = {0, 0, 0};
        for (int m = 0; m < 4; ++m) {
            dynamics::ExtPhasePoint y = x;
            const double d = offsets[m] * h;
            if (k == 0) y.base.s += d;
            if (k == 1) y.base.phi += d;
            if (k == 2) y.c += d;
            if (table.scatterer_at(y.base.s) != from) return out;
            dynamics::CollisionStep st;
            try {
                const auto f = dynamics::free_flight(table, y.base);
                if (f.to_scatterer != base_flight.to_scatterer || std::abs(f.tau - base_flight.tau) > 1e-3) return out;
                st = dynamics::step_map(table, y, model);
            } catch (const std::exception&) {
                return out;
            }
            double ds = st.next.base.s - base_step.next.base.s;
            if (ds > 0.5 * circ1) ds -= circ1;
            if (ds < -0.5 * circ1) ds += circ1;
            col[0] += weights[m] * ds;
            col[1] += weights[m] * (st.next.base.phi - base_step.next.base.phi);
            col[2] += weights[m] * (st.next.c - base_step.next.c);
        }
        for (int i = 0; i < 3; ++i) out.jac(i, k) = col[i] / (12.0 * h);
    }
    out.valid = true;
    return out;
}

template <std::size_t N>
double rel_error(const Mat<N>& a, const Mat<N>& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            num += (a(i, j) - ref(i, j)) * (a(i, j) - ref(i, j));
            den += ref(i, j) * ref(i, j);
        }
    return std::sqrt(num / den);
}

inline Mat2 upper_left(const Mat3& m) {
    Mat2 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r(i, j) = m(i, j);
    return r;
}

}  // namespace oracle
