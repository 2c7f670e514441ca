#include <doctest.h>

#include <cmath>
#include <numbers>

#include "haffsim/cones.hpp"
#include "haffsim/errors.hpp"
#include "oracles.hpp"

using namespace haffsim;
using namespace haffsim::dissipation;

TEST_CASE("condition (C) on the flagship table") {
    const auto t = oracle::flagship();
    SUBCASE("small epsilon holds") {
        const auto r = check_condition_C(t, RestitutionModel::constant(1e-3));
        CHECK(r.holds);
        CHECK(r.margin1() > 0.0);
        CHECK(r.margin2() > 0.0);
        // eta + eta1 < (1 - eta) tau K_min
        CHECK(r.lhs1 == doctest::Approx(1e-3));
        CHECK(r.rhs1 == doctest::Approx(0.999 * (std::sqrt(0.5) - 0.7) * 2.5));
    }
    SUBCASE("epsilon = 0.9 fails on the first inequality") {
        const auto r = check_condition_C(t, RestitutionModel::constant(0.9));
        CHECK_FALSE(r.holds);
        CHECK(r.margin1() < 0.0);
        CHECK_THROWS_AS(cone_params(t, RestitutionModel::constant(0.9)), ConditionCError);
    }
    SUBCASE("velocity-dependent model with eta1 > 0") {
        const auto r = check_condition_C(t, RestitutionModel::power_law(1e-3, 1.0, Profile::saturating));
        CHECK(r.holds);
        CHECK(r.lhs2 > 0.0);
    }
    SUBCASE("unbounded profile cannot satisfy (C)") {
        CHECK_FALSE(check_condition_C(t, RestitutionModel::power_law(1e-3, 1.0, Profile::linear)).holds);
    }
}

TEST_CASE("cone parameters") {
    const auto t = oracle::flagship();
    const double tau = t.tau_min(), kmin = t.curvature_min(), kmax = t.curvature_max();
    SUBCASE("elastic limit") {
        const auto p = cone_params(t, RestitutionModel::constant(0.0));
        CHECK(p.kappa == 0.0);
        CHECK(p.v_min == doctest::Approx(kmin));
        CHECK(p.v_max == doctest::Approx(kmax + 1 / tau));
        CHECK(p.lambda == doctest::Approx(1 + 2 * tau * kmin));
    }
    SUBCASE("flagship epsilon = 1e-3") {
        const auto p = cone_params(t, RestitutionModel::constant(1e-3));
        CHECK(p.v_min == doctest::Approx(0.999 * 2.5));
        CHECK(p.kappa > 0.0);
        CHECK(p.lambda > 1 + tau * kmin);
        CHECK(p.lambda == doctest::Approx(0.999 * (1 + tau * (kmin + 0.999 * kmin))));
    }
    SUBCASE("convergence to the elastic values is first order") {
        const auto p0 = cone_params(t, RestitutionModel::constant(0.0));
        double prev = 0.0;
        for (double eps : {1e-3, 1e-4, 1e-5}) {
            const auto p = cone_params(t, RestitutionModel::constant(eps));
            const double d = std::abs(p.kappa - p0.kappa) + std::abs(p.v_min - p0.v_min) +
                             std::abs(p.v_max - p0.v_max) + std::abs(p.lambda - p0.lambda);
            if (prev > 0.0) CHECK(prev / d == doctest::Approx(10.0).epsilon(0.05));
            prev = d;
        }
    }
}

TEST_CASE("cone membership") {
    const ConeParams p{1.0, 2.0, 5.0, 1.1};
    const dynamics::ExtPhasePoint x{{0.1, 0.0}, 1.0};
    CHECK(in_cone(p, {1.0, 3.0, 0.5}, x));
    CHECK(in_cone(p, {-1.0, -3.0, 0.5}, x));
    CHECK_FALSE(in_cone(p, {1.0, 1.0, 0.0}, x));
    CHECK_FALSE(in_cone(p, {1.0, 3.0, 2.0}, x));
    CHECK_FALSE(in_cone(p, {0.0, 1.0, 0.0}, x));
    CHECK(adapted_norm({2.0, 1.0, 0.0}, {{0.1, std::numbers::pi / 3}, 1.0}) == doctest::Approx(1.0));
}

TEST_CASE("cone sweeps: invariance and expansion") {
    const auto t = oracle::flagship();
    for (auto m : {RestitutionModel::constant(0.0), RestitutionModel::constant(1e-3),
                   RestitutionModel::power_law(1e-3, 1.0, Profile::saturating),
                   RestitutionModel::power_law(1e-3, 2.0, Profile::exponential)}) {
        const auto p = cone_params(t, m);
        const auto r = sweep_cone(t, m, p, 10000, 17);
        CHECK(r.samples + r.grazing_skipped == 10000);
        CHECK(r.in_cone == r.samples);
        CHECK(r.min_expansion >= p.lambda);
        CHECK(r.min_image_slope >= p.v_min);
        CHECK(r.max_image_slope <= p.v_max);
        CHECK(r.max_image_tilt <= p.kappa);
    }
}

TEST_CASE("homogeneity strips") {
    const double half = std::numbers::pi / 2;
    CHECK(strip_index(0.0) == 0);
    CHECK(strip_index(half - 1.0 / 25.0 - 1e-9) == 0);
    CHECK(strip_index(half - 1.0 / 25.0 + 1e-9) == 5);
    CHECK(strip_index(-(half - 1.0 / 25.0 + 1e-9)) == -5);
    CHECK(strip_index(half - 1.0 / 36.0 - 1e-9) == 5);
    CHECK(strip_index(half - 1.0 / 36.0 + 1e-9) == 6);
    CHECK(strip_index(half - 1.5e-6) == 816);
    CHECK(strip_index(half - 0.3, 2) == 0);
    CHECK(strip_index(half - 0.2, 2) == 2);
    for (double g = 1.3e-8; g < 0.04; g *= 1.1) {
        const int k = strip_index(half - g);
        CHECK(g < 1.0 / (double(k) * k));
        CHECK(g >= 1.0 / (double(k + 1) * (k + 1)));
    }
}
