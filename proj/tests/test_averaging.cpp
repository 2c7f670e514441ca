#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "haffsim/averaging.hpp"
#include "haffsim/errors.hpp"
#include "haffsim/quadrature.hpp"
#include "oracles.hpp"

using namespace haffsim;
using namespace haffsim::averaging;
using dissipation::Profile;
using dissipation::RestitutionModel;
constexpr double kPi = std::numbers::pi;

TEST_CASE("Gauss-Legendre rules") {
    const auto& g = gauss_legendre(64);
    CHECK(g.order() == 64);
    double wsum = 0.0;
    for (double w : g.weights()) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    // Exact for polynomials up to degree 2n - 1.
    const auto& g5 = gauss_legendre(5);
    CHECK(g5.integrate([](double x) { return std::pow(x, 9) + x * x; }, -1, 1) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(g.integrate([](double x) { return std::cos(x); }, 0, kPi / 2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(GaussLegendre(1), QuadratureError);
    CHECK_THROWS_AS(drift_h(1.0, RestitutionModel::constant(0.1), 1), QuadratureError);
}

TEST_CASE("drift closed forms") {
    SUBCASE("constant restitution: h(c) = -2c/3") {
        const auto m = RestitutionModel::constant(1e-3);
        for (double c : {0.1, 1.0, 10.0}) CHECK(std::abs(drift_h(c, m) + 2.0 * c / 3.0) < 1e-12 * std::max(1.0, c));
    }
    SUBCASE("linear profile: h(c) = -3 pi c^2 / 16") {
        const auto m = RestitutionModel::power_law(1e-3, 1.0, Profile::linear);
        CHECK(drift_h(1.0, m) == doctest::Approx(-3.0 * kPi / 16.0).epsilon(1e-13));
        CHECK(drift_h(2.0, m) == doctest::Approx(-3.0 * kPi / 4.0).epsilon(1e-13));
    }
    SUBCASE("quadratic profile: h(c) = -8 c^3 / 15") {
        const auto m = RestitutionModel::power_law(1e-3, 2.0, Profile::linear);
        CHECK(drift_h(1.0, m) == doctest::Approx(-8.0 / 15.0).epsilon(1e-13));
    }
    SUBCASE("zero profile") {
        const auto m = RestitutionModel::power_law(1e-3, 1.0, Profile::zero);
        CHECK(drift_h(1.7, m) == 0.0);
        CHECK(gbar(1.7, m) == 0.0);
    }
    SUBCASE("h does not depend on epsilon") {
        const auto m = RestitutionModel::power_law(1e-3, 1.5, Profile::saturating);
        CHECK(drift_h(0.8, m) == drift_h(0.8, m.with_epsilon(0.2)));
    }
}

TEST_CASE("speed increment g") {
    const auto m = RestitutionModel::constant(0.1);
    Rng rng(6);
    for (int i = 0; i < 1000; ++i) {
        const double phi = rng.uniform(-1.5, 1.5), c = rng.uniform(0.1, 5);
        const auto p = dynamics::apply_P(phi, c, m);
        CHECK(g_increment(phi, c, m) == doctest::Approx(p.c - c).epsilon(1e-12).scale(1e-14));
    }
}

TEST_CASE("gbar / epsilon converges to h at first order") {
    const std::vector<double> grid{0.25, 0.5, 1.0, 2.0};
    const std::vector<double> eps{1e-2, 1e-3};
    for (auto fam : {RestitutionModel::constant(1.0), RestitutionModel::power_law(1.0, 1.0, Profile::linear),
                     RestitutionModel::power_law(1.0, 1.0, Profile::saturating)}) {
        const auto r = consistency_h_vs_gbar(fam, grid, eps);
        const double ratio = r.max_error[0] / r.max_error[1];
        CHECK(ratio >= 8.0);
        CHECK(ratio <= 12.0);
        CHECK(r.fitted_order == doctest::Approx(1.0).epsilon(0.05));
    }
}

TEST_CASE("Richardson extrapolation of gbar / epsilon recovers h") {
    for (auto fam : {RestitutionModel::constant(1.0), RestitutionModel::power_law(1.0, 1.0, Profile::linear),
                     RestitutionModel::power_law(1.0, 1.5, Profile::saturating)}) {
        for (double c : {0.5, 1.0, 2.0}) {
            auto e = [&](double eps) { return gbar(c, fam.with_epsilon(eps)) / eps; };
            // Two elimination steps remove the O(eps) and O(eps^2) terms.
            const double eps = 1e-3;
            const double r1 = 2 * e(eps / 2) - e(eps), r2 = 2 * e(eps / 4) - e(eps / 2);
            const double rich = (4 * r2 - r1) / 3;
            CHECK(std::abs(rich - drift_h(c, fam)) < 1e-8);
        }
    }
    SUBCASE("zero profile: no error at any epsilon") {
        const std::vector<double> grid{0.5, 1.0, 2.0}, eps{1e-2, 1e-3};
        const auto r = consistency_h_vs_gbar(RestitutionModel::power_law(1.0, 1.0, Profile::zero), grid, eps);
        CHECK(r.max_error[0] == 0.0);
        CHECK(r.max_error[1] == 0.0);
    }
}

TEST_CASE("gbar agrees with a Monte Carlo average over the invariant measure") {
    const auto m = RestitutionModel::constant(0.05);
    Rng rng(13);
    const int n = 400000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += g_increment(std::asin(2 * rng.uniform() - 1), 1.0, m);
    CHECK(sum / n == doctest::Approx(gbar(1.0, m)).epsilon(5e-3));
}

TEST_CASE("averaged solution: constant restitution closed form") {
    const auto m = RestitutionModel::constant(1e-3);
    const double mfp = oracle::flagship().mean_free_path();
    const auto sol = solve_averaged(1.0, m, mfp, 1.0, 1.0 / 4096);
    for (double tb : {0.0, 0.123, 0.5, 0.77, 1.0}) {
        const double c = std::exp(-2.0 * tb / 3.0);
        const double t = mfp * 1.5 * (std::exp(2.0 * tb / 3.0) - 1.0);
        CHECK(sol.c_at(tb) == doctest::Approx(c).epsilon(1e-12));
        CHECK(sol.t_at(tb) == doctest::Approx(t).epsilon(1e-12).scale(1e-12));
    }
    CHECK(sol.tbar_end() == 1.0);
    CHECK(sol.method == "rk4-fixed");
    SUBCASE("Haff line: 1/c is linear in t along the averaged solution") {
        const auto line = haff_line(1.0, m, oracle::flagship());
        CHECK(line.slope == doctest::Approx(4.34907).epsilon(5e-5));
        CHECK(line.slope == doctest::Approx(2.0 / 3.0 / mfp).epsilon(1e-15));
        for (std::size_t k = 0; k < sol.tbar.size(); k += 97)
            CHECK(1.0 / sol.cbar[k] == doctest::Approx(line.intercept + line.slope * sol.t[k]).epsilon(1e-11));
    }
}

TEST_CASE("RK4 observed order") {
    const auto m = RestitutionModel::power_law(1e-3, 1.0, Profile::saturating);
    const auto ref = solve_averaged(1.0, m, 0.15, 2.0, 2.0 / 4096);
    const auto coarse = solve_averaged(1.0, m, 0.15, 2.0, 0.25);
    const auto fine = solve_averaged(1.0, m, 0.15, 2.0, 0.125);
    const double e1 = std::abs(coarse.cbar.back() - ref.cbar.back());
    const double e2 = std::abs(fine.cbar.back() - ref.cbar.back());
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.1));
    SUBCASE("Richardson extrapolation improves on the fine solution") {
        const double rich = fine.cbar.back() + (fine.cbar.back() - coarse.cbar.back()) / 15.0;
        CHECK(std::abs(rich - ref.cbar.back()) < 0.1 * e2);
    }
}

TEST_CASE("solver errors") {
    const auto m = RestitutionModel::constant(1e-3);
    CHECK_THROWS_AS(solve_averaged(1.0, m, 0.15, 1.0, 0.0), StepSizeError);
    CHECK_THROWS_AS(solve_averaged(1.0, m, 0.15, 1.0, -0.1), StepSizeError);
    CHECK_THROWS_AS(solve_averaged(1.0, m, 0.15, 1.0, 2.0), StepSizeError);
    CHECK_THROWS_AS(solve_averaged(1.0, m, 0.15, 30.0, 0.01), SpeedFloorError);
    SolveOptions o;
    o.halt_at_floor = true;
    const auto s = solve_averaged(1.0, m, 0.15, 30.0, 0.01, o);
    CHECK(s.status == SolveStatus::speed_floor);
    CHECK(s.cbar.back() >= 1e-6);
    CHECK_THROWS_AS(haff_line(1.0, RestitutionModel::power_law(1e-3, 1.0, Profile::linear), oracle::flagship()),
                    ModelKindError);
}

TEST_CASE("zero profile leaves the averaged speed constant") {
    const auto m = RestitutionModel::power_law(1e-3, 1.0, Profile::zero);
    const auto s = solve_averaged(1.3, m, 0.2, 1.0, 0.01);
    for (double c : s.cbar) CHECK(c == 1.3);
    CHECK(s.t.back() == doctest::Approx(0.2 / 1.3));
}
