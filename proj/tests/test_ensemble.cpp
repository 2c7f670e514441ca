#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "haffsim/ensemble.hpp"
#include "haffsim/errors.hpp"
#include "oracles.hpp"

using namespace haffsim;
using namespace haffsim::ensemble;
using dissipation::Profile;
using dissipation::RestitutionModel;
constexpr double kPi = std::numbers::pi;

TEST_CASE("seed derivation") {
    CHECK(split_seed(42, 0) != split_seed(42, 1));
    CHECK(split_seed(42, 7) == split_seed(42, 7));
    CHECK(split_seed(42, 0) != split_seed(43, 0));
    // splitmix64 reference value for input 0.
    CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("sampling from the invariant measure") {
    CHECK(phi_from_uniform(0.5) == 0.0);
    const auto t = oracle::flagship();
    InitialDistribution d;
    SUBCASE("phi passes a Kolmogorov-Smirnov test against cos(phi)/2") {
        Rng rng(99);
        std::vector<double> phis(1000000);
        for (double& p : phis) p = sample_initial(t, d, rng).base.phi;
        std::sort(phis.begin(), phis.end());
        double ks = 0.0;
        const double n = static_cast<double>(phis.size());
        for (std::size_t i = 0; i < phis.size(); ++i) {
            const double cdf = 0.5 * (1.0 + std::sin(phis[i]));
            ks = std::max({ks, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
        }
        CHECK(ks < 0.002);
        CHECK(std::abs(phis.front()) < kPi / 2);
        CHECK(std::abs(phis.back()) < kPi / 2);
    }
    SUBCASE("s is uniform on the boundary") {
        Rng rng(5);
        int first = 0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) first += t.scatterer_at(sample_initial(t, d, rng).base.s) == 0;
        CHECK(first / double(n) == doctest::Approx(0.4 / 0.7).epsilon(0.01));
    }
    SUBCASE("fixed seed gives a bitwise identical sequence") {
        for (std::uint64_t seed : {0ULL, 1ULL, 123456789ULL}) {
            const auto a = sample_initial(t, d, seed), b = sample_initial(t, d, seed);
            CHECK(a.base.s == b.base.s);
            CHECK(a.base.phi == b.base.phi);
            CHECK(a.c == b.c);
        }
    }
}

TEST_CASE("boundary-curve initial data") {
    const auto t = oracle::flagship();
    InitialDistribution d;
    d.kind = InitialKind::boundary_curve;
    d.c0 = 2.0;
    d.curve = {1, 0.1, 0.2, -0.2, 0.1};  // slope 3
    validate(t, d);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto x = sample_initial(t, d, rng);
        const auto bp = t.boundary_point(x.base.s);
        CHECK(bp.scatterer_index == 1);
        CHECK(x.base.phi == doctest::Approx(-0.2 + 3.0 * (bp.s_local - 0.1)).epsilon(1e-9));
        CHECK(x.c == 2.0);
    }
    SUBCASE("non-unstable slopes are rejected") {
        d.curve.phi_end = -0.19;  // slope 0.1 < K_min
        CHECK_THROWS_AS(validate(t, d), CurveSpecError);
        d.curve.phi_end = -0.2 + 0.1 * 200;  // slope beyond K_max + 1/tau_min
        CHECK_THROWS_AS(validate(t, d), CurveSpecError);
    }
    SUBCASE("bad ranges") {
        d.curve.scatterer = 5;
        CHECK_THROWS_AS(validate(t, d), CurveSpecError);
        d.curve = {0, 0.3, 0.1, 0.0, 0.5};
        CHECK_THROWS_AS(validate(t, d), CurveSpecError);
    }
    SUBCASE("non-positive speed") {
        d.c0 = 0.0;
        CHECK_THROWS_AS(validate(t, d), ConfigError);
    }
}

TEST_CASE("collision counts") {
    CHECK(collision_count(1.0, 1e-3) == 1000);
    CHECK(collision_count(1.0, 1e-2) == 100);
    CHECK(collision_count(1.0, 2.5e-3) == 400);
    CHECK(collision_count(1.0, 0.3) == 3);
    CHECK_THROWS_AS(collision_count(1.0, 0.0), ConfigError);
}

TEST_CASE("slow paths") {
    const auto t = oracle::flagship();
    const auto x0 = sample_initial(t, InitialDistribution{}, 77);
    SUBCASE("elastic path keeps c constant") {
        const auto p = run_slow_path(t, RestitutionModel::constant(0.0), x0, 1.0);
        CHECK(p.collisions() == 1000);
        for (double c : p.c) CHECK(c == 1.0);
        CHECK(p.tau_sum / p.collisions() == doctest::Approx(t.mean_free_path()).epsilon(0.2));
    }
    SUBCASE("constant restitution: bracket, monotonicity, time increments") {
        const double eps = 1e-2;
        const auto p = run_slow_path(t, RestitutionModel::constant(eps), x0, 1.0);
        REQUIRE(p.status == PathStatus::completed);
        CHECK(p.c.size() == 101);
        CHECK(p.t.front() == 0.0);
        for (std::size_t n = 0; n + 1 < p.c.size(); ++n) {
            CHECK(p.c[n + 1] <= p.c[n]);
            CHECK(p.c[n + 1] >= (1 - eps) * p.c[n]);
            CHECK(p.t[n + 1] > p.t[n]);
        }
        // Interpolation hits the nodes and is linear between them.
        CHECK(p.c_at(0.5) == p.c[50]);
        CHECK(p.c_at(0.505) == doctest::Approx(0.5 * (p.c[50] + p.c[51])));
        CHECK(p.c_at(2.0) == p.c.back());
    }
    SUBCASE("time increments equal epsilon tau / c") {
        const auto m = RestitutionModel::constant(1e-3);
        auto x = x0;
        dynamics::TimeAccumulator acc;
        std::vector<double> ts{0.0};
        for (int n = 0; n < 50; ++n) {
            const auto st = dynamics::step_map(t, x, m);
            acc.add(1e-3 * st.tau / x.c);
            ts.push_back(acc.value());
            x = st.next;
        }
        const auto p = run_slow_path(t, m, x0, 0.05);
        REQUIRE(p.t.size() == ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) CHECK(p.t[i] == ts[i]);
    }
}

TEST_CASE("comparison with the averaged solution") {
    const auto t = oracle::flagship();
    SUBCASE("zero profile: c deviation vanishes") {
        const auto m = RestitutionModel::power_law(1e-2, 1.0, Profile::zero);
        const auto avg = averaging::solve_averaged(1.0, m, t.mean_free_path(), 1.0, 1.0 / 4096);
        const auto paths = run_level(t, m, InitialDistribution{}, 1.0, 8, 3, 1);
        const auto rep = compare_to_averaged(paths, avg);
        CHECK(rep.c_dev.max < 1e-12);
        CHECK(rep.discarded_grazing == 0);
        CHECK(rep.trajectories == 8);
    }
    SUBCASE("horizon mismatch") {
        const auto m = RestitutionModel::constant(1e-2);
        const auto avg = averaging::solve_averaged(1.0, m, t.mean_free_path(), 0.5, 1.0 / 4096);
        const auto paths = run_level(t, m, InitialDistribution{}, 1.0, 2, 3, 1);
        CHECK_THROWS_AS(compare_to_averaged(paths, avg), GridMismatchError);
    }
    SUBCASE("mean sup deviation decreases as epsilon is halved") {
        const auto base = RestitutionModel::constant(1e-2);
        const auto avg = averaging::solve_averaged(1.0, base, t.mean_free_path(), 1.0, 1.0 / 4096);
        ConvergenceReport rep;
        for (double eps : {1e-2, 5e-3, 2.5e-3}) {
            const auto paths = run_level(t, base.with_epsilon(eps), InitialDistribution{}, 1.0, 100, 11, 1);
            auto l = compare_to_averaged(paths, avg);
            CHECK(l.c_dev.mean >= 0.0);
            CHECK(l.c_dev.median <= l.c_dev.max);
            rep.levels.push_back(l);
        }
        summarize(rep);
        CHECK(rep.c_dev_strictly_decreasing);
        CHECK(rep.measured_exponent > 0.3);
    }
    SUBCASE("endpoint average matches the averaged solution") {
        const auto m = RestitutionModel::constant(1e-3);
        const auto avg = averaging::solve_averaged(1.0, m, t.mean_free_path(), 1.0, 1.0 / 4096);
        const auto paths = run_level(t, m, InitialDistribution{}, 1.0, 200, 2024, 1);
        double sum = 0.0;
        for (const auto& p : paths) sum += p.c.back();
        CHECK(sum / paths.size() == doctest::Approx(avg.cbar.back()).epsilon(0.02));
    }
}

TEST_CASE("Haff fit") {
    const auto t = oracle::flagship();
    SUBCASE("epsilon = 1e-2: slope within 5%") {
        const auto m = RestitutionModel::constant(1e-2);
        const auto paths = run_level(t, m, InitialDistribution{}, 1.0, 200, 5, 1);
        const auto fit = haff_fit(paths, 0.0, 1.0);
        const double theory = averaging::haff_line(1.0, m, t).slope;
        CHECK(fit.slope == doctest::Approx(theory).epsilon(0.05));
        CHECK(fit.r_squared > 0.99);
        CHECK(fit.points == 101);
    }
    SUBCASE("zero profile is degenerate") {
        const auto m = RestitutionModel::power_law(1e-2, 1.0, Profile::zero);
        const auto paths = run_level(t, m, InitialDistribution{}, 1.0, 4, 5, 1);
        const auto fit = haff_fit(paths, 0.0, 1.0);
        CHECK(fit.degenerate);
        CHECK(std::isnan(fit.r_squared));
        CHECK(fit.slope == 0.0);
    }
    SUBCASE("too few nodes") {
        const auto paths = run_level(t, RestitutionModel::constant(0.25), InitialDistribution{}, 0.25, 2, 5, 1);
        CHECK_THROWS_AS(haff_fit(paths, 0.0, 1.0), InsufficientDataError);
        CHECK_THROWS_AS(haff_fit({}, 0.0, 1.0), InsufficientDataError);
    }
}

TEST_CASE("parallel runs are independent of the worker count") {
    const auto t = oracle::flagship();
    const auto m = RestitutionModel::constant(1e-2);
    const auto a = run_level(t, m, InitialDistribution{}, 1.0, 37, 9, 1);
    const auto b = run_level(t, m, InitialDistribution{}, 1.0, 37, 9, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].c == b[i].c);
        CHECK(a[i].t == b[i].t);
    }
    CHECK_THROWS_AS(run_level(t, m, InitialDistribution{}, 1.0, 0, 9, 1), ConfigError);
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
    try {
        parallel_for(100, 4, [](std::size_t i) {
            if (i == 30 || i == 70) throw std::runtime_error(std::to_string(i));
        });
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()) == "30");
    }
}
