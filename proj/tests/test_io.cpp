#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "haffsim/errors.hpp"
#include "haffsim/experiment.hpp"
#include "haffsim/io.hpp"
#include "haffsim/rng.hpp"

using namespace haffsim;
using namespace haffsim::io;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "haffsim_test_io";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("table parsing") {
    const json j = json::parse(R"({"scatterers":[{"center":[0,0],"radius":0.4},{"center":[0.5,0.5],"radius":0.3}]})");
    const auto spec = parse_table(j);
    CHECK(spec.scatterers.size() == 2);
    CHECK(spec.horizon_scan_bound == 100);
    CHECK(build_table(spec).mean_free_path() == doctest::Approx(0.153287).epsilon(1e-6));

    auto message = [](const char* text) {
        try {
            parse_table(json::parse(text));
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message(R"({"disks":[]})").find("scatterers") != std::string::npos);
    CHECK(message(R"({"scatterers":[{"center":[0,0]}]})").find("radius") != std::string::npos);
    CHECK(message(R"({"scatterers":[{"center":[0],"radius":0.1}]})").find("center") != std::string::npos);
    CHECK(message(R"({"scatterers":[{"center":[0,0],"radius":"big"}]})").find("radius") != std::string::npos);
    CHECK(message(R"({"scatterers":[],"horizon_scan_bound":1.5})").find("horizon_scan_bound") != std::string::npos);
}

TEST_CASE("malformed and missing files") {
    const auto p = scratch("bad.json");
    write_file_atomic(p, "{\"scatterers\": [");
    CHECK_THROWS_AS(read_json_file(p), ParseError);
    CHECK_THROWS_AS(read_json_file(scratch("does_not_exist.json")), ConfigError);
    CHECK(ParseError("x").exit_code() == 2);
}

TEST_CASE("model parsing round trip") {
    for (const char* text : {R"({"kind":"constant","epsilon":0.001})",
                             R"({"kind":"power_law","epsilon":0.01,"p":1.5,"q_profile":"saturating"})",
                             R"({"kind":"tabulated","epsilon":0.1,"q_profile":[[0,0],[1,0.5],[2,1]]})"}) {
        const auto m = parse_model(json::parse(text));
        const auto again = parse_model(model_to_json(m));
        CHECK(model_to_json(again) == model_to_json(m));
        CHECK(again.q(0.7) == m.q(0.7));
    }
    CHECK_THROWS_AS(parse_model(json::parse(R"({"kind":"quadratic","epsilon":0.1})")), ParseError);
    CHECK_THROWS_AS(parse_model(json::parse(R"({"kind":"power_law","epsilon":0.1,"q_profile":"linear"})")),
                    ParseError);
    CHECK_THROWS_AS(parse_model(json::parse(R"({"kind":"constant"})")), ParseError);
}

TEST_CASE("formatting and hashing") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(2.0 / 3.0, 3) == "0.667");
    CHECK(format_double(1e-300, 3) == "1e-300");
    Rng rng(4);
    for (int i = 0; i < 1000; ++i) {
        const double x = std::exp(rng.uniform(-50.0, 50.0));
        CHECK(std::stod(format_double(x)) == x);
    }
    const json a = json::parse(R"({"b":1,"a":[1,2]})"), b = json::parse(R"({"a":[1,2],  "b":1})");
    CHECK(content_hash(a) == content_hash(b));
    CHECK(content_hash(a).size() == 16);
    CHECK(paths_file_name(1e-3) == "paths_eps0.001.csv");
    CHECK(paths_file_name(2.5e-3) == "paths_eps0.0025.csv");
}

TEST_CASE("atomic writes leave no temp files") {
    const auto p = scratch("atomic.txt");
    write_file_atomic(p, "one\n");
    write_file_atomic(p, "two\n");
    CHECK(slurp(p) == "two\n");
    auto tmp = p;
    tmp += ".tmp";
    CHECK_FALSE(fs::exists(tmp));
}

TEST_CASE("experiment config") {
    const auto dir = scratch("exp");
    fs::create_directories(dir);
    write_file_atomic(dir / "table.json",
                      R"({"scatterers":[{"center":[0,0],"radius":0.4},{"center":[0.5,0.5],"radius":0.3}]})");
    json cfg = json::parse(R"({"table":"table.json","model":{"kind":"constant","epsilon":0.01},"c0":1,
        "T_bar":0.2,"trajectories":6,"master_seed":5,"workers":2,"initial":{"kind":"invariant_measure"},
        "outputs":"out"})");
    SUBCASE("paths resolve against the config directory") {
        const auto c = parse_experiment(cfg, dir);
        CHECK(c.table_path == dir / "table.json");
        CHECK(c.outputs == dir / "out");
        CHECK(c.trajectories == 6);
    }
    SUBCASE("zero trajectories") {
        cfg["trajectories"] = 0;
        CHECK_THROWS_AS(parse_experiment(cfg, dir), ConfigError);
    }
    SUBCASE("missing table") {
        cfg["table"] = "nope.json";
        const auto c = parse_experiment(cfg, dir);
        CHECK_THROWS_AS(experiment::run_experiment(c), ConfigError);
    }
    SUBCASE("boundary curve") {
        cfg["initial"] = json::parse(R"({"kind":"boundary_curve","scatterer":0,"s":[0.1,0.2],"phi":[0.0,0.3]})");
        const auto c = parse_experiment(cfg, dir);
        CHECK(c.initial.kind == ensemble::InitialKind::boundary_curve);
        CHECK(c.initial.curve.slope() == doctest::Approx(3.0));
    }
    SUBCASE("artifacts are identical for different worker counts") {
        cfg["eps_sweep"] = {0.02, 0.01};
        auto c = parse_experiment(cfg, dir);
        c.outputs = dir / "w1";
        experiment::RunSettings s1;
        s1.workers = 1;
        const auto r1 = experiment::run_experiment(c, s1);
        c.outputs = dir / "w3";
        s1.workers = 3;
        const auto r3 = experiment::run_experiment(c, s1);
        REQUIRE(r1.written.size() == 4);
        REQUIRE(r3.written.size() == 4);
        for (std::size_t i = 0; i < r1.written.size(); ++i) {
            CHECK(r1.written[i].filename() == r3.written[i].filename());
            CHECK(slurp(r1.written[i]) == slurp(r3.written[i]));
        }
        CHECK(slurp(dir / "w1" / "paths_eps0.01.csv").rfind("traj,n,tbar,c,t\n", 0) == 0);
    }
}
