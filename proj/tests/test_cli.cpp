#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "rsflow/cli.hpp"

using namespace rsflow;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("rsflow_test_cli_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("configuration defaults and overrides") {
    const auto cfg = parse_config(Json::parse(R"({"initial": {"kind": "round_sphere"}, "flow": {"cfl": 0.2}})"),
                                  Command::flow);
    CHECK(cfg.initial.kind == InitialMetricSpec::Kind::round_sphere);
    CHECK(cfg.initial.n == 401);
    CHECK(cfg.flow.cfl == 0.2);
    CHECK(cfg.flow.dt_max == FlowParams{}.dt_max);

    const auto empty = parse_config(Json::object(), Command::singular);
    CHECK(empty.initial.kind == InitialMetricSpec::Kind::dumbbell);
    CHECK(empty.initial.n == 801);
    CHECK_FALSE(empty.surgery.rho_surg);
}

TEST_CASE("resolved configuration expands every default") {
    const auto cfg = parse_config(Json::object(), Command::decompose);
    const auto j = resolved_config(cfg);
    for (const char* key : {"command", "initial", "flow", "surgery", "symmetry", "sweep", "soliton", "out", "plots"})
        CHECK(j.contains(key));
    CHECK(j["flow"]["cfl"] == 0.25);
    CHECK(j["surgery"]["rho_surg"].is_null());
    CHECK(j["initial"]["family"].is_string());
    // resolving twice is stable
    CHECK(resolved_config(parse_config(j, Command::decompose)) == j);
}

TEST_CASE("configuration errors name the field") {
    auto message = [](const char* text, Command c = Command::flow) {
        try {
            parse_config(Json::parse(text), c);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message(R"({"flow": {"cfl": "fast"}})").find("flow.cfl") != std::string::npos);
    CHECK(message(R"({"flow": {"cfl": 2.0}})").find("flow") != std::string::npos);
    CHECK(message(R"({"surgery": {"margin": 2}})").find("surgery.margin") != std::string::npos);
    CHECK(message(R"({"initial": {"kind": "torus"}})").find("initial.kind") != std::string::npos);
    CHECK(message(R"({"sweep": {"samples": -3}})").find("sweep.samples") != std::string::npos);
    CHECK(message(R"({"command": "laws"})", Command::flow).find("command") != std::string::npos);
    CHECK(message(R"([1, 2])").find("configuration") != std::string::npos);
}

TEST_CASE("load_config reports syntax errors with a line number") {
    const auto dir = scratch("load");
    std::filesystem::create_directories(dir);
    write_text(dir / "bad.json", "{\n  \"flow\": {\n    \"cfl\": 0.2,,\n  }\n}\n");
    try {
        load_config(dir / "bad.json", Command::flow);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bad.json:3:") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config(dir / "missing.json", Command::flow), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("flow command on the round sphere") {
    auto cfg = parse_config(Json::parse(R"({"initial": {"kind": "round_sphere", "n": 61},
                                            "flow": {"snapshot_stride": 400}})"),
                            Command::flow);
    cfg.out_dir = scratch("flow");
    cfg.emit_plots = true;
    std::ostringstream log;
    CHECK(run(cfg, log) == kExitOk);
    CHECK(log.str().find("extinction") != std::string::npos);
    const auto csv = read_text(cfg.out_dir / "diagnostics.csv");
    CHECK(csv.rfind("# config=", 0) == 0);
    CHECK(std::filesystem::exists(cfg.out_dir / "plots" / "summary.svg"));
    CHECK(std::filesystem::exists(cfg.out_dir / "plots" / "profile_00000.svg"));
    const auto traj = Json::parse(read_text(cfg.out_dir / "trajectory.json"));
    CHECK(traj["termination"]["kind"] == "extinction");
    CHECK(std::fabs(traj["termination"]["time"].get<double>() - 0.25) < 0.005);

    SUBCASE("byte-identical artifacts for identical configs") {
        const auto first = cfg.out_dir;
        cfg.out_dir = scratch("flow_again");
        std::ostringstream log2;
        REQUIRE(run(cfg, log2) == kExitOk);
        // the output directory is part of the echoed config, so compare the data rows only
        auto rows = [](const std::string& s) { return s.substr(s.find('\n')); };
        CHECK(rows(read_text(first / "diagnostics.csv")) == rows(read_text(cfg.out_dir / "diagnostics.csv")));
        std::filesystem::remove_all(cfg.out_dir);
    }
    std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("decompose command on the round sphere") {
    auto cfg = parse_config(Json::parse(R"({"initial": {"kind": "round_sphere", "n": 61}})"), Command::decompose);
    cfg.out_dir = scratch("decompose");
    std::ostringstream log;
    CHECK(run(cfg, log) == kExitOk);
    const auto d = Json::parse(read_text(cfg.out_dir / "decomposition.json"));
    CHECK(d["signature"] == "S3");
    CHECK(d["event_count"] == 0);
    CHECK(d["components"].size() == 1);
    CHECK(std::filesystem::exists(cfg.out_dir / "manifest.json"));
    std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("laws command rejects an asymmetric base") {
    auto cfg = parse_config(Json::parse(R"({"initial": {"kind": "dumbbell", "n": 201, "symmetric": false}})"),
                            Command::laws);
    cfg.out_dir = scratch("laws");
    std::ostringstream log;
    CHECK(run(cfg, log) == kExitVerificationFailure);
    const auto j = Json::parse(read_text(cfg.out_dir / "laws.json"));
    CHECK(j["passed"] == false);
    CHECK(j["precondition"].is_string());
    std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("invalid initial data is an input error") {
    auto cfg = parse_config(Json::parse(R"({"initial": {"kind": "dumbbell", "neck": 2.0, "lobe": 1.0}})"),
                            Command::flow);
    cfg.out_dir = scratch("invalid");
    std::ostringstream log;
    CHECK(run(cfg, log) == kExitInputError);
    std::filesystem::remove_all(cfg.out_dir);
}

TEST_CASE("initial metric from a snapshot file") {
    const auto dir = scratch("file");
    write_text(dir / "sphere.json", dump_json(to_json(make_round_sphere(1.0, 41))));
    write_text(dir / "config.json", R"({"initial": {"file": "sphere.json"}, "flow": {"t_max": 0.01}})");
    auto cfg = load_config(dir / "config.json", Command::flow);
    REQUIRE(cfg.initial_file);
    cfg.out_dir = dir / "out";
    std::ostringstream log;
    CHECK(run(cfg, log) == kExitOk);
    CHECK(resolved_config(cfg)["initial"]["file"].is_string());
    std::filesystem::remove_all(dir);
}
