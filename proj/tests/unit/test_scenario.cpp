#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "hapticbots/scenario.hpp"
#include "hapticbots/trace.hpp"

using namespace hapticbots;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir() {
    auto d = std::filesystem::temp_directory_path() / "hapticbots_test_scenario";
    std::filesystem::create_directories(d);
    return d;
}

json base_doc() {
    return {{"scene", "builtin:house"}, {"robot_count", 3}, {"duration", 2.0}, {"seed", 4},
            {"generator", {{"name", "tap"}, {"params", {{"period", 1.0}, {"taps", 2}}}}}};
}

}  // namespace

TEST_CASE("scenario fields parse and round trip") {
    const auto s = parse_scenario(base_doc());
    CHECK(s.robot_count == 3);
    CHECK(s.duration == 2.0);
    CHECK(s.seed == 4);
    CHECK(s.generator->name == "tap");
    const auto again = parse_scenario(scenario_to_json(s));
    CHECK(scenario_to_json(again) == scenario_to_json(s));
}

TEST_CASE("scenario errors name the field") {
    auto d = base_doc();
    d["robots"] = 3;
    CHECK_THROWS_WITH_AS(parse_scenario(d), doctest::Contains("robots"), ScenarioError);
    d = base_doc();
    d["duration"] = "long";
    CHECK_THROWS_WITH_AS(parse_scenario(d), doctest::Contains("duration"), ScenarioError);
    d = base_doc();
    d["mode"] = "sprint";
    CHECK_THROWS_WITH_AS(parse_scenario(d), doctest::Contains("mode"), ScenarioError);
    d = base_doc();
    d.erase("scene");
    CHECK_THROWS_WITH_AS(parse_scenario(d), doctest::Contains("scene"), ScenarioError);
    d = base_doc();
    d["scene"] = "no_such_scene.json";
    CHECK_THROWS_WITH_AS(parse_scenario(d, temp_dir()), doctest::Contains("scene"), ScenarioError);
}

TEST_CASE("zero robots is rejected with a fixed message") {
    auto d = base_doc();
    d["robot_count"] = 0;
    CHECK_THROWS_WITH_AS(parse_scenario(d), "robot_count must be ≥ 1", ScenarioError);
    CHECK_THROWS_WITH_AS(reach_benchmark(0, 1, 1), "robot_count must be ≥ 1", ScenarioError);
}

TEST_CASE("malformed scenario files report line and column") {
    const auto path = temp_dir() / "broken.json";
    {
        std::ofstream out(path);
        out << "{\n  \"scene\": \"builtin:flat\",\n  \"duration\": 2.0,,\n}\n";
    }
    CHECK_THROWS_WITH_AS(load_scenario_file(path), doctest::Contains("broken.json:3:"), ScenarioError);
    CHECK_THROWS_AS(load_scenario_file(temp_dir() / "missing.json"), ScenarioError);
}

TEST_CASE("zero duration gives an empty report") {
    auto d = base_doc();
    d["duration"] = 0.0;
    int calls = 0;
    const auto m = run_scenario(parse_scenario(d), [&](const World&) { ++calls; });
    CHECK(calls == 1);
    CHECK(m.ticks == 0);
    CHECK(m.reach_times.empty());
    CHECK(m.contact_ticks == 0);
}

TEST_CASE("runs are reproducible from the seed") {
    const auto spec = parse_scenario(base_doc());
    const auto a = run_scenario(spec);
    const auto b = run_scenario(spec);
    CHECK(a == b);
    CHECK(a.ticks == 120);
}

TEST_CASE("config overrides apply") {
    auto d = base_doc();
    d["config_overrides"] = {{"ramp", {{"gain", 1.5}}}};
    const auto sc = resolve_scenario(parse_scenario(d));
    CHECK(sc.config.ramp.gain == 1.5);
    CHECK(sc.config.seed == 4);
    d["config_overrides"] = {{"ramp", {{"gane", 1.5}}}};
    CHECK_THROWS(resolve_scenario(parse_scenario(d)));
}

TEST_CASE("tracking-frame trajectories need a calibration") {
    Trajectory t;
    t.frame = "tracking";
    t.samples = {{0.0, {1.0, 1.0, 0.3}}, {1.0, {1.1, 1.0, 0.3}}};
    const auto path = temp_dir() / "track.txt";
    save_trajectory(t, path);
    json d{{"scene", "builtin:flat"}, {"trajectory", path.string()}, {"duration", 1.0}};
    CHECK_THROWS_AS(resolve_scenario(parse_scenario(d)), ScenarioError);
    // Tracker frame is the mat shifted by (1, 1).
    d["calibration"] = {{"center", {1.275, 1.275}}, {"corner", {1.0, 1.0}}};
    const auto sc = resolve_scenario(parse_scenario(d));
    CHECK(sc.track[0].pos.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sc.track[1].pos.x == doctest::Approx(0.1));
    CHECK(sc.track[1].pos.z == 0.3);
}

TEST_CASE("random targets respect margin and separation") {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 50; ++k) {
        const auto t = random_targets(7, {}, 0.0333, 0.1, rng);
        REQUIRE(t.size() == 7);
        for (std::size_t i = 0; i < t.size(); ++i) {
            CHECK(t[i].x >= 0.0333);
            CHECK(t[i].x <= 0.55 - 0.0333);
            for (std::size_t j = i + 1; j < t.size(); ++j) CHECK(distance(t[i], t[j]) >= 0.1);
        }
    }
    CHECK_THROWS_AS(random_targets(50, {}, 0.0, 0.2, rng), ScenarioError);
}

TEST_CASE("a short reach run records reach times") {
    const auto sc = reach_benchmark(3, 3, 2);
    const auto m = run_scenario(sc);
    CHECK(m.reach_times.size() + static_cast<std::size_t>(m.timeouts) == 3);
    for (double r : m.reach_times) CHECK(r > 0.0);
}

TEST_CASE("trace rows round trip through text") {
    const auto sc = resolve_scenario(parse_scenario(base_doc()));
    std::stringstream ss;
    TraceWriter writer(ss, sc.robot_count, sc.config.dt);
    std::vector<TraceRow> written;
    run_scenario(sc, [&](const World& w) {
        writer.write(w);
        for (const auto& r : trace_rows(w)) written.push_back(r);
    });
    const auto trace = read_trace(ss);
    CHECK(trace.robots == 3);
    REQUIRE(trace.rows.size() == written.size());
    CHECK(trace.rows.front() == written.front());
    CHECK(trace.rows.back() == written.back());
}

TEST_CASE("a truncated trace names the last complete tick") {
    const auto sc = resolve_scenario(parse_scenario(base_doc()));
    std::stringstream ss;
    TraceWriter writer(ss, sc.robot_count, sc.config.dt);
    run_scenario(sc, [&](const World& w) {
        if (w.tick <= 10) writer.write(w);
    });
    std::string text = ss.str();
    // Cut the last line in half.
    text.resize(text.size() - 30);
    std::istringstream in(text);
    try {
        read_trace(in);
        FAIL("expected a TraceError");
    } catch (const TraceError& e) {
        REQUIRE(e.last_valid_tick().has_value());
        CHECK(*e.last_valid_tick() == 9);
        CHECK(std::string(e.what()).find("last valid tick 9") != std::string::npos);
    }
}
