#include "doctest.h"

#include "hapticbots/stream.hpp"

using namespace hapticbots;
using nlohmann::json;

TEST_CASE("every message type survives encode and decode") {
    World w = make_world(builtin_scene("blocks"), {}, default_layout(3, {}));
    w.finger = FingerSample{0.0, {0.1, 0.1, 0.1}};
    for (int k = 0; k < 30; ++k) advance(w);
    const auto snap = snapshot_of(w);
    const std::vector<StreamMessage> msgs{
        world_state_message(snap),
        metrics_message(30, finalize_metrics(w)),
        {MessageType::HandInput, 0, hand_input_payload({{0.1, 0.2, 0.05}, true})},
        {MessageType::Control, 0, control_payload({ControlAction::SetRobots, {{"count", 4}}})},
        error_message(7, "bad"),
    };
    for (const auto& m : msgs) {
        const auto back = decode(encode(m));
        CHECK(back.type == m.type);
        CHECK(back.tick == m.tick);
        CHECK(back.payload == m.payload);
    }
    const auto doc = json::parse(encode(msgs[0]));
    CHECK(doc["schema"] == 1);
    CHECK(doc["type"] == "world_state");
    CHECK(doc["tick"] == 30);
}

TEST_CASE("world snapshots round trip through JSON") {
    World w = make_world(builtin_scene("house"), {}, default_layout(2, {}));
    w.finger = FingerSample{0.0, {0.27, 0.27, 0.2}};
    for (int k = 0; k < 10; ++k) advance(w);
    auto snap = snapshot_of(w, true);
    auto back = snapshot_from_json(snapshot_to_json(snap));
    back.tick = snap.tick;
    CHECK(back == snap);
    CHECK(back.paused);
    REQUIRE_FALSE(snap.regions.empty());
    // Row runs cover exactly the region's cells.
    double area = 0.0;
    for (const auto& r : snap.regions[0].rects) area += (r[2] - r[0]) * (r[3] - r[1]);
    CHECK(area == doctest::Approx(w.regions[0].area));
}

TEST_CASE("malformed messages are rejected") {
    CHECK_THROWS_AS(decode("{not json"), StreamError);
    CHECK_THROWS_AS(decode("[1, 2]"), StreamError);
    CHECK_THROWS_AS(decode(R"({"payload": {}})"), StreamError);
    CHECK_THROWS_AS(decode(R"({"type": "teleport"})"), StreamError);
    CHECK_THROWS_AS(decode(R"({"type": "control", "schema": 2})"), StreamError);
    CHECK_THROWS_AS(decode(R"({"type": "control", "tick": "x"})"), StreamError);
    CHECK_THROWS_AS(decode(R"({"type": "control", "payload": 3})"), StreamError);
    CHECK_NOTHROW(decode(R"({"type": "control"})"));
    CHECK_THROWS_AS(snapshot_from_json(json{{"time", 1.0}}), StreamError);
}

TEST_CASE("hand input parsing") {
    const auto h = parse_hand_input({{"x", 0.1}, {"y", 0.2}});
    CHECK(h.pos == Vec3{0.1, 0.2, 0.0});
    CHECK_FALSE(h.tracking_frame);
    CHECK(parse_hand_input({{"x", 0.1}, {"y", 0.2}, {"z", 0.3}, {"frame", "tracking"}}).tracking_frame);
    CHECK_THROWS_AS(parse_hand_input({{"x", 0.1}}), StreamError);
    CHECK_THROWS_AS(parse_hand_input({{"x", "a"}, {"y", 0.2}}), StreamError);
    CHECK_THROWS_AS(parse_hand_input({{"x", 0.1}, {"y", 0.2}, {"frame", "world"}}), StreamError);
    CHECK(parse_hand_input(hand_input_payload(h)) == h);
}

TEST_CASE("control validation per action") {
    CHECK(parse_control({{"action", "pause"}}).action == ControlAction::Pause);
    CHECK(parse_control({{"action", "step"}, {"ticks", 3}}).args["ticks"] == 3);
    CHECK_THROWS_AS(parse_control({{"action", "step"}, {"ticks", 0}}), StreamError);
    CHECK_THROWS_AS(parse_control({{"action", "fly"}}), StreamError);
    CHECK_THROWS_AS(parse_control(json::object()), StreamError);
    CHECK_THROWS_WITH_AS(parse_control({{"action", "set_robots"}, {"count", 0}}), "robot_count must be ≥ 1",
                         StreamError);
    CHECK_THROWS_AS(parse_control({{"action", "set_robots"}, {"count", 2.5}}), StreamError);
    CHECK_THROWS_AS(parse_control({{"action", "grasp"}}), StreamError);
    CHECK_THROWS_AS(parse_control({{"action", "place"}, {"robot", 1}, {"x", 0.1}}), StreamError);
    CHECK_THROWS_AS(parse_control({{"action", "load_scene"}, {"scene", 3}}), StreamError);
    CHECK_THROWS_AS(parse_control({{"action", "calibrate"}, {"center", {0, 0}}}), StreamError);
    CHECK_THROWS_AS(parse_control({{"action", "calibrate"}, {"center", {0, 0}}, {"corner", {"a", "b"}}}),
                    StreamError);
    const ControlCommand c{ControlAction::Place, {{"robot", 1}, {"x", 0.1}, {"y", 0.2}}};
    CHECK(parse_control(control_payload(c)) == c);
}

TEST_CASE("trace rows give a snapshot") {
    std::vector<TraceRow> rows(2);
    rows[0].tick = rows[1].tick = 4;
    rows[1].robot = 1;
    rows[1].target = 0;
    rows[1].target_point = {0.1, 0.1};
    const auto s = snapshot_from_trace(rows);
    CHECK(s.tick == 4);
    CHECK(s.robots.size() == 2);
    CHECK(s.pairs.size() == 1);
    rows[1].tick = 5;
    CHECK_THROWS_AS(snapshot_from_trace(rows), StreamError);
}
