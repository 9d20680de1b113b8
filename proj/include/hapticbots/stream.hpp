#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hapticbots/engine.hpp"
#include "hapticbots/trace.hpp"

namespace hapticbots {

inline constexpr int kStreamSchema = 1;

class StreamError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class MessageType { WorldState, Metrics, HandInput, Control, Error };

std::string_view to_string(MessageType t);
MessageType message_type_from_string(std::string_view s);

// Wire envelope: {"schema": 1, "type": ..., "tick": n, "payload": {...}}.
struct StreamMessage {
    MessageType type = MessageType::WorldState;
    std::int64_t tick = 0;
    nlohmann::json payload = nlohmann::json::object();

    bool operator==(const StreamMessage&) const = default;
};

std::string encode(const StreamMessage& msg);
StreamMessage decode(std::string_view text);

struct RobotView {
    int id = 0;
    Vec2 pos{};
    double yaw = 0.0;
    double height = 0.0;
    double tilt = 0.0;
    bool grasped = false;
    bool in_stop_band = false;
    int target = -1;
    bool operator==(const RobotView&) const = default;
};

// Region footprint as row runs: each rect is [x0, y0, x1, y1] in meters.
struct RegionView {
    int id = 0;
    Vec2 centroid{};
    double peak_height = 0.0;
    std::vector<std::array<double, 4>> rects;
    bool operator==(const RegionView&) const = default;
};

struct WorldSnapshot {
    std::int64_t tick = 0;
    double time = 0.0;
    bool paused = false;
    std::vector<RobotView> robots;
    std::vector<RegionView> regions;
    std::optional<Vec3> finger;
    std::vector<AssignedPair> pairs;
    bool operator==(const WorldSnapshot&) const = default;
};

WorldSnapshot snapshot_of(const World& world, bool paused = false);
// Rows must all belong to one tick.
WorldSnapshot snapshot_from_trace(const std::vector<TraceRow>& rows);

nlohmann::json snapshot_to_json(const WorldSnapshot& s);
WorldSnapshot snapshot_from_json(const nlohmann::json& payload);
StreamMessage world_state_message(const WorldSnapshot& s);
StreamMessage metrics_message(std::int64_t tick, const MetricsReport& m);
StreamMessage error_message(std::int64_t tick, const std::string& what);

// hand_input payload: {"x", "y", "z", "frame": "mat" | "tracking"}.
struct HandInput {
    Vec3 pos{};
    bool tracking_frame = false;
    bool operator==(const HandInput&) const = default;
};

HandInput parse_hand_input(const nlohmann::json& payload);
nlohmann::json hand_input_payload(const HandInput& h);

enum class ControlAction { Pause, Resume, Step, Reset, LoadScene, SetRobots, Grasp, Place, Calibrate };

// control payload: {"action": ..., plus per-action fields}.
//   load_scene: "scene" (builtin name or scene document)
//   set_robots: "count"
//   grasp:      "robot"
//   place:      "robot", "x", "y"
//   calibrate:  "center": [x, y], "corner": [x, y] (tracking frame)
//   step:       optional "ticks"
struct ControlCommand {
    ControlAction action = ControlAction::Pause;
    nlohmann::json args = nlohmann::json::object();
    bool operator==(const ControlCommand&) const = default;
};

ControlCommand parse_control(const nlohmann::json& payload);
nlohmann::json control_payload(const ControlCommand& c);
std::string_view to_string(ControlAction a);

}  // namespace hapticbots
