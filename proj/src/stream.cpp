#include "hapticbots/stream.hpp"

#include <cmath>

namespace hapticbots {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<MessageType, std::string_view>, 5> kTypes{{
    {MessageType::WorldState, "world_state"},
    {MessageType::Metrics, "metrics"},
    {MessageType::HandInput, "hand_input"},
    {MessageType::Control, "control"},
    {MessageType::Error, "error"},
}};

constexpr std::array<std::pair<ControlAction, std::string_view>, 9> kActions{{
    {ControlAction::Pause, "pause"},
    {ControlAction::Resume, "resume"},
    {ControlAction::Step, "step"},
    {ControlAction::Reset, "reset"},
    {ControlAction::LoadScene, "load_scene"},
    {ControlAction::SetRobots, "set_robots"},
    {ControlAction::Grasp, "grasp"},
    {ControlAction::Place, "place"},
    {ControlAction::Calibrate, "calibrate"},
}};

double finite_number(const json& obj, const char* key) {
    if (!obj.contains(key) || !obj.at(key).is_number()) throw StreamError(std::string("missing number '") + key + "'");
    const double v = obj.at(key).get<double>();
    if (!std::isfinite(v)) throw StreamError(std::string("'") + key + "' must be finite");
    return v;
}

json vec(Vec2 v) { return json::array({v.x, v.y}); }

Vec2 vec_of(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw StreamError("expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

bool in_stop_band(const World& w, const RobotState& r, const AssignedPair& p) {
    return distance(r.pos, p.point) <= w.config.ramp.stop_distance &&
           std::abs(yaw_error(r.yaw, w.controllers[static_cast<std::size_t>(r.id)].desired_yaw)) <=
               w.config.yaw.stop_band_deg;
}

}  // namespace

std::string_view to_string(MessageType t) {
    for (const auto& [k, name] : kTypes)
        if (k == t) return name;
    return "error";
}

MessageType message_type_from_string(std::string_view s) {
    for (const auto& [k, name] : kTypes)
        if (name == s) return k;
    throw StreamError("unknown message type '" + std::string(s) + "'");
}

std::string_view to_string(ControlAction a) {
    for (const auto& [k, name] : kActions)
        if (k == a) return name;
    return "pause";
}

std::string encode(const StreamMessage& m) {
    return json{{"schema", kStreamSchema}, {"type", to_string(m.type)}, {"tick", m.tick}, {"payload", m.payload}}
        .dump();
}

StreamMessage decode(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw StreamError(std::string("malformed message: ") + e.what());
    }
    if (!doc.is_object()) throw StreamError("message must be a JSON object");
    if (doc.contains("schema") && doc.at("schema") != kStreamSchema) throw StreamError("unsupported schema");
    if (!doc.contains("type") || !doc.at("type").is_string()) throw StreamError("missing 'type'");
    StreamMessage m;
    m.type = message_type_from_string(doc.at("type").get<std::string>());
    if (doc.contains("tick")) {
        if (!doc.at("tick").is_number_integer()) throw StreamError("'tick' must be an integer");
        m.tick = doc.at("tick").get<std::int64_t>();
    }
    if (doc.contains("payload")) {
        if (!doc.at("payload").is_object()) throw StreamError("'payload' must be an object");
        m.payload = doc.at("payload");
    }
    return m;
}

WorldSnapshot snapshot_of(const World& w, bool paused) {
    WorldSnapshot s;
    s.tick = w.tick;
    s.time = w.time;
    s.paused = paused;
    for (const auto& r : w.robots) {
        RobotView v{r.id, r.pos, r.yaw, r.height, r.tilt, r.grasped, false, -1};
        if (const auto p = w.assignment.for_robot(r.id)) {
            v.target = p->target;
            v.in_stop_band = in_stop_band(w, r, *p);
        }
        s.robots.push_back(v);
    }
    const GridGeometry& g = w.heightmap->grid;
    const double half = 0.5 * g.spacing;
    for (std::size_t k = 0; k < w.regions.size(); ++k) {
        const Region& reg = w.regions[k];
        RegionView rv;
        rv.id = k < w.tracker.track_ids.size() ? w.tracker.track_ids[k] : reg.id;
        rv.centroid = reg.centroid;
        rv.peak_height = reg.peak_height;
        // Cells are sorted row-major, so each row run is contiguous.
        std::size_t a = 0;
        while (a < reg.cells.size()) {
            std::size_t b = a;
            while (b + 1 < reg.cells.size() && reg.cells[b + 1].iy == reg.cells[a].iy &&
                   reg.cells[b + 1].ix == reg.cells[b].ix + 1)
                ++b;
            const Vec2 lo = g.position(reg.cells[a]);
            const Vec2 hi = g.position(reg.cells[b]);
            rv.rects.push_back({lo.x - half, lo.y - half, hi.x + half, hi.y + half});
            a = b + 1;
        }
        s.regions.push_back(std::move(rv));
    }
    if (w.finger) s.finger = w.finger->pos;
    s.pairs = w.assignment.pairs;
    return s;
}

WorldSnapshot snapshot_from_trace(const std::vector<TraceRow>& rows) {
    WorldSnapshot s;
    if (rows.empty()) return s;
    s.tick = rows.front().tick;
    s.time = rows.front().time;
    for (const auto& r : rows) {
        if (r.tick != s.tick) throw StreamError("trace rows span several ticks");
        s.robots.push_back({r.robot, r.pos, r.yaw, r.height, r.tilt, r.grasped, false, r.target});
        if (r.target >= 0) s.pairs.push_back({r.robot, r.target, r.target_point});
    }
    return s;
}

json snapshot_to_json(const WorldSnapshot& s) {
    json robots = json::array();
    for (const auto& r : s.robots)
        robots.push_back({{"id", r.id},
                          {"pos", vec(r.pos)},
                          {"yaw", r.yaw},
                          {"height", r.height},
                          {"tilt", r.tilt},
                          {"grasped", r.grasped},
                          {"in_stop_band", r.in_stop_band},
                          {"target", r.target}});
    json regions = json::array();
    for (const auto& r : s.regions)
        regions.push_back(
            {{"id", r.id}, {"centroid", vec(r.centroid)}, {"peak_height", r.peak_height}, {"rects", r.rects}});
    json pairs = json::array();
    for (const auto& p : s.pairs) pairs.push_back({{"robot", p.robot}, {"target", p.target}, {"point", vec(p.point)}});
    json doc{{"time", s.time}, {"paused", s.paused}, {"robots", robots}, {"regions", regions}, {"assignment", pairs}};
    doc["finger"] = s.finger ? json::array({s.finger->x, s.finger->y, s.finger->z}) : json(nullptr);
    return doc;
}

WorldSnapshot snapshot_from_json(const json& p) {
    WorldSnapshot s;
    try {
        s.time = p.at("time").get<double>();
        s.paused = p.value("paused", false);
        for (const auto& r : p.at("robots"))
            s.robots.push_back({r.at("id").get<int>(), vec_of(r.at("pos")), r.at("yaw").get<double>(),
                                r.at("height").get<double>(), r.at("tilt").get<double>(), r.at("grasped").get<bool>(),
                                r.at("in_stop_band").get<bool>(), r.at("target").get<int>()});
        for (const auto& r : p.at("regions"))
            s.regions.push_back({r.at("id").get<int>(), vec_of(r.at("centroid")), r.at("peak_height").get<double>(),
                                 r.at("rects").get<std::vector<std::array<double, 4>>>()});
        for (const auto& a : p.at("assignment"))
            s.pairs.push_back({a.at("robot").get<int>(), a.at("target").get<int>(), vec_of(a.at("point"))});
        if (p.contains("finger") && !p.at("finger").is_null()) {
            const auto& f = p.at("finger");
            s.finger = Vec3{f.at(0).get<double>(), f.at(1).get<double>(), f.at(2).get<double>()};
        }
    } catch (const json::exception& e) {
        throw StreamError(std::string("malformed world_state: ") + e.what());
    }
    return s;
}

StreamMessage world_state_message(const WorldSnapshot& s) {
    return {MessageType::WorldState, s.tick, snapshot_to_json(s)};
}

StreamMessage metrics_message(std::int64_t tick, const MetricsReport& m) {
    return {MessageType::Metrics, tick, metrics_to_json(m)};
}

StreamMessage error_message(std::int64_t tick, const std::string& what) {
    return {MessageType::Error, tick, {{"message", what}}};
}

HandInput parse_hand_input(const json& p) {
    HandInput h;
    h.pos = {finite_number(p, "x"), finite_number(p, "y"), p.contains("z") ? finite_number(p, "z") : 0.0};
    const std::string frame = p.contains("frame") && p.at("frame").is_string() ? p.at("frame").get<std::string>()
                                                                              : "mat";
    if (frame == "tracking")
        h.tracking_frame = true;
    else if (frame != "mat")
        throw StreamError("hand_input frame must be 'mat' or 'tracking'");
    return h;
}

json hand_input_payload(const HandInput& h) {
    return {{"x", h.pos.x}, {"y", h.pos.y}, {"z", h.pos.z}, {"frame", h.tracking_frame ? "tracking" : "mat"}};
}

ControlCommand parse_control(const json& p) {
    if (!p.contains("action") || !p.at("action").is_string()) throw StreamError("control needs an 'action'");
    const std::string name = p.at("action").get<std::string>();
    ControlCommand c;
    bool found = false;
    for (const auto& [k, n] : kActions)
        if (n == name) {
            c.action = k;
            found = true;
        }
    if (!found) throw StreamError("unknown control action '" + name + "'");
    c.args = p;
    c.args.erase("action");
    auto need_int = [&](const char* key) {
        if (!c.args.contains(key) || !c.args.at(key).is_number_integer())
            throw StreamError(name + " needs integer '" + key + "'");
    };
    switch (c.action) {
    case ControlAction::SetRobots:
        need_int("count");
        if (c.args.at("count").get<int>() < 1) throw StreamError("robot_count must be ≥ 1");
        break;
    case ControlAction::Grasp:
        need_int("robot");
        break;
    case ControlAction::Place:
        need_int("robot");
        finite_number(c.args, "x");
        finite_number(c.args, "y");
        break;
    case ControlAction::LoadScene:
        if (!c.args.contains("scene") || !(c.args.at("scene").is_string() || c.args.at("scene").is_object()))
            throw StreamError("load_scene needs 'scene' (builtin name or scene document)");
        break;
    case ControlAction::Calibrate:
        if (!c.args.contains("center") || !c.args.contains("corner"))
            throw StreamError("calibrate needs 'center' and 'corner'");
        vec_of(c.args.at("center"));
        vec_of(c.args.at("corner"));
        break;
    case ControlAction::Step:
        if (c.args.contains("ticks")) {
            need_int("ticks");
            if (c.args.at("ticks").get<int>() < 1) throw StreamError("step ticks must be >= 1");
        }
        break;
    default:
        break;
    }
    return c;
}

json control_payload(const ControlCommand& c) {
    json p = c.args;
    p["action"] = to_string(c.action);
    return p;
}

}  // namespace hapticbots
