#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>

#include "hapticbots/engine.hpp"

namespace hapticbots {

using nlohmann::json;

namespace {

// Reads `key` into `value` when present and records it as consumed.
template <typename T>
void read_field(const json& obj, const char* key, T& value, std::set<std::string>& seen, const std::string& where) {
    seen.insert(key);
    if (!obj.contains(key)) return;
    try {
        value = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

void reject_unknown(const json& obj, const std::set<std::string>& seen, const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!seen.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

const json& section(const json& doc, const char* key, std::set<std::string>& seen) {
    static const json empty = json::object();
    seen.insert(key);
    if (!doc.contains(key)) return empty;
    if (!doc.at(key).is_object()) throw ConfigError(std::string(key) + " must be an object");
    return doc.at(key);
}

json double_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json config_to_json(const EngineConfig& c) {
    const auto& p = c.plant;
    return {
        {"schema", 1},
        {"dt", c.dt},
        {"seed", c.seed},
        {"plant",
         {{"v_max", p.v_max},
          {"omega_max", p.omega_max},
          {"reel_rate", p.reel_rate},
          {"height_range", {p.height_min, p.height_max}},
          {"tilt_max", p.tilt_max},
          {"latency", p.latency},
          {"pos_quantum", p.pos_quantum},
          {"yaw_quantum", p.yaw_quantum},
          {"cap_halfwidth", p.cap_halfwidth},
          {"noise", {{"pos_sigma", p.noise.pos}, {"yaw_sigma", p.noise.yaw}, {"height_sigma", p.noise.height},
                     {"tilt_sigma", p.noise.tilt}}}}},
        {"rvo",
         {{"time_horizon", c.rvo.time_horizon},
          {"neighbor_radius", c.rvo.neighbor_radius},
          {"agent_radius", c.rvo.agent_radius},
          {"safety_margin", c.rvo.safety_margin},
          {"max_speed", c.rvo.max_speed},
          {"candidates", c.rvo.candidates}}},
        {"ramp", {{"gain", c.ramp.gain}, {"stop_distance", c.ramp.stop_distance}}},
        {"yaw", {{"gain", c.yaw.gain}, {"stop_band_deg", c.yaw.stop_band_deg}}},
        {"heightmap",
         {{"spacing", c.grid_spacing},
          {"threshold", c.touch_threshold},
          {"refresh_period", c.refresh_period},
          {"rows_per_tick", c.heightmap_rows_per_tick}}},
        {"assignment", {{"hysteresis", c.hysteresis}}},
        {"contact", {{"offset", c.contact_offset}, {"tracking_radius", c.tracking_radius}}},
        {"gradient_epsilon", c.gradient_epsilon},
        {"avoid_hand", c.avoid_hand},
        {"latency_compensation", c.latency_compensation},
    };
}

EngineConfig config_from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("engine config must be a JSON object");
    EngineConfig c;
    std::set<std::string> top;
    int schema = 1;
    read_field(doc, "schema", schema, top, "config");
    if (schema != 1) throw ConfigError("unsupported config schema " + std::to_string(schema));
    read_field(doc, "dt", c.dt, top, "config");
    read_field(doc, "seed", c.seed, top, "config");
    read_field(doc, "gradient_epsilon", c.gradient_epsilon, top, "config");
    read_field(doc, "avoid_hand", c.avoid_hand, top, "config");
    read_field(doc, "latency_compensation", c.latency_compensation, top, "config");

    {
        std::set<std::string> seen;
        const json& p = section(doc, "plant", top);
        read_field(p, "v_max", c.plant.v_max, seen, "plant");
        read_field(p, "omega_max", c.plant.omega_max, seen, "plant");
        read_field(p, "reel_rate", c.plant.reel_rate, seen, "plant");
        std::array<double, 2> range{c.plant.height_min, c.plant.height_max};
        read_field(p, "height_range", range, seen, "plant");
        c.plant.height_min = range[0];
        c.plant.height_max = range[1];
        read_field(p, "tilt_max", c.plant.tilt_max, seen, "plant");
        read_field(p, "latency", c.plant.latency, seen, "plant");
        read_field(p, "pos_quantum", c.plant.pos_quantum, seen, "plant");
        read_field(p, "yaw_quantum", c.plant.yaw_quantum, seen, "plant");
        read_field(p, "cap_halfwidth", c.plant.cap_halfwidth, seen, "plant");
        seen.insert("noise");
        if (p.contains("noise")) {
            std::set<std::string> ns;
            const json& n = p.at("noise");
            read_field(n, "pos_sigma", c.plant.noise.pos, ns, "plant.noise");
            read_field(n, "yaw_sigma", c.plant.noise.yaw, ns, "plant.noise");
            read_field(n, "height_sigma", c.plant.noise.height, ns, "plant.noise");
            read_field(n, "tilt_sigma", c.plant.noise.tilt, ns, "plant.noise");
            reject_unknown(n, ns, "plant.noise");
        }
        reject_unknown(p, seen, "plant");
    }
    {
        std::set<std::string> seen;
        const json& r = section(doc, "rvo", top);
        read_field(r, "time_horizon", c.rvo.time_horizon, seen, "rvo");
        read_field(r, "neighbor_radius", c.rvo.neighbor_radius, seen, "rvo");
        read_field(r, "agent_radius", c.rvo.agent_radius, seen, "rvo");
        read_field(r, "safety_margin", c.rvo.safety_margin, seen, "rvo");
        read_field(r, "max_speed", c.rvo.max_speed, seen, "rvo");
        read_field(r, "candidates", c.rvo.candidates, seen, "rvo");
        reject_unknown(r, seen, "rvo");
    }
    {
        std::set<std::string> seen;
        const json& r = section(doc, "ramp", top);
        read_field(r, "gain", c.ramp.gain, seen, "ramp");
        read_field(r, "stop_distance", c.ramp.stop_distance, seen, "ramp");
        reject_unknown(r, seen, "ramp");
    }
    {
        std::set<std::string> seen;
        const json& y = section(doc, "yaw", top);
        read_field(y, "gain", c.yaw.gain, seen, "yaw");
        read_field(y, "stop_band_deg", c.yaw.stop_band_deg, seen, "yaw");
        reject_unknown(y, seen, "yaw");
    }
    {
        std::set<std::string> seen;
        const json& h = section(doc, "heightmap", top);
        read_field(h, "spacing", c.grid_spacing, seen, "heightmap");
        read_field(h, "threshold", c.touch_threshold, seen, "heightmap");
        read_field(h, "refresh_period", c.refresh_period, seen, "heightmap");
        read_field(h, "rows_per_tick", c.heightmap_rows_per_tick, seen, "heightmap");
        reject_unknown(h, seen, "heightmap");
    }
    {
        std::set<std::string> seen;
        const json& a = section(doc, "assignment", top);
        read_field(a, "hysteresis", c.hysteresis, seen, "assignment");
        reject_unknown(a, seen, "assignment");
    }
    {
        std::set<std::string> seen;
        const json& a = section(doc, "contact", top);
        read_field(a, "offset", c.contact_offset, seen, "contact");
        read_field(a, "tracking_radius", c.tracking_radius, seen, "contact");
        reject_unknown(a, seen, "contact");
    }
    reject_unknown(doc, top, "config");
    c.validate();
    return c;
}

EngineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(doc);
}

json metrics_to_json(const MetricsReport& m) {
    return {{"schema", 1},
            {"duration", m.duration},
            {"ticks", m.ticks},
            {"mean_reach_time", m.mean_reach_time},
            {"reach_times", m.reach_times},
            {"timeouts", m.timeouts},
            {"contact_height_error_mean", m.contact_height_error_mean},
            {"contact_height_error_max", m.contact_height_error_max},
            {"contact_ticks", m.contact_ticks},
            {"contact_tracking_fraction", m.contact_tracking_fraction},
            {"min_pairwise_distance", double_or_null(m.min_pairwise_distance)},
            {"collision_count", m.collision_count},
            {"reassignments", m.reassignments},
            {"assignment_churn", m.assignment_churn},
            {"faults", m.faults}};
}

MetricsReport metrics_from_json(const json& doc) {
    MetricsReport m;
    m.duration = doc.at("duration").get<double>();
    m.ticks = doc.at("ticks").get<std::int64_t>();
    m.mean_reach_time = doc.at("mean_reach_time").get<double>();
    m.reach_times = doc.at("reach_times").get<std::vector<double>>();
    m.timeouts = doc.at("timeouts").get<int>();
    m.contact_height_error_mean = doc.at("contact_height_error_mean").get<double>();
    m.contact_height_error_max = doc.at("contact_height_error_max").get<double>();
    m.contact_ticks = doc.at("contact_ticks").get<std::int64_t>();
    m.contact_tracking_fraction = doc.at("contact_tracking_fraction").get<double>();
    const auto& mp = doc.at("min_pairwise_distance");
    m.min_pairwise_distance = mp.is_null() ? std::numeric_limits<double>::infinity() : mp.get<double>();
    m.collision_count = doc.at("collision_count").get<int>();
    m.reassignments = doc.at("reassignments").get<int>();
    m.assignment_churn = doc.at("assignment_churn").get<double>();
    m.faults = doc.at("faults").get<int>();
    return m;
}

void write_metrics_csv(std::ostream& out, const MetricsReport& m) {
    out << std::setprecision(17);
    out << "metric,value\n";
    out << "duration," << m.duration << '\n';
    out << "ticks," << m.ticks << '\n';
    out << "trials," << m.reach_times.size() << '\n';
    out << "mean_reach_time," << m.mean_reach_time << '\n';
    out << "timeouts," << m.timeouts << '\n';
    out << "contact_height_error_mean," << m.contact_height_error_mean << '\n';
    out << "contact_height_error_max," << m.contact_height_error_max << '\n';
    out << "contact_ticks," << m.contact_ticks << '\n';
    out << "contact_tracking_fraction," << m.contact_tracking_fraction << '\n';
    out << "min_pairwise_distance," << m.min_pairwise_distance << '\n';
    out << "collision_count," << m.collision_count << '\n';
    out << "reassignments," << m.reassignments << '\n';
    out << "assignment_churn," << m.assignment_churn << '\n';
    out << "faults," << m.faults << '\n';
    out << "\ntrial,reach_time\n";
    for (std::size_t i = 0; i < m.reach_times.size(); ++i) out << i << ',' << m.reach_times[i] << '\n';
}

}  // namespace hapticbots
