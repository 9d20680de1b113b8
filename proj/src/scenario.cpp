#include "hapticbots/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hapticbots {

using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& why) {
    throw ScenarioError("field '" + field + "': " + why);
}

Vec2 vec2_field(const json& v, const std::string& field) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        field_error(field, "expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

template <typename T>
T typed(const json& obj, const char* key, const T& fallback, const std::string& prefix = "") {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        field_error(prefix + key, "wrong type");
    }
}

std::filesystem::path resolve_path(const std::string& p, const std::filesystem::path& base) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) path = base / path;
    return path;
}

// Converts a byte offset into a 1-based line and column.
std::pair<int, int> line_col(const std::string& text, std::size_t offset) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

// Reach targets sit at least this far apart: the padded contact distance of
// two robots plus room for sensing noise while both hold station.
double target_separation(const RvoParams& rvo) { return 1.25 * (2.0 * rvo.agent_radius + rvo.safety_margin); }

std::mt19937_64 scenario_rng(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    return std::mt19937_64(seq);
}

Trajectory generate(const GeneratorSpec& g, const Scene& scene, std::uint64_t seed, double duration) {
    const json& p = g.params;
    const SurfaceHeightFn surface = [&scene](Vec2 q) { return surface_height(scene, q); };
    const double rate = typed(p, "rate", 60.0, "generator.params.");
    const double z_offset = typed(p, "z_offset", 0.0, "generator.params.");
    auto point = [&](const char* key, Vec2 fallback) {
        return p.contains(key) ? vec2_field(p.at(key), std::string("generator.params.") + key) : fallback;
    };
    const Vec2 c = scene.bounds().center();
    if (g.name == "lateral_sweep") {
        return lateral_sweep(point("from", {0.05, c.y}), point("to", {0.5, c.y}),
                             typed(p, "speed", 0.05, "generator.params."), typed(p, "hold", 1.0, "generator.params."),
                             surface, z_offset, rate);
    }
    if (g.name == "tap") {
        return tap(point("at", c), typed(p, "period", 1.0, "generator.params."),
                   typed(p, "taps", 5, "generator.params."), surface, typed(p, "lift", 0.05, "generator.params."),
                   rate);
    }
    if (g.name == "random_walk") {
        return random_walk(point("start", c), typed(p, "speed", 0.05, "generator.params."),
                           typed(p, "duration", duration, "generator.params."),
                           typed<std::uint64_t>(p, "seed", seed, "generator.params."), scene.bounds(), surface,
                           z_offset, rate);
    }
    if (g.name == "hold") {
        const Vec2 at = point("at", c);
        Trajectory t;
        t.rate = rate;
        t.samples.push_back({0.0, {at.x, at.y, surface(at) + z_offset}, FingerSource::Scripted});
        return t;
    }
    field_error("generator.name", "unknown generator '" + g.name + "'");
}

}  // namespace

ScenarioSpec parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object");
    static const std::set<std::string> known{"schema",       "scene",   "trajectory", "generator",  "calibration",
                                             "robot_count",  "duration", "seed",      "output",     "mode",
                                             "trial_period", "config",   "config_overrides", "initial_positions",
                                             "initial_yaw"};
    for (const auto& [key, _] : doc.items())
        if (!known.count(key)) field_error(key, "unknown field");

    ScenarioSpec s;
    const int schema = typed(doc, "schema", 1);
    if (schema != 1) field_error("schema", "unsupported version " + std::to_string(schema));

    if (!doc.contains("scene")) field_error("scene", "required");
    s.scene = typed<std::string>(doc, "scene", "");
    if (s.scene.rfind("builtin:", 0) != 0) {
        const auto path = resolve_path(s.scene, base_dir);
        if (!std::filesystem::exists(path)) field_error("scene", "file not found: " + path.string());
        s.scene = path.string();
    }

    if (doc.contains("trajectory") && doc.contains("generator"))
        field_error("trajectory", "give either trajectory or generator, not both");
    if (doc.contains("trajectory")) {
        const auto path = resolve_path(typed<std::string>(doc, "trajectory", ""), base_dir);
        if (!std::filesystem::exists(path)) field_error("trajectory", "file not found: " + path.string());
        s.trajectory_path = path;
    }
    if (doc.contains("generator")) {
        const json& g = doc.at("generator");
        if (!g.is_object()) field_error("generator", "expected an object");
        GeneratorSpec gen;
        gen.name = typed<std::string>(g, "name", "", "generator.");
        if (gen.name.empty()) field_error("generator.name", "required");
        if (g.contains("params")) {
            if (!g.at("params").is_object()) field_error("generator.params", "expected an object");
            gen.params = g.at("params");
        }
        s.generator = gen;
    }
    if (doc.contains("calibration")) {
        const json& c = doc.at("calibration");
        if (!c.is_object() || !c.contains("center") || !c.contains("corner"))
            field_error("calibration", "expected {\"center\": [x, y], \"corner\": [x, y]}");
        s.calibration = std::array<Vec2, 2>{vec2_field(c.at("center"), "calibration.center"),
                                            vec2_field(c.at("corner"), "calibration.corner")};
    }

    if (doc.contains("robot_count") && !doc.at("robot_count").is_number_integer())
        field_error("robot_count", "expected an integer");
    s.robot_count = typed(doc, "robot_count", s.robot_count);
    if (s.robot_count < 1) throw ScenarioError("robot_count must be ≥ 1");
    s.duration = typed(doc, "duration", s.duration);
    if (!std::isfinite(s.duration) || s.duration < 0) field_error("duration", "must be finite and >= 0");
    s.seed = typed(doc, "seed", s.seed);
    if (doc.contains("output")) s.output_path = resolve_path(typed<std::string>(doc, "output", ""), base_dir);

    const auto mode = typed<std::string>(doc, "mode", "encounter");
    if (mode == "encounter")
        s.mode = ScenarioMode::Encounter;
    else if (mode == "reach")
        s.mode = ScenarioMode::Reach;
    else
        field_error("mode", "expected 'encounter' or 'reach'");
    s.trial_period = typed(doc, "trial_period", s.trial_period);
    if (!(s.trial_period > 0) || !std::isfinite(s.trial_period)) field_error("trial_period", "must be positive");

    if (doc.contains("config")) {
        const auto path = resolve_path(typed<std::string>(doc, "config", ""), base_dir);
        if (!std::filesystem::exists(path)) field_error("config", "file not found: " + path.string());
        s.config_path = path;
    }
    if (doc.contains("config_overrides")) {
        if (!doc.at("config_overrides").is_object()) field_error("config_overrides", "expected an object");
        s.config_overrides = doc.at("config_overrides");
    }
    if (doc.contains("initial_positions")) {
        const json& a = doc.at("initial_positions");
        if (!a.is_array()) field_error("initial_positions", "expected an array of [x, y]");
        for (std::size_t i = 0; i < a.size(); ++i)
            s.initial_positions.push_back(vec2_field(a[i], "initial_positions[" + std::to_string(i) + "]"));
        if (static_cast<int>(s.initial_positions.size()) != s.robot_count)
            field_error("initial_positions", "expected " + std::to_string(s.robot_count) + " entries");
    }
    s.initial_yaw = typed(doc, "initial_yaw", s.initial_yaw);
    return s;
}

ScenarioSpec load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ScenarioError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                            ": malformed JSON");
    }
    try {
        return parse_scenario(doc, path.parent_path());
    } catch (const ScenarioError& e) {
        throw ScenarioError(path.string() + ": " + e.what());
    }
}

json scenario_to_json(const ScenarioSpec& s) {
    json doc{{"schema", 1},
             {"scene", s.scene},
             {"robot_count", s.robot_count},
             {"duration", s.duration},
             {"seed", s.seed},
             {"mode", s.mode == ScenarioMode::Reach ? "reach" : "encounter"},
             {"trial_period", s.trial_period},
             {"initial_yaw", s.initial_yaw}};
    if (s.trajectory_path) doc["trajectory"] = s.trajectory_path->string();
    if (s.generator) doc["generator"] = {{"name", s.generator->name}, {"params", s.generator->params}};
    if (s.calibration)
        doc["calibration"] = {{"center", {(*s.calibration)[0].x, (*s.calibration)[0].y}},
                              {"corner", {(*s.calibration)[1].x, (*s.calibration)[1].y}}};
    if (!s.output_path.empty()) doc["output"] = s.output_path.string();
    if (s.config_path) doc["config"] = s.config_path->string();
    if (!s.config_overrides.empty()) doc["config_overrides"] = s.config_overrides;
    if (!s.initial_positions.empty()) {
        json a = json::array();
        for (const Vec2& p : s.initial_positions) a.push_back({p.x, p.y});
        doc["initial_positions"] = a;
    }
    return doc;
}

Scenario resolve_scenario(const ScenarioSpec& spec) {
    if (spec.robot_count < 1) throw ScenarioError("robot_count must be ≥ 1");
    Scenario sc;
    if (spec.scene.rfind("builtin:", 0) == 0)
        sc.scene = builtin_scene(spec.scene.substr(8));
    else
        sc.scene = load_scene(spec.scene);

    json cfg = spec.config_path ? config_to_json(load_config(*spec.config_path)) : config_to_json(EngineConfig{});
    if (!spec.config_overrides.empty()) cfg.merge_patch(spec.config_overrides);
    cfg["seed"] = spec.seed;
    sc.config = config_from_json(cfg);

    std::optional<Trajectory> traj;
    if (spec.trajectory_path) traj = load_trajectory(*spec.trajectory_path);
    if (spec.generator) traj = generate(*spec.generator, sc.scene, spec.seed, spec.duration);
    if (traj) {
        if (traj->frame == "tracking") {
            if (!spec.calibration) throw ScenarioError("trajectory in tracking frame needs a calibration");
            const Calibration cal = calibrate((*spec.calibration)[0], (*spec.calibration)[1], sc.scene.bounds());
            for (auto& s : traj->samples) {
                const Vec2 m = cal.apply(s.pos.xy());
                s.pos = {m.x, m.y, s.pos.z};
            }
        }
        sc.track = std::move(traj->samples);
    }

    sc.robot_count = spec.robot_count;
    sc.duration = spec.duration;
    sc.mode = spec.mode;
    sc.trial_period = spec.trial_period;
    sc.initial_yaw = spec.initial_yaw;
    sc.initial_positions = spec.initial_positions;
    if (sc.initial_positions.empty()) sc.initial_positions = default_layout(sc.robot_count, sc.scene.bounds());
    return sc;
}

std::vector<Vec2> random_targets(int n, const MatBounds& mat, double margin, double separation,
                                 std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(margin, mat.width - margin);
    std::uniform_real_distribution<double> uy(margin, mat.depth - margin);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        std::vector<Vec2> pts;
        for (int tries = 0; static_cast<int>(pts.size()) < n && tries < 1000; ++tries) {
            const Vec2 p{ux(rng), uy(rng)};
            bool ok = true;
            for (const Vec2& q : pts) ok = ok && distance(p, q) >= separation;
            if (ok) pts.push_back(p);
        }
        if (static_cast<int>(pts.size()) == n) return pts;
    }
    throw ScenarioError("cannot place " + std::to_string(n) + " separated targets");
}

MetricsReport run_scenario(const Scenario& sc, const TickObserver& observer) {
    if (sc.robot_count < 1) throw ScenarioError("robot_count must be ≥ 1");
    World w = make_world(sc.scene, sc.config, sc.initial_positions, sc.initial_yaw);
    const double dt = sc.config.dt;
    const auto ticks = static_cast<std::int64_t>(std::floor(sc.duration / dt + 1e-9));
    const auto period_ticks = std::max<std::int64_t>(1, std::llround(sc.trial_period / dt));
    auto rng = scenario_rng(sc.config.seed, 0x7a5u);
    const double margin = sc.config.rvo.agent_radius;
    const double separation = target_separation(sc.config.rvo);

    if (observer) observer(w);
    for (std::int64_t k = 0; k < ticks; ++k) {
        if (sc.mode == ScenarioMode::Reach && k % period_ticks == 0)
            issue_targets(w, random_targets(sc.robot_count, sc.scene.bounds(), margin, separation, rng));
        if (!sc.track.empty()) w.finger = resample(sc.track, w.time);
        advance(w);
        if (observer) observer(w);
    }
    return finalize_metrics(w);
}

MetricsReport run_scenario(const ScenarioSpec& spec, const TickObserver& observer) {
    return run_scenario(resolve_scenario(spec), observer);
}

Scenario reach_benchmark(int robots, int trials, std::uint64_t seed, double trial_period) {
    if (robots < 1) throw ScenarioError("robot_count must be ≥ 1");
    Scenario sc;
    sc.scene = Scene::empty();
    sc.config.seed = seed;
    sc.robot_count = robots;
    sc.mode = ScenarioMode::Reach;
    sc.trial_period = trial_period;
    sc.duration = trials * trial_period;
    auto rng = scenario_rng(seed, 0x1417u);
    sc.initial_positions =
        random_targets(robots, sc.scene.bounds(), sc.config.rvo.agent_radius, target_separation(sc.config.rvo), rng);
    return sc;
}

}  // namespace hapticbots
