#include "hapticbots/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hapticbots {

namespace {

constexpr double kTimeEps = 1e-9;

std::mt19937_64 sensor_rng_for(std::uint64_t seed, int robot) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(robot), 0x5e115u};
    return std::mt19937_64(seq);
}

RobotController make_controller(const EngineConfig& cfg, int id, double yaw) {
    RobotController c{sensor_rng_for(cfg.seed, id), yaw, std::nullopt, {}, {}};
    return c;
}

// Keeps both actuator attachment points on the mat for any yaw.
Vec2 probe_point(const Scene& scene, Vec2 p, double halfwidth) {
    const auto& b = scene.bounds();
    return {std::clamp(p.x, halfwidth, b.width - halfwidth), std::clamp(p.y, halfwidth, b.depth - halfwidth)};
}

Vec2 surface_gradient(const Scene& scene, Vec2 p, double h) {
    const double gx = (scene.raycast_down({p.x + h, p.y}).height - scene.raycast_down({p.x - h, p.y}).height) / (2 * h);
    const double gy = (scene.raycast_down({p.x, p.y + h}).height - scene.raycast_down({p.x, p.y - h}).height) / (2 * h);
    return {gx, gy};
}

Vec2 last_commanded_velocity(const RobotState& r) {
    return r.command_queue.empty() ? r.active.v : r.command_queue.back().command.v;
}

void start_trial(World& w) {
    if (w.metrics.trial_start) ++w.metrics.timeouts;
    w.metrics.trial_start = w.time;
}

void refresh_heightmap(World& w, bool& refreshed) {
    const EngineConfig& cfg = w.config;
    if (w.pending_row < 0 && w.time + kTimeEps >= w.next_refresh) {
        w.pending.grid = GridGeometry::covering(w.scene.bounds(), cfg.grid_spacing);
        w.pending.cells.assign(w.pending.grid.size(), 0.0);
        w.pending_row = 0;
        w.next_refresh += cfg.refresh_period;
    }
    if (w.pending_row < 0) return;
    const int ny = w.pending.grid.ny;
    const int rows = cfg.heightmap_rows_per_tick > 0 ? cfg.heightmap_rows_per_tick : ny;
    const int end = std::min(ny, w.pending_row + rows);
    sample_heightmap_rows(w.scene, w.pending, w.pending_row, end);
    w.pending_row = end;
    if (w.pending_row < ny) return;
    w.pending.stamp = w.time;
    w.heightmap = std::make_shared<const HeightMap>(w.pending);
    w.pending_row = -1;
    refreshed = true;
}

struct Target {
    Vec2 point;
    TargetKey key;
};

std::vector<Target> current_targets(const World& w, int active_robots) {
    std::vector<Target> out;
    if (w.external_targets) {
        for (int i = 0; i < static_cast<int>(w.external_targets->size()); ++i)
            out.push_back({(*w.external_targets)[i], {-1, i}});
        return out;
    }
    if (active_robots == 0 || w.regions.empty() || !w.heightmap) return out;
    std::optional<Vec2> finger;
    if (w.finger) finger = w.scene.bounds().clamp(w.finger->pos.xy());
    for (const auto& t : prioritize_targets(w.regions, w.heightmap->grid, finger, active_robots))
        out.push_back({t.point, {w.tracker.track_ids[t.region], t.slot}});
    return out;
}

bool keys_changed(const World& w, const std::vector<Target>& targets) {
    std::vector<std::pair<int, int>> have, want;
    for (const auto& k : w.pair_keys) have.push_back({k.track, k.slot});
    for (const auto& t : targets) want.push_back({t.key.track, t.key.slot});
    std::sort(have.begin(), have.end());
    std::sort(want.begin(), want.end());
    // Every assigned key must survive, and no new target may appear unserved
    // while robots are idle.
    for (const auto& k : have)
        if (!std::binary_search(want.begin(), want.end(), k)) return true;
    return have.size() != want.size();
}

void update_assignment(World& w, const std::vector<Target>& targets, const std::vector<int>& active,
                       const std::vector<Vec2>& positions, bool resolve) {
    auto find_target = [&](TargetKey key) -> int {
        for (int i = 0; i < static_cast<int>(targets.size()); ++i)
            if (targets[i].key == key) return i;
        return -1;
    };

    if (!resolve) {
        for (std::size_t i = 0; i < w.assignment.pairs.size(); ++i) {
            const int t = find_target(w.pair_keys[i]);
            if (t >= 0) {
                w.assignment.pairs[i].target = t;
                w.assignment.pairs[i].point = targets[t].point;
            }
        }
        return;
    }

    std::vector<Vec2> active_pos;
    for (int r : active) active_pos.push_back(positions[r]);
    std::vector<Vec2> points;
    for (const auto& t : targets) points.push_back(t.point);

    // Previous pairs, re-expressed in active-robot indices at current target positions.
    Assignment prev;
    for (std::size_t i = 0; i < w.assignment.pairs.size(); ++i) {
        const auto it = std::find(active.begin(), active.end(), w.assignment.pairs[i].robot);
        const int t = find_target(w.pair_keys[i]);
        if (it == active.end() || t < 0) continue;
        prev.pairs.push_back({static_cast<int>(it - active.begin()), t, points[t]});
    }
    std::sort(prev.pairs.begin(), prev.pairs.end(),
              [](const AssignedPair& a, const AssignedPair& b) { return a.robot < b.robot; });

    const Assignment next = w.external_targets ? solve_munkres(active_pos, points)
                                               : reassign_policy(prev, active_pos, points, w.config.hysteresis);

    Assignment mapped;
    std::vector<TargetKey> keys;
    for (const auto& p : next.pairs) {
        mapped.pairs.push_back({active[p.robot], p.target, p.point});
        keys.push_back(targets[p.target].key);
    }
    mapped.cost = next.cost;
    mapped.unserved = next.unserved;

    int changed = 0;
    for (std::size_t r = 0; r < w.robots.size(); ++r) {
        std::optional<TargetKey> now_key;
        for (std::size_t i = 0; i < mapped.pairs.size(); ++i)
            if (mapped.pairs[i].robot == static_cast<int>(r)) now_key = keys[i];
        if (now_key != w.controllers[r].key) ++changed;
        w.controllers[r].key = now_key;
    }
    w.metrics.reassignments += changed;
    w.assignment = std::move(mapped);
    w.pair_keys = std::move(keys);
    if (changed > 0 || w.targets_issued) {
        if (w.assignment.pairs.empty())
            w.metrics.trial_start.reset();
        else
            start_trial(w);
    }
}

void update_metrics(World& w) {
    auto& m = w.metrics;
    const double collide = 2.0 * w.config.rvo.agent_radius;
    for (std::size_t i = 0; i < w.robots.size(); ++i) {
        if (w.robots[i].grasped) continue;
        for (std::size_t j = i + 1; j < w.robots.size(); ++j) {
            if (w.robots[j].grasped) continue;
            const double d = distance(w.robots[i].pos, w.robots[j].pos);
            m.min_pairwise = std::min(m.min_pairwise, d);
            if (d < collide) ++m.collisions;
        }
    }

    if (m.trial_start && !w.assignment.pairs.empty()) {
        bool all_in = true;
        for (const auto& p : w.assignment.pairs) {
            const RobotState& r = w.robots[p.robot];
            all_in = all_in && distance(r.pos, p.point) <= w.config.ramp.stop_distance &&
                     std::abs(yaw_error(r.yaw, w.controllers[p.robot].desired_yaw)) <= w.config.yaw.stop_band_deg;
        }
        if (all_in) {
            m.reach_times.push_back(w.time - *m.trial_start);
            m.trial_start.reset();
        }
    }

    if (finger_in_contact(w)) {
        const Vec2 f = w.finger->pos.xy();
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < w.robots.size(); ++i) {
            if (w.robots[i].grasped) continue;
            const double d = distance(w.robots[i].pos, f);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        if (best >= 0) {
            const double err = std::abs(robot_surface_at(w.robots[best], f) - surface_height(w.scene, f));
            const bool tracked = best_d <= w.config.tracking_radius;
            if (!m.acquired && tracked && err <= w.config.contact_offset) m.acquired = true;
            if (m.acquired) {
                ++m.contact_ticks;
                m.contact_error_sum += err;
                m.contact_error_max = std::max(m.contact_error_max, err);
                if (tracked) ++m.contact_tracked;
            }
        }
    }
}

}  // namespace

void EngineConfig::validate() const {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    try {
        plant.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(rvo.time_horizon > 0 && rvo.neighbor_radius > 0 && rvo.agent_radius > 0 && rvo.max_speed > 0))
        throw ConfigError("RVO parameters must be strictly positive");
    if (rvo.safety_margin < 0) throw ConfigError("RVO safety margin must be non-negative");
    if (rvo.candidates < 1) throw ConfigError("RVO needs at least one sampled candidate");
    if (!(ramp.gain > 0 && ramp.stop_distance >= 0)) throw ConfigError("ramp gain must be positive");
    if (!(yaw.gain > 0 && yaw.stop_band_deg >= 0)) throw ConfigError("yaw gain must be positive");
    if (!(grid_spacing > 0 && touch_threshold > 0 && refresh_period > 0))
        throw ConfigError("grid spacing, threshold and refresh period must be positive");
    if (!(hysteresis >= 0 && contact_offset >= 0 && tracking_radius > 0))
        throw ConfigError("hysteresis, contact offset and tracking radius must be non-negative");
}

std::vector<Vec2> default_layout(int n, const MatBounds& mat) {
    std::vector<Vec2> out;
    if (n <= 0) return out;
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    const int rows = (n + cols - 1) / cols;
    for (int i = 0; i < n; ++i) {
        const int cx = i % cols, cy = i / cols;
        out.push_back({mat.width * (cx + 0.5) / cols, mat.depth * (cy + 0.5) / rows});
    }
    return out;
}

World make_world(const Scene& scene, const EngineConfig& config, const std::vector<Vec2>& robot_positions,
                 double initial_yaw) {
    config.validate();
    World w;
    w.scene = scene;
    w.config = config;
    w.config.plant.bounds = scene.bounds();
    w.rng_seed = config.seed;
    for (int i = 0; i < static_cast<int>(robot_positions.size()); ++i) {
        RobotState r;
        r.id = i;
        r.pos = robot_positions[i];
        r.yaw = wrap_degrees(initial_yaw);
        r.height = config.plant.height_min;
        r.active.height_target = config.plant.height_min;
        w.robots.push_back(r);
        w.controllers.push_back(make_controller(config, i, r.yaw));
    }
    load_scene_into(w, scene);
    return w;
}

void load_scene_into(World& w, const Scene& scene) {
    w.scene = scene;
    w.config.plant.bounds = scene.bounds();
    w.heightmap = std::make_shared<const HeightMap>(build_heightmap(scene, w.time, w.config.grid_spacing));
    w.regions = extract_regions(*w.heightmap, w.config.touch_threshold);
    w.tracker.update(w.regions);
    w.pending_row = -1;
    w.next_refresh = w.time + w.config.refresh_period;
    w.force_resolve = true;
}

void set_robot_count(World& w, int count) {
    if (count < 0) throw std::invalid_argument("robot count must be non-negative");
    while (static_cast<int>(w.robots.size()) > count) {
        const int id = static_cast<int>(w.robots.size()) - 1;
        w.robots.pop_back();
        w.controllers.pop_back();
        for (std::size_t i = 0; i < w.assignment.pairs.size(); ++i)
            if (w.assignment.pairs[i].robot == id) {
                w.assignment.pairs.erase(w.assignment.pairs.begin() + static_cast<long>(i));
                w.pair_keys.erase(w.pair_keys.begin() + static_cast<long>(i));
                break;
            }
    }
    const auto slots = default_layout(std::max(count, 1) + 8, w.scene.bounds());
    for (int id = static_cast<int>(w.robots.size()); id < count; ++id) {
        // First layout slot clear of every existing robot.
        Vec2 pos = slots.front();
        for (const Vec2& s : slots) {
            bool free = true;
            for (const auto& r : w.robots) free = free && distance(r.pos, s) >= 2.5 * w.config.rvo.agent_radius;
            if (free) {
                pos = s;
                break;
            }
        }
        RobotState r;
        r.id = id;
        r.pos = pos;
        r.height = w.config.plant.height_min;
        r.active.height_target = w.config.plant.height_min;
        w.robots.push_back(r);
        w.controllers.push_back(make_controller(w.config, id, 0.0));
    }
    w.force_resolve = true;
}

void issue_targets(World& w, std::vector<Vec2> targets) {
    w.external_targets = std::move(targets);
    w.targets_issued = true;
}

double surface_height(const Scene& scene, Vec2 p) { return scene.raycast_down(scene.bounds().clamp(p)).height; }

double robot_surface_at(const RobotState& robot, Vec2 p) {
    return robot.height + std::tan(deg_to_rad(robot.tilt)) * dot(p - robot.pos, heading(robot.yaw));
}

bool finger_in_contact(const World& w) {
    if (!w.finger) return false;
    const Vec2 f = w.finger->pos.xy();
    if (!w.scene.bounds().contains(f)) return false;
    const auto s = w.scene.raycast_down(f);
    return s.hit && s.height > w.config.touch_threshold && w.finger->pos.z <= s.height + w.config.contact_offset;
}

void advance(World& w) {
    const EngineConfig& cfg = w.config;
    const double t = w.time;

    // Height map and regions.
    bool refreshed = false;
    refresh_heightmap(w, refreshed);
    bool regions_changed = false;
    if (refreshed) {
        w.regions = extract_regions(*w.heightmap, cfg.touch_threshold);
        regions_changed = w.tracker.update(w.regions);
    }

    // Sensing; planning uses where each robot will be once a new command lands.
    std::vector<int> active;
    std::vector<Vec2> control_pos(w.robots.size());
    for (std::size_t i = 0; i < w.robots.size(); ++i) {
        auto& ctl = w.controllers[i];
        ctl.last_reading = read_sensors(w.robots[i], cfg.plant, ctl.sensor_rng);
        control_pos[i] = cfg.latency_compensation
                             ? predict_position(w.robots[i], ctl.last_reading.pos, cfg.plant, t)
                             : ctl.last_reading.pos;
        if (!w.robots[i].grasped) active.push_back(static_cast<int>(i));
    }

    // Targets and assignment.
    const auto targets = current_targets(w, static_cast<int>(active.size()));
    const bool resolve = w.external_targets ? w.targets_issued
                                            : (refreshed || regions_changed || w.force_resolve || keys_changed(w, targets));
    update_assignment(w, targets, active, control_pos, resolve);
    w.targets_issued = false;
    w.force_resolve = false;

    std::vector<Vec2> preferred(w.robots.size());
    for (const auto& p : w.assignment.pairs) {
        w.controllers[p.robot].target = p.point;
        preferred[p.robot] = preferred_velocity(control_pos[p.robot], p.point, cfg.plant.v_max, cfg.ramp);
    }

    // Collision avoidance among free robots (and optionally the hand).
    std::vector<RvoAgent> agents;
    for (int r : active) {
        RvoAgent a{control_pos[r], last_commanded_velocity(w.robots[r]), preferred[r], false};
        if (const auto p = w.assignment.for_robot(r)) a.goal_distance = distance(control_pos[r], p->point);
        agents.push_back(a);
    }
    if (cfg.avoid_hand && w.finger && !agents.empty())
        agents.push_back({w.scene.bounds().clamp(w.finger->pos.xy()), {}, {}, true});
    const auto safe = rvo_step(agents, cfg.rvo, cfg.seed ^ (static_cast<std::uint64_t>(w.tick) * 0xD1B54A32D192ED03ULL));

    // Surface fitting at the sensed pose, then commands.
    for (std::size_t k = 0; k < active.size(); ++k) {
        const int r = active[k];
        auto& ctl = w.controllers[r];
        const SensorReading& s = ctl.last_reading;
        MotionCommand cmd;
        cmd.v = safe[k];
        try {
            const Vec2 probe = probe_point(w.scene, s.pos, cfg.plant.cap_halfwidth);
            cmd.height_target = w.scene.raycast_down(probe).height;
            const Vec2 g = surface_gradient(w.scene, probe, cfg.plant.cap_halfwidth);
            if (norm(g) > cfg.gradient_epsilon) ctl.desired_yaw = gradient_aligned_yaw(g, ctl.desired_yaw);
            cmd.tilt_target = sample_tilt(w.scene, probe, s.yaw, cfg.plant.cap_halfwidth).tilt_deg;
        } catch (const std::exception&) {
            ++w.metrics.engine_faults;
            cmd.height_target = cfg.plant.height_min;
            cmd.tilt_target = 0.0;
        }
        cmd.omega = yaw_controller(s.yaw, ctl.desired_yaw, cfg.plant.omega_max, cfg.yaw);
        enqueue_command(w.robots[r], cmd, t);
    }

    for (auto& r : w.robots) r = step_robot(r, cfg.plant, t, cfg.dt);

    ++w.tick;
    w.time = static_cast<double>(w.tick) * cfg.dt;
    update_metrics(w);
}

World tick(World world) {
    advance(world);
    return world;
}

MetricsReport finalize_metrics(const World& w) {
    const auto& m = w.metrics;
    MetricsReport out;
    out.duration = w.time;
    out.ticks = w.tick;
    out.reach_times = m.reach_times;
    double sum = 0.0;
    for (double r : m.reach_times) sum += r;
    out.mean_reach_time = m.reach_times.empty() ? 0.0 : sum / static_cast<double>(m.reach_times.size());
    out.timeouts = m.timeouts + (m.trial_start ? 1 : 0);
    out.contact_ticks = m.contact_ticks;
    out.contact_height_error_mean = m.contact_ticks ? m.contact_error_sum / static_cast<double>(m.contact_ticks) : 0.0;
    out.contact_height_error_max = m.contact_error_max;
    out.contact_tracking_fraction =
        m.contact_ticks ? static_cast<double>(m.contact_tracked) / static_cast<double>(m.contact_ticks) : 0.0;
    out.min_pairwise_distance = m.min_pairwise;
    out.collision_count = m.collisions;
    out.reassignments = m.reassignments;
    out.assignment_churn = w.time > 0.0 ? m.reassignments / w.time : 0.0;
    out.faults = m.engine_faults;
    for (const auto& r : w.robots) out.faults += r.faults;
    return out;
}

}  // namespace hapticbots
