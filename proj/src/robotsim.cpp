#include "hapticbots/robotsim.hpp"

#include <algorithm>
#include <cmath>

namespace hapticbots {

namespace {

constexpr double kTimeEps = 1e-9;

bool finite_command(const MotionCommand& c) {
    return std::isfinite(c.v.x) && std::isfinite(c.v.y) && std::isfinite(c.omega) && std::isfinite(c.height_target) &&
           std::isfinite(c.tilt_target);
}

Vec2 cap_speed(Vec2 v, double v_max) {
    const double s = norm(v);
    return s > v_max ? v * (v_max / s) : v;
}

double approach(double value, double target, double max_step) {
    return value + std::clamp(target - value, -max_step, max_step);
}

}  // namespace

NoiseSigmas PlantConfig::calibrated_noise(const SensorErrorTargets& mae, double pos_quantum, double yaw_quantum) {
    const double half_normal = std::sqrt(std::numbers::pi / 2.0);
    // Rounding to a quantum adds a uniform error of variance q^2 / 12 per axis.
    const auto remove_quantization = [](double sigma, double q) {
        return std::sqrt(std::max(0.0, sigma * sigma - q * q / 12.0));
    };
    NoiseSigmas s;
    s.pos = remove_quantization(mae.pos / half_normal, pos_quantum);
    s.yaw = remove_quantization(mae.yaw * half_normal, yaw_quantum);
    s.height = mae.height * half_normal;
    s.tilt = mae.tilt * half_normal;
    return s;
}

void PlantConfig::validate() const {
    if (!(v_max > 0 && omega_max > 0 && reel_rate > 0 && height_min > 0 && height_max > height_min && tilt_max > 0 &&
          pos_quantum > 0 && yaw_quantum > 0 && cap_halfwidth > 0))
        throw std::invalid_argument("plant rates and ranges must be strictly positive");
    if (!(latency >= 0.0)) throw std::invalid_argument("plant latency must be non-negative");
    if (noise.pos < 0 || noise.yaw < 0 || noise.height < 0 || noise.tilt < 0)
        throw std::invalid_argument("noise sigmas must be non-negative");
}

void enqueue_command(RobotState& state, const MotionCommand& cmd, double now) {
    state.command_queue.push_back({cmd, now});
}

RobotState step_robot(const RobotState& state, const PlantConfig& cfg, double now, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_robot needs dt > 0");
    RobotState next = state;
    const double end = now + dt;
    double t = now;
    // Commands activate at enqueue + latency, which may fall inside the step;
    // the step is integrated piecewise between activations.
    while (true) {
        while (!next.command_queue.empty() && next.command_queue.front().enqueue_time + cfg.latency <= t + kTimeEps) {
            const QueuedCommand q = next.command_queue.front();
            next.command_queue.pop_front();
            if (next.grasped) continue;
            if (!finite_command(q.command)) {
                ++next.faults;
                continue;
            }
            next.active = q.command;
            next.last_enqueue = q.enqueue_time;
            next.last_activation = q.enqueue_time + cfg.latency;
        }
        if (t >= end - kTimeEps) break;
        double seg_end = end;
        if (!next.command_queue.empty())
            seg_end = std::min(seg_end, next.command_queue.front().enqueue_time + cfg.latency);
        const double h = seg_end - t;
        if (!next.grasped && h > 0.0) {
            next.v = cap_speed(next.active.v, cfg.v_max);
            next.pos = cfg.bounds.clamp(next.pos + next.v * h);
            next.yaw = wrap_degrees(next.yaw + std::clamp(next.active.omega, -cfg.omega_max, cfg.omega_max) * h);
            const double h_target = std::clamp(next.active.height_target, cfg.height_min, cfg.height_max);
            next.height =
                std::clamp(approach(next.height, h_target, cfg.reel_rate * h), cfg.height_min, cfg.height_max);
            const double t_target = std::clamp(next.active.tilt_target, -cfg.tilt_max, cfg.tilt_max);
            next.tilt = std::clamp(approach(next.tilt, t_target, cfg.tilt_rate() * h), -cfg.tilt_max, cfg.tilt_max);
        }
        t = seg_end;
    }
    if (next.grasped) next.v = {};
    return next;
}

Vec2 predict_position(const RobotState& state, Vec2 pos, const PlantConfig& cfg, double now) {
    if (state.grasped) return pos;
    MotionCommand active = state.active;
    auto it = state.command_queue.begin();
    // Integrates from now to the instant a command sent now would activate.
    const double end = now + cfg.latency;
    double t = now;
    while (true) {
        while (it != state.command_queue.end() && it->enqueue_time + cfg.latency <= t + kTimeEps) {
            if (finite_command(it->command)) active = it->command;
            ++it;
        }
        if (t >= end - kTimeEps) break;
        double seg_end = end;
        if (it != state.command_queue.end()) seg_end = std::min(seg_end, it->enqueue_time + cfg.latency);
        pos = cfg.bounds.clamp(pos + cap_speed(active.v, cfg.v_max) * (seg_end - t));
        t = seg_end;
    }
    return pos;
}

double quantize(double value, double quantum) { return quantum * std::round(value / quantum); }

SensorReading read_sensors(const RobotState& state, const PlantConfig& cfg, std::mt19937_64& rng) {
    std::normal_distribution<double> unit(0.0, 1.0);
    const auto noisy = [&](double value, double sigma) { return sigma > 0.0 ? value + sigma * unit(rng) : value; };
    SensorReading r;
    r.pos.x = quantize(noisy(state.pos.x, cfg.noise.pos), cfg.pos_quantum);
    r.pos.y = quantize(noisy(state.pos.y, cfg.noise.pos), cfg.pos_quantum);
    r.yaw = wrap_degrees(quantize(noisy(state.yaw, cfg.noise.yaw), cfg.yaw_quantum));
    r.height = noisy(state.height, cfg.noise.height);
    r.tilt = noisy(state.tilt, cfg.noise.tilt);
    return r;
}

RobotState grasp(const RobotState& state, bool lift) {
    RobotState next = state;
    next.grasped = lift;
    if (lift) next.v = {};
    return next;
}

RobotState place(const RobotState& state, Vec2 pos, std::span<const Vec2> others, const MatBounds& bounds,
                 double agent_radius) {
    if (!bounds.contains(pos)) throw PlacementError("placement outside the mat");
    for (const Vec2& o : others)
        if (distance(o, pos) < 2.0 * agent_radius) throw PlacementError("placement overlaps another robot");
    RobotState next = state;
    next.pos = pos;
    next.v = {};
    next.command_queue.clear();
    next.active.v = {};
    next.active.omega = 0.0;
    next.grasped = false;
    return next;
}

}  // namespace hapticbots
