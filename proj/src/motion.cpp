#include "hapticbots/motion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace hapticbots {

Vec2 preferred_velocity(Vec2 pos, Vec2 target, double v_max, const RampParams& ramp) {
    if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
    const Vec2 delta = target - pos;
    const double dist = norm(delta);
    if (dist <= ramp.stop_distance) return {};
    const double speed = std::min(v_max, ramp.gain * dist);
    return delta * (speed / dist);
}

double time_to_collision(Vec2 offset, Vec2 rel, double combined_radius) {
    const double r2 = combined_radius * combined_radius;
    const double c = norm_sq(offset) - r2;
    const double b = dot(rel, offset);
    if (c <= 0.0) return b > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    const double a = norm_sq(rel);
    if (b <= 0.0 || a == 0.0) return std::numeric_limits<double>::infinity();
    const double disc = b * b - a * c;
    if (disc < 0.0) return std::numeric_limits<double>::infinity();
    return (b - std::sqrt(disc)) / a;
}

namespace {

double unit_double(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<Vec2> rvo_step(std::span<const RvoAgent> agents, const RvoParams& params, std::uint64_t seed) {
    const std::size_t n = agents.size();
    std::vector<Vec2> out(n);
    const double combined = 2.0 * params.agent_radius + params.safety_margin;
    const double neighbor_r2 = params.neighbor_radius * params.neighbor_radius;

    std::vector<Vec2> candidates;
    std::vector<std::size_t> neighbors;
    for (std::size_t i = 0; i < n; ++i) {
        const RvoAgent& self = agents[i];
        if (self.is_static) {
            out[i] = self.velocity;
            continue;
        }
        neighbors.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && norm_sq(agents[j].pos - self.pos) <= neighbor_r2) neighbors.push_back(j);
        if (neighbors.empty()) {
            out[i] = self.preferred;
            continue;
        }

        std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
        candidates.clear();
        candidates.push_back(self.preferred);
        candidates.push_back({});
        for (int k = 0; k < params.candidates; ++k) {
            const double r = params.max_speed * std::sqrt(unit_double(rng));
            const double theta = 2.0 * std::numbers::pi * unit_double(rng);
            candidates.push_back({r * std::cos(theta), r * std::sin(theta)});
        }

        Vec2 best_free{};
        double best_free_dev = std::numeric_limits<double>::infinity();
        Vec2 best_fallback{};
        double best_fallback_tc = -1.0;
        double best_fallback_dev = std::numeric_limits<double>::infinity();
        for (const Vec2& c : candidates) {
            const double dev = norm(c - self.preferred);
            if (dev >= best_free_dev) continue;
            const double speed = norm(c);
            const double horizon =
                speed > 0.0 ? std::min(params.time_horizon, self.goal_distance / speed) : params.time_horizon;
            double min_tc = std::numeric_limits<double>::infinity();
            for (std::size_t j : neighbors) {
                const RvoAgent& other = agents[j];
                // Reciprocal: each side absorbs half of the required change.
                // A neighbor resting at its goal is treated as fixed.
                const bool fixed = other.is_static || (other.preferred == Vec2{} && other.velocity == Vec2{});
                const Vec2 rel = fixed ? c - other.velocity : 2.0 * c - self.velocity - other.velocity;
                min_tc = std::min(min_tc, time_to_collision(other.pos - self.pos, rel, combined));
                if (min_tc < horizon && min_tc < best_fallback_tc) break;
            }
            if (min_tc >= horizon) {
                best_free = c;
                best_free_dev = dev;
            } else if (min_tc > best_fallback_tc || (min_tc == best_fallback_tc && dev < best_fallback_dev)) {
                best_fallback = c;
                best_fallback_tc = min_tc;
                best_fallback_dev = dev;
            }
        }
        out[i] = std::isfinite(best_free_dev) ? best_free : best_fallback;
    }
    return out;
}

double yaw_error(double current_deg, double desired_deg) { return wrap_degrees(desired_deg - current_deg); }

double yaw_controller(double current_deg, double desired_deg, double omega_max, const YawParams& params) {
    if (!(omega_max > 0.0)) throw std::invalid_argument("omega_max must be positive");
    const double err = yaw_error(current_deg, desired_deg);
    if (std::abs(err) <= params.stop_band_deg) return 0.0;
    return std::clamp(params.gain * err, -omega_max, omega_max);
}

double gradient_aligned_yaw(Vec2 gradient, double reference_deg) {
    const double along = rad_to_deg(std::atan2(gradient.y, gradient.x));
    const double flipped = wrap_degrees(along + 180.0);
    return std::abs(yaw_error(reference_deg, along)) <= std::abs(yaw_error(reference_deg, flipped)) ? along : flipped;
}

}  // namespace hapticbots
