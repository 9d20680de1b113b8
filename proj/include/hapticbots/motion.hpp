#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "hapticbots/geometry.hpp"

namespace hapticbots {

inline constexpr double kStopDistance = 0.002;
inline constexpr double kStopAngleDeg = 5.0;
inline constexpr double kMaxPlanarSpeed = 0.24;
inline constexpr double kMaxYawRateDeg = 1500.0;
inline constexpr double kAgentRadius = 0.0333;

struct MotionCommand {
    Vec2 v{};
    double omega = 0.0;  // deg/s
    double height_target = 0.08;
    double tilt_target = 0.0;  // degrees
    constexpr bool operator==(const MotionCommand&) const = default;
};

struct RampParams {
    double gain = 3.5;  // 1/s
    double stop_distance = kStopDistance;
};

// Distance-proportional approach speed, capped at v_max; zero inside the stop band.
Vec2 preferred_velocity(Vec2 pos, Vec2 target, double v_max, const RampParams& ramp = {});

struct RvoParams {
    double time_horizon = 1.0;
    double neighbor_radius = 0.20;
    double agent_radius = kAgentRadius;
    // Added to the combined radius when testing candidates; absorbs sensing
    // noise and the gap between command and actuation.
    double safety_margin = 0.012;
    double max_speed = kMaxPlanarSpeed;
    int candidates = 128;
};

struct RvoAgent {
    Vec2 pos{};
    Vec2 velocity{};
    Vec2 preferred{};
    // Static agents keep their velocity and take no avoidance responsibility.
    bool is_static = false;
    // Distance left to the agent's goal. A candidate that gets there before a
    // predicted collision counts as free, since the agent stops at its goal.
    double goal_distance = std::numeric_limits<double>::infinity();
};

// Time until two discs (combined radius) touch under relative velocity `rel`
// of the query agent with respect to the neighbor at offset `offset`.
// Overlapping pairs report 0 while closing and +inf while separating.
double time_to_collision(Vec2 offset, Vec2 rel, double combined_radius);

// Sampling-based reciprocal velocity obstacles: per agent, the candidate with
// least deviation from its preferred velocity among those outside every
// neighbor's RVO; if none is free, the one whose earliest collision is latest.
std::vector<Vec2> rvo_step(std::span<const RvoAgent> agents, const RvoParams& params, std::uint64_t seed);

struct YawParams {
    double gain = 10.0;  // 1/s
    double stop_band_deg = kStopAngleDeg;
};

// Shortest-arc error in (-180, 180]; an exact half turn goes counter-clockwise.
double yaw_error(double current_deg, double desired_deg);

double yaw_controller(double current_deg, double desired_deg, double omega_max, const YawParams& params = {});

// Of the two yaw headings that lay the tilt axis along the surface gradient,
// the one closer to `reference_deg`.
double gradient_aligned_yaw(Vec2 gradient, double reference_deg);

}  // namespace hapticbots
