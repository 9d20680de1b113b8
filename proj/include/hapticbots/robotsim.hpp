#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <stdexcept>

#include "hapticbots/geometry.hpp"
#include "hapticbots/motion.hpp"
#include "hapticbots/scene.hpp"

namespace hapticbots {

class PlacementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NoiseSigmas {
    double pos = 0.0;     // per axis, meters
    double yaw = 0.0;     // degrees
    double height = 0.0;  // meters
    double tilt = 0.0;    // degrees
    bool operator==(const NoiseSigmas&) const = default;
};

// Mean absolute sensing errors the default noise model reproduces.
struct SensorErrorTargets {
    double pos = 0.003;
    double yaw = 3.0;
    double height = 0.003;
    double tilt = 5.0;
};

struct PlantConfig {
    double v_max = kMaxPlanarSpeed;
    double omega_max = kMaxYawRateDeg;
    double reel_rate = 0.028;
    double height_min = 0.08;
    double height_max = 0.32;
    double tilt_max = kMaxTiltDeg;
    double latency = 0.080;
    double pos_quantum = 0.00142;
    double yaw_quantum = 1.0;
    double cap_halfwidth = kDefaultCapHalfwidth;
    NoiseSigmas noise = calibrated_noise(SensorErrorTargets{}, 0.00142, 1.0);
    std::uint64_t seed = 1;
    MatBounds bounds{};

    // Max tilt rate from differential reel extension, deg/s.
    double tilt_rate() const { return rad_to_deg(reel_rate / cap_halfwidth); }

    // Gaussian sigmas whose mean absolute error (after quantization) hits the
    // targets. Position error is the planar distance, so it follows a Rayleigh
    // law; the scalar channels are half-normal.
    static NoiseSigmas calibrated_noise(const SensorErrorTargets& mae, double pos_quantum, double yaw_quantum);

    void validate() const;
    bool operator==(const PlantConfig&) const = default;
};

struct QueuedCommand {
    MotionCommand command;
    double enqueue_time = 0.0;
};

struct RobotState {
    int id = 0;
    Vec2 pos{};
    double yaw = 0.0;  // degrees, (-180, 180]
    double height = 0.08;
    double tilt = 0.0;
    Vec2 v{};
    std::deque<QueuedCommand> command_queue;
    MotionCommand active{};
    double last_enqueue = -1.0;     // enqueue time of the active command, -1 before any
    double last_activation = -1.0;  // tick time it took effect
    bool grasped = false;
    int faults = 0;
};

void enqueue_command(RobotState& state, const MotionCommand& cmd, double now);

// Advances the plant from `now` to `now + dt`. Each queued command takes
// effect at exactly its enqueue time plus latency, mid-step if need be.
RobotState step_robot(const RobotState& state, const PlantConfig& cfg, double now, double dt);

// Where the robot will be when a command enqueued at `now` activates, given
// the commands already in flight. Starts from `pos` (typically a sensor reading).
Vec2 predict_position(const RobotState& state, Vec2 pos, const PlantConfig& cfg, double now);

struct SensorReading {
    Vec2 pos{};
    double yaw = 0.0;
    double height = 0.0;
    double tilt = 0.0;
};

double quantize(double value, double quantum);

SensorReading read_sensors(const RobotState& state, const PlantConfig& cfg, std::mt19937_64& rng);

RobotState grasp(const RobotState& state, bool lift);
RobotState place(const RobotState& state, Vec2 pos, std::span<const Vec2> others, const MatBounds& bounds,
                 double agent_radius = kAgentRadius);

}  // namespace hapticbots
