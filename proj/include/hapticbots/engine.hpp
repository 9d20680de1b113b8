#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "hapticbots/assignment.hpp"
#include "hapticbots/hand.hpp"
#include "hapticbots/motion.hpp"
#include "hapticbots/regions.hpp"
#include "hapticbots/robotsim.hpp"
#include "hapticbots/scene.hpp"

namespace hapticbots {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EngineConfig {
    double dt = 1.0 / 60.0;
    PlantConfig plant{};
    RvoParams rvo{};
    RampParams ramp{};
    YawParams yaw{};
    double grid_spacing = kDefaultGridSpacing;
    double touch_threshold = kDefaultTouchThreshold;
    double refresh_period = 0.5;
    int heightmap_rows_per_tick = 8;  // <= 0 samples the whole map in one tick
    double hysteresis = kDefaultHysteresis;
    double contact_offset = 0.005;    // fingertip within this of the surface counts as touching
    double tracking_radius = 0.03;    // robot-to-finger distance reported as "under the finger"
    double gradient_epsilon = 1e-3;   // flatter than this keeps the previous yaw goal
    bool avoid_hand = false;
    bool latency_compensation = true;
    std::uint64_t seed = 1;

    void validate() const;
};

nlohmann::json config_to_json(const EngineConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
EngineConfig config_from_json(const nlohmann::json& doc);
EngineConfig load_config(const std::filesystem::path& path);

// Identifies a target across ticks: region track id (or -1 for externally
// issued targets) and slot within the region.
struct TargetKey {
    int track = 0;
    int slot = 0;
    constexpr bool operator==(const TargetKey&) const = default;
};

struct RobotController {
    std::mt19937_64 sensor_rng;
    double desired_yaw = 0.0;
    std::optional<TargetKey> key;
    Vec2 target{};
    SensorReading last_reading{};
};

struct MetricsReport {
    double duration = 0.0;
    std::int64_t ticks = 0;
    double mean_reach_time = 0.0;
    std::vector<double> reach_times;
    int timeouts = 0;
    double contact_height_error_mean = 0.0;
    double contact_height_error_max = 0.0;
    std::int64_t contact_ticks = 0;
    double contact_tracking_fraction = 0.0;  // share of contact ticks with a robot within tracking_radius
    double min_pairwise_distance = 0.0;      // +inf with fewer than two robots
    int collision_count = 0;
    int reassignments = 0;
    double assignment_churn = 0.0;  // reassignments per second
    int faults = 0;

    bool operator==(const MetricsReport&) const = default;
};

nlohmann::json metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& doc);
void write_metrics_csv(std::ostream& out, const MetricsReport& m);

// Running tallies behind MetricsReport.
struct MetricsAccumulator {
    std::optional<double> trial_start;
    std::vector<double> reach_times;
    int timeouts = 0;
    bool acquired = false;
    double contact_error_sum = 0.0;
    double contact_error_max = 0.0;
    std::int64_t contact_ticks = 0;
    std::int64_t contact_tracked = 0;
    double min_pairwise = std::numeric_limits<double>::infinity();
    int collisions = 0;
    int reassignments = 0;
    int engine_faults = 0;
};

struct World {
    std::int64_t tick = 0;
    double time = 0.0;
    Scene scene;
    std::shared_ptr<const HeightMap> heightmap;
    std::vector<Region> regions;
    RegionTracker tracker;
    std::vector<RobotState> robots;
    std::vector<RobotController> controllers;
    std::optional<FingerSample> finger;
    Assignment assignment;
    std::vector<TargetKey> pair_keys;  // parallel to assignment.pairs
    EngineConfig config;
    std::uint64_t rng_seed = 1;

    // Externally issued targets (reach benchmark) replace region targets when set.
    std::optional<std::vector<Vec2>> external_targets;
    bool targets_issued = false;

    // Amortized heightmap refresh.
    HeightMap pending;
    int pending_row = -1;
    double next_refresh = 0.0;
    bool force_resolve = false;

    MetricsAccumulator metrics;
};

// Default robot layout: a centered grid with one robot per cell.
std::vector<Vec2> default_layout(int n, const MatBounds& mat);

World make_world(const Scene& scene, const EngineConfig& config, const std::vector<Vec2>& robot_positions,
                 double initial_yaw = 0.0);

// One 60 Hz control cycle: refresh, regions, targets, assignment, height/tilt
// goals, velocities with collision avoidance, plant step, metrics.
void advance(World& world);
World tick(World world);

// Replaces the scene and resamples the height map immediately.
void load_scene_into(World& world, const Scene& scene);
// Adds robots at free default slots or removes the highest ids.
void set_robot_count(World& world, int count);
void issue_targets(World& world, std::vector<Vec2> targets);

double surface_height(const Scene& scene, Vec2 p);
// Height of the robot's tilted top plate extended to `p`.
double robot_surface_at(const RobotState& robot, Vec2 p);
bool finger_in_contact(const World& world);

MetricsReport finalize_metrics(const World& world);

}  // namespace hapticbots
