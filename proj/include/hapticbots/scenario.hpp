#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hapticbots/engine.hpp"
#include "hapticbots/hand.hpp"
#include "hapticbots/scene.hpp"

namespace hapticbots {

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ScenarioMode {
    Encounter,  // targets follow scene regions and the finger
    Reach,      // random targets re-issued every trial period
};

struct GeneratorSpec {
    std::string name;  // lateral_sweep | tap | random_walk | hold
    nlohmann::json params = nlohmann::json::object();
};

// Scenario file contents (paths resolved against the file's directory).
struct ScenarioSpec {
    std::string scene;  // file path or "builtin:<name>"
    std::optional<std::filesystem::path> trajectory_path;
    std::optional<GeneratorSpec> generator;
    std::optional<std::array<Vec2, 2>> calibration;  // tracking-frame center and corner touches
    int robot_count = 7;
    double duration = 0.0;
    std::uint64_t seed = 1;
    std::filesystem::path output_path;
    ScenarioMode mode = ScenarioMode::Encounter;
    double trial_period = 5.0;
    std::optional<std::filesystem::path> config_path;
    nlohmann::json config_overrides = nlohmann::json::object();
    std::vector<Vec2> initial_positions;
    double initial_yaw = 0.0;
};

ScenarioSpec parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ScenarioSpec load_scenario_file(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const ScenarioSpec& spec);

// Everything needed to run, with files loaded and defaults filled in.
struct Scenario {
    Scene scene;
    std::vector<FingerSample> track;  // mat frame
    EngineConfig config;
    int robot_count = 1;
    double duration = 0.0;
    ScenarioMode mode = ScenarioMode::Encounter;
    double trial_period = 5.0;
    std::vector<Vec2> initial_positions;
    double initial_yaw = 0.0;
};

Scenario resolve_scenario(const ScenarioSpec& spec);

// Random reach targets: uniform over the mat inset by `margin`, pairwise at
// least `separation` apart.
std::vector<Vec2> random_targets(int n, const MatBounds& mat, double margin, double separation,
                                 std::mt19937_64& rng);

using TickObserver = std::function<void(const World&)>;

MetricsReport run_scenario(const Scenario& scenario, const TickObserver& observer = {});
MetricsReport run_scenario(const ScenarioSpec& spec, const TickObserver& observer = {});

// Reach benchmark shared by the CLI and the acceptance suite.
Scenario reach_benchmark(int robots, int trials, std::uint64_t seed, double trial_period = 5.0);

}  // namespace hapticbots
