// hapticbots: run scenarios, benchmark reach times, replay traces, serve a live session.

#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "hapticbots/replay.hpp"
#include "hapticbots/scenario.hpp"
#include "hapticbots/server.hpp"
#include "hapticbots/trace.hpp"

using namespace hapticbots;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

bool metrics_finite(const MetricsReport& m) {
    bool ok = std::isfinite(m.mean_reach_time) && std::isfinite(m.contact_height_error_mean) &&
              std::isfinite(m.contact_height_error_max) && std::isfinite(m.contact_tracking_fraction) &&
              std::isfinite(m.assignment_churn) && !std::isnan(m.min_pairwise_distance);
    for (double t : m.reach_times) ok = ok && std::isfinite(t);
    return ok;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const int v = std::stoi(item, &used);
        if (used != item.size()) throw std::invalid_argument("bad robot count '" + item + "'");
        out.push_back(v);
    }
    return out;
}

struct RunArgs {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<int> robots;
    std::optional<std::string> scene;
    std::optional<std::string> trajectory;
    std::optional<std::string> output;
    std::optional<double> duration;
    std::optional<std::string> config;
};

int cmd_run(const RunArgs& a) {
    ScenarioSpec spec = load_scenario_file(a.scenario);
    if (a.seed) spec.seed = *a.seed;
    if (a.robots) {
        if (*a.robots < 1) throw ScenarioError("robot_count must be ≥ 1");
        if (*a.robots != spec.robot_count) spec.initial_positions.clear();
        spec.robot_count = *a.robots;
    }
    if (a.scene) spec.scene = *a.scene;
    if (a.trajectory) {
        spec.trajectory_path = *a.trajectory;
        spec.generator.reset();
    }
    if (a.duration) {
        if (!(*a.duration >= 0)) throw ScenarioError("duration must be >= 0");
        spec.duration = *a.duration;
    }
    if (a.config) spec.config_path = *a.config;
    fs::path out_dir = a.output ? fs::path(*a.output) : spec.output_path;
    if (out_dir.empty()) out_dir = "out";

    const Scenario sc = resolve_scenario(spec);
    fs::create_directories(out_dir);
    std::ofstream trace_file(out_dir / "trace.csv");
    if (!trace_file) throw std::runtime_error("cannot write " + (out_dir / "trace.csv").string());
    TraceWriter writer(trace_file, sc.robot_count, sc.config.dt);
    const MetricsReport m = run_scenario(sc, [&](const World& w) { writer.write(w); });
    trace_file.close();

    if (!metrics_finite(m)) {
        std::cerr << "error: non-finite value in metrics\n";
        return 3;
    }
    std::ofstream(out_dir / "metrics.json") << metrics_to_json(m).dump(2) << '\n';
    std::ofstream csv(out_dir / "metrics.csv");
    write_metrics_csv(csv, m);

    std::cout << "ticks " << m.ticks << ", trials " << m.reach_times.size() << ", mean reach " << m.mean_reach_time
              << " s, min distance " << m.min_pairwise_distance << " m, collisions " << m.collision_count << '\n'
              << "wrote " << out_dir.string() << "/{metrics.json,metrics.csv,trace.csv}\n";
    return 0;
}

int cmd_bench(const std::string& robots, int trials, std::uint64_t seed, double period,
              const std::optional<std::string>& config) {
    std::printf("%6s %7s %14s %9s %13s\n", "robots", "trials", "mean_reach_s", "timeouts", "min_dist_m");
    for (int n : parse_int_list(robots)) {
        Scenario sc = reach_benchmark(n, trials, seed, period);
        if (config) {
            sc.config = load_config(*config);
            sc.config.seed = seed;
        }
        const MetricsReport m = run_scenario(sc);
        std::printf("%6d %7zu %14.3f %9d %13.4f\n", n, m.reach_times.size(), m.mean_reach_time, m.timeouts,
                    m.min_pairwise_distance);
    }
    return 0;
}

int cmd_replay(const std::string& path, double speed, std::optional<int> port) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace " + path);
    Trace trace;
    try {
        trace = read_trace(in);
    } catch (const TraceError& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return 2;
    }
    std::unique_ptr<StreamServer> server;
    if (port) {
        server = std::make_unique<StreamServer>("127.0.0.1", static_cast<unsigned short>(*port),
                                                [](const StreamMessage&, const StreamServer::ReplyFn&) {
                                                    throw StreamError("replay sessions accept no input");
                                                });
        server->start();
        std::cerr << "replay streaming on ws://127.0.0.1:" << server->port() << '\n';
    }
    replay_trace(trace, speed, &std::cout, server.get());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hapticbots: tabletop shape-display swarm simulator"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "run a scenario file and write metrics and trace");
    run_cmd->add_option("scenario", run.scenario, "scenario JSON file")->required();
    run_cmd->add_option("--seed", run.seed, "override the scenario seed");
    run_cmd->add_option("--robots", run.robots, "override the robot count");
    run_cmd->add_option("--scene", run.scene, "scene file or builtin:<name>");
    run_cmd->add_option("--trajectory", run.trajectory, "finger trajectory file");
    run_cmd->add_option("--output,-o", run.output, "output directory");
    run_cmd->add_option("--duration", run.duration, "simulated seconds");
    run_cmd->add_option("--config", run.config, "engine config JSON");

    std::string bench_robots = "1,3,7";
    int bench_trials = 100;
    std::uint64_t bench_seed = 1;
    double bench_period = 5.0;
    std::optional<std::string> bench_config;
    auto* bench_cmd = app.add_subcommand("bench", "reach-time benchmark with random targets");
    bench_cmd->add_option("--robots", bench_robots, "comma-separated robot counts")->capture_default_str();
    bench_cmd->add_option("--trials", bench_trials, "trials per robot count")->capture_default_str();
    bench_cmd->add_option("--seed", bench_seed, "random seed")->capture_default_str();
    bench_cmd->add_option("--period", bench_period, "seconds between target sets")->capture_default_str();
    bench_cmd->add_option("--config", bench_config, "engine config JSON");

    std::string replay_path;
    double replay_speed = 1.0;
    std::optional<int> replay_port;
    auto* replay_cmd = app.add_subcommand("replay", "re-emit a recorded trace as world_state JSON lines");
    replay_cmd->add_option("trace", replay_path, "trace.csv from a run")->required();
    replay_cmd->add_option("--speed", replay_speed, "playback speed, 0 for unpaced")->capture_default_str();
    replay_cmd->add_option("--port", replay_port, "also stream over WebSocket on this port");

    ServeOptions serve;
    std::optional<std::string> serve_config;
    std::uint64_t serve_seed = 1;
    auto* serve_cmd = app.add_subcommand("serve", "live session over WebSocket");
    serve_cmd->add_option("--port", serve.port, "listen port")->capture_default_str();
    serve_cmd->add_option("--address", serve.address, "listen address")->capture_default_str();
    serve_cmd->add_option("--config", serve_config, "engine config JSON");
    serve_cmd->add_option("--scene", serve.session.scene, "builtin scene")->capture_default_str();
    serve_cmd->add_option("--robots", serve.session.robots, "robot count")->capture_default_str();
    serve_cmd->add_option("--seed", serve_seed, "random seed")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(run);
        if (*bench_cmd) return cmd_bench(bench_robots, bench_trials, bench_seed, bench_period, bench_config);
        if (*replay_cmd) return cmd_replay(replay_path, replay_speed, replay_port);
        if (*serve_cmd) {
            if (serve_config) serve.session.config = load_config(*serve_config);
            serve.session.config.seed = serve_seed;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            return run_serve(serve, g_stop, [](unsigned short port) {
                std::cerr << "serving on ws://127.0.0.1:" << port << '\n';
            });
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
