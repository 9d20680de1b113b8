#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "hapticbots/engine.hpp"
#include "hapticbots/stream.hpp"

namespace hapticbots {

struct SessionOptions {
    EngineConfig config{};
    std::string scene = "flat";  // builtin name
    int robots = 7;
};

// The live simulation behind `serve`. Inputs arrive from network threads
// through the mailboxes; step() runs on the simulation thread only.
class SimSession {
public:
    using ErrorFn = std::function<void(const std::string&)>;

    explicit SimSession(SessionOptions opts);

    // Last writer wins.
    void post_hand(const HandInput& hand);
    void clear_hand();
    void post_control(ControlCommand cmd, ErrorFn on_error = {});

    // Applies pending controls and hand input, then advances one tick unless
    // paused. Returns a snapshot when the tick advanced.
    std::optional<WorldSnapshot> step();

    bool paused() const { return paused_; }
    const World& world() const { return world_; }
    const Calibration& calibration() const { return calibration_; }
    // Stream tick of the current world state; keeps increasing across resets.
    std::int64_t stream_tick() const { return tick_offset_ + world_.tick; }

private:
    struct PendingControl {
        ControlCommand cmd;
        ErrorFn on_error;
    };

    void apply(const ControlCommand& cmd);
    void rebuild();

    SessionOptions opts_;
    Scene scene_;
    World world_;
    Calibration calibration_{};
    bool paused_ = false;
    int step_budget_ = 0;
    std::int64_t tick_offset_ = 0;

    std::mutex mu_;
    std::optional<HandInput> hand_;
    bool hand_dirty_ = false;
    std::deque<PendingControl> controls_;
};

// WebSocket fan-out. publish() keeps only the newest frame per client, so a
// slow reader sees a strictly increasing subsequence of ticks.
class StreamServer {
public:
    using ReplyFn = std::function<void(const StreamMessage&)>;
    using Handler = std::function<void(const StreamMessage&, const ReplyFn&)>;

    StreamServer(const std::string& address, unsigned short port, Handler handler);
    ~StreamServer();
    StreamServer(const StreamServer&) = delete;
    StreamServer& operator=(const StreamServer&) = delete;

    unsigned short port() const;
    void start();
    void stop();

    void publish(std::int64_t tick, std::string frame);
    // Queued delivery to every client (metrics, notices).
    void broadcast(std::string message);
    std::size_t client_count() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

struct ServeOptions {
    SessionOptions session{};
    std::string address = "127.0.0.1";
    unsigned short port = 8765;
    double rate_hz = 60.0;
    double metrics_period = 1.0;  // seconds between metrics messages
};

// Runs until `stop` becomes true. `on_ready` receives the bound port.
int run_serve(const ServeOptions& opts, const std::atomic<bool>& stop,
              const std::function<void(unsigned short)>& on_ready = {});

}  // namespace hapticbots
