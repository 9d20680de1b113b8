#include "hapticbots/replay.hpp"

#include <chrono>
#include <ostream>
#include <thread>

#include "hapticbots/server.hpp"

namespace hapticbots {

std::vector<WorldSnapshot> trace_snapshots(const Trace& trace) {
    std::vector<WorldSnapshot> out;
    std::size_t a = 0;
    while (a < trace.rows.size()) {
        std::size_t b = a;
        while (b < trace.rows.size() && trace.rows[b].tick == trace.rows[a].tick) ++b;
        out.push_back(snapshot_from_trace({trace.rows.begin() + static_cast<long>(a),
                                           trace.rows.begin() + static_cast<long>(b)}));
        a = b;
    }
    return out;
}

ReplayStats replay_trace(const Trace& trace, double speed, std::ostream* out, StreamServer* server) {
    using clock = std::chrono::steady_clock;
    const auto frames = trace_snapshots(trace);
    ReplayStats stats;
    const auto start = clock::now();
    const double t0 = frames.empty() ? 0.0 : frames.front().time;
    for (const auto& s : frames) {
        if (speed > 0) {
            const auto due = start + std::chrono::duration_cast<clock::duration>(
                                         std::chrono::duration<double>((s.time - t0) / speed));
            std::this_thread::sleep_until(due);
        }
        const std::string line = encode(world_state_message(s));
        if (out) *out << line << '\n';
        if (server) server->publish(s.tick, line);
        ++stats.frames;
    }
    if (out) out->flush();
    stats.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    return stats;
}

}  // namespace hapticbots
