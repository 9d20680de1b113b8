#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hapticbots/stream.hpp"
#include "hapticbots/trace.hpp"

namespace hapticbots {

class StreamServer;

// Groups trace rows into one snapshot per tick, in file order.
std::vector<WorldSnapshot> trace_snapshots(const Trace& trace);

struct ReplayStats {
    std::int64_t frames = 0;
    double wall_seconds = 0.0;
};

// Emits world_state messages paced at `speed` times the recorded rate: one
// JSON line per tick on `out` (if given) and a publish on `server` (if given).
// speed <= 0 emits without pacing.
ReplayStats replay_trace(const Trace& trace, double speed, std::ostream* out, StreamServer* server = nullptr);

}  // namespace hapticbots
