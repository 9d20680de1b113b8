#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hapticbots/engine.hpp"

namespace hapticbots {

class TraceError : public std::runtime_error {
public:
    TraceError(const std::string& what, int line, std::optional<std::int64_t> last_valid_tick)
        : std::runtime_error(what), line_(line), last_valid_tick_(last_valid_tick) {}
    int line() const { return line_; }
    std::optional<std::int64_t> last_valid_tick() const { return last_valid_tick_; }

private:
    int line_;
    std::optional<std::int64_t> last_valid_tick_;
};

// One robot at the end of one tick.
struct TraceRow {
    std::int64_t tick = 0;
    double time = 0.0;
    int robot = 0;
    Vec2 pos{};
    double yaw = 0.0;
    double height = 0.0;
    double tilt = 0.0;
    Vec2 v{};
    int target = -1;  // index into the tick's target list, -1 when unassigned
    Vec2 target_point{};
    bool grasped = false;
    double cmd_enqueue = -1.0;     // enqueue time of the command driving this tick
    double cmd_activation = -1.0;  // tick time at which it took effect

    bool operator==(const TraceRow&) const = default;
};

struct Trace {
    int robots = 0;
    double dt = 1.0 / 60.0;
    std::vector<TraceRow> rows;
};

std::vector<TraceRow> trace_rows(const World& world);

// Text format: a '# hapticbots-trace 1 robots=<n> dt=<s>' line, a column
// header, then one comma-separated row per robot per tick.
class TraceWriter {
public:
    TraceWriter(std::ostream& out, int robots, double dt);
    void write(const TraceRow& row);
    void write(const World& world);

private:
    std::ostream& out_;
};

Trace read_trace(std::istream& in);

}  // namespace hapticbots
