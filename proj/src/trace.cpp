#include "hapticbots/trace.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace hapticbots {

namespace {

constexpr const char* kColumns =
    "tick,time,robot,x,y,yaw,height,tilt,vx,vy,target,target_x,target_y,grasped,cmd_enqueue,cmd_activation";
constexpr int kColumnCount = 16;

}  // namespace

std::vector<TraceRow> trace_rows(const World& w) {
    std::vector<TraceRow> rows;
    rows.reserve(w.robots.size());
    for (const auto& r : w.robots) {
        TraceRow row;
        row.tick = w.tick;
        row.time = w.time;
        row.robot = r.id;
        row.pos = r.pos;
        row.yaw = r.yaw;
        row.height = r.height;
        row.tilt = r.tilt;
        row.v = r.v;
        if (const auto p = w.assignment.for_robot(r.id)) {
            row.target = p->target;
            row.target_point = p->point;
        }
        row.grasped = r.grasped;
        row.cmd_enqueue = r.last_enqueue;
        row.cmd_activation = r.last_activation;
        rows.push_back(row);
    }
    return rows;
}

TraceWriter::TraceWriter(std::ostream& out, int robots, double dt) : out_(out) {
    out_ << std::setprecision(17);
    out_ << "# hapticbots-trace 1 robots=" << robots << " dt=" << dt << '\n' << kColumns << '\n';
}

void TraceWriter::write(const TraceRow& r) {
    out_ << r.tick << ',' << r.time << ',' << r.robot << ',' << r.pos.x << ',' << r.pos.y << ',' << r.yaw << ','
         << r.height << ',' << r.tilt << ',' << r.v.x << ',' << r.v.y << ',' << r.target << ',' << r.target_point.x
         << ',' << r.target_point.y << ',' << (r.grasped ? 1 : 0) << ',' << r.cmd_enqueue << ',' << r.cmd_activation
         << '\n';
}

void TraceWriter::write(const World& world) {
    for (const auto& row : trace_rows(world)) write(row);
}

Trace read_trace(std::istream& in) {
    Trace trace;
    std::string line;
    int line_no = 0;
    std::optional<std::int64_t> last_complete;
    auto fail = [&](const std::string& why) {
        std::ostringstream msg;
        msg << "trace line " << line_no << ": " << why;
        if (last_complete)
            msg << " (last valid tick " << *last_complete << ")";
        else
            msg << " (no complete tick)";
        throw TraceError(msg.str(), line_no, last_complete);
    };

    ++line_no;
    if (!std::getline(in, line)) fail("empty trace");
    {
        std::istringstream ss(line);
        std::string hash, magic, robots, dt;
        int version = 0;
        ss >> hash >> magic >> version >> robots >> dt;
        if (hash != "#" || magic != "hapticbots-trace" || version != 1 || robots.rfind("robots=", 0) != 0 ||
            dt.rfind("dt=", 0) != 0)
            fail("expected '# hapticbots-trace 1 robots=<n> dt=<s>' header");
        try {
            trace.robots = std::stoi(robots.substr(7));
            trace.dt = std::stod(dt.substr(3));
        } catch (const std::exception&) {
            fail("malformed header values");
        }
        if (trace.robots < 0 || !(trace.dt > 0)) fail("header values out of range");
    }
    ++line_no;
    if (!std::getline(in, line) || line != kColumns) fail("missing column header");

    int rows_in_tick = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (static_cast<int>(fields.size()) != kColumnCount)
            fail("expected " + std::to_string(kColumnCount) + " fields, got " + std::to_string(fields.size()));
        TraceRow r;
        try {
            std::size_t i = 0;
            r.tick = std::stoll(fields[i++]);
            r.time = std::stod(fields[i++]);
            r.robot = std::stoi(fields[i++]);
            r.pos.x = std::stod(fields[i++]);
            r.pos.y = std::stod(fields[i++]);
            r.yaw = std::stod(fields[i++]);
            r.height = std::stod(fields[i++]);
            r.tilt = std::stod(fields[i++]);
            r.v.x = std::stod(fields[i++]);
            r.v.y = std::stod(fields[i++]);
            r.target = std::stoi(fields[i++]);
            r.target_point.x = std::stod(fields[i++]);
            r.target_point.y = std::stod(fields[i++]);
            r.grasped = std::stoi(fields[i++]) != 0;
            r.cmd_enqueue = std::stod(fields[i++]);
            r.cmd_activation = std::stod(fields[i++]);
        } catch (const std::exception&) {
            fail("unparseable field");
        }
        if (!trace.rows.empty()) {
            const auto& prev = trace.rows.back();
            if (r.tick == prev.tick) {
                if (r.robot <= prev.robot) fail("robot rows out of order");
            } else {
                if (r.tick <= prev.tick) fail("tick numbers must increase");
                if (rows_in_tick != trace.robots) fail("tick " + std::to_string(prev.tick) + " is incomplete");
                rows_in_tick = 0;
            }
        }
        if (++rows_in_tick > trace.robots) fail("more rows than robots in tick " + std::to_string(r.tick));
        trace.rows.push_back(r);
        if (rows_in_tick == trace.robots) last_complete = r.tick;
    }
    if (!trace.rows.empty() && rows_in_tick != trace.robots) {
        ++line_no;
        fail("truncated: tick " + std::to_string(trace.rows.back().tick) + " is incomplete");
    }
    return trace;
}

}  // namespace hapticbots
