#include "hapticbots/hand.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace hapticbots {

Calibration calibrate(Vec2 p_center, Vec2 p_corner, const MatBounds& mat) {
    const Vec2 measured = p_corner - p_center;
    if (norm(measured) < 1e-9) throw CalibrationError("calibration points coincide");
    const Vec2 mat_center = mat.center();
    const Vec2 expected = Vec2{0.0, 0.0} - mat_center;
    Calibration cal;
    cal.rotation = wrap_degrees(rad_to_deg(std::atan2(expected.y, expected.x) - std::atan2(measured.y, measured.x)));
    cal.translation = mat_center - rotate(p_center, cal.rotation);
    return cal;
}

FingerSample resample(const std::vector<FingerSample>& track, double t) {
    if (track.empty()) throw TrajectoryError("cannot resample an empty track");
    if (t <= track.front().t) return track.front();
    if (t >= track.back().t) return track.back();
    const auto hi = std::upper_bound(track.begin(), track.end(), t,
                                     [](double v, const FingerSample& s) { return v < s.t; });
    const auto lo = hi - 1;
    if (lo->t == t) return *lo;
    const double span = hi->t - lo->t;
    const double w = span > 0.0 ? (t - lo->t) / span : 0.0;
    FingerSample s;
    s.t = t;
    s.pos = lo->pos + (hi->pos - lo->pos) * w;
    s.source = lo->source;
    return s;
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
    out << "hapticbots-trajectory 1\n";
    out << "rate " << traj.rate << "\n";
    out << "frame " << traj.frame << "\n";
    out << "t,x,y,z\n";
    out << std::setprecision(17);
    for (const auto& s : traj.samples) out << s.t << ',' << s.pos.x << ',' << s.pos.y << ',' << s.pos.z << '\n';
}

Trajectory read_trajectory(std::istream& in) {
    Trajectory traj;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& why) {
        throw TrajectoryError("trajectory line " + std::to_string(line_no) + ": " + why);
    };
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty() && line[0] != '#') return true;
        }
        return false;
    };

    if (!next_line() || line != "hapticbots-trajectory 1") fail("expected header 'hapticbots-trajectory 1'");
    bool columns = false;
    while (!columns && next_line()) {
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "rate") {
            if (!(ss >> traj.rate) || !(traj.rate > 0)) fail("rate must be a positive number");
        } else if (key == "frame") {
            if (!(ss >> traj.frame) || (traj.frame != "mat" && traj.frame != "tracking"))
                fail("frame must be 'mat' or 'tracking'");
        } else if (line == "t,x,y,z") {
            columns = true;
        } else {
            fail("unexpected header entry '" + line + "'");
        }
    }
    if (!columns) fail("missing column line 't,x,y,z'");

    while (next_line()) {
        std::istringstream ss(line);
        FingerSample s;
        char c1 = 0, c2 = 0, c3 = 0;
        if (!(ss >> s.t >> c1 >> s.pos.x >> c2 >> s.pos.y >> c3 >> s.pos.z) || c1 != ',' || c2 != ',' || c3 != ',')
            fail("expected four comma-separated numbers");
        if (!traj.samples.empty() && s.t < traj.samples.back().t) fail("samples must be time-ordered");
        traj.samples.push_back(s);
    }
    return traj;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw TrajectoryError("cannot open trajectory file " + path.string());
    return read_trajectory(in);
}

void save_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw TrajectoryError("cannot write trajectory file " + path.string());
    write_trajectory(out, traj);
}

Trajectory lateral_sweep(Vec2 from, Vec2 to, double speed, double hold, const SurfaceHeightFn& surface,
                         double z_offset, double rate) {
    if (!(speed > 0.0)) throw TrajectoryError("sweep speed must be positive");
    Trajectory traj;
    traj.rate = rate;
    const double travel = distance(from, to) / speed;
    const double total = hold + travel + hold;
    const int n = static_cast<int>(std::round(total * rate));
    for (int i = 0; i <= n; ++i) {
        const double t = i / rate;
        const double w = std::clamp((t - hold) / travel, 0.0, 1.0);
        const Vec2 p = from + (to - from) * w;
        traj.samples.push_back({t, {p.x, p.y, surface(p) + z_offset}, FingerSource::Scripted});
    }
    return traj;
}

Trajectory tap(Vec2 at, double period, int taps, const SurfaceHeightFn& surface, double lift, double rate) {
    Trajectory traj;
    traj.rate = rate;
    const double base = surface(at);
    const int n = static_cast<int>(std::round(period * taps * rate));
    for (int i = 0; i <= n; ++i) {
        const double t = i / rate;
        const double phase = std::fmod(t, period) / period;
        // Raised cosine: touching at phase 0, highest at phase 0.5.
        const double z = base + lift * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * phase));
        traj.samples.push_back({t, {at.x, at.y, z}, FingerSource::Scripted});
    }
    return traj;
}

Trajectory random_walk(Vec2 start, double speed, double duration, std::uint64_t seed, const MatBounds& mat,
                       const SurfaceHeightFn& surface, double z_offset, double rate) {
    Trajectory traj;
    traj.rate = rate;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> turn(-30.0, 30.0);
    double heading_deg = std::uniform_real_distribution<double>(-180.0, 180.0)(rng);
    Vec2 p = mat.clamp(start);
    const int n = static_cast<int>(std::round(duration * rate));
    for (int i = 0; i <= n; ++i) {
        traj.samples.push_back({i / rate, {p.x, p.y, surface(p) + z_offset}, FingerSource::Scripted});
        heading_deg = wrap_degrees(heading_deg + turn(rng));
        Vec2 next = p + heading(heading_deg) * (speed / rate);
        if (!mat.contains(next)) {
            heading_deg = wrap_degrees(heading_deg + 180.0);
            next = mat.clamp(p + heading(heading_deg) * (speed / rate));
        }
        p = next;
    }
    return traj;
}

}  // namespace hapticbots
