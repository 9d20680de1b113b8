#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hapticbots/geometry.hpp"

namespace hapticbots {

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrajectoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FingerSource { Scripted, Live };

struct FingerSample {
    double t = 0.0;
    Vec3 pos{};
    FingerSource source = FingerSource::Scripted;
    bool operator==(const FingerSample&) const = default;
};

// Rigid 2D map from the tracking frame to the mat frame: p_mat = R(rotation) p + translation.
struct Calibration {
    Vec2 translation{};
    double rotation = 0.0;  // degrees

    Vec2 apply(Vec2 p) const { return hapticbots::rotate(p, rotation) + translation; }
    Vec2 invert(Vec2 p) const { return hapticbots::rotate(p - translation, -rotation); }
};

// Two-touch calibration: the first touch marks the mat center, the second its
// left-bottom corner (the mat origin). Fingertip height is ignored.
Calibration calibrate(Vec2 p_center, Vec2 p_corner, const MatBounds& mat = {});

FingerSample resample(const std::vector<FingerSample>& track, double t);

struct Trajectory {
    double rate = 60.0;
    std::string frame = "mat";
    std::vector<FingerSample> samples;
};

// Text format:
//   hapticbots-trajectory 1
//   rate <hz>
//   frame <mat|tracking>
//   t,x,y,z
//   <rows>
void write_trajectory(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory(std::istream& in);
Trajectory load_trajectory(const std::filesystem::path& path);
void save_trajectory(const Trajectory& traj, const std::filesystem::path& path);

using SurfaceHeightFn = std::function<double(Vec2)>;

// Scripted generators. `z_offset` is added to the surface height under the
// finger, so 0 means touching.
Trajectory lateral_sweep(Vec2 from, Vec2 to, double speed, double hold, const SurfaceHeightFn& surface,
                         double z_offset = 0.0, double rate = 60.0);
Trajectory tap(Vec2 at, double period, int taps, const SurfaceHeightFn& surface, double lift = 0.05,
               double rate = 60.0);
Trajectory random_walk(Vec2 start, double speed, double duration, std::uint64_t seed, const MatBounds& mat,
                       const SurfaceHeightFn& surface, double z_offset = 0.0, double rate = 60.0);

}  // namespace hapticbots
