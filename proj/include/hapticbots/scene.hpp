#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "hapticbots/geometry.hpp"

namespace hapticbots {

// Rays start this far above the mat plane; all geometry lives in [0, kRayOrigin).
inline constexpr double kRayOrigin = 1.0;
inline constexpr double kDefaultCapHalfwidth = 0.0235;
inline constexpr double kMaxTiltDeg = 60.0;

class SceneError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BoundsError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// z = height + slope . (p - anchor), clipped to the [0, H) slab.
struct PlanePayload {
    double height = 0.0;
    Vec2 slope{};
    Vec2 anchor{0.275, 0.275};
};

struct SphereCapPayload {
    Vec3 center{};
    double radius = 0.0;
};

// Samples on a regular grid, row-major with x varying fastest.
struct HeightfieldPayload {
    Vec2 origin{};
    double spacing = 0.0;
    int nx = 0;
    int ny = 0;
    std::vector<double> heights;

    double at(int ix, int iy) const { return heights[static_cast<std::size_t>(iy) * nx + ix]; }
};

struct Triangle {
    Vec3 a, b, c;
};

struct TriangleListPayload {
    std::vector<Triangle> triangles;
};

enum class SceneKind { AnalyticPlane, AnalyticSphereCap, HeightfieldGrid, TriangleList };

std::string_view to_string(SceneKind kind);
SceneKind scene_kind_from_string(std::string_view name);

struct SurfaceSample {
    double height = 0.0;    // meters above the mat
    double distance = 0.0;  // ray length from the origin height to the hit
    bool hit = false;
};

struct TiltSample {
    double h_a = 0.0;  // attachment point behind the center along the yaw axis
    double h_b = 0.0;  // attachment point ahead of the center
    double tilt_deg = 0.0;
    bool clamped = false;
};

// Immutable virtual geometry over the mat. Copies share the underlying data.
class Scene {
public:
    using Payload =
        std::variant<PlanePayload, SphereCapPayload, HeightfieldPayload, TriangleListPayload>;

    Scene();  // empty triangle list over the default mat
    Scene(Payload payload, MatBounds bounds = {});

    static Scene plane(double height, Vec2 slope = {}, MatBounds bounds = {});
    static Scene empty(MatBounds bounds = {});

    SceneKind kind() const;
    const MatBounds& bounds() const;
    const Payload& payload() const;

    // Highest surface point below (x, y, H).
    SurfaceSample raycast_down(Vec2 p) const;

    // Returns a new scene with extra triangles; only valid for triangle lists.
    Scene with_triangles(const std::vector<Triangle>& extra) const;

private:
    struct Data;
    std::shared_ptr<const Data> data_;
};

SurfaceSample raycast_down(const Scene& scene, Vec2 p);

TiltSample sample_tilt(const Scene& scene, Vec2 p, double yaw_deg,
                       double cap_halfwidth = kDefaultCapHalfwidth);

// Converts plane and sphere-cap scenes into triangle lists whose vertical
// deviation from the analytic surface stays within max_error where the
// surface slope is at most max_slope.
Scene tessellate(const Scene& scene, double max_error, double max_slope = 4.0);

// JSON document: {"schema": 1, "kind": ..., "bounds_m": [w, d], "payload": {...}}
nlohmann::json scene_to_json(const Scene& scene);
Scene scene_from_json(const nlohmann::json& doc);
Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);

// Built-in scenes used by the CLI, tests, and the live service.
Scene make_ramp(double slope_deg, double height_at_anchor, Vec2 anchor, MatBounds bounds = {});
Scene make_house(Vec2 center, double half_width, double wall_height, double roof_deg,
                 MatBounds bounds = {});
Scene make_blocks(const std::vector<std::array<double, 5>>& boxes, MatBounds bounds = {});
Scene builtin_scene(std::string_view name);

}  // namespace hapticbots
