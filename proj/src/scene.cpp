#include "hapticbots/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace hapticbots {

namespace {

constexpr int kBuckets = 32;
constexpr double kDegenerateArea = 1e-14;
constexpr double kEdgeEps = 1e-12;

// Uniform xy bucket grid over the mat so a vertical ray only visits nearby triangles.
struct TriangleIndex {
    double cell_w = 0.0;
    double cell_d = 0.0;
    std::vector<std::vector<int>> buckets;

    int bucket_x(double x) const { return std::clamp(static_cast<int>(x / cell_w), 0, kBuckets - 1); }
    int bucket_y(double y) const { return std::clamp(static_cast<int>(y / cell_d), 0, kBuckets - 1); }
};

TriangleIndex build_index(const std::vector<Triangle>& tris, const MatBounds& bounds) {
    TriangleIndex index;
    index.cell_w = bounds.width / kBuckets;
    index.cell_d = bounds.depth / kBuckets;
    index.buckets.resize(kBuckets * kBuckets);
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
        const auto& tri = tris[t];
        const double min_x = std::min({tri.a.x, tri.b.x, tri.c.x});
        const double max_x = std::max({tri.a.x, tri.b.x, tri.c.x});
        const double min_y = std::min({tri.a.y, tri.b.y, tri.c.y});
        const double max_y = std::max({tri.a.y, tri.b.y, tri.c.y});
        if (max_x < 0.0 || max_y < 0.0 || min_x > bounds.width || min_y > bounds.depth) continue;
        for (int by = index.bucket_y(min_y); by <= index.bucket_y(max_y); ++by)
            for (int bx = index.bucket_x(min_x); bx <= index.bucket_x(max_x); ++bx)
                index.buckets[by * kBuckets + bx].push_back(t);
    }
    return index;
}

// Height of the triangle above p along a vertical line, if the projection covers p.
std::optional<double> vertical_hit(const Triangle& tri, Vec2 p) {
    const Vec2 a = tri.a.xy(), b = tri.b.xy(), c = tri.c.xy();
    const double area2 = cross(b - a, c - a);
    if (std::abs(area2) < kDegenerateArea) return std::nullopt;  // edge-on to the ray
    const double w_a = cross(b - p, c - p) / area2;
    const double w_b = cross(c - p, a - p) / area2;
    const double w_c = 1.0 - w_a - w_b;
    if (w_a < -kEdgeEps || w_b < -kEdgeEps || w_c < -kEdgeEps) return std::nullopt;
    return w_a * tri.a.z + w_b * tri.b.z + w_c * tri.c.z;
}

void validate_height(double z, const char* what) {
    if (!(z >= 0.0 && z < kRayOrigin))
        throw SceneError(std::string(what) + " must lie within [0, 1) m above the mat");
}

void validate(const Scene::Payload& payload) {
    std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, PlanePayload>) {
                if (!std::isfinite(p.height) || !std::isfinite(p.slope.x) || !std::isfinite(p.slope.y))
                    throw SceneError("plane parameters must be finite");
            } else if constexpr (std::is_same_v<T, SphereCapPayload>) {
                if (!(p.radius > 0.0)) throw SceneError("sphere radius must be positive");
                validate_height(p.center.z + p.radius, "sphere top");
            } else if constexpr (std::is_same_v<T, HeightfieldPayload>) {
                if (!(p.spacing > 0.0)) throw SceneError("heightfield spacing must be positive");
                if (p.nx < 2 || p.ny < 2) throw SceneError("heightfield needs at least 2x2 samples");
                if (p.heights.size() != static_cast<std::size_t>(p.nx) * p.ny)
                    throw SceneError("heightfield sample count does not match nx*ny");
                for (double h : p.heights) validate_height(h, "heightfield sample");
            } else {
                for (const auto& t : p.triangles) {
                    if (norm(cross(t.b - t.a, t.c - t.a)) < kDegenerateArea)
                        throw SceneError("triangle list contains a zero-area triangle");
                    validate_height(t.a.z, "triangle vertex");
                    validate_height(t.b.z, "triangle vertex");
                    validate_height(t.c.z, "triangle vertex");
                }
            }
        },
        payload);
}

SurfaceSample from_hit_z(double z) {
    SurfaceSample s;
    s.hit = true;
    s.distance = kRayOrigin - z;
    s.height = kRayOrigin - s.distance;
    return s;
}

}  // namespace

struct Scene::Data {
    MatBounds bounds;
    Payload payload;
    TriangleIndex index;
};

Scene::Scene() : Scene(TriangleListPayload{}, MatBounds{}) {}

const MatBounds& Scene::bounds() const { return data_->bounds; }
const Scene::Payload& Scene::payload() const { return data_->payload; }

Scene::Scene(Payload payload, MatBounds bounds) {
    if (!(bounds.width > 0.0 && bounds.depth > 0.0)) throw SceneError("scene bounds must be positive");
    validate(payload);
    auto data = std::make_shared<Data>();
    data->bounds = bounds;
    data->payload = std::move(payload);
    if (const auto* tl = std::get_if<TriangleListPayload>(&data->payload))
        data->index = build_index(tl->triangles, bounds);
    data_ = std::move(data);
}

Scene Scene::plane(double height, Vec2 slope, MatBounds bounds) {
    return Scene(PlanePayload{height, slope, bounds.center()}, bounds);
}

Scene Scene::empty(MatBounds bounds) { return Scene(TriangleListPayload{}, bounds); }

SceneKind Scene::kind() const { return static_cast<SceneKind>(data_->payload.index()); }

SurfaceSample Scene::raycast_down(Vec2 p) const {
    const auto& d = *data_;
    if (!d.bounds.contains(p)) {
        std::ostringstream msg;
        msg << "raycast query (" << p.x << ", " << p.y << ") outside scene bounds";
        throw BoundsError(msg.str());
    }
    return std::visit(
        [&](const auto& pl) -> SurfaceSample {
            using T = std::decay_t<decltype(pl)>;
            if constexpr (std::is_same_v<T, PlanePayload>) {
                const double z = pl.height + dot(pl.slope, p - pl.anchor);
                if (z < 0.0 || z >= kRayOrigin) return {};
                return from_hit_z(z);
            } else if constexpr (std::is_same_v<T, SphereCapPayload>) {
                const double rho2 = norm_sq(p - pl.center.xy());
                const double r2 = pl.radius * pl.radius;
                if (rho2 > r2) return {};
                const double z = pl.center.z + std::sqrt(r2 - rho2);
                if (z < 0.0) return {};
                return from_hit_z(z);
            } else if constexpr (std::is_same_v<T, HeightfieldPayload>) {
                const double fx = (p.x - pl.origin.x) / pl.spacing;
                const double fy = (p.y - pl.origin.y) / pl.spacing;
                if (fx < 0.0 || fy < 0.0 || fx > pl.nx - 1 || fy > pl.ny - 1) return {};
                const int ix = std::min(static_cast<int>(fx), pl.nx - 2);
                const int iy = std::min(static_cast<int>(fy), pl.ny - 2);
                const double tx = fx - ix;
                const double ty = fy - iy;
                const double z = (1 - tx) * (1 - ty) * pl.at(ix, iy) + tx * (1 - ty) * pl.at(ix + 1, iy) +
                                 (1 - tx) * ty * pl.at(ix, iy + 1) + tx * ty * pl.at(ix + 1, iy + 1);
                return from_hit_z(z);
            } else {
                const auto& bucket = d.index.buckets[d.index.bucket_y(p.y) * kBuckets + d.index.bucket_x(p.x)];
                double best = -std::numeric_limits<double>::infinity();
                for (int t : bucket)
                    if (auto z = vertical_hit(pl.triangles[t], p)) best = std::max(best, *z);
                if (!std::isfinite(best)) return {};
                return from_hit_z(best);
            }
        },
        d.payload);
}

Scene Scene::with_triangles(const std::vector<Triangle>& extra) const {
    const auto* tl = std::get_if<TriangleListPayload>(&data_->payload);
    if (!tl) throw SceneError("only triangle-list scenes can be extended");
    TriangleListPayload merged = *tl;
    merged.triangles.insert(merged.triangles.end(), extra.begin(), extra.end());
    return Scene(std::move(merged), data_->bounds);
}

SurfaceSample raycast_down(const Scene& scene, Vec2 p) { return scene.raycast_down(p); }

TiltSample sample_tilt(const Scene& scene, Vec2 p, double yaw_deg, double cap_halfwidth) {
    const Vec2 axis = heading(yaw_deg) * cap_halfwidth;
    const Vec2 a = p - axis;
    const Vec2 b = p + axis;
    if (!scene.bounds().contains(a) || !scene.bounds().contains(b))
        throw BoundsError("actuator attachment point outside scene bounds");
    TiltSample s;
    s.h_a = scene.raycast_down(a).height;
    s.h_b = scene.raycast_down(b).height;
    s.tilt_deg = rad_to_deg(std::atan2(s.h_b - s.h_a, 2.0 * cap_halfwidth));
    if (std::abs(s.tilt_deg) > kMaxTiltDeg) {
        // Rounding puts a slope built at exactly the limit a hair over it; that is not a clamp.
        s.clamped = std::abs(s.tilt_deg) > kMaxTiltDeg + 1e-9;
        s.tilt_deg = std::copysign(kMaxTiltDeg, s.tilt_deg);
    }
    return s;
}

std::string_view to_string(SceneKind kind) {
    switch (kind) {
        case SceneKind::AnalyticPlane: return "analytic-plane";
        case SceneKind::AnalyticSphereCap: return "analytic-sphere-cap";
        case SceneKind::HeightfieldGrid: return "heightfield-grid";
        case SceneKind::TriangleList: return "triangle-list";
    }
    return "unknown";
}

SceneKind scene_kind_from_string(std::string_view name) {
    for (auto k : {SceneKind::AnalyticPlane, SceneKind::AnalyticSphereCap, SceneKind::HeightfieldGrid,
                   SceneKind::TriangleList})
        if (to_string(k) == name) return k;
    throw SceneError("unknown scene kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Tessellation

namespace {

void add_quad(std::vector<Triangle>& out, Vec3 p00, Vec3 p10, Vec3 p01, Vec3 p11) {
    out.push_back({p00, p10, p11});
    out.push_back({p00, p11, p01});
}

template <typename HeightFn>
std::vector<Triangle> grid_triangles(double x0, double y0, double x1, double y1, double step, HeightFn&& fn) {
    const int nx = std::max(1, static_cast<int>(std::ceil((x1 - x0) / step)));
    const int ny = std::max(1, static_cast<int>(std::ceil((y1 - y0) / step)));
    const double sx = (x1 - x0) / nx;
    const double sy = (y1 - y0) / ny;
    std::vector<std::optional<double>> z((nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) z[j * (nx + 1) + i] = fn(Vec2{x0 + i * sx, y0 + j * sy});
    std::vector<Triangle> tris;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const auto& z00 = z[j * (nx + 1) + i];
            const auto& z10 = z[j * (nx + 1) + i + 1];
            const auto& z01 = z[(j + 1) * (nx + 1) + i];
            const auto& z11 = z[(j + 1) * (nx + 1) + i + 1];
            if (!z00 || !z10 || !z01 || !z11) continue;
            const double xa = x0 + i * sx, xb = x0 + (i + 1) * sx;
            const double ya = y0 + j * sy, yb = y0 + (j + 1) * sy;
            add_quad(tris, {xa, ya, *z00}, {xb, ya, *z10}, {xa, yb, *z01}, {xb, yb, *z11});
        }
    return tris;
}

}  // namespace

Scene tessellate(const Scene& scene, double max_error, double max_slope) {
    if (!(max_error > 0.0)) throw SceneError("tessellation error bound must be positive");
    const MatBounds& b = scene.bounds();
    return std::visit(
        [&](const auto& pl) -> Scene {
            using T = std::decay_t<decltype(pl)>;
            if constexpr (std::is_same_v<T, TriangleListPayload>) {
                return scene;
            } else if constexpr (std::is_same_v<T, PlanePayload>) {
                // Planar pieces are exact; a grid is only needed where the slab clips the plane.
                const auto fn = [&](Vec2 p) -> std::optional<double> {
                    const auto s = scene.raycast_down(p);
                    return s.hit ? std::optional<double>(s.height) : std::nullopt;
                };
                bool all_inside = true;
                for (Vec2 c : {Vec2{0, 0}, Vec2{b.width, 0}, Vec2{0, b.depth}, Vec2{b.width, b.depth}})
                    all_inside = all_inside && fn(c).has_value();
                const double step = all_inside ? std::max(b.width, b.depth) : std::min(b.width, b.depth) / 64.0;
                return Scene(TriangleListPayload{grid_triangles(0, 0, b.width, b.depth, step, fn)}, b);
            } else if constexpr (std::is_same_v<T, SphereCapPayload>) {
                // Linear interpolation error on a cell of size h is bounded by h^2 * kappa / 2,
                // with kappa the largest second derivative where the slope stays below max_slope.
                const double kappa = std::pow(1.0 + max_slope * max_slope, 1.5) / pl.radius;
                const double step = std::sqrt(2.0 * max_error / kappa);
                const double foot = pl.center.z >= 0.0
                                        ? pl.radius
                                        : std::sqrt(std::max(0.0, pl.radius * pl.radius - pl.center.z * pl.center.z));
                const double x0 = std::max(0.0, pl.center.x - foot), x1 = std::min(b.width, pl.center.x + foot);
                const double y0 = std::max(0.0, pl.center.y - foot), y1 = std::min(b.depth, pl.center.y + foot);
                const auto fn = [&](Vec2 p) -> std::optional<double> {
                    const auto s = scene.raycast_down(p);
                    return s.hit ? std::optional<double>(s.height) : std::nullopt;
                };
                if (x1 <= x0 || y1 <= y0) return Scene(TriangleListPayload{}, b);
                return Scene(TriangleListPayload{grid_triangles(x0, y0, x1, y1, step, fn)}, b);
            } else {
                const auto fn = [&](Vec2 p) -> std::optional<double> {
                    const auto s = scene.raycast_down(p);
                    return s.hit ? std::optional<double>(s.height) : std::nullopt;
                };
                const double x1 = std::min(b.width, pl.origin.x + (pl.nx - 1) * pl.spacing);
                const double y1 = std::min(b.depth, pl.origin.y + (pl.ny - 1) * pl.spacing);
                return Scene(TriangleListPayload{grid_triangles(std::max(0.0, pl.origin.x),
                                                                std::max(0.0, pl.origin.y), x1, y1,
                                                                std::min(pl.spacing, max_error), fn)},
                             b);
            }
        },
        scene.payload());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

Vec2 vec2_from(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 2) throw SceneError(std::string(field) + " must be a 2-element array");
    return {j[0].get<double>(), j[1].get<double>()};
}

Vec3 vec3_from(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 3) throw SceneError(std::string(field) + " must be a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const json& require(const json& j, const char* field) {
    if (!j.is_object() || !j.contains(field)) throw SceneError(std::string("missing field '") + field + "'");
    return j.at(field);
}

}  // namespace

nlohmann::json scene_to_json(const Scene& scene) {
    json doc;
    doc["schema"] = 1;
    doc["kind"] = std::string(to_string(scene.kind()));
    doc["bounds_m"] = {scene.bounds().width, scene.bounds().depth};
    doc["payload"] = std::visit(
        [](const auto& pl) -> json {
            using T = std::decay_t<decltype(pl)>;
            if constexpr (std::is_same_v<T, PlanePayload>) {
                return {{"height", pl.height},
                        {"slope", {pl.slope.x, pl.slope.y}},
                        {"anchor", {pl.anchor.x, pl.anchor.y}}};
            } else if constexpr (std::is_same_v<T, SphereCapPayload>) {
                return {{"center", {pl.center.x, pl.center.y, pl.center.z}}, {"radius", pl.radius}};
            } else if constexpr (std::is_same_v<T, HeightfieldPayload>) {
                return {{"origin", {pl.origin.x, pl.origin.y}},
                        {"spacing", pl.spacing},
                        {"nx", pl.nx},
                        {"ny", pl.ny},
                        {"heights", pl.heights}};
            } else {
                json tris = json::array();
                for (const auto& t : pl.triangles)
                    tris.push_back({t.a.x, t.a.y, t.a.z, t.b.x, t.b.y, t.b.z, t.c.x, t.c.y, t.c.z});
                return {{"triangles", tris}};
            }
        },
        scene.payload());
    return doc;
}

Scene scene_from_json(const nlohmann::json& doc) {
    try {
        const int schema = require(doc, "schema").get<int>();
        if (schema != 1) throw SceneError("unsupported scene schema " + std::to_string(schema));
        const SceneKind kind = scene_kind_from_string(require(doc, "kind").get<std::string>());
        MatBounds bounds;
        if (doc.contains("bounds_m")) {
            const Vec2 b = vec2_from(doc.at("bounds_m"), "bounds_m");
            bounds = {b.x, b.y};
        }
        const json& p = require(doc, "payload");
        switch (kind) {
            case SceneKind::AnalyticPlane: {
                PlanePayload pl;
                pl.height = require(p, "height").get<double>();
                pl.slope = p.contains("slope") ? vec2_from(p.at("slope"), "slope") : Vec2{};
                pl.anchor = p.contains("anchor") ? vec2_from(p.at("anchor"), "anchor") : bounds.center();
                return Scene(pl, bounds);
            }
            case SceneKind::AnalyticSphereCap:
                return Scene(SphereCapPayload{vec3_from(require(p, "center"), "center"),
                                              require(p, "radius").get<double>()},
                             bounds);
            case SceneKind::HeightfieldGrid: {
                HeightfieldPayload pl;
                pl.origin = p.contains("origin") ? vec2_from(p.at("origin"), "origin") : Vec2{};
                pl.spacing = require(p, "spacing").get<double>();
                pl.nx = require(p, "nx").get<int>();
                pl.ny = require(p, "ny").get<int>();
                pl.heights = require(p, "heights").get<std::vector<double>>();
                return Scene(std::move(pl), bounds);
            }
            case SceneKind::TriangleList: {
                TriangleListPayload pl;
                for (const auto& t : require(p, "triangles")) {
                    if (!t.is_array() || t.size() != 9) throw SceneError("each triangle needs 9 coordinates");
                    pl.triangles.push_back({{t[0].get<double>(), t[1].get<double>(), t[2].get<double>()},
                                            {t[3].get<double>(), t[4].get<double>(), t[5].get<double>()},
                                            {t[6].get<double>(), t[7].get<double>(), t[8].get<double>()}});
                }
                return Scene(std::move(pl), bounds);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw SceneError(std::string("malformed scene document: ") + e.what());
    }
    throw SceneError("unreachable scene kind");
}

Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open scene file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SceneError(path.string() + ": " + e.what());
    }
    return scene_from_json(doc);
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw SceneError("cannot write scene file " + path.string());
    out << scene_to_json(scene).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Built-in scenes

Scene make_ramp(double slope_deg, double height_at_anchor, Vec2 anchor, MatBounds bounds) {
    return Scene(PlanePayload{height_at_anchor, {std::tan(deg_to_rad(slope_deg)), 0.0}, anchor}, bounds);
}

Scene make_house(Vec2 c, double hw, double wall, double roof_deg, MatBounds bounds) {
    // Box footprint with a gable roof whose ridge runs along y.
    const double ridge = wall + hw * std::tan(deg_to_rad(roof_deg));
    const double x0 = c.x - hw, x1 = c.x + hw, y0 = c.y - hw, y1 = c.y + hw;
    std::vector<Triangle> t;
    add_quad(t, {x0, y0, wall}, {c.x, y0, ridge}, {x0, y1, wall}, {c.x, y1, ridge});
    add_quad(t, {c.x, y0, ridge}, {x1, y0, wall}, {c.x, y1, ridge}, {x1, y1, wall});
    // Walls and gables are vertical; they never intercept a downward ray but keep the mesh closed.
    add_quad(t, {x0, y0, 0}, {x1, y0, 0}, {x0, y0, wall}, {x1, y0, wall});
    add_quad(t, {x0, y1, 0}, {x1, y1, 0}, {x0, y1, wall}, {x1, y1, wall});
    add_quad(t, {x0, y0, 0}, {x0, y1, 0}, {x0, y0, wall}, {x0, y1, wall});
    add_quad(t, {x1, y0, 0}, {x1, y1, 0}, {x1, y0, wall}, {x1, y1, wall});
    t.push_back({{x0, y0, wall}, {x1, y0, wall}, {c.x, y0, ridge}});
    t.push_back({{x0, y1, wall}, {x1, y1, wall}, {c.x, y1, ridge}});
    return Scene(TriangleListPayload{std::move(t)}, bounds);
}

Scene make_blocks(const std::vector<std::array<double, 5>>& boxes, MatBounds bounds) {
    std::vector<Triangle> t;
    for (const auto& [x0, y0, x1, y1, h] : boxes) add_quad(t, {x0, y0, h}, {x1, y0, h}, {x0, y1, h}, {x1, y1, h});
    return Scene(TriangleListPayload{std::move(t)}, bounds);
}

Scene builtin_scene(std::string_view name) {
    if (name == "empty" || name == "flat") return Scene::empty();
    if (name == "plane") return Scene::plane(0.12);
    if (name == "ramp") return make_ramp(30.0, 0.12, {0.2, 0.275});
    if (name == "house") return make_house({0.275, 0.275}, 0.08, 0.12, 30.0);
    if (name == "dome") return Scene(SphereCapPayload{{0.275, 0.275, 0.0}, 0.15});
    if (name == "blocks")
        return make_blocks({{0.05, 0.05, 0.15, 0.15, 0.10},
                            {0.40, 0.05, 0.50, 0.15, 0.14},
                            {0.05, 0.40, 0.15, 0.50, 0.18},
                            {0.40, 0.40, 0.50, 0.50, 0.22}});
    throw SceneError("unknown built-in scene '" + std::string(name) + "'");
}

}  // namespace hapticbots
