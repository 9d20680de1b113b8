#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "hapticbots/scene.hpp"

using namespace hapticbots;

namespace {

// z = x over the whole mat as two triangles.
Scene unit_ramp_triangles() {
    const double w = 0.55;
    return Scene(TriangleListPayload{{
        {{0, 0, 0}, {w, 0, w}, {0, w, 0}},
        {{w, 0, w}, {w, w, w}, {0, w, 0}},
    }});
}

}  // namespace

TEST_CASE("plane at 0.12 returns its height") {
    const Scene s = Scene::plane(0.12);
    const auto r = raycast_down(s, {0.10, 0.10});
    CHECK(r.hit);
    CHECK(r.height == doctest::Approx(0.12).epsilon(1e-15));
    CHECK(r.distance == doctest::Approx(0.88).epsilon(1e-15));
}

TEST_CASE("height is H minus ray length") {
    const Scene s = Scene::plane(0.12);
    const auto r = raycast_down(s, {0.3, 0.2});
    CHECK(std::abs(kRayOrigin - r.distance - 0.12) < 1e-12);
    CHECK(std::abs(r.height + r.distance - kRayOrigin) < 1e-12);
}

TEST_CASE("empty scene misses with zero height") {
    const auto r = raycast_down(Scene::empty(), {0.2, 0.2});
    CHECK_FALSE(r.hit);
    CHECK(r.height == 0.0);
}

TEST_CASE("queries outside the mat raise a bounds error") {
    const Scene s = Scene::plane(0.1);
    CHECK_THROWS_AS(raycast_down(s, {-0.001, 0.2}), BoundsError);
    CHECK_THROWS_AS(raycast_down(s, {0.2, 0.5501}), BoundsError);
    CHECK_NOTHROW(raycast_down(s, {0.55, 0.55}));
}

TEST_CASE("triangle ramp matches brute-force ray/triangle oracle") {
    const Scene s = unit_ramp_triangles();
    const auto& tris = std::get<TriangleListPayload>(s.payload()).triangles;
    for (Vec2 p : {Vec2{0.1, 0.2}, Vec2{0.33, 0.05}, Vec2{0.5, 0.49}}) {
        const auto r = raycast_down(s, p);
        const auto d = oracle::brute_force_down(tris, p, kRayOrigin);
        REQUIRE(d);
        CHECK(r.hit);
        CHECK(std::abs(r.height - (kRayOrigin - *d)) < 1e-9);
        CHECK(std::abs(r.height - p.x) < 1e-9);
    }
}

TEST_CASE("topmost hit wins with stacked triangles") {
    const Scene base = make_blocks({{0.1, 0.1, 0.3, 0.3, 0.05}});
    const Scene stacked = base.with_triangles({{{0.0, 0.0, 0.2}, {0.55, 0.0, 0.2}, {0.0, 0.55, 0.2}}});
    CHECK(raycast_down(stacked, {0.2, 0.2}).height == doctest::Approx(0.2));
    CHECK(raycast_down(base, {0.2, 0.2}).height == doctest::Approx(0.05));
}

TEST_CASE("adding geometry above never lowers any query") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 0.55), h(0.0, 0.3);
    Scene s = make_blocks({{0.1, 0.1, 0.2, 0.2, 0.05}});
    std::vector<Vec2> probes;
    for (int i = 0; i < 200; ++i) probes.push_back({u(rng), u(rng)});
    for (int round = 0; round < 10; ++round) {
        std::vector<double> before;
        for (Vec2 p : probes) before.push_back(raycast_down(s, p).height);
        const double x0 = u(rng), y0 = u(rng);
        const double z = h(rng);
        s = s.with_triangles({{{x0, y0, z}, {std::min(0.55, x0 + 0.2), y0, z}, {x0, std::min(0.55, y0 + 0.2), z}}});
        for (std::size_t i = 0; i < probes.size(); ++i) CHECK(raycast_down(s, probes[i]).height >= before[i]);
    }
}

TEST_CASE("identity height + d = H over analytic scenes") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 0.55);
    const std::vector<Scene> scenes{
        Scene::plane(0.12),
        make_ramp(30.0, 0.12, {0.2, 0.275}),
        Scene(PlanePayload{0.2, {-0.4, 0.7}, {0.3, 0.1}}),
        Scene(SphereCapPayload{{0.275, 0.275, -0.05}, 0.2}),
    };
    for (const auto& s : scenes)
        for (int i = 0; i < 2000; ++i) {
            const auto r = raycast_down(s, {u(rng), u(rng)});
            if (!r.hit) {
                CHECK(r.height == 0.0);
                continue;
            }
            CHECK(r.height >= 0.0);
            CHECK(r.height < kRayOrigin);
            CHECK(std::abs(r.height + r.distance - kRayOrigin) <= 1e-12);
        }
}

TEST_CASE("sphere cap height follows the sphere equation") {
    const Scene s(SphereCapPayload{{0.275, 0.275, 0.0}, 0.15});
    CHECK(raycast_down(s, {0.275, 0.275}).height == doctest::Approx(0.15));
    const double dx = 0.09;
    CHECK(raycast_down(s, {0.275 + dx, 0.275}).height == doctest::Approx(std::sqrt(0.15 * 0.15 - dx * dx)));
    CHECK_FALSE(raycast_down(s, {0.05, 0.05}).hit);
}

TEST_CASE("heightfield interpolates bilinearly") {
    HeightfieldPayload hf;
    hf.origin = {0.0, 0.0};
    hf.spacing = 0.55;
    hf.nx = 2;
    hf.ny = 2;
    hf.heights = {0.0, 0.1, 0.2, 0.3};
    const Scene s(hf);
    CHECK(raycast_down(s, {0.0, 0.0}).height == doctest::Approx(0.0));
    CHECK(raycast_down(s, {0.275, 0.275}).height == doctest::Approx(0.15));
    CHECK(raycast_down(s, {0.55, 0.0}).height == doctest::Approx(0.1));
    CHECK(raycast_down(s, {0.275, 0.55}).height == doctest::Approx(0.25));
}

TEST_CASE("invalid scenes are rejected") {
    HeightfieldPayload hf;
    hf.spacing = 0.0;
    hf.nx = 2;
    hf.ny = 2;
    hf.heights = {0, 0, 0, 0};
    CHECK_THROWS_AS(Scene{hf}, SceneError);
    CHECK_THROWS_AS(Scene(TriangleListPayload{{{{0.1, 0.1, 0.1}, {0.2, 0.2, 0.1}, {0.3, 0.3, 0.1}}}}), SceneError);
    CHECK_THROWS_AS(Scene(TriangleListPayload{{{{0.1, 0.1, 1.2}, {0.2, 0.1, 0.1}, {0.1, 0.2, 0.1}}}}), SceneError);
    CHECK_THROWS_AS(Scene(SphereCapPayload{{0.2, 0.2, 0.0}, -1.0}), SceneError);
    CHECK_THROWS_AS(builtin_scene("castle"), SceneError);
}

TEST_CASE("tilt on a flat plane is zero") {
    const auto t = sample_tilt(Scene::plane(0.1), {0.2, 0.2}, 37.0);
    CHECK(t.h_a == t.h_b);
    CHECK(t.tilt_deg == 0.0);
    CHECK_FALSE(t.clamped);
}

TEST_CASE("tilt along a 30 degree slope") {
    const Scene s = make_ramp(30.0, 0.12, {0.275, 0.275});
    const auto t = sample_tilt(s, {0.275, 0.275}, 0.0);
    // Independent oracle: rise across the cap is 2 w tan(30).
    const double w = kDefaultCapHalfwidth;
    CHECK(t.h_b - t.h_a == doctest::Approx(2 * w * std::tan(30.0 * 3.14159265358979323846 / 180.0)));
    CHECK(std::abs(t.tilt_deg - 30.0) <= 0.5);
    // Facing the other way flips the sign; across the slope it vanishes.
    CHECK(std::abs(sample_tilt(s, {0.275, 0.275}, 180.0).tilt_deg + 30.0) <= 0.5);
    CHECK(std::abs(sample_tilt(s, {0.275, 0.275}, 90.0).tilt_deg) <= 1e-9);
}

TEST_CASE("steep slope clamps at 60 degrees") {
    const Scene s = make_ramp(75.0, 0.3, {0.275, 0.275});
    const auto t = sample_tilt(s, {0.275, 0.275}, 0.0);
    CHECK(t.tilt_deg == 60.0);
    CHECK(t.clamped);
}

TEST_CASE("tilt attachment outside the mat raises a bounds error") {
    CHECK_THROWS_AS(sample_tilt(Scene::plane(0.1), {0.01, 0.2}, 0.0), BoundsError);
    CHECK_NOTHROW(sample_tilt(Scene::plane(0.1), {0.01, 0.2}, 90.0));
}

TEST_CASE("house roof tilts at the roof pitch") {
    const Scene s = builtin_scene("house");
    const auto left = sample_tilt(s, {0.275 - 0.04, 0.275}, 0.0);
    const auto right = sample_tilt(s, {0.275 + 0.04, 0.275}, 0.0);
    CHECK(left.tilt_deg == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(right.tilt_deg == doctest::Approx(-30.0).epsilon(1e-9));
}

TEST_CASE("tessellated analytic scenes agree within 1.5 mm") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 0.55);
    for (const Scene& s : {make_ramp(30.0, 0.12, {0.2, 0.275}), Scene(SphereCapPayload{{0.275, 0.275, 0.0}, 0.15}),
                           Scene(PlanePayload{0.1, {0.2, -0.3}, {0.275, 0.275}})}) {
        const Scene t = tessellate(s, 0.001);
        CHECK(t.kind() == SceneKind::TriangleList);
        const auto& tris = std::get<TriangleListPayload>(t.payload()).triangles;
        for (int i = 0; i < 300; ++i) {
            const Vec2 p{u(rng), u(rng)};
            const auto a = raycast_down(s, p);
            const auto d = oracle::brute_force_down(tris, p, kRayOrigin);
            const double hb = d ? kRayOrigin - *d : 0.0;
            // Near the sphere cap rim the surface is steeper than the
            // representable slope; skip points where the exact slope exceeds it.
            if (s.kind() == SceneKind::AnalyticSphereCap) {
                const double r = distance(p, {0.275, 0.275});
                if (r > 0.15 * std::sin(std::atan(4.0))) continue;
            }
            CHECK(std::abs(a.height - hb) <= 0.0015);
        }
    }
}

TEST_CASE("scene JSON round trip for every kind") {
    HeightfieldPayload hf;
    hf.origin = {0.0, 0.0};
    hf.spacing = 0.275;
    hf.nx = 3;
    hf.ny = 3;
    hf.heights = {0, 0.1, 0, 0.1, 0.2, 0.1, 0, 0.1, 0};
    const std::vector<Scene> scenes{Scene::plane(0.12, {0.1, 0.0}), Scene(SphereCapPayload{{0.2, 0.3, 0.0}, 0.1}),
                                    Scene(hf), builtin_scene("house")};
    for (const auto& s : scenes) {
        const auto doc = scene_to_json(s);
        CHECK(doc.at("schema") == 1);
        CHECK(doc.at("kind") == std::string(to_string(s.kind())));
        const Scene back = scene_from_json(doc);
        CHECK(scene_to_json(back) == doc);
        CHECK(raycast_down(back, {0.27, 0.31}).height == raycast_down(s, {0.27, 0.31}).height);
    }
}

TEST_CASE("scene JSON errors") {
    auto doc = scene_to_json(Scene::plane(0.1));
    auto bad = doc;
    bad["schema"] = 2;
    CHECK_THROWS_AS(scene_from_json(bad), SceneError);
    bad = doc;
    bad["kind"] = "voxel";
    CHECK_THROWS_AS(scene_from_json(bad), SceneError);
    bad = doc;
    bad.erase("payload");
    CHECK_THROWS_AS(scene_from_json(bad), SceneError);
    CHECK_THROWS_AS(load_scene("/nonexistent/scene.json"), SceneError);
}

TEST_CASE("scene files save and load") {
    const auto path = std::filesystem::temp_directory_path() / "hb_scene_test.json";
    save_scene(builtin_scene("blocks"), path);
    const Scene back = load_scene(path);
    CHECK(raycast_down(back, {0.45, 0.45}).height == doctest::Approx(0.22));
    std::filesystem::remove(path);
}
