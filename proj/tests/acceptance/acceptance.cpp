// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"

#include "hapticbots/assignment.hpp"
#include "hapticbots/scenario.hpp"
#include "hapticbots/scene.hpp"
#include "hapticbots/trace.hpp"

using namespace hapticbots;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("%s  %-22s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome reach_times() {
    const auto t0 = Clock::now();
    const int counts[3] = {1, 3, 7};
    const double expected[3] = {2.0, 1.7, 1.6};
    double mean[3];
    bool within = true;
    std::string detail;
    for (int i = 0; i < 3; ++i) {
        const auto m = run_scenario(reach_benchmark(counts[i], 100, 1));
        mean[i] = m.mean_reach_time;
        within = within && std::abs(mean[i] - expected[i]) <= 0.25 * expected[i];
        detail += fmt("n=%d mean=%.3fs (target %.1f, timeouts %d) ", counts[i], mean[i], expected[i], m.timeouts);
    }
    const bool ordered = mean[2] <= mean[1] && mean[1] <= mean[0];
    const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
    detail += fmt("ordering %s, wall %.1fs", ordered ? "holds" : "violated", wall);
    return {within && ordered && wall < 60.0, detail};
}

Outcome munkres_optimality() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 0.55);
    int mismatches = 0, total = 0;
    for (int n = 2; n <= 7; ++n)
        for (int k = 0; k < 1000; ++k) {
            std::vector<Vec2> r(n), t(n);
            for (auto& p : r) p = {u(rng), u(rng)};
            for (auto& p : t) p = {u(rng), u(rng)};
            const double mine = solve_munkres(r, t).cost;
            const double best = oracle::brute_force_assignment(r, t);
            // Both sum the same distances in different orders; allow rounding only.
            if (std::abs(mine - best) > 1e-12 * best) ++mismatches;
            ++total;
        }
    const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
    return {mismatches == 0 && wall < 30.0, fmt("%d/%d instances optimal, wall %.1fs", total - mismatches, total, wall)};
}

Outcome collision_freedom() {
    const double limit = 2.0 * 0.0333;
    int violations = 0;
    double min_d = 1e9;
    const char* scenes[] = {"blocks", "house", "dome", "ramp", "flat"};
    for (int s = 0; s < 100; ++s) {
        ScenarioSpec spec;
        spec.robot_count = 7;
        spec.duration = 30.0;
        spec.seed = static_cast<std::uint64_t>(1000 + s);
        Scenario sc;
        if (s % 2 == 0) {
            sc = reach_benchmark(7, 6, spec.seed);
        } else {
            spec.scene = std::string("builtin:") + scenes[(s / 2) % 5];
            spec.generator = GeneratorSpec{"random_walk", {{"speed", 0.08}, {"z_offset", 0.0}}};
            sc = resolve_scenario(spec);
            std::mt19937_64 rng(spec.seed);
            sc.initial_positions = random_targets(7, sc.scene.bounds(), 0.0333, 0.08, rng);
        }
        run_scenario(sc, [&](const World& w) {
            for (std::size_t i = 0; i < w.robots.size(); ++i)
                for (std::size_t j = i + 1; j < w.robots.size(); ++j) {
                    const double d = distance(w.robots[i].pos, w.robots[j].pos);
                    min_d = std::min(min_d, d);
                    if (d < limit) ++violations;
                }
        });
    }
    return {violations == 0, fmt("100 scenarios, min distance %.4f m, %d violations", min_d, violations)};
}

Outcome surface_identity() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 0.55), slope(-1.5, 1.5), h(0.05, 0.3);
    double worst = 0.0;
    int checked = 0;
    for (int k = 0; k < 10000; ++k) {
        const Vec2 p{u(rng), u(rng)};
        const Scene s = k % 2 ? Scene::plane(h(rng), {slope(rng), slope(rng)})
                              : Scene(SphereCapPayload{{u(rng), u(rng), 0.0}, h(rng)});
        const auto hit = s.raycast_down(p);
        if (!hit.hit) continue;
        worst = std::max(worst, std::abs(hit.height + hit.distance - kRayOrigin));
        ++checked;
    }
    double worst_tri = 0.0;
    int tri_checked = 0;
    for (const char* name : {"house", "blocks"}) {
        const Scene s = builtin_scene(name);
        const auto& tris = std::get<TriangleListPayload>(s.payload()).triangles;
        for (int k = 0; k < 5000; ++k) {
            const Vec2 p{u(rng), u(rng)};
            const auto mine = s.raycast_down(p);
            const auto ref = oracle::brute_force_down(tris, p, kRayOrigin);
            if (mine.hit != ref.has_value()) {
                worst_tri = 1.0;
                continue;
            }
            if (ref) worst_tri = std::max(worst_tri, std::abs(mine.distance - *ref));
            ++tri_checked;
        }
    }
    return {worst <= 1e-12 && worst_tri <= 1e-9 && checked > 5000,
            fmt("analytic: %d hits, max |h+d-H| %.2e; triangles: %d queries, max error %.2e", checked, worst,
                tri_checked, worst_tri)};
}

Outcome tilt_rendering() {
    bool ok = true;
    std::string detail;
    for (double theta : {0.0, 15.0, 30.0, 50.0, 60.0}) {
        const Scene s = make_ramp(theta, 0.15, {0.275, 0.275});
        const auto t = sample_tilt(s, {0.275, 0.275}, 0.0);
        ok = ok && std::abs(t.tilt_deg - theta) <= 0.5 && !t.clamped;
        detail += fmt("%g->%.3f ", theta, t.tilt_deg);
    }
    const auto t70 = sample_tilt(make_ramp(70.0, 0.15, {0.275, 0.275}), {0.275, 0.275}, 0.0);
    ok = ok && std::abs(t70.tilt_deg - 60.0) <= 1e-9 && t70.clamped;
    detail += fmt("70->%.3f clamped=%d", t70.tilt_deg, t70.clamped ? 1 : 0);
    return {ok, detail};
}

Outcome plant_envelope() {
    ScenarioSpec spec;
    spec.scene = "builtin:house";
    spec.robot_count = 7;
    spec.duration = 30.0;
    spec.seed = 3;
    spec.generator = GeneratorSpec{"random_walk", {{"speed", 0.1}}};
    const auto sc = resolve_scenario(spec);
    std::stringstream ss;
    TraceWriter writer(ss, sc.robot_count, sc.config.dt);
    run_scenario(sc, [&](const World& w) { writer.write(w); });
    const Trace trace = read_trace(ss);
    const double dt = trace.dt;
    const PlantConfig& p = sc.config.plant;
    const double eps = 1e-9;
    int violations = 0, latency_checked = 0, latency_bad = 0;
    std::vector<const TraceRow*> prev(static_cast<std::size_t>(trace.robots), nullptr);
    for (const auto& r : trace.rows) {
        if (r.height < p.height_min - eps || r.height > p.height_max + eps || std::abs(r.tilt) > p.tilt_max + eps)
            ++violations;
        if (const TraceRow* q = prev[static_cast<std::size_t>(r.robot)]) {
            if (std::abs(r.height - q->height) > p.reel_rate * dt + eps) ++violations;
            if (distance(r.pos, q->pos) > p.v_max * dt + eps) ++violations;
            if (std::abs(yaw_error(q->yaw, r.yaw)) > p.omega_max * dt + eps) ++violations;
        }
        if (r.cmd_enqueue >= 0.0) {
            ++latency_checked;
            if (std::abs(r.cmd_activation - r.cmd_enqueue - p.latency) > 1e-12) ++latency_bad;
        }
        prev[static_cast<std::size_t>(r.robot)] = &r;
    }
    return {violations == 0 && latency_bad == 0 && latency_checked > 0,
            fmt("%zu rows, %d envelope violations, latency %d/%d rows at 80 ms", trace.rows.size(), violations,
                latency_checked - latency_bad, latency_checked)};
}

Outcome continuity() {
    ScenarioSpec spec;
    spec.scene = "builtin:ramp";
    spec.robot_count = 1;
    spec.seed = 11;
    spec.generator =
        GeneratorSpec{"lateral_sweep", {{"from", {0.15, 0.275}}, {"to", {0.45, 0.275}}, {"speed", 0.05}, {"hold", 4.0}}};
    auto sc = resolve_scenario(spec);
    sc.duration = sc.track.back().t;
    const auto m = run_scenario(sc);
    const bool ok = m.contact_ticks > 0 && m.contact_height_error_mean <= 0.005 && m.contact_tracking_fraction >= 0.95;
    return {ok, fmt("%lld contact ticks, mean error %.2f mm, within 3 cm %.1f%%", static_cast<long long>(m.contact_ticks),
                    1000.0 * m.contact_height_error_mean, 100.0 * m.contact_tracking_fraction)};
}

Outcome determinism() {
    int identical = 0, total = 0;
    auto traced = [](const Scenario& sc) {
        std::stringstream ss;
        TraceWriter writer(ss, sc.robot_count, sc.config.dt);
        const auto m = run_scenario(sc, [&](const World& w) { writer.write(w); });
        return std::make_pair(ss.str(), metrics_to_json(m).dump());
    };
    std::vector<Scenario> cases;
    for (const char* scene : {"builtin:house", "builtin:blocks", "builtin:ramp"}) {
        ScenarioSpec spec;
        spec.scene = scene;
        spec.robot_count = 5;
        spec.duration = 10.0;
        spec.seed = 42;
        spec.generator = GeneratorSpec{"random_walk", nlohmann::json::object()};
        cases.push_back(resolve_scenario(spec));
    }
    cases.push_back(reach_benchmark(7, 3, 42));
    for (const auto& sc : cases) {
        const auto a = traced(sc);
        const auto b = traced(sc);
        identical += a == b;
        ++total;
    }
    return {identical == total, fmt("%d/%d scenarios bit-identical (trace and metrics)", identical, total)};
}

Outcome sensor_errors() {
    const PlantConfig cfg;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.05, 0.5), yaw(-180.0, 180.0), h(0.08, 0.32), tilt(-60.0, 60.0);
    double ep = 0, ey = 0, eh = 0, et = 0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        RobotState s;
        s.pos = {u(rng), u(rng)};
        s.yaw = yaw(rng);
        s.height = h(rng);
        s.tilt = tilt(rng);
        const auto r = read_sensors(s, cfg, rng);
        ep += distance(r.pos, s.pos);
        ey += std::abs(yaw_error(s.yaw, r.yaw));
        eh += std::abs(r.height - s.height);
        et += std::abs(r.tilt - s.tilt);
    }
    ep /= n, ey /= n, eh /= n, et /= n;
    auto near = [](double v, double target) { return std::abs(v - target) <= 0.1 * target; };
    return {near(ep, 0.003) && near(ey, 3.0) && near(eh, 0.003) && near(et, 5.0),
            fmt("pos %.3f mm, yaw %.3f deg, height %.3f mm, tilt %.3f deg", 1000 * ep, ey, 1000 * eh, et)};
}

}  // namespace

int main() {
    report("reach_times", reach_times);
    report("munkres_optimality", munkres_optimality);
    report("collision_freedom", collision_freedom);
    report("surface_identity", surface_identity);
    report("tilt_rendering", tilt_rendering);
    report("plant_envelope", plant_envelope);
    report("continuity_tracking", continuity);
    report("determinism", determinism);
    report("sensor_errors", sensor_errors);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
