#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hapticbots/geometry.hpp"
#include "hapticbots/regions.hpp"

namespace hapticbots {

inline constexpr double kDefaultHysteresis = 0.02;
// Diagonal of the 4.7 cm square robot footprint.
inline constexpr double kFootprintDiagonal = 0.047 * std::numbers::sqrt2;

struct AssignedPair {
    int robot = 0;
    int target = 0;  // index into the target list the assignment was solved for
    Vec2 point{};
    constexpr bool operator==(const AssignedPair&) const = default;
};

struct Assignment {
    std::vector<AssignedPair> pairs;  // sorted by robot
    double cost = 0.0;
    std::vector<int> unserved;

    std::optional<AssignedPair> for_robot(int robot) const;
};

// Minimum total Euclidean distance robot -> target pairing. Rectangular
// instances are padded with zero-cost dummies; among equal-cost optima the
// lexicographically smallest (robot, target) sequence wins.
Assignment solve_munkres(std::span<const Vec2> robots, std::span<const Vec2> targets);

// Square min-cost assignment on a dense cost matrix (row -> column).
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost);

// Sum of member distances, accumulated in robot order.
double assignment_cost(std::span<const Vec2> robots, const std::vector<AssignedPair>& pairs);

// A target derived from a region, with a key that stays stable while the
// region persists so the engine can follow moving targets between re-solves.
struct TargetPoint {
    Vec2 point{};
    int region = 0;  // index into the region list
    int slot = 0;    // 0 = primary target of the region, >0 = spread sub-target
};

std::vector<TargetPoint> prioritize_targets(const std::vector<Region>& regions, const GridGeometry& grid,
                                            std::optional<Vec2> finger, int n_robots,
                                            double min_separation = kFootprintDiagonal);

// Retains the previous pairing while no robot would gain at least `hysteresis`
// meters by switching to the fresh optimum.
Assignment reassign_policy(const Assignment& prev, std::span<const Vec2> robots,
                           std::span<const Vec2> next_targets, double hysteresis = kDefaultHysteresis);

}  // namespace hapticbots
