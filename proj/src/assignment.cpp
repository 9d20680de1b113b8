#include "hapticbots/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hapticbots {

namespace {

// Blocks a cell without the inf - inf hazards of true infinity.
constexpr double kForbidden = 1e9;

double permutation_cost(const std::vector<std::vector<double>>& cost, const std::vector<int>& cols) {
    double sum = 0.0;
    for (std::size_t i = 0; i < cols.size(); ++i) sum += cost[i][cols[i]];
    return sum;
}

bool within_tie(double candidate, double best) {
    return candidate <= best + 1e-12 * std::max(1.0, std::abs(best));
}

}  // namespace

std::optional<AssignedPair> Assignment::for_robot(int robot) const {
    for (const auto& p : pairs)
        if (p.robot == robot) return p;
    return std::nullopt;
}

// Shortest augmenting path form of the Kuhn-Munkres method with row/column
// potentials; O(n^3).
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) return {};
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = std::numeric_limits<double>::infinity();
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j]) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

double assignment_cost(std::span<const Vec2> robots, const std::vector<AssignedPair>& pairs) {
    double sum = 0.0;
    for (const auto& p : pairs) sum += distance(robots[p.robot], p.point);
    return sum;
}

Assignment solve_munkres(std::span<const Vec2> robots, std::span<const Vec2> targets) {
    Assignment out;
    const int nr = static_cast<int>(robots.size());
    const int nt = static_cast<int>(targets.size());
    if (nr == 0 || nt == 0) {
        for (int t = 0; t < nt; ++t) out.unserved.push_back(t);
        return out;
    }
    const int n = std::max(nr, nt);
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
    for (int r = 0; r < nr; ++r)
        for (int t = 0; t < nt; ++t) cost[r][t] = distance(robots[r], targets[t]);

    const double best = permutation_cost(cost, hungarian(cost));

    // Lexicographic refinement: fix each row to the smallest column that still
    // admits an optimal completion. Dummy columns are interchangeable, so only
    // the first free one is tried.
    std::vector<int> fixed_col(n, -1);
    std::vector<char> col_taken(n, false);
    for (int r = 0; r < n; ++r) {
        bool dummy_tried = false;
        for (int c = 0; c < n; ++c) {
            if (col_taken[c]) continue;
            if (c >= nt) {
                if (dummy_tried) continue;
                dummy_tried = true;
            }
            auto constrained = cost;
            auto forbid = [&](int row, int col) {
                for (int k = 0; k < n; ++k) {
                    if (k != col) constrained[row][k] = kForbidden;
                    if (k != row) constrained[k][col] = kForbidden;
                }
            };
            for (int rr = 0; rr < r; ++rr) forbid(rr, fixed_col[rr]);
            forbid(r, c);
            if (within_tie(permutation_cost(constrained, hungarian(constrained)), best)) {
                fixed_col[r] = c;
                col_taken[c] = true;
                break;
            }
        }
    }

    std::vector<char> served(nt, false);
    for (int r = 0; r < nr; ++r) {
        const int c = fixed_col[r];
        if (c >= 0 && c < nt) {
            out.pairs.push_back({r, c, targets[c]});
            served[c] = true;
        }
    }
    for (int t = 0; t < nt; ++t)
        if (!served[t]) out.unserved.push_back(t);
    out.cost = assignment_cost(robots, out.pairs);
    return out;
}

// ---------------------------------------------------------------------------
// Target prioritization

namespace {

bool region_contains(const Region& r, const GridGeometry& g, Vec2 p) {
    const GridIndex c = g.nearest(p);
    return std::binary_search(r.cells.begin(), r.cells.end(), c,
                              [&](GridIndex a, GridIndex b) { return g.linear(a) < g.linear(b); });
}

double region_distance(const Region& r, const GridGeometry& g, Vec2 p) {
    if (region_contains(r, g, p)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : r.cells) best = std::min(best, distance(g.position(c), p));
    return best;
}

Vec2 nearest_cell_position(const Region& r, const GridGeometry& g, Vec2 p) {
    Vec2 best = g.position(r.cells.front());
    double best_d = distance(best, p);
    for (const auto& c : r.cells) {
        const double d = distance(g.position(c), p);
        if (d < best_d) {
            best_d = d;
            best = g.position(c);
        }
    }
    return best;
}

Vec2 primary_point(const Region& r, const GridGeometry& g, std::optional<Vec2> finger) {
    if (finger && region_contains(r, g, *finger)) return *finger;
    if (region_contains(r, g, r.centroid)) return r.centroid;
    return nearest_cell_position(r, g, r.centroid);
}

// Up to `extra` additional points inside the region on a lattice anchored at
// the primary point, each at least min_sep from all others.
std::vector<Vec2> spread_points(const Region& r, const GridGeometry& g, Vec2 primary, int extra, double min_sep) {
    if (extra <= 0) return {};
    const int min_stride = static_cast<int>(std::ceil(min_sep / g.spacing - 1e-9));
    const int uniform = static_cast<int>(std::sqrt(r.area / (extra + 1)) / g.spacing);
    const GridIndex anchor = g.nearest(primary);
    std::vector<Vec2> best;
    for (int stride = std::max(min_stride, uniform); stride >= min_stride; --stride) {
        std::vector<std::pair<double, Vec2>> lattice;
        for (const auto& c : r.cells) {
            if ((c.ix - anchor.ix) % stride != 0 || (c.iy - anchor.iy) % stride != 0) continue;
            lattice.push_back({distance(g.position(c), primary), g.position(c)});
        }
        // Cells are in linear order already, so stable sorting keeps ties deterministic.
        std::stable_sort(lattice.begin(), lattice.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<Vec2> chosen;
        for (const auto& [d, p] : lattice) {
            if (static_cast<int>(chosen.size()) == extra) break;
            bool ok = distance(p, primary) >= min_sep;
            for (const auto& q : chosen) ok = ok && distance(p, q) >= min_sep;
            if (ok) chosen.push_back(p);
        }
        if (chosen.size() > best.size()) best = chosen;
        if (static_cast<int>(best.size()) == extra) break;
    }
    return best;
}

}  // namespace

std::vector<TargetPoint> prioritize_targets(const std::vector<Region>& regions, const GridGeometry& grid,
                                            std::optional<Vec2> finger, int n_robots, double min_separation) {
    if (n_robots < 1) throw std::invalid_argument("prioritize_targets needs at least one robot");
    std::vector<TargetPoint> out;
    if (regions.empty()) return out;

    std::vector<int> selected;
    if (static_cast<int>(regions.size()) <= n_robots) {
        for (int i = 0; i < static_cast<int>(regions.size()); ++i) selected.push_back(i);
    } else {
        std::vector<std::pair<double, int>> order;
        for (int i = 0; i < static_cast<int>(regions.size()); ++i)
            order.push_back({finger ? region_distance(regions[i], grid, *finger) : 0.0, i});
        std::stable_sort(order.begin(), order.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (int k = 0; k < n_robots; ++k) selected.push_back(order[k].second);
    }

    for (int i : selected) out.push_back({primary_point(regions[i], grid, finger), i, 0});

    const int surplus = n_robots - static_cast<int>(regions.size());
    if (surplus > 0) {
        // Regions are sorted by area, so index 0 is the largest.
        const Vec2 primary = out.front().point;
        int slot = 1;
        for (const Vec2& p : spread_points(regions.front(), grid, primary, surplus, min_separation))
            out.push_back({p, 0, slot++});
    }
    return out;
}

Assignment reassign_policy(const Assignment& prev, std::span<const Vec2> robots, std::span<const Vec2> next_targets,
                           double hysteresis) {
    if (hysteresis < 0.0) throw std::invalid_argument("hysteresis must be non-negative");
    Assignment opt = solve_munkres(robots, next_targets);
    if (prev.pairs.empty()) return opt;

    // Carry each previous pair to the nearest surviving target, closest pairs first.
    struct Match {
        double d;
        int pair;
        int target;
    };
    std::vector<Match> matches;
    for (int i = 0; i < static_cast<int>(prev.pairs.size()); ++i)
        for (int t = 0; t < static_cast<int>(next_targets.size()); ++t) {
            const double d = distance(prev.pairs[i].point, next_targets[t]);
            if (d <= hysteresis) matches.push_back({d, i, t});
        }
    std::stable_sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) { return a.d < b.d; });
    std::vector<int> pair_target(prev.pairs.size(), -1);
    std::vector<char> target_used(next_targets.size(), false);
    for (const auto& m : matches) {
        if (pair_target[m.pair] >= 0 || target_used[m.target]) continue;
        pair_target[m.pair] = m.target;
        target_used[m.target] = true;
    }

    Assignment kept;
    for (std::size_t i = 0; i < prev.pairs.size(); ++i) {
        const int r = prev.pairs[i].robot;
        if (pair_target[i] < 0 || r >= static_cast<int>(robots.size())) return opt;
        kept.pairs.push_back({r, pair_target[i], next_targets[pair_target[i]]});
    }
    std::sort(kept.pairs.begin(), kept.pairs.end(),
              [](const AssignedPair& a, const AssignedPair& b) { return a.robot < b.robot; });

    // Kept pairing must serve the same robots and targets as the optimum.
    if (kept.pairs.size() != opt.pairs.size()) return opt;
    std::vector<int> kept_targets, opt_targets;
    for (std::size_t i = 0; i < kept.pairs.size(); ++i) {
        if (kept.pairs[i].robot != opt.pairs[i].robot) return opt;
        kept_targets.push_back(kept.pairs[i].target);
        opt_targets.push_back(opt.pairs[i].target);
    }
    std::sort(kept_targets.begin(), kept_targets.end());
    std::sort(opt_targets.begin(), opt_targets.end());
    if (kept_targets != opt_targets) return opt;

    for (std::size_t i = 0; i < kept.pairs.size(); ++i) {
        const Vec2 pos = robots[kept.pairs[i].robot];
        const double gain = distance(pos, kept.pairs[i].point) - distance(pos, opt.pairs[i].point);
        if (gain >= hysteresis) return opt;
    }
    kept.cost = assignment_cost(robots, kept.pairs);
    kept.unserved = opt.unserved;
    return kept;
}

}  // namespace hapticbots
