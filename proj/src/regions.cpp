#include "hapticbots/regions.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hapticbots {

GridGeometry GridGeometry::covering(const MatBounds& bounds, double spacing) {
    if (!(spacing > 0.0)) throw std::invalid_argument("grid spacing must be positive");
    GridGeometry g;
    g.spacing = spacing;
    // Slack absorbs representation error so 0.55 / 0.005 counts as 110 steps.
    g.nx = static_cast<int>(std::floor(bounds.width / spacing + 1e-9)) + 1;
    g.ny = static_cast<int>(std::floor(bounds.depth / spacing + 1e-9)) + 1;
    return g;
}

GridIndex GridGeometry::nearest(Vec2 p) const {
    const int ix = static_cast<int>(std::lround((p.x - origin.x) / spacing));
    const int iy = static_cast<int>(std::lround((p.y - origin.y) / spacing));
    return {std::clamp(ix, 0, nx - 1), std::clamp(iy, 0, ny - 1)};
}

void sample_heightmap_rows(const Scene& scene, HeightMap& hm, int row_begin, int row_end) {
    const auto& b = scene.bounds();
    for (int iy = row_begin; iy < row_end; ++iy)
        for (int ix = 0; ix < hm.grid.nx; ++ix) {
            const GridIndex c{ix, iy};
            hm.cells[hm.grid.linear(c)] = scene.raycast_down(b.clamp(hm.grid.position(c))).height;
        }
}

HeightMap build_heightmap(const Scene& scene, double now, double spacing) {
    HeightMap hm;
    hm.grid = GridGeometry::covering(scene.bounds(), spacing);
    hm.cells.assign(hm.grid.size(), 0.0);
    hm.stamp = now;
    sample_heightmap_rows(scene, hm, 0, hm.grid.ny);
    return hm;
}

std::vector<Region> extract_regions(const HeightMap& hm, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("touch threshold must be positive");
    const auto& g = hm.grid;
    std::vector<int> label(g.size(), -1);
    std::vector<Region> regions;
    std::vector<GridIndex> stack;

    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const GridIndex seed{ix, iy};
            if (label[g.linear(seed)] >= 0 || !(hm.at(seed) > threshold)) continue;
            Region r;
            const int tag = static_cast<int>(regions.size());
            label[g.linear(seed)] = tag;
            stack.push_back(seed);
            while (!stack.empty()) {
                const GridIndex c = stack.back();
                stack.pop_back();
                r.cells.push_back(c);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const GridIndex n{c.ix + dx, c.iy + dy};
                        if (n.ix < 0 || n.iy < 0 || n.ix >= g.nx || n.iy >= g.ny) continue;
                        auto& l = label[g.linear(n)];
                        if (l >= 0 || !(hm.at(n) > threshold)) continue;
                        l = tag;
                        stack.push_back(n);
                    }
            }
            std::sort(r.cells.begin(), r.cells.end(),
                      [&](GridIndex a, GridIndex b) { return g.linear(a) < g.linear(b); });
            Vec2 sum{};
            for (const auto& c : r.cells) {
                sum += g.position(c);
                r.peak_height = std::max(r.peak_height, hm.at(c));
            }
            r.centroid = sum / static_cast<double>(r.cells.size());
            r.area = static_cast<double>(r.cells.size()) * g.spacing * g.spacing;
            regions.push_back(std::move(r));
        }

    // Discovery order follows the lowest linear index, which breaks area ties.
    std::stable_sort(regions.begin(), regions.end(),
                     [](const Region& a, const Region& b) { return a.cells.size() > b.cells.size(); });
    for (int i = 0; i < static_cast<int>(regions.size()); ++i) regions[i].id = i;
    return regions;
}

std::vector<int> region_labels(const HeightMap& hm, const std::vector<Region>& regions) {
    std::vector<int> labels(hm.grid.size(), -1);
    for (const auto& r : regions)
        for (const auto& c : r.cells) labels[hm.grid.linear(c)] = r.id;
    return labels;
}

bool RegionTracker::update(const std::vector<Region>& regions) {
    std::map<std::pair<int, int>, int> cell_owner;
    for (std::size_t i = 0; i < last.size(); ++i)
        for (const auto& c : last[i].cells) cell_owner[{c.ix, c.iy}] = static_cast<int>(i);

    std::vector<int> ids(regions.size(), -1);
    std::vector<bool> taken(last.size(), false);
    // Largest regions claim their predecessor first.
    for (std::size_t i = 0; i < regions.size(); ++i) {
        std::map<int, int> overlap;
        for (const auto& c : regions[i].cells)
            if (auto it = cell_owner.find({c.ix, c.iy}); it != cell_owner.end()) ++overlap[it->second];
        int best = -1, best_count = 0;
        for (const auto& [prev, count] : overlap)
            if (!taken[prev] && count > best_count) {
                best = prev;
                best_count = count;
            }
        if (best >= 0) {
            taken[best] = true;
            ids[i] = track_ids[best];
        } else {
            ids[i] = next_id++;
        }
    }

    auto sorted_old = track_ids;
    auto sorted_new = ids;
    std::sort(sorted_old.begin(), sorted_old.end());
    std::sort(sorted_new.begin(), sorted_new.end());
    const bool changed = sorted_old != sorted_new;
    track_ids = std::move(ids);
    last = regions;
    return changed;
}

void write_heightmap_csv(std::ostream& out, const HeightMap& hm) {
    out << std::setprecision(17);
    for (int iy = 0; iy < hm.grid.ny; ++iy) {
        for (int ix = 0; ix < hm.grid.nx; ++ix) out << (ix ? "," : "") << hm.at({ix, iy});
        out << '\n';
    }
}

void write_labels_csv(std::ostream& out, const HeightMap& hm, const std::vector<Region>& regions) {
    const auto labels = region_labels(hm, regions);
    for (int iy = 0; iy < hm.grid.ny; ++iy) {
        for (int ix = 0; ix < hm.grid.nx; ++ix) out << (ix ? "," : "") << labels[hm.grid.linear({ix, iy})];
        out << '\n';
    }
}

std::vector<std::vector<double>> read_csv_grid(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error("bad CSV value '" + cell + "' on line " + std::to_string(line_no));
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("ragged CSV grid on line " + std::to_string(line_no));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace hapticbots
