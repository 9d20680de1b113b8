#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "hapticbots/geometry.hpp"
#include "hapticbots/scene.hpp"

namespace hapticbots {

inline constexpr double kDefaultGridSpacing = 0.005;
inline constexpr double kDefaultTouchThreshold = 0.01;

struct GridIndex {
    int ix = 0;
    int iy = 0;
    constexpr bool operator==(const GridIndex&) const = default;
};

// Regular sample lattice over the mat, endpoints inclusive.
struct GridGeometry {
    Vec2 origin{};
    double spacing = kDefaultGridSpacing;
    int nx = 0;
    int ny = 0;

    static GridGeometry covering(const MatBounds& bounds, double spacing = kDefaultGridSpacing);

    Vec2 position(GridIndex c) const { return {origin.x + c.ix * spacing, origin.y + c.iy * spacing}; }
    std::size_t linear(GridIndex c) const { return static_cast<std::size_t>(c.iy) * nx + c.ix; }
    GridIndex nearest(Vec2 p) const;
    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
    bool operator==(const GridGeometry&) const = default;
};

struct HeightMap {
    GridGeometry grid;
    std::vector<double> cells;  // row-major, x fastest
    double stamp = 0.0;

    double at(GridIndex c) const { return cells[grid.linear(c)]; }
};

struct Region {
    int id = 0;
    std::vector<GridIndex> cells;  // sorted by linear index
    Vec2 centroid{};
    double peak_height = 0.0;
    double area = 0.0;
};

HeightMap build_heightmap(const Scene& scene, double now, double spacing = kDefaultGridSpacing);

// Samples rows [row_begin, row_end) of an existing map in place.
void sample_heightmap_rows(const Scene& scene, HeightMap& hm, int row_begin, int row_end);

// 8-connected components of cells strictly above threshold, largest first.
std::vector<Region> extract_regions(const HeightMap& hm, double threshold = kDefaultTouchThreshold);

// Label grid: region id per cell, -1 outside every region.
std::vector<int> region_labels(const HeightMap& hm, const std::vector<Region>& regions);

// Persistent identity across refreshes: each new region inherits the track id of
// the previous region it overlaps most; unmatched regions get fresh ids.
struct RegionTracker {
    std::vector<int> track_ids;       // parallel to the last region list
    std::vector<Region> last;
    int next_id = 0;

    // Returns true when the set of track ids changed.
    bool update(const std::vector<Region>& regions);
};

// CSV debug dumps: one row per grid row (iy), one value per cell.
void write_heightmap_csv(std::ostream& out, const HeightMap& hm);
void write_labels_csv(std::ostream& out, const HeightMap& hm, const std::vector<Region>& regions);
std::vector<std::vector<double>> read_csv_grid(std::istream& in);

}  // namespace hapticbots
