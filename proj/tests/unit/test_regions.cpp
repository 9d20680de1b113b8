#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"

#include "hapticbots/regions.hpp"

using namespace hapticbots;

namespace {

HeightMap grid_map(int nx, int ny, std::vector<double> cells) {
    HeightMap hm;
    hm.grid = GridGeometry{{0.0, 0.0}, 0.005, nx, ny};
    hm.cells = std::move(cells);
    return hm;
}

std::vector<int> labels_of(const HeightMap& hm, const std::vector<Region>& regions) {
    return region_labels(hm, regions);
}

}  // namespace

TEST_CASE("default mat grid is 111 x 111") {
    const auto hm = build_heightmap(Scene::empty(), 0.0);
    CHECK(hm.grid.nx == 111);
    CHECK(hm.grid.ny == 111);
    CHECK(hm.cells.size() == 111u * 111u);
}

TEST_CASE("empty scene samples to zero") {
    const auto hm = build_heightmap(Scene::empty(), 2.5);
    for (double c : hm.cells) CHECK(c == 0.0);
    CHECK(hm.stamp == 2.5);
}

TEST_CASE("plane samples to its height everywhere") {
    const auto hm = build_heightmap(Scene::plane(0.12), 0.0);
    for (double c : hm.cells) CHECK(c == doctest::Approx(0.12));
}

TEST_CASE("each cell equals raycast at its center") {
    const Scene s = builtin_scene("house");
    const auto hm = build_heightmap(s, 0.0);
    for (int iy = 0; iy < hm.grid.ny; iy += 7)
        for (int ix = 0; ix < hm.grid.nx; ix += 5) {
            const GridIndex c{ix, iy};
            CHECK(hm.at(c) == raycast_down(s, hm.grid.position(c)).height);
        }
}

TEST_CASE("row-wise sampling equals a full build") {
    const Scene s = builtin_scene("dome");
    const auto full = build_heightmap(s, 0.0);
    HeightMap part;
    part.grid = full.grid;
    part.cells.assign(full.cells.size(), -1.0);
    for (int r = 0; r < part.grid.ny; r += 8) sample_heightmap_rows(s, part, r, std::min(part.grid.ny, r + 8));
    CHECK(part.cells == full.cells);
}

TEST_CASE("all-zero map has no regions") {
    CHECK(extract_regions(grid_map(5, 5, std::vector<double>(25, 0.0))).empty());
}

TEST_CASE("one 3x3 block is one region of 9 cells") {
    std::vector<double> c(49, 0.0);
    for (int y = 2; y < 5; ++y)
        for (int x = 2; x < 5; ++x) c[y * 7 + x] = 0.05;
    const auto regs = extract_regions(grid_map(7, 7, c));
    REQUIRE(regs.size() == 1);
    CHECK(regs[0].cells.size() == 9);
    CHECK(regs[0].peak_height == 0.05);
    CHECK(regs[0].area == doctest::Approx(9 * 0.005 * 0.005));
    CHECK(regs[0].centroid.x == doctest::Approx(3 * 0.005));
    CHECK(regs[0].centroid.y == doctest::Approx(3 * 0.005));
}

TEST_CASE("diagonal contact joins blocks under 8-connectivity") {
    std::vector<double> c(36, 0.0);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) c[y * 6 + x] = 0.05;
    for (int y = 2; y < 4; ++y)
        for (int x = 2; x < 4; ++x) c[y * 6 + x] = 0.05;
    const auto hm = grid_map(6, 6, c);
    const auto regs = extract_regions(hm);
    CHECK(regs.size() == 1);
    CHECK(oracle::same_partition(labels_of(hm, regs), oracle::relax_labels(c, 6, 6, 0.01)));
}

TEST_CASE("threshold is strict") {
    const auto regs = extract_regions(grid_map(3, 1, {0.01, 0.0100001, 0.01}));
    REQUIRE(regs.size() == 1);
    CHECK(regs[0].cells.size() == 1);
    CHECK_THROWS(extract_regions(grid_map(1, 1, {0.0}), 0.0));
}

TEST_CASE("random maps match the relaxation labeling oracle") {
    std::mt19937_64 rng(3);
    std::bernoulli_distribution on(0.35);
    for (int trial = 0; trial < 40; ++trial) {
        const int nx = 9 + trial % 5, ny = 7 + trial % 4;
        std::vector<double> c(static_cast<std::size_t>(nx * ny));
        for (auto& v : c) v = on(rng) ? 0.02 + 0.01 * (trial % 3) : 0.0;
        const auto hm = grid_map(nx, ny, c);
        const auto regs = extract_regions(hm);
        const auto mine = labels_of(hm, regs);
        CHECK(oracle::same_partition(mine, oracle::relax_labels(c, nx, ny, 0.01)));
        // Partition and ordering.
        std::size_t covered = 0;
        for (std::size_t k = 0; k < regs.size(); ++k) {
            covered += regs[k].cells.size();
            if (k > 0) CHECK(regs[k - 1].cells.size() >= regs[k].cells.size());
            for (const auto& cell : regs[k].cells) CHECK(hm.at(cell) > 0.01);
        }
        std::size_t above = 0;
        for (double v : c) above += v > 0.01;
        CHECK(covered == above);
    }
}

TEST_CASE("raising the threshold never covers more cells") {
    const auto hm = build_heightmap(builtin_scene("dome"), 0.0);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double th : {0.005, 0.01, 0.05, 0.1, 0.14}) {
        std::size_t n = 0;
        for (const auto& r : extract_regions(hm, th)) n += r.cells.size();
        CHECK(n <= prev);
        prev = n;
    }
}

TEST_CASE("extraction is deterministic") {
    const auto hm = build_heightmap(builtin_scene("blocks"), 0.0);
    const auto a = extract_regions(hm);
    const auto b = extract_regions(hm);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].cells == b[i].cells);
    }
}

TEST_CASE("tracker keeps ids for overlapping regions and issues new ones") {
    RegionTracker tr;
    const auto hm = build_heightmap(builtin_scene("blocks"), 0.0);
    const auto regs = extract_regions(hm);
    CHECK(tr.update(regs));
    const auto ids = tr.track_ids;
    CHECK_FALSE(tr.update(regs));
    CHECK(tr.track_ids == ids);
    const auto hm2 = build_heightmap(make_blocks({{0.05, 0.05, 0.15, 0.15, 0.10}, {0.3, 0.3, 0.35, 0.35, 0.1}}), 0.0);
    CHECK(tr.update(extract_regions(hm2)));
    CHECK(std::count(ids.begin(), ids.end(), tr.track_ids[0]) + std::count(ids.begin(), ids.end(), tr.track_ids[1]) == 1);
    CHECK(std::set<int>(tr.track_ids.begin(), tr.track_ids.end()).size() == 2);
}

TEST_CASE("CSV dumps round trip") {
    const auto hm = build_heightmap(builtin_scene("blocks"), 0.0);
    std::stringstream ss;
    write_heightmap_csv(ss, hm);
    const auto grid = read_csv_grid(ss);
    REQUIRE(grid.size() == 111);
    REQUIRE(grid[0].size() == 111);
    CHECK(grid[90][90] == doctest::Approx(hm.at({90, 90})));
    std::stringstream ls;
    const auto regs = extract_regions(hm);
    write_labels_csv(ls, hm, regs);
    const auto labels = read_csv_grid(ls);
    CHECK(labels[0][0] == -1);
    CHECK(labels[20][20] >= 0);
}
