#include <gtest/gtest.h>

#include <deque>
#include <random>
#include <set>

#include "parquetry/config.hpp"
#include "parquetry/error.hpp"
#include "parquetry/segment.hpp"

using namespace parquetry;

namespace {

const Fabricability kLoose{5, 12.5};

// One 4-connected component and no background pocket unreachable (8-way)
// from outside the box.
bool simply_connected(const Shape& s) {
    const BinaryMask m = s.to_mask();
    const int w = m.width, h = m.height;
    std::vector<int> seen(size_t(w) * h, 0);
    int comps = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!m.get(x, y) || seen[size_t(y) * w + x]) continue;
            ++comps;
            std::deque<std::pair<int, int>> q{{x, y}};
            seen[size_t(y) * w + x] = 1;
            while (!q.empty()) {
                auto [cx, cy] = q.front();
                q.pop_front();
                for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                    const int nx = cx + dx, ny = cy + dy;
                    if (!m.get_or_false(nx, ny) || seen[size_t(ny) * w + nx]) continue;
                    seen[size_t(ny) * w + nx] = 1;
                    q.emplace_back(nx, ny);
                }
            }
        }
    if (comps != 1) return false;
    const int W = w + 2, H = h + 2;
    std::vector<int> out(size_t(W) * H, 0);
    std::deque<std::pair<int, int>> q{{0, 0}};
    out[0] = 1;
    while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = cx + dx, ny = cy + dy;
                if (nx < 0 || ny < 0 || nx >= W || ny >= H || out[size_t(ny) * W + nx]) continue;
                if (m.get_or_false(nx - 1, ny - 1)) continue;
                out[size_t(ny) * W + nx] = 1;
                q.emplace_back(nx, ny);
            }
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (!m.get(x, y) && !out[size_t(y + 1) * W + x + 1]) return false;
    return true;
}

void expect_partition(const Segmentation& seg) {
    long total = 0;
    std::vector<int> hits(size_t(seg.width) * seg.height, 0);
    for (const auto& r : seg.regions) {
        total += r.area();
        for (const auto& run : r.shape.runs)
            for (int x = run.x0; x < run.x1; ++x) ++hits[size_t(r.bbox.y + run.y) * seg.width + r.bbox.x + x];
    }
    EXPECT_EQ(total, long(seg.width) * seg.height);
    for (int h : hits) ASSERT_EQ(h, 1);
    for (int l : seg.label_map().labels) ASSERT_GE(l, 0);
}

}  // namespace

TEST(RegularGrid, HundredSquares) {
    const Segmentation seg = regular_grid(100, 100, 10, kLoose);
    ASSERT_EQ(seg.regions.size(), 100u);
    for (const auto& r : seg.regions) {
        EXPECT_EQ(r.area(), 100);
        EXPECT_TRUE(r.shape.is_rectangle());
    }
    expect_partition(seg);
}

TEST(RegularGrid, NarrowStripMerges) {
    const Segmentation seg = regular_grid(105, 100, 10, kLoose);
    ASSERT_EQ(seg.regions.size(), 100u);
    int wide = 0;
    for (const auto& r : seg.regions) {
        if (r.bbox.x1() == 105) {
            EXPECT_EQ(r.bbox.w, 15);
            EXPECT_EQ(r.bbox.h, 10);
            ++wide;
        } else {
            EXPECT_EQ(r.bbox.w, 10);
        }
    }
    EXPECT_EQ(wide, 10);
    expect_partition(seg);
}

TEST(RegularGrid, DefaultPhysicalPatchSize) {
    EXPECT_EQ(std::lround(mm_to_px(14.0, 300.0)), 165);
    EXPECT_EQ(Config{}.patch_px(), 165);
    EXPECT_EQ(Fabricability::at_dpi(300).min_edge_px, 59);
    EXPECT_DOUBLE_EQ(Fabricability::at_dpi(300).min_area_px, 59.0 * 59.0 / 2.0);
}

TEST(RegularGrid, RejectsTooSmallPatch) {
    EXPECT_THROW(regular_grid(100, 100, 40, Fabricability::at_dpi(300)), InputError);
}

TEST(RegularGrid, CoverageProperty) {
    std::mt19937 rng(3);
    for (int t = 0; t < 25; ++t) {
        const int w = 5 + int(rng() % 90), h = 5 + int(rng() % 90), p = 5 + int(rng() % 20);
        const Segmentation seg = regular_grid(w, h, p, kLoose);
        expect_partition(seg);
        for (const auto& r : seg.regions) EXPECT_TRUE(simply_connected(r.shape));
    }
}

TEST(LabelMapSegmentation, SingleLabel) {
    const Segmentation seg = from_label_map(LabelMap(12, 9, 4), {1, 1});
    ASSERT_EQ(seg.regions.size(), 1u);
    EXPECT_EQ(seg.regions[0].area(), 108);
}

TEST(LabelMapSegmentation, VerticalSplit) {
    LabelMap lm(12, 9, 0);
    for (int y = 0; y < 9; ++y)
        for (int x = 5; x < 12; ++x) lm.at(x, y) = 1;
    const Segmentation seg = from_label_map(lm, {1, 1});
    ASSERT_EQ(seg.regions.size(), 2u);
    for (const auto& r : seg.regions) EXPECT_TRUE(r.shape.is_rectangle());
    expect_partition(seg);
}

TEST(LabelMapSegmentation, RingBecomesSimplyConnected) {
    LabelMap lm(30, 30, 0);
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 30; ++x) {
            const int d = std::max(std::abs(x - 8), std::abs(y - 15));
            if (d >= 5 && d <= 8) lm.at(x, y) = 1;
        }
    const Segmentation seg = from_label_map(lm, {1, 1});
    ASSERT_EQ(seg.regions.size(), 2u);
    std::multiset<long> areas;
    for (const auto& r : seg.regions) {
        EXPECT_TRUE(simply_connected(r.shape));
        areas.insert(r.area());
    }
    EXPECT_EQ(areas, (std::multiset<long>{289, 611}));
    expect_partition(seg);

    // A ring fully inside another label, plus disconnected pieces of one label.
    std::mt19937 rng(9);
    LabelMap lm2(40, 32, 0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 40; ++x) {
            const double r = std::hypot(x - 20, y - 16);
            if (r > 6 && r < 10) lm2.at(x, y) = 1;
            if (x < 6 && (y < 8 || y > 24)) lm2.at(x, y) = 2;
        }
    const Segmentation seg2 = from_label_map(lm2, {1, 1});
    for (const auto& r : seg2.regions) EXPECT_TRUE(simply_connected(r.shape));
    expect_partition(seg2);
}

TEST(LabelMapSegmentation, ThinLabelIsReported) {
    LabelMap lm(20, 20, 0);
    for (int y = 0; y < 20; ++y) lm.at(10, y) = 7;
    try {
        from_label_map(lm, {1, 1});
        FAIL() << "expected FabricabilityError";
    } catch (const FabricabilityError& e) {
        EXPECT_EQ(e.offenders(), std::vector<int>{7});
    }
}

TEST(QuadSplit, SixteenIntoEight) {
    const Segmentation seg = regular_grid(16, 16, 16, kLoose);
    ASSERT_EQ(seg.regions.size(), 1u);
    const auto kids = quad_split(seg.regions[0], 1, kLoose);
    ASSERT_EQ(kids.size(), 4u);
    std::vector<int> hits(256, 0);
    for (size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(kids[k].id, int(1 + k));
        EXPECT_EQ(kids[k].bbox.w, 8);
        EXPECT_EQ(kids[k].bbox.h, 8);
        EXPECT_EQ(kids[k].depth, 1);
        for (const auto& run : kids[k].shape.runs)
            for (int x = run.x0; x < run.x1; ++x) ++hits[(kids[k].bbox.y + run.y) * 16 + kids[k].bbox.x + x];
    }
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_EQ(kids[1].bbox.x, 8);
    EXPECT_EQ(kids[2].bbox.y, 8);
}

TEST(QuadSplit, OddSizesAndTooSmall) {
    const Segmentation seg = regular_grid(15, 13, 15, kLoose);
    const auto kids = quad_split(seg.regions[0], 0, kLoose);
    long area = 0;
    for (const auto& k : kids) area += k.area();
    EXPECT_EQ(area, 15 * 13);
    EXPECT_EQ(kids[0].bbox.w, 7);
    EXPECT_EQ(kids[1].bbox.w, 8);
    const Segmentation small = regular_grid(10, 10, 10, {5, 32});
    EXPECT_THROW(quad_split(small.regions[0], 0, {5, 32}), InputError);
}

TEST(Fabricability, Predicate) {
    const Fabricability f{5, 10};
    EXPECT_TRUE(f.admits(Shape::rectangle(4, 4)));
    EXPECT_FALSE(f.admits(Shape::rectangle(3, 3)));
    EXPECT_FALSE(f.admits(Shape::rectangle(1, 40)));
    EXPECT_NEAR(px_to_mm(mm_to_px(13.97, 300), 300), 13.97, 1e-12);
}
