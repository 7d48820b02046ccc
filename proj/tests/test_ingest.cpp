#include <gtest/gtest.h>

#include <random>

#include "parquetry/error.hpp"
#include "parquetry/ingest.hpp"
#include "support.hpp"

using namespace parquetry;
using testing_support::random_gray;
using testing_support::TempDir;

namespace {

SourcePool single_pool(int w, int h, int n_rot, int kerf, unsigned seed = 1,
                       std::optional<BinaryMask> mask = std::nullopt) {
    std::mt19937 rng(seed);
    SourcePool pool;
    pool.kerf_px = kerf;
    pool.sources.push_back(make_source("a", random_gray(w, h, rng), std::move(mask), {n_rot, 360.0, 300.0}));
    return pool;
}

// Pixel counts of rasterized consumed loops per source.
std::vector<std::vector<int>> coverage(const SourcePool& pool) {
    std::vector<std::vector<int>> cov;
    for (const auto& s : pool.sources) cov.emplace_back(s.base.pixel_count(), 0);
    for (const auto& c : pool.consumed) {
        const int si = pool.index_of(c.source_id);
        const auto& base = pool.sources[si].base;
        std::vector<Polyline> loops;
        for (const auto& l : c.loops) loops.push_back(l.points);
        for (const auto& span : rasterize_loops(loops, base.width, base.height))
            for (int x = span.x0; x < span.x1; ++x) ++cov[si][size_t(span.y) * base.width + x];
    }
    return cov;
}

}  // namespace

TEST(Ingest, SingleRotationIsIdentity) {
    std::mt19937 rng(2);
    const Image base = random_gray(17, 11, rng);
    BinaryMask mask(17, 11, true);
    mask.set(3, 4, false);
    const SourceTexture s = make_source("a", base, mask, {1, 360.0, 300.0});
    ASSERT_EQ(s.rotations.size(), 1u);
    EXPECT_EQ(s.rotations[0].rotation.degrees, 0.0);
    EXPECT_EQ(s.rotations[0].image.data, base.data);
    EXPECT_EQ(s.rotations[0].available.bits, mask.bits);
}

TEST(Ingest, QuarterTurnIsExactRotation) {
    std::mt19937 rng(3);
    const int w = 10, h = 10;
    const SourceTexture sq = make_source("a", random_gray(w, h, rng), std::nullopt, {4, 360.0, 300.0});
    const long area = static_cast<long>(sq.rotations[1].available.count());
    EXPECT_LE(area, 100);
    EXPECT_GE(area, 100 - 36);

    // Non-square panel with a notch: variant pixel (vx, vy) shows base pixel
    // (vy, H-1-vx) at 90 degrees.
    const int W = 9, H = 6;
    const Image base = random_gray(W, H, rng);
    BinaryMask mask(W, H, true);
    mask.set(2, 1, false);
    const SourceTexture s = make_source("b", base, mask, {4, 360.0, 300.0});
    const Variant& v = s.rotations[1];
    ASSERT_EQ(v.image.width, H);
    ASSERT_EQ(v.image.height, W);
    for (int vy = 0; vy < W; ++vy)
        for (int vx = 0; vx < H; ++vx) {
            EXPECT_EQ(v.image.at(vx, vy), base.at(vy, H - 1 - vx));
            EXPECT_EQ(v.available.get(vx, vy), mask.get(vy, H - 1 - vx));
        }
}

TEST(Ingest, FifteenRotationsAt24Degrees) {
    const SourcePool pool = single_pool(12, 12, 15, 1);
    const auto& rots = pool.sources[0].rotations;
    ASSERT_EQ(rots.size(), 15u);
    for (int k = 0; k < 15; ++k) EXPECT_NEAR(rots[k].rotation.degrees, 24.0 * k, 1e-12);
}

TEST(Ingest, RejectsBadInput) {
    std::mt19937 rng(1);
    EXPECT_THROW(make_source("a", random_gray(5, 5, rng), BinaryMask(4, 5), {}), InputError);
    EXPECT_THROW(make_source("a", random_gray(5, 5, rng), std::nullopt, {0, 360.0, 300.0}), InputError);
}

TEST(Ingest, RotatedVariantNeverExceedsUsableMaterial) {
    std::mt19937 rng(4);
    BinaryMask mask(30, 24, true);
    for (int y = 8; y < 14; ++y)
        for (int x = 10; x < 17; ++x) mask.set(x, y, false);
    const SourceTexture s = make_source("a", random_gray(30, 24, rng), mask, {7, 360.0, 300.0});
    for (const auto& v : s.rotations)
        for (int y = 0; y < v.available.height; ++y)
            for (int x = 0; x < v.available.width; ++x) {
                if (!v.available.get(x, y)) continue;
                const Vec2 b = v.rotation.to_base({x + 0.5, y + 0.5});
                ASSERT_TRUE(mask.get_or_false(int(std::floor(b.x)), int(std::floor(b.y))));
            }
}

TEST(Consume, ReconsumeCollides) {
    SourcePool pool = single_pool(20, 20, 1, 1);
    const Shape sh = Shape::rectangle(5, 5);
    consume(pool, {0, 0, 3, 3}, sh, 0);
    EXPECT_THROW(consume(pool, {0, 0, 3, 3}, sh, 1), ResourceCollision);
}

TEST(Consume, ZeroDegreeConsumptionBlocksQuarterTurn) {
    SourcePool pool = single_pool(20, 14, 4, 0);
    consume(pool, {0, 0, 4, 5}, Shape::rectangle(6, 3), 0);
    const Variant& v = pool.sources[0].rotations[1];
    const int H = 14;
    for (int by = 5; by < 8; ++by)
        for (int bx = 4; bx < 10; ++bx) EXPECT_FALSE(v.available.get(H - 1 - by, bx));
    // The same region through the quarter turn is rejected.
    EXPECT_THROW(consume(pool, {0, 1, H - 1 - 7, 4}, Shape::rectangle(3, 6), 1), ResourceCollision);
}

TEST(Consume, KerfDilatesFootprint) {
    SourcePool pool = single_pool(30, 30, 1, 1);
    consume(pool, {0, 0, 10, 10}, Shape::rectangle(8, 8), 0);
    ASSERT_EQ(pool.consumed.size(), 1u);
    EXPECT_EQ(pool.consumed[0].area, 100);
    const auto cov = coverage(pool);
    long covered = 0;
    for (int v : cov[0]) covered += v;
    EXPECT_EQ(covered, 100);
    EXPECT_EQ(pool.sources[0].available.count(), 900u - 100u);
    EXPECT_FALSE(pool.sources[0].available.get(9, 9));
    EXPECT_FALSE(pool.sources[0].available.get(18, 18));
    EXPECT_TRUE(pool.sources[0].available.get(19, 19));
}

TEST(Availability, Fractions) {
    SourcePool pool = single_pool(100, 100, 1, 0);
    EXPECT_DOUBLE_EQ(availability_fraction(pool, "a"), 1.0);
    consume(pool, {0, 0, 40, 40}, Shape::rectangle(10, 10), 0);
    EXPECT_DOUBLE_EQ(availability_fraction(pool, "a"), 0.99);
    SourcePool all = single_pool(100, 100, 1, 0);
    consume(all, {0, 0, 0, 0}, Shape::rectangle(100, 100), 0);
    EXPECT_DOUBLE_EQ(availability_fraction(all, "a"), 0.0);
    EXPECT_THROW(availability_fraction(pool, "zz"), InputError);
}

TEST(Consume, RotationConsistencyProperty) {
    std::mt19937 rng(21);
    for (int kerf : {0, 1}) {
        SourcePool pool = single_pool(40, 32, 5, kerf, 7);
        int placed = 0;
        for (int attempt = 0; attempt < 300 && placed < 12; ++attempt) {
            const int ri = int(rng() % 5);
            const Variant& v = pool.sources[0].rotations[ri];
            const Shape sh = Shape::rectangle(3 + int(rng() % 5), 3 + int(rng() % 5));
            const Placement p{0, ri, int(rng() % v.image.width), int(rng() % v.image.height)};
            if (!placement_available(pool, p, sh)) continue;
            consume(pool, p, sh, placed++);
            EXPECT_THROW(consume(pool, p, sh, 99), ResourceCollision);
        }
        ASSERT_GE(placed, 6);
        const SourceTexture& s = pool.sources[0];
        // An available pixel in any variant sits over available base material.
        for (const auto& var : s.rotations)
            for (int y = 0; y < var.available.height; ++y)
                for (int x = 0; x < var.available.width; ++x) {
                    if (!var.available.get(x, y)) continue;
                    const Vec2 b = var.rotation.to_base({x + 0.5, y + 0.5});
                    ASSERT_TRUE(s.available.get_or_false(int(std::floor(b.x)), int(std::floor(b.y))));
                }
        // Consumed records never overlap.
        const auto cov = coverage(pool);
        for (int c : cov[0]) ASSERT_LE(c, 1);
    }
}

TEST(PoolState, RoundTrip) {
    TempDir dir("pool");
    SourcePool pool = single_pool(24, 24, 3, 1);
    consume(pool, {0, 0, 2, 2}, Shape::rectangle(5, 4), 3);
    save_pool_state(pool, dir.path / "pool.json");
    SourcePool fresh = single_pool(24, 24, 3, 1);
    load_pool_state(fresh, dir.path / "pool.json");
    EXPECT_EQ(fresh.sources[0].available.bits, pool.sources[0].available.bits);
    for (size_t r = 0; r < 3; ++r)
        EXPECT_EQ(fresh.sources[0].rotations[r].available.bits, pool.sources[0].rotations[r].available.bits);
    ASSERT_EQ(fresh.consumed.size(), 1u);
    EXPECT_EQ(fresh.consumed[0].patch_id, 3);
    EXPECT_EQ(fresh.consumed[0].area, pool.consumed[0].area);
}

TEST(ProjectSources, DiscoversSortedPanels) {
    TempDir dir("sources");
    std::mt19937 rng(5);
    for (const char* id : {"zeta", "alpha"}) {
        std::filesystem::create_directories(dir.path / "sources" / id);
        save_image(dir.path / "sources" / id / "image.png", random_gray(8, 6, rng));
    }
    BinaryMask m(8, 6, true);
    m.set(0, 0, false);
    save_mask(dir.path / "sources" / "zeta" / "mask.png", m);
    const SourcePool pool = load_project_sources(dir.path, {2, 360.0, 100.0}, 1);
    ASSERT_EQ(pool.sources.size(), 2u);
    EXPECT_EQ(pool.sources[0].id, "alpha");
    EXPECT_EQ(pool.sources[1].id, "zeta");
    EXPECT_EQ(pool.sources[1].usable.count(), 47u);
    EXPECT_EQ(pool.sources[0].rotations.size(), 2u);
}
