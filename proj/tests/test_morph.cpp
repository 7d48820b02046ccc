#include <gtest/gtest.h>

#include <random>

#include "parquetry/morph.hpp"
#include "support.hpp"

using namespace parquetry;

namespace {

double brute_distance(const BinaryMask& m, int x, int y) {
    double best = 1e300;
    for (int j = 0; j < m.height; ++j)
        for (int i = 0; i < m.width; ++i)
            if (m.get(i, j)) best = std::min(best, std::hypot(double(i - x), double(j - y)));
    return best;
}

BinaryMask column_edge(int w, int h, int x) {
    BinaryMask e(w, h);
    for (int y = 0; y < h; ++y) e.set(x, y, true);
    return e;
}

BinaryMask disc_edges(int w, int h) {
    Image img(w, h, 1, 0.2f);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (std::hypot(x - w * 0.45, y - h * 0.55) < w * 0.3) img.at(x, y) = 0.8f;
    return canny(img, 0.04, 0.1);
}

double line_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 d = b - a;
    return std::abs(d.cross(p - a)) / d.norm();
}

}  // namespace

TEST(EdgeSpec, CombineExamples) {
    std::mt19937 rng(1);
    BinaryMask rg(12, 10), bil(12, 10);
    for (auto& v : rg.bits) v = rng() % 3 == 0;
    for (auto& v : bil.bits) v = rng() % 3 == 0;
    const BinaryMask none(12, 10), all(12, 10, true);
    EXPECT_FALSE(combine_edges(rg, none, bil, none).any());
    EXPECT_EQ(combine_edges(rg, all, bil, none).bits, rg.bits);
    const BinaryMask both = combine_edges(rg, all, rg, all);
    EXPECT_EQ(both.bits, rg.bits);
    const BinaryMask mixed = combine_edges(rg, all, bil, all);
    for (size_t i = 0; i < mixed.bits.size(); ++i) EXPECT_EQ(mixed.bits[i] != 0, rg.bits[i] || bil.bits[i]);
}

TEST(EdgeSpec, BuildFromMasks) {
    std::mt19937 rng(2);
    const Image img = gaussian_blur(testing_support::random_gray(32, 24, rng), 1.0);
    const EdgeSpec none = build_edge_spec(img, BinaryMask(32, 24), BinaryMask(32, 24));
    EXPECT_FALSE(none.e.any());
    const EdgeSpec rg = build_edge_spec(img, BinaryMask(32, 24, true), BinaryMask(32, 24));
    EXPECT_EQ(rg.e.bits, rg.e_rg.bits);
}

TEST(Potential, FormulaPointwise) {
    std::mt19937 rng(3);
    BinaryMask e(37, 29);
    for (auto& v : e.bits) v = rng() % 40 == 0;
    e.set(5, 5, true);
    for (double r : {2.5, 5.0, 8.0}) {
        const ScalarField p = potential_field(e, r);
        for (int y = 0; y < e.height; ++y)
            for (int x = 0; x < e.width; ++x) {
                const double d = brute_distance(e, x, y);
                EXPECT_NEAR(p.at(x, y), std::max(0.0, std::min(d, r - d)), 1e-9);
                EXPECT_GE(p.at(x, y), 0.0);
                EXPECT_LE(p.at(x, y), r / 2 + 1e-12);
                if (e.get(x, y)) EXPECT_EQ(p.at(x, y), 0.0);
            }
    }
}

TEST(Potential, TentExamples) {
    BinaryMask e(20, 1);
    e.set(0, 0, true);
    const ScalarField p = potential_field(e, 8.0);
    EXPECT_EQ(p.at(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(p.at(4, 0), 4.0);
    EXPECT_EQ(p.at(8, 0), 0.0);
    EXPECT_EQ(p.at(15, 0), 0.0);
}

TEST(Relax, EmptyEdgesStayRegular) {
    const MorphState start = make_morph_state(60, 50, 10, BinaryMask(60, 50));
    MorphState s = start;
    relax(s, 2000);
    double worst = 0;
    for (size_t i = 0; i < s.pos.size(); ++i) worst = std::max(worst, (s.pos[i] - s.rest[i]).norm());
    EXPECT_LT(worst, 1e-6);
    EXPECT_DOUBLE_EQ(s.r, 5.0);
}

TEST(Relax, SingleVerticalEdgeSnaps) {
    MorphParams p;
    p.w = 20.0;
    // Within r/2 of the vertex column at x = 20, where the tent attracts.
    const BinaryMask e = column_edge(40, 40, 21);
    MorphState s = make_morph_state(40, 40, 10, e, p);
    const RelaxStats st = relax(s, 3000);
    EXPECT_TRUE(st.converged);
    for (int i = 1; i < s.rows; ++i) {
        const Vec2 v = s.pos[s.index(i, 2)];
        EXPECT_NEAR(v.x, 21.5, 0.5) << "row " << i;
        EXPECT_TRUE(vertex_snapped(s, s.index(i, 2)));
        // Pinned border never moves.
        EXPECT_EQ(s.pos[s.index(i, 0)], s.rest[s.index(i, 0)]);
    }
}

TEST(Relax, DampedEnergyDecaysAndSpacingHolds) {
    const BinaryMask e = disc_edges(200, 200);
    MorphState s = make_morph_state(200, 200, 10, e);
    ASSERT_EQ(s.rows, 20);
    const RelaxStats st = relax(s, 400);
    ASSERT_FALSE(st.kinetic.empty());
    const double peak = *std::max_element(st.kinetic.begin(), st.kinetic.end());
    ASSERT_GT(peak, 0.0);
    const double at200 = st.kinetic.size() >= 200 ? st.kinetic[199] : st.kinetic.back();
    EXPECT_LT(at200, 0.01 * peak);
    for (double d : st.min_distance) EXPECT_GE(d, 0.35 * 10);
}

TEST(Relax, RejectsStepsThatCrowdVertices) {
    // Strong attraction toward a line between two vertex columns.
    MorphParams p;
    p.w = 400.0;
    p.dt = 0.5;
    BinaryMask e = column_edge(60, 40, 25);
    MorphState s = make_morph_state(60, 40, 10, e, p);
    const RelaxStats st = relax(s, 300);
    for (double d : st.min_distance) EXPECT_GE(d, 3.5);
    EXPECT_GE(min_adjacent_distance(s.pos, s), 3.5);
}

TEST(Relax, Cancellation) {
    std::atomic<bool> stop{true};
    MorphState s = make_morph_state(40, 40, 10, disc_edges(40, 40));
    const RelaxStats st = relax(s, 100, &stop);
    EXPECT_TRUE(st.cancelled);
    EXPECT_EQ(st.accepted, 0);
}

TEST(GridCurves, NoSnapsGivesStraightQuads) {
    const MorphState s = make_morph_state(50, 40, 10, BinaryMask(50, 40));
    const MorphGrid g = fit_grid_curves(s, BinaryMask(50, 40));
    EXPECT_EQ(g.cells.size(), 20u);
    for (auto f : g.snapped) EXPECT_FALSE(f);
    for (const auto& ed : g.edges) {
        EXPECT_FALSE(ed.diagonal);
        EXPECT_LT(line_distance(ed.curve.p1, ed.curve.p0, ed.curve.p3), 1e-9);
        EXPECT_LT(line_distance(ed.curve.p2, ed.curve.p0, ed.curve.p3), 1e-9);
    }
    // Cell for cell equal to the regular grid.
    const Segmentation a = grid_segmentation(g, {2, 2});
    const Segmentation b = regular_grid(50, 40, 10, {2, 2});
    EXPECT_EQ(a.label_map().labels, b.label_map().labels);
}

TEST(GridCurves, StraightChainFitsStraight) {
    MorphParams p;
    p.w = 20.0;
    const BinaryMask e = column_edge(40, 40, 21);
    MorphState s = make_morph_state(40, 40, 10, e, p);
    relax(s, 3000);
    const MorphGrid g = fit_grid_curves(s, e);
    int fitted = 0;
    for (const auto& ed : g.edges) {
        if (!ed.fitted) continue;
        ++fitted;
        EXPECT_EQ(ed.curve.p0, g.vertices[ed.a]);
        EXPECT_EQ(ed.curve.p3, g.vertices[ed.b]);
        EXPECT_LT(line_distance(ed.curve.p1, ed.curve.p0, ed.curve.p3), 1e-3);
        EXPECT_LT(line_distance(ed.curve.p2, ed.curve.p0, ed.curve.p3), 1e-3);
        EXPECT_NEAR(ed.curve.p0.x, 21.5, 1e-6);
        EXPECT_NEAR(ed.curve.p3.x, 21.5, 1e-6);
    }
    EXPECT_GE(fitted, 2);
}

TEST(GridCurves, ArcFitDeviation) {
    const double radius = 50, span = 30.0 * M_PI / 180.0;
    Polyline arc;
    for (int i = 0; i <= 60; ++i) {
        const double t = span * i / 60;
        arc.push_back({radius * std::cos(t), radius * std::sin(t)});
    }
    const CubicBezier c = fit_cubic(arc);
    double worst = 0;
    for (const Vec2& q : sample(c, 400)) worst = std::max(worst, std::abs(q.norm() - radius));
    for (const Vec2& q : arc) worst = std::max(worst, point_polyline_distance(q, sample(c, 400)));
    EXPECT_LE(worst, 0.2);
}

TEST(GridCurves, RasterizationCoversPlane) {
    const BinaryMask e = disc_edges(120, 100);
    MorphState s = make_morph_state(120, 100, 12, e);
    relax(s, 2000);
    const MorphGrid g = fit_grid_curves(s, e);
    const LabelMap lm = rasterize_grid(g);
    for (int l : lm.labels) {
        EXPECT_GE(l, 0);
        EXPECT_LT(l, int(g.cells.size()));
    }
    const Segmentation seg = grid_segmentation(g, {1, 1});
    long area = 0;
    for (const auto& r : seg.regions) area += r.area();
    EXPECT_EQ(area, 120L * 100L);
    // Shared edges are referenced by both neighbours.
    std::vector<int> uses(g.edges.size(), 0);
    for (const auto& c : g.cells)
        for (int k : c.edges) ++uses[k];
    for (size_t k = 0; k < g.edges.size(); ++k) EXPECT_LE(uses[k], 2);
}
