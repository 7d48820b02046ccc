#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "parquetry/error.hpp"
#include "parquetry/export.hpp"
#include "support.hpp"

using namespace parquetry;
using testing_support::random_gray;
using testing_support::TempDir;

namespace {

PatchAssignment place(int patch, int source, const SourcePool& pool, int rot, int x, int y, int tx, int ty) {
    PatchAssignment a;
    a.patch_id = patch;
    a.source_index = source;
    a.source_id = pool.sources[source].id;
    a.rotation_index = rot;
    a.rotation_degrees = pool.sources[source].rotations[rot].rotation.degrees;
    a.x = x;
    a.y = y;
    a.target_x = tx;
    a.target_y = ty;
    return a;
}

Vec2 back_to_target(const PatchAssignment& a, const SourcePool& pool, Vec2 mm, double dpi) {
    const double s = dpi / 25.4;
    const Vec2 q = mirror({mm.x * s, mm.y * s}, pool.sources[a.source_index].base.width);
    return panel_to_target(a, pool, q);
}

struct Reconstructed {
    Image target;
    FeatureMap fm;
    SourcePool pool;
    SourceFeatures features;
    ReconstructionResult result;
    LabelMap own;
};

Reconstructed reconstructed(unsigned seed, FeatureWeights w, int n_rot = 3) {
    std::mt19937 rng(seed);
    Reconstructed r;
    r.target = gaussian_blur(random_gray(40, 30, rng), 1.0);
    r.fm = compute_feature_map(r.target, w);
    r.pool.kerf_px = 1;
    for (int s = 0; s < 2; ++s) {
        BinaryMask m(56, 56, true);
        for (int y = 0; y < 56; ++y)
            for (int x = 0; x < 56; ++x)
                if (std::hypot(x - 20, y - 30) < 6) m.set(x, y, false);
        r.pool.sources.push_back(make_source("panel" + std::to_string(s), gaussian_blur(random_gray(56, 56, rng), 1.0),
                                             m, {n_rot, 360.0, 50.8}));
    }
    r.features = compute_source_features(r.pool, w);
    const Segmentation seg = regular_grid(40, 30, 10, {2, 2});
    MatchParams params;
    params.fab = {2, 2};
    r.result = reconstruct({r.fm}, {seg}, {saliency_map(r.target)}, r.pool, r.features, params);
    r.own = straight_ownership(r.result.segmentations[0], r.result);
    return r;
}

}  // namespace

TEST(Units, MillimetreRoundTrip) {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0, 500);
    for (int i = 0; i < 100; ++i) {
        const double mm = u(rng);
        for (double dpi : {50.8, 300.0, 600.0}) EXPECT_NEAR(px_to_mm(mm_to_px(mm, dpi), dpi), mm, 1e-9);
    }
}

TEST(Mirror, Involution) {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-50, 250);
    for (int i = 0; i < 50; ++i) {
        const Vec2 p{u(rng), u(rng)};
        const Vec2 q = mirror(mirror(p, 173), 173);
        EXPECT_NEAR(q.x, p.x, 1e-12);
        EXPECT_EQ(q.y, p.y);
    }
}

TEST(CutPlan, SquarePieceAt300Dpi) {
    std::mt19937 rng(3);
    SourcePool pool;
    pool.kerf_px = 0;
    pool.sources.push_back(make_source("a", random_gray(200, 190, rng), std::nullopt, {1, 360.0, 300.0}));
    ReconstructionResult r;
    r.segmentations.push_back(regular_grid(165, 165, 165, Fabricability::at_dpi(300)));
    r.assignments.push_back(place(0, 0, pool, 0, 12, 9, 0, 0));
    const LabelMap own = straight_ownership(r.segmentations[0], r);
    const CutPlan plan = emit_cut_plan(r, own, pool);
    ASSERT_EQ(plan.pieces.size(), 1u);
    const CutPiece& p = plan.pieces[0];
    ASSERT_EQ(p.loops.size(), 1u);
    double minx = 1e9, maxx = -1e9, miny = 1e9, maxy = -1e9, perimeter = 0;
    for (const auto& s : p.loops[0].segments) {
        for (Vec2 q : {s.p0, s.p3}) {
            minx = std::min(minx, q.x);
            maxx = std::max(maxx, q.x);
            miny = std::min(miny, q.y);
            maxy = std::max(maxy, q.y);
        }
        perimeter += (s.p3 - s.p0).norm();
    }
    const double side = 165.0 / 300.0 * 25.4;
    EXPECT_NEAR(side, 13.97, 1e-9);
    EXPECT_NEAR(maxx - minx, side, 1e-9);
    EXPECT_NEAR(maxy - miny, side, 1e-9);
    EXPECT_NEAR(perimeter, 4 * side, 1e-9);
    // Mirrored: panel x in [12, 177) lands at [200-177, 200-12).
    EXPECT_NEAR(minx, (200 - 177) * 25.4 / 300, 1e-9);
    EXPECT_EQ(p.label, "R0C0");
    EXPECT_EQ(plan.panels, std::vector<std::string>{"a"});
}

TEST(CutPlan, IntegrityOnReconstruction) {
    Reconstructed r = reconstructed(4, {0.5, 0.5});
    ASSERT_FALSE(r.result.any_exhausted());
    const CutPlan plan = emit_cut_plan(r.result, r.own, r.pool);
    EXPECT_EQ(plan.pieces.size(), r.result.assignments.size());
    const CutNetwork net = fit_cut_curves(r.own, CutPlanOptions{}.curves);

    for (const CutPiece& piece : plan.pieces) {
        const PatchAssignment* a = r.result.find(0, piece.patch_id);
        ASSERT_NE(a, nullptr);
        const auto ref = piece_outline(net, piece.patch_id);
        ASSERT_EQ(piece.loops.size(), ref.size());
        for (size_t l = 0; l < ref.size(); ++l) {
            const CutCurve& loop = piece.loops[l];
            EXPECT_NEAR((loop.front() - loop.back()).norm(), 0.0, 1e-6);
            ASSERT_EQ(loop.segments.size(), ref[l].segments.size());
            for (size_t k = 0; k < loop.segments.size(); ++k) {
                const auto& s = loop.segments[k];
                const auto& t = ref[l].segments[k];
                for (auto [mm, px] : {std::pair{s.p0, t.p0}, {s.p1, t.p1}, {s.p2, t.p2}, {s.p3, t.p3}})
                    EXPECT_LT((back_to_target(*a, r.pool, mm, plan.dpi) - px).norm(), 0.1);
                // Inside the usable panel material.
                for (int i = 0; i <= 8; ++i) {
                    const Vec2 q = target_to_panel(*a, r.pool, t.eval(i / 8.0));
                    const auto& m = r.pool.sources[a->source_index].usable;
                    bool ok = false;
                    for (double dx : {-1e-6, 1e-6})
                        for (double dy : {-1e-6, 1e-6})
                            ok = ok || m.get_or_false(int(std::floor(q.x + dx)), int(std::floor(q.y + dy)));
                    EXPECT_TRUE(ok);
                }
            }
        }
    }
}

TEST(CutPlan, NeighboursShareSeamGeometry) {
    Reconstructed r = reconstructed(5, {0.5, 0.5});
    const CutPlan plan = emit_cut_plan(r.result, r.own, r.pool);
    // Back in target space, pieces 0 and 1 (left/right neighbours) share a
    // segment up to direction.
    auto target_segments = [&](int id) {
        std::vector<CubicBezier> out;
        for (const auto& p : plan.pieces) {
            if (p.patch_id != id) continue;
            const PatchAssignment* a = r.result.find(0, id);
            for (const auto& l : p.loops)
                for (const auto& s : l.segments)
                    out.push_back({back_to_target(*a, r.pool, s.p0, plan.dpi), back_to_target(*a, r.pool, s.p1, plan.dpi),
                                   back_to_target(*a, r.pool, s.p2, plan.dpi), back_to_target(*a, r.pool, s.p3, plan.dpi)});
        }
        return out;
    };
    const auto a = target_segments(0), b = target_segments(1);
    auto close = [](const CubicBezier& x, const CubicBezier& y) {
        return (x.p0 - y.p0).norm() < 1e-6 && (x.p1 - y.p1).norm() < 1e-6 && (x.p2 - y.p2).norm() < 1e-6 &&
               (x.p3 - y.p3).norm() < 1e-6;
    };
    int shared = 0;
    for (const auto& x : a)
        for (const auto& y : b)
            if (close(x, y.reversed()) || close(x, y)) ++shared;
    EXPECT_GE(shared, 1);
}

TEST(CutPlan, EscapingOutlineIsReported) {
    std::mt19937 rng(6);
    BinaryMask m(40, 40, true);
    m.set(15, 15, false);
    SourcePool pool;
    pool.sources.push_back(make_source("a", random_gray(40, 40, rng), m, {1, 360.0, 300.0}));
    ReconstructionResult r;
    r.segmentations.push_back(regular_grid(20, 10, 10, {2, 2}));
    r.assignments.push_back(place(0, 0, pool, 0, 0, 0, 0, 0));
    r.assignments.push_back(place(1, 0, pool, 0, 10, 12, 10, 0));  // covers the hole
    const LabelMap own = straight_ownership(r.segmentations[0], r);
    try {
        emit_cut_plan(r, own, pool);
        FAIL() << "expected FabricabilityError";
    } catch (const FabricabilityError& e) {
        EXPECT_EQ(e.offenders(), std::vector<int>{1});
    }
}

TEST(CutPlan, SvgLayersAndClosedPaths) {
    Reconstructed r = reconstructed(7, {0.5, 0.5});
    const CutPlan plan = emit_cut_plan(r.result, r.own, r.pool);
    TempDir dir("svg");
    const auto files = write_cut_plan(plan, dir.path);
    ASSERT_EQ(files.size(), plan.panels.size());
    size_t paths = 0;
    for (size_t i = 0; i < files.size(); ++i) {
        std::ifstream in(files[i]);
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string svg = ss.str();
        EXPECT_EQ(svg, panel_svg(plan, plan.panels[i]));
        EXPECT_NE(svg.find("<g id=\"cut\""), std::string::npos);
        EXPECT_NE(svg.find("<g id=\"engrave\""), std::string::npos);
        EXPECT_NE(svg.find("stroke=\"#FF0000\""), std::string::npos);
        EXPECT_NE(svg.find("mm\""), std::string::npos);
        const std::regex path_re("<path id=\"cut-[^\"]+\" d=\"(M[^\"]*Z)\"");
        for (auto it = std::sregex_iterator(svg.begin(), svg.end(), path_re); it != std::sregex_iterator(); ++it) {
            ++paths;
            const std::string d = (*it)[1];
            EXPECT_EQ(d.back(), 'Z');
        }
    }
    EXPECT_EQ(paths, r.result.assignments.size());
}

TEST(Preview, CopiesPlacementsAndCountsGray) {
    Reconstructed r = reconstructed(8, {1.0, 0.0});
    Preview pv = render_preview(r.result, r.own, r.pool);
    EXPECT_EQ(pv.unassigned, 0);
    // Intensity-only features: the preview's cost is the reported total.
    const FeatureMap pf = compute_feature_map(pv.image, {1.0, 0.0});
    double cost = 0;
    for (size_t i = 0; i < pf.intensity.values.size(); ++i) {
        const double d = pf.intensity.values[i] - r.fm.intensity.values[i];
        cost += d * d;
    }
    EXPECT_NEAR(cost, r.result.total_cost(), 1e-6 * r.result.total_cost());

    // Drop two assignments: their pixels turn mid-gray and are counted.
    ReconstructionResult partial = r.result;
    long expect = 0;
    for (int k = 0; k < 2; ++k) {
        const int id = partial.assignments.back().patch_id;
        for (const auto& reg : partial.segmentations[0].regions)
            if (reg.id == id) expect += reg.area();
        partial.assignments.pop_back();
    }
    const LabelMap own = straight_ownership(partial.segmentations[0], partial);
    pv = render_preview(partial, own, r.pool);
    EXPECT_EQ(pv.unassigned, expect);
    long gray = 0;
    for (int y = 0; y < own.height; ++y)
        for (int x = 0; x < own.width; ++x)
            if (own.at(x, y) < 0) {
                EXPECT_FLOAT_EQ(pv.image.at(x, y), 0.5f);
                ++gray;
            }
    EXPECT_EQ(gray, expect);
}

TEST(Preview, WholeTargetFromOneExactPatch) {
    std::mt19937 rng(9);
    const Image img = random_gray(30, 20, rng);
    SourcePool pool;
    pool.sources.push_back(make_source("a", img, std::nullopt, {1, 360.0, 300.0}));
    ReconstructionResult r;
    r.segmentations.push_back(regular_grid(30, 20, 30, {2, 2}));
    r.assignments.push_back(place(0, 0, pool, 0, 0, 0, 0, 0));
    const Preview pv = render_preview(r, straight_ownership(r.segmentations[0], r), pool);
    EXPECT_EQ(pv.image.data, img.data);
}

TEST(Ablation, StatsAndRankCorrelation) {
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
    EXPECT_NEAR(spearman({1, 2, 3}, {1, 1, 2}), 0.8660254037844386, 1e-12);

    Reconstructed a = reconstructed(10, {0.5, 0.5});
    Reconstructed b = reconstructed(10, {0.5, 0.5});
    const auto sa = run_stats(a.result, 0), sb = run_stats(b.result, 0);
    EXPECT_EQ(sa.mean_cost, sb.mean_cost);
    EXPECT_EQ(sa.median_cost, sb.median_cost);
    EXPECT_EQ(sa.p90_cost, sb.p90_cost);
    EXPECT_EQ(sa.assigned, int(a.result.assignments.size()));
    std::vector<double> costs;
    for (const auto& x : a.result.assignments) costs.push_back(x.cost.total);
    std::sort(costs.begin(), costs.end());
    EXPECT_GE(sa.p90_cost, sa.median_cost);
    EXPECT_LE(sa.p90_cost, costs.back());
    EXPECT_NEAR(sa.mean_cost, a.result.mean_cost(), 1e-12);

    TempDir dir("report");
    write_report_csv({sa, sb}, dir.path / "r.csv");
    write_report_plot({sa, sb}, dir.path / "r.png");
    std::ifstream in(dir.path / "r.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.rfind("run,assigned,exhausted,mean_cost", 0), 0u);
    EXPECT_TRUE(std::filesystem::exists(dir.path / "r.png"));
}
