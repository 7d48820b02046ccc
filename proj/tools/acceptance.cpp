// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "oracles.hpp"
#include "parquetry/demo.hpp"
#include "parquetry/error.hpp"
#include "parquetry/export.hpp"
#include "parquetry/io.hpp"
#include "parquetry/morph.hpp"
#include "parquetry/pipeline.hpp"
#include "parquetry/seams.hpp"
#include "support.hpp"

using namespace parquetry;
namespace fs = std::filesystem;
using testing_support::random_gray;
using testing_support::TempDir;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects the first few failure messages of a criterion.
struct Check {
    bool ok = true;
    std::vector<std::string> notes;
    void expect(bool cond, const std::string& what) {
        if (cond) return;
        ok = false;
        if (notes.size() < 3) notes.push_back(what);
    }
    Outcome done(const std::string& summary) const {
        std::string d = summary;
        for (const auto& n : notes) d += "; " + n;
        return {ok, d};
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const FeatureWeights kWeights{0.5, 0.5};

// ---------------------------------------------------------------- 1
Outcome matching_oracle() {
    std::mt19937 rng(1001);
    Check c;
    int compared = 0;
    for (int fixture = 0; fixture < 20; ++fixture) {
        const Image target = gaussian_blur(random_gray(32, 32, rng), 1.0);
        const FeatureMap tfm = compute_feature_map(target, kWeights);
        SourcePool pool;
        pool.kerf_px = 1;
        const int n_sources = 1 + int(rng() % 2);
        for (int s = 0; s < n_sources; ++s) {
            const int w = 24 + int(rng() % 41), h = 24 + int(rng() % 41);
            BinaryMask mask(w, h, true);
            const int hx = int(rng() % w), hy = int(rng() % h);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (std::hypot(x - hx, y - hy) < 5) mask.set(x, y, false);
            pool.sources.push_back(make_source("s" + std::to_string(s), gaussian_blur(random_gray(w, h, rng), 1.0),
                                               mask, {4, 360.0, 300.0}));
        }
        const SourceFeatures features = compute_source_features(pool, kWeights);
        // Consume a few placements first so availability masks matter.
        for (int k = 0; k < 3; ++k) {
            const Shape sh = Shape::rectangle(4 + int(rng() % 6), 4 + int(rng() % 6));
            const int si = int(rng() % pool.sources.size()), ri = int(rng() % 4);
            const auto& v = pool.sources[si].rotations[ri];
            const Placement p{si, ri, int(rng() % v.image.width), int(rng() % v.image.height)};
            if (placement_available(pool, p, sh)) consume(pool, p, sh, 1000 + k);
        }
        for (int q = 0; q < 2; ++q) {
            const int w = 3 + int(rng() % 10), h = 3 + int(rng() % 10);
            const int x0 = int(rng() % (32 - w + 1)), y0 = int(rng() % (32 - h + 1));
            const bool l_shape = rng() % 2;
            std::vector<PixelRun> runs;
            for (int j = 0; j < h; ++j) runs.push_back({y0 + j, x0, x0 + (l_shape && j >= h / 2 ? w / 2 : w)});
            const PatchRegion patch = make_region(q, runs);
            const oracle::BruteMatch o = oracle::brute_force_match(patch, tfm, pool, features);
            c.expect(o.source >= 0, fmt::format("fixture {} has no feasible placement", fixture));
            if (o.source < 0) continue;
            const PatchAssignment a = match_patch(patch, tfm, pool, features);
            ++compared;
            c.expect(a.cost.total == o.cost && a.source_index == o.source && a.rotation_index == o.rotation &&
                         a.x == o.x && a.y == o.y,
                     fmt::format("fixture {} patch {}: got ({}, s{} r{} {},{}) want ({}, s{} r{} {},{})", fixture, q,
                                 a.cost.total, a.source_index, a.rotation_index, a.x, a.y, o.cost, o.source,
                                 o.rotation, o.x, o.y));
        }
    }
    return c.done(fmt::format("{} patches on 20 fixtures equal brute force", compared));
}

// ---------------------------------------------------------------- demo runs

struct DemoRun {
    TempDir dir{"accept"};
    int code = -1;
    double seconds = 0;
    std::string error;

    DemoRun() {
        write_demo_project(dir.path);
        Pipeline p(dir.path, load_config(dir.path / "config.txt"));
        p.log = [](const std::string&) {};
        const auto t0 = std::chrono::steady_clock::now();
        try {
            code = p.all();
        } catch (const std::exception& e) {
            error = e.what();
        }
        seconds = seconds_since(t0);
    }
    Config config() const { return load_config(dir.path / "config.txt"); }
    SourcePool pool() const {
        const Config cfg = config();
        return load_project_sources(dir.path, {cfg.n_rot, cfg.rot_span, cfg.dpi}, cfg.kerf_px);
    }
};

// ---------------------------------------------------------------- 2
Outcome no_reuse(const DemoRun& run) {
    Check c;
    c.expect(run.code == kOk, "pipeline exit " + std::to_string(run.code) + " " + run.error);
    if (run.code != kOk) return c.done("pipeline failed");
    SourcePool pool = run.pool();
    load_pool_state(pool, run.dir.path / "work" / "pool" / "pool.json");
    const ReconstructionResult r = result_from_json(read_json(run.dir.path / "work" / "match.json").at("result"));
    c.expect(pool.consumed.size() == r.assignments.size(),
             fmt::format("{} consumed records for {} assignments", pool.consumed.size(), r.assignments.size()));

    long doubles = 0, outside = 0, claimed = 0;
    std::vector<std::vector<int>> count(pool.sources.size());
    for (size_t s = 0; s < pool.sources.size(); ++s)
        count[s].assign(static_cast<size_t>(pool.sources[s].base.width) * pool.sources[s].base.height, 0);
    for (const auto& rec : pool.consumed) {
        const int s = pool.index_of(rec.source_id);
        const auto& base = pool.sources[s].base;
        std::vector<Polyline> loops;
        for (const auto& l : rec.loops) loops.push_back(l.points);
        for (const auto& span : rasterize_loops(loops, base.width, base.height))
            for (int x = span.x0; x < span.x1; ++x) {
                int& n = count[s][static_cast<size_t>(span.y) * base.width + x];
                doubles += n > 0;
                ++n;
                ++claimed;
            }
    }
    // Every placed patch pixel sits on material that was usable as scanned.
    for (const auto& a : r.assignments) {
        const auto& reg = *std::find_if(r.segmentations[a.target_id].regions.begin(),
                                        r.segmentations[a.target_id].regions.end(),
                                        [&](const PatchRegion& g) { return g.id == a.patch_id; });
        const BinaryMask m = reg.shape.to_mask();
        const auto& rot = pool.sources[a.source_index].rotations[a.rotation_index].rotation;
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x) {
                if (!m.get(x, y)) continue;
                const Vec2 b = rot.to_base({a.x + x + 0.5, a.y + y + 0.5});
                outside += !pool.sources[a.source_index].usable.get_or_false(int(std::floor(b.x)), int(std::floor(b.y)));
            }
    }
    c.expect(doubles == 0, fmt::format("{} doubly claimed pixels", doubles));
    c.expect(outside == 0, fmt::format("{} patch pixels off usable material", outside));
    c.expect(run.seconds < 60, fmt::format("pipeline took {:.1f} s", run.seconds));
    return c.done(fmt::format("{} consumed regions, {} claimed px, 0 double claims required; pipeline {:.2f} s",
                              pool.consumed.size(), claimed, run.seconds));
}

// ---------------------------------------------------------------- 3
Outcome seam_optimality() {
    std::mt19937 rng(3003);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Check c;
    for (int t = 0; t < 50; ++t) {
        const int n = 1 + int(rng() % 5), h = 1 + int(rng() % 7);
        const bool horizontal = t % 2 == 0;
        const int fw = horizontal ? n : h, fh = horizontal ? h : n;
        ScalarField e1(fw, fh), e2(fw, fh);
        const bool coarse = t % 3 == 0;  // small integers provoke ties
        for (auto* f : {&e1, &e2})
            for (double& v : f->values) v = coarse ? double(rng() % 3) : u(rng);
        OverlapRegion ov;
        ov.kind = horizontal ? OverlapKind::HorizontalPair : OverlapKind::VerticalPair;
        ov.extent = {0, 0, fw, fh};
        ov.patches = {0, 1};
        ov.error = {e1, e2};
        const SeamPath p = pairwise_seam(ov);
        const oracle::BrutePath o = oracle::enumerate_paths(oracle::pair_costs(e1, e2, horizontal));
        c.expect(p.cost == o.cost, fmt::format("overlap {}: dp {} enumeration {}", t, p.cost, o.cost));
        c.expect(p.cut == o.cut, fmt::format("overlap {}: different minimizing path", t));
    }
    return c.done("50 overlaps (n <= 5, h <= 7) equal exhaustive enumeration");
}

// ---------------------------------------------------------------- 4
Outcome seam_improvement(const DemoRun& run) {
    Check c;
    int fixtures = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (unsigned seed = 1; seed <= 6; ++seed)
        for (int n : {2, 3, 4, 5}) {
            std::mt19937 rng(seed * 77 + n);
            const Image target = gaussian_blur(random_gray(40, 30, rng), 1.2);
            const FeatureMap fm = compute_feature_map(target, kWeights);
            const Segmentation seg = regular_grid(40, 30, 10, {2, 2});
            SourcePool pool;
            pool.kerf_px = 1;
            for (int s = 0; s < 2; ++s)
                pool.sources.push_back(make_source("p" + std::to_string(s), gaussian_blur(random_gray(64, 64, rng), 1.2),
                                                   std::nullopt, {2, 360.0, 300.0}));
            const SourceFeatures sf = compute_source_features(pool, kWeights);
            MatchParams params;
            params.fab = {2, 2};
            const ReconstructionResult r =
                reconstruct({fm}, {expand_for_overlap(seg, n)}, {saliency_map(target)}, pool, sf, params);
            const SeamResult sr = refine_seams(seg, r, fm, sf, n, 2);
            const double straight = reproduction_cost(straight_ownership(seg, r), r, fm, sf);
            const double refined = reproduction_cost(sr.ownership, r, fm, sf);
            c.expect(refined <= straight, fmt::format("seed {} n {}: {} > {}", seed, n, refined, straight));
            worst = std::max(worst, refined - straight);
            ++fixtures;
        }
    if (run.code == kOk) {
        for (const auto& t : read_json(run.dir.path / "work" / "seams.json").at("targets")) {
            const double before = t.at("cost_straight"), after = t.at("cost_refined");
            c.expect(after <= before, fmt::format("demo: {} > {}", after, before));
            ++fixtures;
        }
    }
    return c.done(fmt::format("{} fixtures, refined - straight <= {:.3g}", fixtures, worst));
}

// ---------------------------------------------------------------- 5
double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

Outcome gamut() {
    std::mt19937 rng(5005);
    std::normal_distribution<double> nt(0.35, 0.12);
    Image target(100, 100, 1);
    for (auto& v : target.data) v = float(std::clamp(nt(rng), 0.0, 1.0));
    SourcePool pool;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> pooled;
    for (int s = 0; s < 2; ++s) {
        Image panel(70, 72, 1);
        for (auto& v : panel.data) v = float(s == 0 ? u(rng) * u(rng) : 0.5 + 0.4 * u(rng));
        BinaryMask m(70, 72, true);
        for (int y = 0; y < 72; ++y)
            for (int x = 0; x < 70; ++x)
                if (std::hypot(x - 35, y - 36) < 12) m.set(x, y, false);
        for (int y = 0; y < 72; ++y)
            for (int x = 0; x < 70; ++x)
                if (m.get(x, y)) pooled.push_back(panel.at(x, y));
        pool.sources.push_back(make_source("g" + std::to_string(s), panel, m, {1, 360.0, 300.0}));
    }
    Check c;
    const ScalarField in = to_field(target);
    const ScalarField mapped = apply_gamut(in, build_gamut_map(target, pool, 1.0));
    const double ks = ks_distance(mapped.values, pooled);
    const double ks_raw = ks_distance(in.values, pooled);
    c.expect(ks <= 0.05, fmt::format("KS {:.4f}", ks));
    const ScalarField same = apply_gamut(in, build_gamut_map(target, pool, 0.0));
    c.expect(same.values == in.values, "w_hist = 0 changed the target");
    return c.done(fmt::format("KS {:.4f} (unmapped {:.3f}) on 10^4 px; w_hist = 0 bit-identical", ks, ks_raw));
}

// ---------------------------------------------------------------- 6
BinaryMask ring_edges(int size) {
    BinaryMask e(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double r = std::hypot(x + 0.5 - size * 0.48, y + 0.5 - size * 0.53);
            if (std::abs(r - size * 0.31) < 0.6 || std::abs(r - size * 0.17) < 0.6) e.set(x, y, true);
            if (std::abs((x - y) + size * 0.2) < 0.6 && x < size * 0.7) e.set(x, y, true);
        }
    return e;
}

Outcome morph_stability() {
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    const int size = 200, spacing = 10;
    const BinaryMask none(size, size);
    MorphState empty = make_morph_state(size, size, spacing, none);
    relax(empty, 1000);
    double shift = 0;
    for (size_t i = 0; i < empty.pos.size(); ++i) shift = std::max(shift, (empty.pos[i] - empty.rest[i]).norm());
    c.expect(shift < 1e-6, fmt::format("empty edges moved a vertex by {}", shift));
    const MorphGrid flat = fit_grid_curves(empty, none);
    c.expect(rasterize_grid(flat).labels == regular_grid(size, size, spacing, {1, 1}).label_map().labels,
             "empty-edge grid differs from the regular grid");

    MorphState s = make_morph_state(size, size, spacing, ring_edges(size));
    c.expect(s.rows == 20 && s.cols == 20, "expected a 20x20 grid");
    const RelaxStats st = relax(s, 2000);
    const double peak = st.kinetic.empty() ? 0 : *std::max_element(st.kinetic.begin(), st.kinetic.end());
    const bool reached = st.kinetic.size() >= 200;
    const double at200 = st.kinetic.empty() ? 0 : (reached ? st.kinetic[199] : st.kinetic.back());
    c.expect(peak > 0, "edges did not move the grid");
    c.expect(at200 < 0.01 * peak, fmt::format("KE(200) {:.3g} vs peak {:.3g}", at200, peak));
    double min_d = std::numeric_limits<double>::infinity();
    for (double d : st.min_distance) min_d = std::min(min_d, d);
    c.expect(min_d >= 0.35 * spacing, fmt::format("min distance {:.3f}", min_d));
    const double secs = seconds_since(t0);
    c.expect(secs < 10, fmt::format("{:.1f} s", secs));
    return c.done(fmt::format("empty shift {:.1e}; KE(200)/peak {:.2e}{}; min dist {:.2f} >= {:.1f}; {} steps, {:.2f} s",
                              shift, peak > 0 ? at200 / peak : 0.0, reached ? "" : " (converged earlier)", min_d,
                              0.35 * spacing, st.accepted, secs));
}

// ---------------------------------------------------------------- 7
Outcome potential_formula() {
    std::mt19937 rng(7007);
    Check c;
    double worst = 0;
    for (int t = 0; t < 3; ++t) {
        const int w = 48 + t * 7, h = 40 + t * 5;
        BinaryMask e(w, h);
        for (int k = 0; k < 12; ++k) e.set(int(rng() % w), int(rng() % h), true);
        for (int x = 0; x < w; ++x) e.set(x, h / 3, x % 5 != 0);
        for (double r : {5.0, 7.5, 12.0}) {
            const ScalarField p = potential_field(e, r);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double d = std::numeric_limits<double>::infinity();
                    for (int v = 0; v < h; ++v)
                        for (int u = 0; u < w; ++u)
                            if (e.get(u, v)) d = std::min(d, std::hypot(double(u - x), double(v - y)));
                    const double want = std::max(0.0, std::min(d, r - d));
                    worst = std::max(worst, std::abs(p.at(x, y) - want));
                }
        }
    }
    c.expect(worst <= 1e-9, fmt::format("max error {}", worst));
    return c.done(fmt::format("max |P - max(0, min(D, r-D))| = {:.1e} over 9 fields", worst));
}

// ---------------------------------------------------------------- 8
Outcome ablation() {
    TempDir dir("ablate");
    write_demo_project(dir.path);
    Pipeline p(dir.path, load_config(dir.path / "config.txt"));
    p.log = [](const std::string&) {};
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    int code = -1;
    try {
        p.ingest();
        p.features();
        p.segment();
        code = p.ablate();
    } catch (const std::exception& e) {
        c.expect(false, e.what());
        return c.done("ablation failed");
    }
    const double secs = seconds_since(t0);
    const Json j = read_json(dir.path / "output" / "ablation.json");
    const auto& runs = j.at("runs");
    c.expect(code == kOk, "ablate exit " + std::to_string(code));
    c.expect(runs.size() >= 2, "fewer than two runs");
    c.expect(j.at("final_exhausted").get<bool>() && runs.back().at("exhausted").get<int>() > 0,
             "final run did not exhaust the pool");
    const double rho = j.at("spearman");
    c.expect(rho >= 0, fmt::format("Spearman {:.3f}", rho));
    int previews = 0;
    const auto ids = p.target_ids();
    for (const auto& run : runs) {
        if (run.at("assigned").get<int>() == 0) continue;
        for (const auto& id : ids) {
            const fs::path f = dir.path / "output" / "ablation" / fmt::format("run_{:03d}_{}.png", run.at("run").get<int>(), id);
            c.expect(fs::exists(f), "missing " + f.filename().string());
            previews += fs::exists(f);
        }
    }
    c.expect(secs < 300, fmt::format("{:.1f} s", secs));
    return c.done(fmt::format("{} runs, final exhausted, Spearman {:.3f}, {} previews, {:.2f} s", runs.size(), rho,
                              previews, secs));
}

// ---------------------------------------------------------------- 9
Outcome cut_plan(const DemoRun& run) {
    Check c;
    if (run.code != kOk) {
        c.expect(false, "pipeline failed: " + run.error);
        return c.done("no plan");
    }
    const Config cfg = run.config();
    const SourcePool pool = run.pool();
    const ReconstructionResult r = result_from_json(read_json(run.dir.path / "work" / "match.json").at("result"));
    const Json plan = read_json(run.dir.path / "output" / "plan.json");
    const Json seams = read_json(run.dir.path / "work" / "seams.json");
    const LabelMap own = label_map_from_json(seams.at("targets").at(0).at("ownership"));
    CurveFitOptions opt;
    opt.continuity = cfg.continuity;
    const CutNetwork net = fit_cut_curves(own, opt);
    const double dpi = plan.at("dpi");
    const double px_per_mm = dpi / 25.4;

    const auto& pieces = plan.at("pieces");
    c.expect(pieces.size() == r.assignments.size(),
             fmt::format("{} pieces for {} assignments", pieces.size(), r.assignments.size()));

    // SVG side: closed cut paths, one per piece.
    size_t svg_paths = 0;
    const std::regex path_re(R"(<path id="cut-[^"]*" d="([^"]*)\")");
    for (const auto& panel : plan.at("panels")) {
        const std::string svg = slurp(run.dir.path / "output" / panel.at("file").get<std::string>());
        const auto cut_at = svg.find("<g id=\"cut\"");
        c.expect(cut_at != std::string::npos, "no cut layer");
        const std::string cut = svg.substr(cut_at, svg.find("</g>", cut_at) - cut_at);
        for (auto it = std::sregex_iterator(cut.begin(), cut.end(), path_re); it != std::sregex_iterator(); ++it) {
            ++svg_paths;
            const std::string d = (*it)[1];
            c.expect(!d.empty() && d.back() == 'Z', "open SVG path");
        }
    }
    c.expect(svg_paths == r.assignments.size(), fmt::format("{} SVG cut paths", svg_paths));

    double worst_round_trip = 0, worst_close = 0;
    long escapes = 0;
    LabelMap cover(own.width, own.height, -1);
    long overlaps = 0;
    for (const auto& piece : pieces) {
        const int id = piece.at("patch_id");
        const PatchAssignment* a = r.find(0, id);
        c.expect(a != nullptr, fmt::format("piece {} has no assignment", id));
        if (!a) continue;
        const auto& src = pool.sources[a->source_index];
        auto to_panel_px = [&](const Json& q) {
            return mirror({q.at(0).get<double>() * px_per_mm, q.at(1).get<double>() * px_per_mm}, src.base.width);
        };
        const auto ref = piece_outline(net, id);
        const auto& loops = piece.at("loops");
        c.expect(loops.size() == ref.size(), fmt::format("piece {}: loop count", id));
        std::vector<Polyline> target_loops;
        for (size_t l = 0; l < loops.size() && l < ref.size(); ++l) {
            const auto& segs = loops[l];
            const auto first = segs.front().at(0), last = segs.back().at(3);
            worst_close = std::max(worst_close, std::hypot(first.at(0).get<double>() - last.at(0).get<double>(),
                                                           first.at(1).get<double>() - last.at(1).get<double>()));
            c.expect(segs.size() == ref[l].segments.size(), fmt::format("piece {}: segment count", id));
            Polyline poly;
            for (size_t k = 0; k < segs.size() && k < ref[l].segments.size(); ++k) {
                CubicBezier t;
                Vec2* pts[4] = {&t.p0, &t.p1, &t.p2, &t.p3};
                for (int i = 0; i < 4; ++i) *pts[i] = panel_to_target(*a, pool, to_panel_px(segs[k].at(i)));
                const CubicBezier& want = ref[l].segments[k];
                for (auto [g, w] : {std::pair{t.p0, want.p0}, {t.p1, want.p1}, {t.p2, want.p2}, {t.p3, want.p3}})
                    worst_round_trip = std::max(worst_round_trip, (g - w).norm());
                for (int i = 0; i <= 16; ++i) {
                    const Vec2 q = target_to_panel(*a, pool, t.eval(i / 16.0));
                    bool inside = false;
                    for (double dx : {-1e-6, 1e-6})
                        for (double dy : {-1e-6, 1e-6})
                            inside = inside || src.usable.get_or_false(int(std::floor(q.x + dx)), int(std::floor(q.y + dy)));
                    escapes += !inside;
                    if (i < 16) poly.push_back(t.eval(i / 16.0));
                }
            }
            poly.push_back(poly.front());
            target_loops.push_back(poly);
        }
        for (const auto& span : rasterize_loops(target_loops, cover.width, cover.height))
            for (int x = span.x0; x < span.x1; ++x) {
                overlaps += cover.at(x, span.y) != -1;
                cover.at(x, span.y) = id;
                const Vec2 q = target_to_panel(*a, pool, {x + 0.5, span.y + 0.5});
                escapes += !src.usable.get_or_false(int(std::floor(q.x)), int(std::floor(q.y)));
            }
    }
    long gaps = 0;
    for (int v : cover.labels) gaps += v < 0;
    const double coverage_error = double(gaps + overlaps) / cover.labels.size();
    c.expect(worst_close <= 1e-6, fmt::format("loop closure gap {} mm", worst_close));
    c.expect(worst_round_trip <= 0.1, fmt::format("mirror round trip {} px", worst_round_trip));
    c.expect(escapes == 0, fmt::format("{} samples outside the usable panel mask", escapes));
    c.expect(coverage_error <= 0.001, fmt::format("coverage error {:.4f}%", 100 * coverage_error));
    return c.done(fmt::format("{} pieces; closure {:.1e} mm; round trip {:.1e} px; tiling error {:.3f}%", pieces.size(),
                              worst_close, worst_round_trip, 100 * coverage_error));
}

// ---------------------------------------------------------------- 10
Outcome determinism(const DemoRun& a, const DemoRun& b) {
    Check c;
    c.expect(a.code == kOk && b.code == kOk, "a pipeline run failed");
    int files = 0;
    for (const char* sub : {"work", "output"}) {
        std::vector<fs::path> rel;
        for (const auto& e : fs::recursive_directory_iterator(a.dir.path / sub)) {
            const auto ext = e.path().extension();
            if (e.is_regular_file() && (ext == ".json" || ext == ".svg"))
                rel.push_back(fs::relative(e.path(), a.dir.path));
        }
        std::sort(rel.begin(), rel.end());
        for (const auto& f : rel) {
            ++files;
            c.expect(fs::exists(b.dir.path / f), "missing in second run: " + f.string());
            c.expect(slurp(a.dir.path / f) == slurp(b.dir.path / f), "differs: " + f.string());
        }
    }
    c.expect(files > 0, "no artifacts");
    return c.done(fmt::format("{} JSON/SVG artifacts byte-identical", files));
}

}  // namespace

int main() {
    struct Criterion {
        int number;
        const char* name;
        std::function<Outcome()> run;
    };
    std::unique_ptr<DemoRun> first, second;
    auto demo = [&]() -> const DemoRun& {
        if (!first) first = std::make_unique<DemoRun>();
        return *first;
    };
    const std::vector<Criterion> criteria = {
        {1, "matching equals brute force", matching_oracle},
        {2, "no source pixel used twice", [&] { return no_reuse(demo()); }},
        {3, "seam DP equals path enumeration", seam_optimality},
        {4, "seam refinement never worse", [&] { return seam_improvement(demo()); }},
        {5, "gamut mapping", gamut},
        {6, "morph degeneracy and stability", morph_stability},
        {7, "potential field formula", potential_formula},
        {8, "ablation protocol", ablation},
        {9, "cut plan integrity", [&] { return cut_plan(demo()); }},
        {10, "determinism", [&] {
             second = std::make_unique<DemoRun>();
             return determinism(demo(), *second);
         }},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = cr.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2d %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", cr.number, cr.name, o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
