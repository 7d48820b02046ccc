#include "parquetry/seams.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "parquetry/error.hpp"

namespace parquetry {

SeamPath optimal_seam(const std::vector<std::vector<double>>& cost) {
    SeamPath p;
    const int rows = static_cast<int>(cost.size());
    if (rows == 0) return p;
    const int m = static_cast<int>(cost[0].size());
    for (const auto& r : cost)
        if (static_cast<int>(r.size()) != m || m == 0) throw InputError("seam cost table must be rectangular");

    // Forward accumulation keeps every prefix sum in row order, so the table
    // holds the exact minimum of the row-ordered path sums.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> acc(rows, std::vector<double>(m, inf));
    acc[0] = cost[0];
    for (int i = 1; i < rows; ++i)
        for (int x = 0; x < m; ++x) {
            double best = inf;
            for (int d = -1; d <= 1; ++d)
                if (x + d >= 0 && x + d < m) best = std::min(best, acc[i - 1][x + d] + cost[i][x]);
            acc[i][x] = best;
        }
    const double opt = *std::min_element(acc[rows - 1].begin(), acc[rows - 1].end());

    // Cells lying on at least one optimal path, found backwards.
    std::vector<std::vector<char>> on(rows, std::vector<char>(m, 0));
    for (int x = 0; x < m; ++x) on[rows - 1][x] = acc[rows - 1][x] == opt;
    for (int i = rows - 1; i > 0; --i)
        for (int x = 0; x < m; ++x) {
            if (!on[i][x]) continue;
            for (int d = -1; d <= 1; ++d)
                if (x + d >= 0 && x + d < m && acc[i - 1][x + d] + cost[i][x] == acc[i][x]) on[i - 1][x + d] = 1;
        }

    p.cut.resize(rows);
    int x = 0;
    while (!on[0][x]) ++x;
    p.cut[0] = x;
    for (int i = 1; i < rows; ++i) {
        int next = -1;
        for (int d = -1; d <= 1 && next < 0; ++d) {
            const int c = x + d;
            if (c >= 0 && c < m && on[i][c] && acc[i - 1][x] + cost[i][c] == acc[i][c]) next = c;
        }
        x = next;
        p.cut[i] = x;
    }
    p.cost = acc[rows - 1][p.cut.back()];
    return p;
}

double path_cost(const std::vector<std::vector<double>>& cost, const std::vector<int>& cut) {
    double s = 0;
    for (size_t i = 0; i < cut.size(); ++i) s += cost[i][cut[i]];
    return s;
}

namespace {

// cut[i] splits line i of length n: cells [0, cut) take `first(k)`, the rest
// `second(k)`.
template <class First, class Second>
std::vector<double> line_costs(int n, First first, Second second) {
    std::vector<double> c(n + 1);
    for (int x = 0; x <= n; ++x) {
        double a = 0, b = 0;
        for (int k = 0; k < x; ++k) a += first(k);
        for (int k = x; k < n; ++k) b += second(k);
        c[x] = a + b;
    }
    return c;
}

void restrict_cuts(std::vector<double>& c, int margin) {
    const int n = static_cast<int>(c.size()) - 1;
    if (margin <= 0 || 2 * margin > n) return;
    for (int x = 0; x <= n; ++x)
        if (x < margin || x > n - margin) c[x] = std::numeric_limits<double>::infinity();
}

}  // namespace

std::vector<std::vector<double>> pair_cost_table(const OverlapRegion& ov) {
    if (ov.kind == OverlapKind::CornerQuad || ov.error.size() != 2) throw InputError("pairwise seam needs a pair overlap");
    const ScalarField& e1 = ov.error[0];
    const ScalarField& e2 = ov.error[1];
    std::vector<std::vector<double>> t;
    if (ov.kind == OverlapKind::HorizontalPair) {
        for (int y = 0; y < ov.extent.h; ++y)
            t.push_back(line_costs(ov.extent.w, [&](int k) { return e1.at(k, y); }, [&](int k) { return e2.at(k, y); }));
    } else {
        for (int x = 0; x < ov.extent.w; ++x)
            t.push_back(line_costs(ov.extent.h, [&](int k) { return e1.at(x, k); }, [&](int k) { return e2.at(x, k); }));
    }
    for (auto& line : t) restrict_cuts(line, ov.margin);
    return t;
}

SeamPath pairwise_seam(const OverlapRegion& ov) { return optimal_seam(pair_cost_table(ov)); }

namespace {

int owner(const std::vector<int>& vcut, const std::vector<int>& hcut, int x, int y) {
    const bool left = x < vcut[y];
    const bool top = y < hcut[x];
    return (top ? 0 : 2) + (left ? 0 : 1);
}

// Keeps the current cut unless the optimum is strictly cheaper, so ties leave
// the straight start in place.
void adopt(SeamPath& current, const std::vector<std::vector<double>>& table) {
    SeamPath best = optimal_seam(table);
    const double now = path_cost(table, current.cut);
    if (best.cost < now) {
        current = std::move(best);
    } else {
        current.cost = now;
    }
}

int kind_lines(const OverlapRegion& ov) {
    return ov.kind == OverlapKind::HorizontalPair ? ov.extent.h : ov.extent.w;
}

}  // namespace

int corner_owner(const CornerSeams& s, int x, int y) { return owner(s.vertical.cut, s.horizontal.cut, x, y); }

double corner_cost(const OverlapRegion& ov, const std::vector<int>& vcut, const std::vector<int>& hcut) {
    double s = 0;
    for (int y = 0; y < ov.extent.h; ++y)
        for (int x = 0; x < ov.extent.w; ++x) s += ov.error[owner(vcut, hcut, x, y)].at(x, y);
    return s;
}

CornerSeams corner_seams(const OverlapRegion& ov, int n_rounds, int start) {
    if (ov.kind != OverlapKind::CornerQuad || ov.error.size() != 4) throw InputError("corner seams need a quad overlap");
    const int w = ov.extent.w, h = ov.extent.h;
    CornerSeams s;
    s.vertical.cut.assign(h, start >= 0 ? std::min(start, w) : w / 2);
    s.horizontal.cut.assign(w, start >= 0 ? std::min(start, h) : h / 2);
    s.history.push_back(corner_cost(ov, s.vertical.cut, s.horizontal.cut));
    const auto& e = ov.error;
    for (int round = 0; round < n_rounds; ++round) {
        // Vertical cut with the horizontal one fixed.
        std::vector<std::vector<double>> tv;
        for (int y = 0; y < h; ++y)
            tv.push_back(line_costs(
                w, [&](int k) { return e[y < s.horizontal.cut[k] ? 0 : 2].at(k, y); },
                [&](int k) { return e[y < s.horizontal.cut[k] ? 1 : 3].at(k, y); }));
        for (auto& line : tv) restrict_cuts(line, ov.margin);
        adopt(s.vertical, tv);
        s.history.push_back(corner_cost(ov, s.vertical.cut, s.horizontal.cut));

        std::vector<std::vector<double>> th;
        for (int x = 0; x < w; ++x)
            th.push_back(line_costs(
                h, [&](int k) { return e[x < s.vertical.cut[k] ? 0 : 1].at(x, k); },
                [&](int k) { return e[x < s.vertical.cut[k] ? 2 : 3].at(x, k); }));
        for (auto& line : th) restrict_cuts(line, ov.margin);
        adopt(s.horizontal, th);
        s.history.push_back(corner_cost(ov, s.vertical.cut, s.horizontal.cut));
    }
    return s;
}

int overlap_pixels(const Segmentation& grid, double fraction) {
    if (!grid.grid) throw ConfigError("seams need a grid segmentation");
    return static_cast<int>(std::lround(fraction * grid.grid->spacing));
}

namespace {

void require_grid(const Segmentation& seg) {
    if (!seg.grid || seg.kind != SegmentationKind::Regular)
        throw ConfigError("seam refinement needs a regular grid segmentation");
    const GridMeta& g = *seg.grid;
    if (static_cast<int>(seg.regions.size()) != g.rows * g.cols)
        throw ConfigError("seam refinement needs an unsplit grid (n_adaptive = 0)");
    for (const auto& r : seg.regions)
        if (r.depth != 0 || r.row < 0 || r.col < 0) throw ConfigError("seam refinement needs an unsplit grid (n_adaptive = 0)");
}

}  // namespace

Segmentation expand_for_overlap(const Segmentation& grid, int n) {
    require_grid(grid);
    const GridMeta& g = *grid.grid;
    const int a = n / 2, b = n - a;
    for (int c = 0; c < g.cols; ++c)
        if (g.xs[c + 1] - g.xs[c] < n) throw ConfigError("overlap is wider than a grid column");
    for (int r = 0; r < g.rows; ++r)
        if (g.ys[r + 1] - g.ys[r] < n) throw ConfigError("overlap is taller than a grid row");
    Segmentation out = grid;
    for (auto& reg : out.regions) {
        const int x0 = g.xs[reg.col] - (reg.col > 0 ? a : 0);
        const int x1 = g.xs[reg.col + 1] + (reg.col + 1 < g.cols ? b : 0);
        const int y0 = g.ys[reg.row] - (reg.row > 0 ? a : 0);
        const int y1 = g.ys[reg.row + 1] + (reg.row + 1 < g.rows ? b : 0);
        reg.bbox = {x0, y0, x1 - x0, y1 - y0};
        reg.shape = Shape::rectangle(reg.bbox.w, reg.bbox.h);
        reg.outline = {{double(x0), double(y0)}, {double(x1), double(y0)}, {double(x1), double(y1)},
                       {double(x0), double(y1)}, {double(x0), double(y0)}};
    }
    return out;
}

ScalarField placement_error(const PatchAssignment& a, const FeatureMap& target, const SourceFeatures& features,
                            const Rect& box) {
    const FeatureMap& v = features.at(a.source_index).at(a.rotation_index);
    ScalarField e(box.w, box.h);
    for (int y = 0; y < box.h; ++y)
        for (int x = 0; x < box.w; ++x) {
            const int tx = box.x + x, ty = box.y + y;
            const int vx = a.x + tx - a.target_x, vy = a.y + ty - a.target_y;
            if (vx < 0 || vy < 0 || vx >= v.width || vy >= v.height)
                throw InputError("placement does not cover the requested target box");
            const double di = target.intensity.at(tx, ty) - v.intensity.at(vx, vy);
            const double de = target.edge.at(tx, ty) - v.edge.at(vx, vy);
            e.at(x, y) = di * di + de * de;
        }
    return e;
}

LabelMap straight_ownership(const Segmentation& seg, const ReconstructionResult& result, int target_id) {
    LabelMap own(seg.width, seg.height, -1);
    for (const auto& r : seg.regions) {
        if (!result.find(target_id, r.id)) continue;
        for (const auto& run : r.shape.runs)
            for (int x = run.x0; x < run.x1; ++x) own.at(r.bbox.x + x, r.bbox.y + run.y) = r.id;
    }
    return own;
}

double reproduction_cost(const LabelMap& ownership, const ReconstructionResult& result, const FeatureMap& target,
                         const SourceFeatures& features, int target_id) {
    std::map<int, const PatchAssignment*> by_id;
    for (const auto& a : result.assignments)
        if (a.target_id == target_id) by_id[a.patch_id] = &a;
    double s = 0;
    for (int y = 0; y < ownership.height; ++y)
        for (int x = 0; x < ownership.width; ++x) {
            const int id = ownership.at(x, y);
            if (id < 0) continue;
            const auto it = by_id.find(id);
            if (it == by_id.end()) continue;
            const PatchAssignment& a = *it->second;
            const FeatureMap& v = features.at(a.source_index).at(a.rotation_index);
            const int vx = a.x + x - a.target_x, vy = a.y + y - a.target_y;
            const double di = target.intensity.at(x, y) - v.intensity.at(vx, vy);
            const double de = target.edge.at(x, y) - v.edge.at(vx, vy);
            s += di * di + de * de;
        }
    return s;
}

SeamResult refine_seams(const Segmentation& seg, const ReconstructionResult& result, const FeatureMap& target,
                        const SourceFeatures& features, int n, int n_rounds, int target_id) {
    require_grid(seg);
    if (n < 2) throw ConfigError("seam overlap must be at least 2 px");
    const GridMeta& g = *seg.grid;
    const int a = n / 2;

    std::vector<std::vector<const PatchAssignment*>> cell(g.rows, std::vector<const PatchAssignment*>(g.cols, nullptr));
    std::vector<std::vector<int>> ids(g.rows, std::vector<int>(g.cols, -1));
    for (const auto& r : seg.regions) {
        ids[r.row][r.col] = r.id;
        cell[r.row][r.col] = result.find(target_id, r.id);
    }
    // The placements must cover the expanded cells.
    const Segmentation expanded = expand_for_overlap(seg, n);
    for (const auto& r : expanded.regions) {
        const PatchAssignment* pa = cell[r.row][r.col];
        if (!pa) continue;
        const FeatureMap& v = features.at(pa->source_index).at(pa->rotation_index);
        if (pa->target_x != r.bbox.x || pa->target_y != r.bbox.y || pa->x + r.bbox.w > v.width ||
            pa->y + r.bbox.h > v.height)
            throw ConfigError("assignments were not matched with the seam overlap; rerun match");
    }

    SeamResult out;
    out.ownership = straight_ownership(seg, result, target_id);
    out.cost_before = reproduction_cost(out.ownership, result, target, features, target_id);

    auto make = [&](OverlapKind kind, Rect box, std::vector<std::pair<int, int>> cells) -> std::optional<OverlapRegion> {
        OverlapRegion ov;
        ov.kind = kind;
        ov.extent = box;
        ov.margin = 1;
        for (auto [r, c] : cells) {
            if (!cell[r][c]) return std::nullopt;
            ov.patches.push_back(ids[r][c]);
            ov.error.push_back(placement_error(*cell[r][c], target, features, box));
        }
        return ov;
    };

    // Pair overlaps, skipping the corner blocks.
    for (int c = 1; c < g.cols; ++c)
        for (int r = 0; r < g.rows; ++r) {
            const int y0 = r == 0 ? 0 : g.ys[r] + (n - a);
            const int y1 = r + 1 == g.rows ? seg.height : g.ys[r + 1] - a;
            if (y1 <= y0) continue;
            auto ov = make(OverlapKind::HorizontalPair, {g.xs[c] - a, y0, n, y1 - y0}, {{r, c - 1}, {r, c}});
            if (!ov) continue;
            SeamPath p;
            p.cut.assign(kind_lines(*ov), a);
            adopt(p, pair_cost_table(*ov));
            for (int y = 0; y < ov->extent.h; ++y)
                for (int x = 0; x < n; ++x)
                    out.ownership.at(ov->extent.x + x, ov->extent.y + y) = ov->patches[x < p.cut[y] ? 0 : 1];
            out.overlaps.push_back(std::move(*ov));
            out.pair_seams.push_back(std::move(p));
        }
    for (int r = 1; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
            const int x0 = c == 0 ? 0 : g.xs[c] + (n - a);
            const int x1 = c + 1 == g.cols ? seg.width : g.xs[c + 1] - a;
            if (x1 <= x0) continue;
            auto ov = make(OverlapKind::VerticalPair, {x0, g.ys[r] - a, x1 - x0, n}, {{r - 1, c}, {r, c}});
            if (!ov) continue;
            SeamPath p;
            p.cut.assign(kind_lines(*ov), a);
            adopt(p, pair_cost_table(*ov));
            for (int x = 0; x < ov->extent.w; ++x)
                for (int y = 0; y < n; ++y)
                    out.ownership.at(ov->extent.x + x, ov->extent.y + y) = ov->patches[y < p.cut[x] ? 0 : 1];
            out.overlaps.push_back(std::move(*ov));
            out.pair_seams.push_back(std::move(p));
        }
    for (int r = 1; r < g.rows; ++r)
        for (int c = 1; c < g.cols; ++c) {
            auto ov = make(OverlapKind::CornerQuad, {g.xs[c] - a, g.ys[r] - a, n, n},
                           {{r - 1, c - 1}, {r - 1, c}, {r, c - 1}, {r, c}});
            if (!ov) continue;
            CornerSeams cs = corner_seams(*ov, n_rounds, a);
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    out.ownership.at(ov->extent.x + x, ov->extent.y + y) = ov->patches[corner_owner(cs, x, y)];
            out.overlaps.push_back(std::move(*ov));
            out.corner_seams.push_back(std::move(cs));
        }
    out.cost_after = reproduction_cost(out.ownership, result, target, features, target_id);
    return out;
}

CutNetwork fit_cut_curves(const LabelMap& ownership, const CurveFitOptions& opt) {
    CutNetwork net;
    net.width = ownership.width;
    net.height = ownership.height;
    net.chains = extract_boundaries(ownership);
    for (const auto& c : net.chains) net.curves.push_back(fit_curve(c.points, opt));
    return net;
}

std::vector<CutCurve> piece_outline(const CutNetwork& net, int label) {
    std::vector<CutCurve> out;
    for (const auto& loop : loops_for_label(net.chains, label)) {
        CutCurve c;
        for (const auto& u : loop.uses) {
            const CutCurve& part = u.forward ? net.curves[u.chain] : net.curves[u.chain].reversed();
            c.continuity = part.continuity;
            c.segments.insert(c.segments.end(), part.segments.begin(), part.segments.end());
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace parquetry
