#include "parquetry/morph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <optional>

#include "parquetry/error.hpp"

namespace parquetry {

void detect_edges(const Image& target, const EdgeParams& p, BinaryMask& e_rg, BinaryMask& e_bilateral) {
    const Image gray = to_grayscale(target);
    const Image rg = smooth_rolling_guidance(gray, p.rg_sigma_space, p.rg_sigma_range, p.rg_iterations);
    const Image bil = smooth_bilateral(gray, p.bilateral_sigma_space, p.bilateral_sigma_range);
    e_rg = canny(rg, p.canny_lo, p.canny_hi);
    e_bilateral = canny(bil, p.canny_lo, p.canny_hi);
}

BinaryMask combine_edges(const BinaryMask& e_rg, const BinaryMask& m_rg, const BinaryMask& e_bil,
                         const BinaryMask& m_bil) {
    const int w = e_rg.width, h = e_rg.height;
    for (const BinaryMask* m : {&m_rg, &e_bil, &m_bil})
        if (m->width != w || m->height != h) throw InputError("edge masks must match the target size");
    BinaryMask e(w, h);
    for (size_t i = 0; i < e.bits.size(); ++i)
        e.bits[i] = (m_rg.bits[i] && e_rg.bits[i]) || (m_bil.bits[i] && e_bil.bits[i]);
    return e;
}

EdgeSpec build_edge_spec(const Image& target, const BinaryMask& m_rg, const BinaryMask& m_bilateral,
                         const EdgeParams& p) {
    if (m_rg.width != target.width || m_rg.height != target.height || m_bilateral.width != target.width ||
        m_bilateral.height != target.height)
        throw InputError("masks must match the target size");
    EdgeSpec s;
    detect_edges(target, p, s.e_rg, s.e_bilateral);
    s.m_rg = m_rg;
    s.m_bilateral = m_bilateral;
    s.e = combine_edges(s.e_rg, m_rg, s.e_bilateral, m_bilateral);
    return s;
}

ScalarField potential_field(const BinaryMask& e, double r) {
    if (!(r > 0)) throw InputError("attraction radius must be positive");
    ScalarField d = distance_transform(e);
    for (double& v : d.values) v = std::max(0.0, std::min(v, r - v));
    return d;
}

MorphState make_morph_state(int width, int height, int patch_px, const BinaryMask& e, const MorphParams& p) {
    if (e.width != width || e.height != height) throw InputError("edge image must match the target size");
    if (patch_px < 2) throw InputError("grid spacing too small");
    MorphState s;
    const auto xs = grid_lines(width, patch_px);
    const auto ys = grid_lines(height, patch_px);
    s.cols = static_cast<int>(xs.size()) - 1;
    s.rows = static_cast<int>(ys.size()) - 1;
    s.width = width;
    s.height = height;
    s.spacing = patch_px;
    s.params = p;
    s.dt = p.dt;
    s.r = patch_px / 2.0;
    for (int i = 0; i <= s.rows; ++i)
        for (int j = 0; j <= s.cols; ++j) {
            s.rest.push_back({double(xs[j]), double(ys[i])});
            s.pinned.push_back(i == 0 || j == 0 || i == s.rows || j == s.cols);
        }
    s.pos = s.rest;
    s.vel.assign(s.pos.size(), Vec2{});
    set_edges(s, e);
    return s;
}

void set_edges(MorphState& s, const BinaryMask& e) {
    s.distance = distance_transform(e);
    s.potential = s.distance;
    for (double& v : s.potential.values) v = std::max(0.0, std::min(v, s.r - v));
    s.converged = false;
    s.dt = s.params.dt;
}

namespace {

Vec2 potential_gradient(const ScalarField& p, Vec2 x) {
    // Field samples sit at pixel centres.
    const double fx = x.x - 0.5, fy = x.y - 0.5;
    return {(p.sample(fx + 1, fy) - p.sample(fx - 1, fy)) / 2.0, (p.sample(fx, fy + 1) - p.sample(fx, fy - 1)) / 2.0};
}

}  // namespace

std::vector<Vec2> morph_forces(const MorphState& s) {
    std::vector<Vec2> f(s.pos.size());
    const MorphParams& p = s.params;
    for (int i = 0; i <= s.rows; ++i)
        for (int j = 0; j <= s.cols; ++j) {
            const int k = s.index(i, j);
            if (s.pinned[k]) continue;
            Vec2 spring;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    if (!di && !dj) continue;
                    const int ni = i + di, nj = j + dj;
                    if (ni < 0 || nj < 0 || ni > s.rows || nj > s.cols) continue;
                    const int n = s.index(ni, nj);
                    spring += (s.pos[n] - s.pos[k]) - (s.rest[n] - s.rest[k]);
                }
            f[k] = spring * p.m - s.vel[k] * p.gamma - potential_gradient(s.potential, s.pos[k]) * p.w;
        }
    return f;
}

double kinetic_energy(const MorphState& s) {
    double e = 0;
    for (const auto& v : s.vel) e += 0.5 * v.dot(v);
    return e;
}

double min_adjacent_distance(const std::vector<Vec2>& pos, const MorphState& s) {
    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= s.rows; ++i)
        for (int j = 0; j <= s.cols; ++j) {
            if (j < s.cols) d = std::min(d, (pos[s.index(i, j + 1)] - pos[s.index(i, j)]).norm());
            if (i < s.rows) d = std::min(d, (pos[s.index(i + 1, j)] - pos[s.index(i, j)]).norm());
        }
    return d;
}

RelaxStats relax(MorphState& s, int n_steps, const std::atomic<bool>* cancel) {
    RelaxStats st;
    const double d_min = s.params.min_distance * s.spacing;
    while (st.accepted < n_steps) {
        if (cancel && cancel->load()) {
            st.cancelled = true;
            break;
        }
        const std::vector<Vec2> f = morph_forces(s);
        double fmax = 0, vmax = 0;
        for (size_t k = 0; k < f.size(); ++k) {
            if (s.pinned[k]) continue;
            fmax = std::max(fmax, f[k].norm());
            vmax = std::max(vmax, s.vel[k].norm());
        }
        st.max_force = fmax;
        if (fmax < s.params.tol && vmax < s.params.tol) {
            st.converged = true;
            break;
        }
        std::vector<Vec2> v = s.vel, x = s.pos;
        for (size_t k = 0; k < f.size(); ++k) {
            if (s.pinned[k]) continue;
            v[k] += f[k] * s.dt;
            x[k] += v[k] * s.dt;
        }
        const double md = min_adjacent_distance(x, s);
        if (md < d_min) {
            ++st.rejected;
            s.dt /= 2;
            if (s.dt < 1e-9) break;
            continue;
        }
        s.pos = std::move(x);
        s.vel = std::move(v);
        ++s.steps;
        ++st.accepted;
        st.kinetic.push_back(kinetic_energy(s));
        st.min_distance.push_back(md);
    }
    s.converged = st.converged;
    return st;
}

bool vertex_snapped(const MorphState& s, int i) {
    const Vec2 p = s.pos[i];
    return s.distance.sample(p.x - 0.5, p.y - 0.5) < s.params.snap;
}

namespace {

constexpr double kChainFitTolerance = 1.5;
constexpr double kEndpointReach = 1.5;

// Shortest 8-connected run of edge pixels from near `a` to near `b` that
// stays within `corridor` of the segment ab.
std::optional<Polyline> edge_chain(const BinaryMask& e, Vec2 a, Vec2 b, double corridor) {
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - corridor)) - 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - corridor)) - 1);
    const int x1 = std::min(e.width, static_cast<int>(std::ceil(std::max(a.x, b.x) + corridor)) + 1);
    const int y1 = std::min(e.height, static_cast<int>(std::ceil(std::max(a.y, b.y) + corridor)) + 1);
    if (x1 <= x0 || y1 <= y0) return std::nullopt;
    const int w = x1 - x0, h = y1 - y0;
    auto center = [&](int x, int y) { return Vec2{x + 0.5, y + 0.5}; };
    auto ok = [&](int x, int y) {
        return x >= x0 && y >= y0 && x < x1 && y < y1 && e.get(x, y) &&
               point_segment_distance(center(x, y), a, b) <= corridor;
    };
    std::vector<int> parent(static_cast<size_t>(w) * h, -2);
    std::deque<std::pair<int, int>> q;
    std::vector<std::pair<double, std::pair<int, int>>> starts;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
            if (ok(x, y) && (center(x, y) - a).norm() <= kEndpointReach) starts.push_back({(center(x, y) - a).norm(), {x, y}});
    std::stable_sort(starts.begin(), starts.end(), [](auto& l, auto& r) { return l.first < r.first; });
    for (auto& [d, p] : starts) {
        parent[static_cast<size_t>(p.second - y0) * w + (p.first - x0)] = -1;
        q.push_back(p);
    }
    while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop_front();
        if ((center(x, y) - b).norm() <= kEndpointReach) {
            Polyline chain{b};
            int cx = x, cy = y;
            while (true) {
                chain.push_back(center(cx, cy));
                const int par = parent[static_cast<size_t>(cy - y0) * w + (cx - x0)];
                if (par < 0) break;
                cx = par % w + x0;
                cy = par / w + y0;
            }
            chain.push_back(a);
            std::reverse(chain.begin(), chain.end());
            return chain;
        }
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if ((!dx && !dy) || !ok(nx, ny)) continue;
                const size_t k = static_cast<size_t>(ny - y0) * w + (nx - x0);
                if (parent[k] != -2) continue;
                parent[k] = (y - y0) * w + (x - x0);
                q.emplace_back(nx, ny);
            }
    }
    return std::nullopt;
}

double polyline_residual(const Polyline& chain, const Polyline& path) {
    double r = 0;
    for (const auto& p : chain) r = std::max(r, point_polyline_distance(p, path));
    return r;
}

// C2 cubic spline through pts with unit parameter steps; d0/d1 clamp the
// end derivatives when given, otherwise the ends are natural.
std::vector<CubicBezier> spline(const std::vector<Vec2>& pts, std::optional<Vec2> d0, std::optional<Vec2> d1) {
    const int n = static_cast<int>(pts.size()) - 1;
    std::vector<double> lo(n + 1, 1), di(n + 1, 4), up(n + 1, 1);
    std::vector<Vec2> rhs(n + 1);
    for (int k = 1; k < n; ++k) rhs[k] = (pts[k + 1] - pts[k - 1]) * 3.0;
    if (d0) {
        di[0] = 1;
        up[0] = 0;
        rhs[0] = *d0;
    } else {
        di[0] = 2;
        up[0] = 1;
        rhs[0] = (pts[1] - pts[0]) * 3.0;
    }
    if (d1) {
        lo[n] = 0;
        di[n] = 1;
        rhs[n] = *d1;
    } else {
        lo[n] = 1;
        di[n] = 2;
        rhs[n] = (pts[n] - pts[n - 1]) * 3.0;
    }
    // Thomas algorithm.
    std::vector<double> c(n + 1);
    std::vector<Vec2> d(n + 1);
    c[0] = up[0] / di[0];
    d[0] = rhs[0] * (1.0 / di[0]);
    for (int k = 1; k <= n; ++k) {
        const double m = di[k] - lo[k] * c[k - 1];
        c[k] = k < n ? up[k] / m : 0;
        d[k] = (rhs[k] - d[k - 1] * lo[k]) * (1.0 / m);
    }
    std::vector<Vec2> D(n + 1);
    D[n] = d[n];
    for (int k = n - 1; k >= 0; --k) D[k] = d[k] - D[k + 1] * c[k];
    std::vector<CubicBezier> out;
    for (int k = 0; k < n; ++k)
        out.push_back({pts[k], pts[k] + D[k] * (1.0 / 3.0), pts[k + 1] - D[k + 1] * (1.0 / 3.0), pts[k + 1]});
    return out;
}

constexpr int kEdgeSamples = 24;

Polyline cell_loop(const MorphGrid& g, const GridCell& c) {
    Polyline loop;
    for (size_t k = 0; k < c.edges.size(); ++k) {
        Polyline part = sample(g.edges[c.edges[k]].curve, kEdgeSamples);
        if (!c.forward[k]) std::reverse(part.begin(), part.end());
        loop.insert(loop.end(), loop.empty() ? part.begin() : part.begin() + 1, part.end());
    }
    return loop;
}

}  // namespace

MorphGrid fit_grid_curves(const MorphState& s, const BinaryMask& e, const Fabricability& fab) {
    MorphGrid g;
    g.width = s.width;
    g.height = s.height;
    g.rows = s.rows;
    g.cols = s.cols;
    g.spacing = s.spacing;
    g.vertices = s.pos;
    for (size_t i = 0; i < s.pos.size(); ++i) g.snapped.push_back(vertex_snapped(s, static_cast<int>(i)));
    // Snapped vertices come to rest a little short of the edge; slide them the
    // remaining distance down the distance field so outlines pass through the edge.
    for (size_t i = 0; i < s.pos.size(); ++i) {
        if (!g.snapped[i] || s.pinned[i]) continue;
        const Vec2 p = s.pos[i];
        const Vec2 grad = potential_gradient(s.distance, p);
        if (grad.norm() < 1e-9) continue;
        const double d = s.distance.sample(p.x - 0.5, p.y - 0.5);
        g.vertices[i] = p - grad.normalized() * d;
    }

    const int R = s.rows, C = s.cols;
    auto h_edge = [&](int i, int j) { return i * C + j; };
    auto v_edge = [&](int i, int j) { return (R + 1) * C + i * (C + 1) + j; };
    for (int i = 0; i <= R; ++i)
        for (int j = 0; j < C; ++j) g.edges.push_back({s.index(i, j), s.index(i, j + 1), {}, false, false});
    for (int i = 0; i < R; ++i)
        for (int j = 0; j <= C; ++j) g.edges.push_back({s.index(i, j), s.index(i + 1, j), {}, false, false});

    // Chain fits for interior edges between snapped vertices.
    for (auto& ed : g.edges) {
        const Vec2 a = g.vertices[ed.a], b = g.vertices[ed.b];
        ed.curve = CubicBezier::line(a, b);
        const bool border = s.pinned[ed.a] && s.pinned[ed.b];
        if (border || !g.snapped[ed.a] || !g.snapped[ed.b]) continue;
        const auto chain = edge_chain(e, a, b, 0.35 * (b - a).norm() + 1.0);
        if (!chain) continue;
        const CubicBezier fit = fit_cubic(*chain);
        if (max_deviation(fit, *chain) <= kChainFitTolerance) {
            ed.curve = fit;
            ed.fitted = true;
        }
    }

    // Unfitted runs along every interior grid line become C2 splines clamped
    // to the fitted neighbors.
    auto fill_line = [&](int count, auto edge_at) {
        int k = 0;
        while (k < count) {
            if (g.edges[edge_at(k)].fitted) {
                ++k;
                continue;
            }
            int end = k;
            while (end < count && !g.edges[edge_at(end)].fitted) ++end;
            std::vector<Vec2> pts{g.vertices[g.edges[edge_at(k)].a]};
            for (int q = k; q < end; ++q) pts.push_back(g.vertices[g.edges[edge_at(q)].b]);
            std::optional<Vec2> d0, d1;
            if (k > 0) {
                const auto& c = g.edges[edge_at(k - 1)].curve;
                d0 = (c.p3 - c.p2) * 3.0;
            }
            if (end < count) {
                const auto& c = g.edges[edge_at(end)].curve;
                d1 = (c.p1 - c.p0) * 3.0;
            }
            const auto segs = spline(pts, d0, d1);
            for (int q = k; q < end; ++q) g.edges[edge_at(q)].curve = segs[q - k];
            k = end;
        }
    };
    for (int i = 1; i < R; ++i) fill_line(C, [&](int k) { return h_edge(i, k); });
    for (int j = 1; j < C; ++j) fill_line(R, [&](int k) { return v_edge(k, j); });

    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j) {
            GridCell cell;
            cell.row = i;
            cell.col = j;
            cell.label = "R" + std::to_string(i) + "C" + std::to_string(j);
            cell.edges = {h_edge(i, j), v_edge(i, j + 1), h_edge(i + 1, j), v_edge(i, j)};
            cell.forward = {true, true, false, false};

            // Diagonal hypothesis: a chain running corner to corner that the
            // fitted diagonal explains better than the cell's axis edges.
            const int tl = s.index(i, j), tr = s.index(i, j + 1), bl = s.index(i + 1, j), br = s.index(i + 1, j + 1);
            const Polyline upper = [&] {
                Polyline p = sample(g.edges[h_edge(i, j)].curve, kEdgeSamples);
                Polyline q = sample(g.edges[v_edge(i, j + 1)].curve, kEdgeSamples);
                p.insert(p.end(), q.begin() + 1, q.end());
                return p;
            }();
            const Polyline lower = [&] {
                Polyline p = sample(g.edges[v_edge(i, j)].curve, kEdgeSamples);
                Polyline q = sample(g.edges[h_edge(i + 1, j)].curve, kEdgeSamples);
                p.insert(p.end(), q.begin() + 1, q.end());
                return p;
            }();
            int best_diag = -1;
            double best_res = kChainFitTolerance;
            CubicBezier best_curve;
            for (int d = 0; d < 2; ++d) {
                const int va = d == 0 ? tl : tr, vb = d == 0 ? br : bl;
                if (!g.snapped[va] || !g.snapped[vb]) continue;
                const Vec2 a = g.vertices[va], b = g.vertices[vb];
                const auto chain = edge_chain(e, a, b, 0.25 * (b - a).norm() + 1.0);
                if (!chain) continue;
                const CubicBezier fit = fit_cubic(*chain);
                const double res = max_deviation(fit, *chain);
                double axis;
                if (d == 0) {
                    axis = std::min(polyline_residual(*chain, upper), polyline_residual(*chain, lower));
                } else {
                    // TR to BL runs against the corner paths TR-TL-BL and TR-BR-BL.
                    Polyline top = sample(g.edges[h_edge(i, j)].curve, kEdgeSamples);
                    Polyline left = sample(g.edges[v_edge(i, j)].curve, kEdgeSamples);
                    top.insert(top.end(), left.begin() + 1, left.end());
                    Polyline right = sample(g.edges[v_edge(i, j + 1)].curve, kEdgeSamples);
                    Polyline bottom = sample(g.edges[h_edge(i + 1, j)].curve, kEdgeSamples);
                    right.insert(right.end(), bottom.begin() + 1, bottom.end());
                    axis = std::min(polyline_residual(*chain, top), polyline_residual(*chain, right));
                }
                if (res <= best_res && res < axis) {
                    best_diag = d;
                    best_res = res;
                    best_curve = fit;
                }
            }
            if (best_diag < 0) {
                g.cells.push_back(std::move(cell));
                continue;
            }
            GridEdge diag{best_diag == 0 ? tl : tr, best_diag == 0 ? br : bl, best_curve, true, true};
            const int di = static_cast<int>(g.edges.size());
            GridCell a = cell, b = cell;
            a.label += "a";
            b.label += "b";
            if (best_diag == 0) {
                a.edges = {h_edge(i, j), v_edge(i, j + 1), di};
                a.forward = {true, true, false};
                b.edges = {di, h_edge(i + 1, j), v_edge(i, j)};
                b.forward = {true, false, false};
            } else {
                a.edges = {h_edge(i, j), di, v_edge(i, j)};
                a.forward = {true, true, false};
                b.edges = {v_edge(i, j + 1), h_edge(i + 1, j), di};
                b.forward = {true, false, false};
            }
            g.edges.push_back(diag);
            // Keep the split only if both triangles can be cut.
            bool fabricable = true;
            for (const GridCell* t : {&a, &b}) {
                std::vector<PixelRun> runs;
                for (const auto& sp : rasterize_loops({cell_loop(g, *t)}, g.width, g.height))
                    runs.push_back({sp.y, sp.x0, sp.x1});
                if (runs.empty() || !fab.admits(make_region(0, runs).shape)) fabricable = false;
            }
            if (!fabricable) {
                g.edges.pop_back();
                g.cells.push_back(std::move(cell));
                continue;
            }
            g.cells.push_back(std::move(a));
            g.cells.push_back(std::move(b));
        }
    return g;
}

LabelMap rasterize_grid(const MorphGrid& g) {
    LabelMap lm(g.width, g.height, -1);
    for (int c = 0; c < static_cast<int>(g.cells.size()); ++c)
        for (const auto& sp : rasterize_loops({cell_loop(g, g.cells[c])}, g.width, g.height))
            for (int x = sp.x0; x < sp.x1; ++x) lm.at(x, sp.y) = c;
    // Curves that cross leave holes; those pixels join the first labelled
    // 4-neighbor reached by a breadth-first sweep.
    std::deque<std::pair<int, int>> q;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x)
            if (lm.at(x, y) >= 0) q.emplace_back(x, y);
    while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop_front();
        const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (auto& d : nb) {
            const int nx = x + d[0], ny = y + d[1];
            if (nx < 0 || ny < 0 || nx >= g.width || ny >= g.height || lm.at(nx, ny) >= 0) continue;
            lm.at(nx, ny) = lm.at(x, y);
            q.emplace_back(nx, ny);
        }
    }
    return lm;
}

Segmentation grid_segmentation(const MorphGrid& g, const Fabricability& fab) {
    const LabelMap lm = rasterize_grid(g);
    Segmentation seg = from_label_map(lm, fab, SegmentationKind::Morphed);
    std::map<std::string, int> seen;
    for (auto& r : seg.regions) {
        const auto& run = r.shape.runs.front();
        const GridCell& cell = g.cells[lm.at(r.bbox.x + run.x0, r.bbox.y + run.y)];
        r.row = cell.row;
        r.col = cell.col;
        const int n = seen[cell.label]++;
        r.label = n == 0 ? cell.label : cell.label + "." + std::to_string(n + 1);
    }
    GridMeta meta;
    meta.rows = g.rows;
    meta.cols = g.cols;
    meta.spacing = g.spacing;
    meta.xs = grid_lines(g.width, g.spacing);
    meta.ys = grid_lines(g.height, g.spacing);
    seg.grid = meta;
    return seg;
}

}  // namespace parquetry
