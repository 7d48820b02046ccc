#include "parquetry/geometry.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>

namespace parquetry {

double signed_area(const Polyline& pts) {
    if (pts.size() < 3) return 0.0;
    double a = 0;
    const size_t n = pts.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& p = pts[i];
        const Vec2& q = pts[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    return a / 2.0;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    if (len2 <= 0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

double point_polyline_distance(Vec2 p, const Polyline& line) {
    if (line.size() == 1) return (p - line[0]).norm();
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < line.size(); ++i) best = std::min(best, point_segment_distance(p, line[i], line[i + 1]));
    return best;
}

Polyline simplify_collinear(const Polyline& line, bool closed) {
    if (line.size() < 3) return line;
    Polyline out;
    out.push_back(line.front());
    for (size_t i = 1; i + 1 < line.size(); ++i) {
        const Vec2 d0 = line[i] - out.back();
        const Vec2 d1 = line[i + 1] - line[i];
        if (std::abs(d0.cross(d1)) <= 1e-12 * (d0.norm() * d1.norm() + 1e-300) && d0.dot(d1) > 0) continue;
        if (line[i] == out.back()) continue;
        out.push_back(line[i]);
    }
    out.push_back(line.back());
    if (closed && out.size() >= 4) {
        // The seam point of a closed loop may itself be collinear.
        const Vec2 d0 = out[0] - out[out.size() - 2];
        const Vec2 d1 = out[1] - out[0];
        if (std::abs(d0.cross(d1)) <= 1e-12 * (d0.norm() * d1.norm() + 1e-300) && d0.dot(d1) > 0) {
            out.erase(out.begin());
            out.back() = out.front();
        }
    }
    return out;
}

Vec2 CubicBezier::eval(double t) const {
    const double u = 1 - t;
    return p0 * (u * u * u) + p1 * (3 * u * u * t) + p2 * (3 * u * t * t) + p3 * (t * t * t);
}

Vec2 CubicBezier::derivative(double t) const {
    const double u = 1 - t;
    return (p1 - p0) * (3 * u * u) + (p2 - p1) * (6 * u * t) + (p3 - p2) * (3 * t * t);
}

Vec2 CubicBezier::second_derivative(double t) const {
    return (p2 - p1 * 2 + p0) * (6 * (1 - t)) + (p3 - p2 * 2 + p1) * (6 * t);
}

CubicBezier CubicBezier::line(Vec2 a, Vec2 b) { return {a, a + (b - a) * (1.0 / 3.0), a + (b - a) * (2.0 / 3.0), b}; }

Polyline sample(const CubicBezier& c, int samples) {
    Polyline out;
    out.reserve(samples + 1);
    for (int i = 0; i <= samples; ++i) out.push_back(c.eval(static_cast<double>(i) / samples));
    return out;
}

double max_deviation(const CubicBezier& c, const Polyline& data) {
    const Polyline dense = sample(c, 64);
    double worst = 0;
    for (const Vec2& p : data) worst = std::max(worst, point_polyline_distance(p, dense));
    for (const Vec2& p : dense) worst = std::max(worst, point_polyline_distance(p, data));
    return worst;
}

namespace {

std::vector<double> chord_params(const Polyline& data) {
    std::vector<double> t(data.size(), 0.0);
    for (size_t i = 1; i < data.size(); ++i) t[i] = t[i - 1] + (data[i] - data[i - 1]).norm();
    const double total = t.back();
    for (double& v : t) v = total > 0 ? v / total : 0.0;
    return t;
}

void reparameterize(const CubicBezier& c, const Polyline& data, std::vector<double>& t) {
    for (size_t i = 1; i + 1 < data.size(); ++i) {
        const Vec2 d = c.eval(t[i]) - data[i];
        const Vec2 d1 = c.derivative(t[i]);
        const Vec2 d2 = c.second_derivative(t[i]);
        const double den = d1.dot(d1) + d.dot(d2);
        if (std::abs(den) < 1e-12) continue;
        t[i] = std::clamp(t[i] - d.dot(d1) / den, 0.0, 1.0);
    }
}

CubicBezier solve_free(const Polyline& data, const std::vector<double>& t) {
    const Vec2 a = data.front(), b = data.back();
    double c11 = 0, c12 = 0, c22 = 0;
    Vec2 r1, r2;
    for (size_t i = 0; i < data.size(); ++i) {
        const double u = 1 - t[i];
        const double b0 = u * u * u, b1 = 3 * u * u * t[i], b2 = 3 * u * t[i] * t[i], b3 = t[i] * t[i] * t[i];
        const Vec2 rest = data[i] - a * b0 - b * b3;
        c11 += b1 * b1;
        c12 += b1 * b2;
        c22 += b2 * b2;
        r1 += rest * b1;
        r2 += rest * b2;
    }
    const double det = c11 * c22 - c12 * c12;
    if (std::abs(det) < 1e-12) return CubicBezier::line(a, b);
    const Vec2 p1 = (r1 * c22 - r2 * c12) * (1.0 / det);
    const Vec2 p2 = (r2 * c11 - r1 * c12) * (1.0 / det);
    return {a, p1, p2, b};
}

CubicBezier solve_tangents(const Polyline& data, const std::vector<double>& t, Vec2 t0, Vec2 t1) {
    const Vec2 a = data.front(), b = data.back();
    const double chord = (b - a).norm();
    double c11 = 0, c12 = 0, c22 = 0, x1 = 0, x2 = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        const double u = 1 - t[i];
        const double b0 = u * u * u, b1 = 3 * u * u * t[i], b2 = 3 * u * t[i] * t[i], b3 = t[i] * t[i] * t[i];
        const Vec2 A1 = t0 * b1;
        const Vec2 A2 = t1 * (-b2);
        const Vec2 rest = data[i] - a * (b0 + b1) - b * (b2 + b3);
        c11 += A1.dot(A1);
        c12 += A1.dot(A2);
        c22 += A2.dot(A2);
        x1 += rest.dot(A1);
        x2 += rest.dot(A2);
    }
    const double det = c11 * c22 - c12 * c12;
    double alpha = chord / 3, beta = chord / 3;
    if (std::abs(det) > 1e-12) {
        const double al = (x1 * c22 - x2 * c12) / det;
        const double be = (c11 * x2 - c12 * x1) / det;
        if (al > 1e-6 * chord && be > 1e-6 * chord) {
            alpha = al;
            beta = be;
        }
    }
    return {a, a + t0 * alpha, b - t1 * beta, b};
}

}  // namespace

CubicBezier fit_cubic(const Polyline& data) {
    if (data.size() < 3) return CubicBezier::line(data.front(), data.back());
    auto t = chord_params(data);
    CubicBezier c = solve_free(data, t);
    for (int it = 0; it < 4; ++it) {
        reparameterize(c, data, t);
        c = solve_free(data, t);
    }
    return c;
}

CubicBezier fit_cubic_tangents(const Polyline& data, Vec2 t0, Vec2 t1) {
    auto t = chord_params(data);
    CubicBezier c = solve_tangents(data, t, t0, t1);
    if (data.size() < 3) return c;
    for (int it = 0; it < 4; ++it) {
        reparameterize(c, data, t);
        c = solve_tangents(data, t, t0, t1);
    }
    return c;
}

CutCurve CutCurve::reversed() const {
    CutCurve out;
    out.continuity = continuity;
    for (auto it = segments.rbegin(); it != segments.rend(); ++it) out.segments.push_back(it->reversed());
    return out;
}

Polyline CutCurve::sampled(int per_segment) const {
    Polyline out;
    for (const auto& s : segments) {
        const Polyline part = sample(s, per_segment);
        out.insert(out.end(), out.empty() ? part.begin() : part.begin() + 1, part.end());
    }
    return out;
}

namespace {

struct Fitter {
    const Polyline& pts;
    const std::vector<Vec2>& tangents;
    const CurveFitOptions& opt;
    std::vector<CubicBezier> out;

    Polyline run(size_t i, size_t j) const { return Polyline(pts.begin() + i, pts.begin() + j + 1); }

    void fit(size_t i, size_t j) {
        if (j - i + 1 > static_cast<size_t>(opt.max_run)) {
            const size_t mid = (i + j) / 2;
            fit(i, mid);
            fit(mid, j);
            return;
        }
        const Polyline data = run(i, j);
        if (opt.continuity == Continuity::G0) {
            if (j == i + 1) {
                out.push_back(CubicBezier::line(pts[i], pts[j]));
                return;
            }
            const CubicBezier c = fit_cubic(data);
            if (max_deviation(c, data) <= opt.tolerance) {
                out.push_back(c);
                return;
            }
        } else {
            CubicBezier c = fit_cubic_tangents(data, tangents[i], tangents[j]);
            if (max_deviation(c, data) <= opt.tolerance) {
                out.push_back(c);
                return;
            }
            if (j == i + 1) {
                // Shorten the handles until the curve hugs the chord.
                double alpha = (pts[j] - pts[i]).norm() / 3.0;
                while (true) {
                    alpha *= 0.5;
                    c = {pts[i], pts[i] + tangents[i] * alpha, pts[j] - tangents[j] * alpha, pts[j]};
                    if (max_deviation(c, data) <= opt.tolerance || alpha < 1e-3) break;
                }
                out.push_back(c);
                return;
            }
        }
        const size_t mid = (i + j) / 2;
        fit(i, mid);
        fit(mid, j);
    }
};

}  // namespace

CutCurve fit_curve(const Polyline& data, const CurveFitOptions& opt) {
    CutCurve curve;
    curve.continuity = opt.continuity;
    const bool closed = data.size() > 2 && data.front() == data.back();
    Polyline pts = simplify_collinear(data, false);
    if (pts.size() < 2) return curve;
    if (closed && pts.size() < 4) {
        curve.segments.push_back(CubicBezier::line(pts.front(), pts.back()));
        return curve;
    }
    std::vector<Vec2> tangents(pts.size());
    for (size_t k = 0; k < pts.size(); ++k) {
        Vec2 t;
        if (k == 0) t = pts[1] - pts[0];
        else if (k + 1 == pts.size()) t = pts[k] - pts[k - 1];
        else {
            t = pts[k + 1] - pts[k - 1];
            if (t.norm() < 1e-12) t = pts[k + 1] - pts[k];
        }
        tangents[k] = t.normalized();
    }
    Fitter f{pts, tangents, opt, {}};
    f.fit(0, pts.size() - 1);
    curve.segments = std::move(f.out);
    return curve;
}

namespace {

struct Lattice {
    const LabelMap& lm;
    int W, H;

    explicit Lattice(const LabelMap& m) : lm(m), W(m.width), H(m.height) {}

    // Horizontal edge (x,y)-(x+1,y), x in [0,W), y in [0,H].
    bool h_edge(int x, int y) const { return lm.get(x, y - 1) != lm.get(x, y); }
    // Vertical edge (x,y)-(x,y+1), x in [0,W], y in [0,H).
    bool v_edge(int x, int y) const { return lm.get(x - 1, y) != lm.get(x, y); }
    size_t h_index(int x, int y) const { return static_cast<size_t>(y) * W + x; }
    size_t v_index(int x, int y) const { return static_cast<size_t>(W) * (H + 1) + static_cast<size_t>(y) * (W + 1) + x; }
    size_t edge_count() const { return static_cast<size_t>(W) * (H + 1) + static_cast<size_t>(W + 1) * H; }

    struct Step {
        int dx, dy;
        size_t edge;
    };

    std::vector<Step> incident(int x, int y) const {
        std::vector<Step> s;
        if (x < W && h_edge(x, y)) s.push_back({1, 0, h_index(x, y)});
        if (y < H && v_edge(x, y)) s.push_back({0, 1, v_index(x, y)});
        if (x > 0 && h_edge(x - 1, y)) s.push_back({-1, 0, h_index(x - 1, y)});
        if (y > 0 && v_edge(x, y - 1)) s.push_back({0, -1, v_index(x, y - 1)});
        return s;
    }

    bool is_corner(int x, int y) const { return (x == 0 || x == W) && (y == 0 || y == H); }

    bool junction(int x, int y) const {
        const size_t deg = incident(x, y).size();
        return deg >= 3 || (deg >= 2 && is_corner(x, y));
    }

    std::pair<int, int> sides(int x, int y, int dx, int dy) const {
        // Returns (left, right) labels for a unit step from (x,y).
        if (dx == 1) return {lm.get(x, y - 1), lm.get(x, y)};
        if (dx == -1) return {lm.get(x - 1, y), lm.get(x - 1, y - 1)};
        if (dy == 1) return {lm.get(x, y), lm.get(x - 1, y)};
        return {lm.get(x - 1, y - 1), lm.get(x, y - 1)};
    }
};

}  // namespace

std::vector<BoundaryChain> extract_boundaries(const LabelMap& labels) {
    const Lattice lat(labels);
    std::vector<std::uint8_t> visited(lat.edge_count(), 0);
    std::vector<BoundaryChain> chains;

    auto walk = [&](int sx, int sy, const Lattice::Step& first, bool stop_at_start) {
        BoundaryChain c;
        auto [left, right] = lat.sides(sx, sy, first.dx, first.dy);
        c.left = left;
        c.right = right;
        c.points.push_back({double(sx), double(sy)});
        int x = sx, y = sy;
        Lattice::Step step = first;
        while (true) {
            visited[step.edge] = 1;
            x += step.dx;
            y += step.dy;
            c.points.push_back({double(x), double(y)});
            if (stop_at_start ? (x == sx && y == sy) : lat.junction(x, y)) break;
            bool advanced = false;
            for (const auto& s : lat.incident(x, y)) {
                if (!visited[s.edge]) {
                    step = s;
                    advanced = true;
                    break;
                }
            }
            if (!advanced) break;
        }
        c.closed = c.points.front() == c.points.back();
        chains.push_back(std::move(c));
    };

    for (int y = 0; y <= lat.H; ++y)
        for (int x = 0; x <= lat.W; ++x) {
            if (!lat.junction(x, y)) continue;
            for (const auto& s : lat.incident(x, y))
                if (!visited[s.edge]) walk(x, y, s, false);
        }
    // Remaining boundary edges belong to junction-free closed loops.
    for (int y = 0; y <= lat.H; ++y)
        for (int x = 0; x <= lat.W; ++x)
            for (const auto& s : lat.incident(x, y))
                if (!visited[s.edge]) walk(x, y, s, true);
    return chains;
}

std::vector<ChainLoop> loops_for_label(const std::vector<BoundaryChain>& chains, int label) {
    struct Use {
        ChainUse ref;
        Vec2 start, end, first_dir, last_dir;
        bool used = false;
    };
    std::vector<Use> uses;
    for (int i = 0; i < static_cast<int>(chains.size()); ++i) {
        const auto& c = chains[i];
        if (c.right != label && c.left != label) continue;
        const bool fwd = c.right == label;
        const auto& p = c.points;
        Use u;
        u.ref = {i, fwd};
        if (fwd) {
            u.start = p.front();
            u.end = p.back();
            u.first_dir = p[1] - p[0];
            u.last_dir = p[p.size() - 1] - p[p.size() - 2];
        } else {
            u.start = p.back();
            u.end = p.front();
            u.first_dir = p[p.size() - 2] - p[p.size() - 1];
            u.last_dir = p[0] - p[1];
        }
        uses.push_back(u);
    }
    std::map<std::pair<double, double>, std::vector<int>> by_start;
    for (int i = 0; i < static_cast<int>(uses.size()); ++i) by_start[{uses[i].start.x, uses[i].start.y}].push_back(i);

    std::vector<ChainLoop> loops;
    for (int s = 0; s < static_cast<int>(uses.size()); ++s) {
        if (uses[s].used) continue;
        ChainLoop loop;
        int cur = s;
        while (cur >= 0 && !uses[cur].used) {
            Use& u = uses[cur];
            u.used = true;
            loop.uses.push_back(u.ref);
            const auto& pts = chains[u.ref.chain].points;
            if (u.ref.forward) {
                loop.points.insert(loop.points.end(), loop.points.empty() ? pts.begin() : pts.begin() + 1, pts.end());
            } else {
                loop.points.insert(loop.points.end(), loop.points.empty() ? pts.rbegin() : pts.rbegin() + 1, pts.rend());
            }
            if (u.end == uses[s].start) break;
            // At pinch points prefer the sharpest right turn, which keeps
            // diagonally touching pixels in separate loops.
            int next = -1;
            double best = -10;
            auto it = by_start.find({u.end.x, u.end.y});
            if (it == by_start.end()) break;
            for (int cand : it->second) {
                if (uses[cand].used) continue;
                const Vec2 d = u.last_dir, e = uses[cand].first_dir;
                const double turn = std::atan2(d.cross(e), d.dot(e));
                if (turn > best) {
                    best = turn;
                    next = cand;
                }
            }
            cur = next;
        }
        loops.push_back(std::move(loop));
    }
    return loops;
}

std::vector<Loop> trace_outline(const LabelMap& labels, int label) {
    std::vector<Loop> out;
    const auto chains = extract_boundaries(labels);
    for (const auto& cl : loops_for_label(chains, label)) out.push_back({simplify_collinear(cl.points, true)});
    return out;
}

std::vector<PixelSpan> rasterize_loops(const std::vector<Polyline>& loops, int width, int height) {
    std::vector<PixelSpan> spans;
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const auto& l : loops)
        for (const auto& p : l) {
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
    if (loops.empty() || !(ymin <= ymax)) return spans;
    const int y0 = std::max(0, static_cast<int>(std::floor(ymin)) - 1);
    const int y1 = std::min(height, static_cast<int>(std::ceil(ymax)) + 1);
    std::vector<double> xs;
    for (int y = y0; y < y1; ++y) {
        const double yc = y + 0.5;
        xs.clear();
        for (const auto& l : loops) {
            const size_t n = l.size();
            for (size_t i = 0; i < n; ++i) {
                Vec2 a = l[i], b = l[(i + 1) % n];
                if (a == b) continue;
                if (!((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y))) continue;
                if (a.y > b.y) std::swap(a, b);
                xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (size_t k = 0; k + 1 < xs.size(); k += 2) {
            int xa = static_cast<int>(std::ceil(xs[k] - 0.5));
            int xb = static_cast<int>(std::ceil(xs[k + 1] - 0.5));
            xa = std::max(xa, 0);
            xb = std::min(xb, width);
            if (xa < xb) spans.push_back({y, xa, xb});
        }
    }
    return spans;
}

}  // namespace parquetry
