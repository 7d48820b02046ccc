#include "parquetry/segment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "parquetry/error.hpp"

namespace parquetry {

Shape Shape::rectangle(int w, int h) {
    Shape s;
    s.width = w;
    s.height = h;
    for (int y = 0; y < h; ++y) s.runs.push_back({y, 0, w});
    return s;
}

long Shape::area() const {
    long a = 0;
    for (const auto& r : runs) a += r.x1 - r.x0;
    return a;
}

bool Shape::is_rectangle() const {
    if (static_cast<int>(runs.size()) != height) return false;
    for (int y = 0; y < height; ++y)
        if (runs[y].y != y || runs[y].x0 != 0 || runs[y].x1 != width) return false;
    return true;
}

BinaryMask Shape::to_mask() const {
    BinaryMask m(width, height);
    for (const auto& r : runs)
        for (int x = r.x0; x < r.x1; ++x) m.set(x, r.y, true);
    return m;
}

Shape Shape::from_mask(const BinaryMask& m) {
    Shape s;
    s.width = m.width;
    s.height = m.height;
    for (int y = 0; y < m.height; ++y) {
        int x = 0;
        while (x < m.width) {
            if (!m.get(x, y)) {
                ++x;
                continue;
            }
            const int x0 = x;
            while (x < m.width && m.get(x, y)) ++x;
            s.runs.push_back({y, x0, x});
        }
    }
    return s;
}

double mm_to_px(double mm, double dpi) { return mm / 25.4 * dpi; }
double px_to_mm(double px, double dpi) { return px / dpi * 25.4; }

Fabricability Fabricability::at_dpi(double dpi) {
    Fabricability f;
    f.min_edge_px = std::round(mm_to_px(5.0, dpi));
    f.min_area_px = f.min_edge_px * f.min_edge_px / 2.0;
    return f;
}

bool Fabricability::admits(const Shape& s) const {
    if (static_cast<double>(s.area()) < min_area_px) return false;
    return erode(s.to_mask(), 1).any();
}

LabelMap Segmentation::label_map() const {
    LabelMap lm(width, height, -1);
    for (int i = 0; i < static_cast<int>(regions.size()); ++i) {
        const auto& r = regions[i];
        for (const auto& run : r.shape.runs)
            for (int x = run.x0; x < run.x1; ++x) lm.at(r.bbox.x + x, r.bbox.y + run.y) = i;
    }
    return lm;
}

PatchRegion make_region(int id, const std::vector<PixelRun>& absolute_runs) {
    PatchRegion r;
    r.id = id;
    if (absolute_runs.empty()) return r;
    int x0 = absolute_runs[0].x0, x1 = absolute_runs[0].x1, y0 = absolute_runs[0].y, y1 = absolute_runs[0].y + 1;
    for (const auto& run : absolute_runs) {
        x0 = std::min(x0, run.x0);
        x1 = std::max(x1, run.x1);
        y0 = std::min(y0, run.y);
        y1 = std::max(y1, run.y + 1);
    }
    r.bbox = {x0, y0, x1 - x0, y1 - y0};
    r.shape.width = r.bbox.w;
    r.shape.height = r.bbox.h;
    for (const auto& run : absolute_runs) r.shape.runs.push_back({run.y - y0, run.x0 - x0, run.x1 - x0});
    std::sort(r.shape.runs.begin(), r.shape.runs.end(),
              [](const PixelRun& a, const PixelRun& b) { return a.y != b.y ? a.y < b.y : a.x0 < b.x0; });

    LabelMap local(r.bbox.w, r.bbox.h, -1);
    for (const auto& run : r.shape.runs)
        for (int x = run.x0; x < run.x1; ++x) local.at(x, run.y) = 0;
    double best = -1;
    for (const auto& loop : trace_outline(local, 0)) {
        const double a = signed_area(loop.points);
        if (a > best) {
            best = a;
            r.outline = loop.points;
        }
    }
    for (auto& p : r.outline) p += Vec2{double(x0), double(y0)};
    return r;
}

std::vector<int> grid_lines(int extent, int patch_px) {
    std::vector<int> lines{0};
    int pos = 0;
    while (pos + patch_px < extent) {
        pos += patch_px;
        lines.push_back(pos);
    }
    lines.push_back(extent);
    if (lines.size() > 2 && 2 * (extent - lines[lines.size() - 2]) <= patch_px) lines.erase(lines.end() - 2);
    return lines;
}

Segmentation regular_grid(int width, int height, int patch_px, const Fabricability& fab) {
    if (width < 1 || height < 1) throw InputError("target must be non-empty");
    if (patch_px < fab.min_edge_px)
        throw InputError("patch size " + std::to_string(patch_px) + " px is below the fabricable minimum of " +
                         std::to_string(static_cast<int>(fab.min_edge_px)) + " px");
    Segmentation seg;
    seg.width = width;
    seg.height = height;
    seg.kind = SegmentationKind::Regular;
    GridMeta g;
    g.spacing = patch_px;
    g.xs = grid_lines(width, patch_px);
    g.ys = grid_lines(height, patch_px);
    g.cols = static_cast<int>(g.xs.size()) - 1;
    g.rows = static_cast<int>(g.ys.size()) - 1;
    for (int r = 0; r < g.rows; ++r)
        for (int c = 0; c < g.cols; ++c) {
            std::vector<PixelRun> runs;
            for (int y = g.ys[r]; y < g.ys[r + 1]; ++y) runs.push_back({y, g.xs[c], g.xs[c + 1]});
            PatchRegion reg = make_region(static_cast<int>(seg.regions.size()), runs);
            reg.row = r;
            reg.col = c;
            reg.label = "R" + std::to_string(r) + "C" + std::to_string(c);
            seg.regions.push_back(std::move(reg));
        }
    seg.grid = g;
    return seg;
}

namespace {

// 4-connected components; returns component id per pixel and the source label per component.
std::vector<int> components(const LabelMap& lm, std::vector<int>& comp_label) {
    std::vector<int> comp(lm.labels.size(), -1);
    std::deque<std::pair<int, int>> q;
    for (int y = 0; y < lm.height; ++y)
        for (int x = 0; x < lm.width; ++x) {
            if (comp[static_cast<size_t>(y) * lm.width + x] >= 0) continue;
            const int id = static_cast<int>(comp_label.size());
            const int lab = lm.at(x, y);
            comp_label.push_back(lab);
            comp[static_cast<size_t>(y) * lm.width + x] = id;
            q.emplace_back(x, y);
            while (!q.empty()) {
                auto [cx, cy] = q.front();
                q.pop_front();
                const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                for (auto& d : nb) {
                    const int nx = cx + d[0], ny = cy + d[1];
                    if (nx < 0 || ny < 0 || nx >= lm.width || ny >= lm.height) continue;
                    const size_t k = static_cast<size_t>(ny) * lm.width + nx;
                    if (comp[k] >= 0 || lm.at(nx, ny) != lab) continue;
                    comp[k] = id;
                    q.emplace_back(nx, ny);
                }
            }
        }
    return comp;
}

}  // namespace

Segmentation from_label_map(const LabelMap& labels, const Fabricability& fab, SegmentationKind kind) {
    const int W = labels.width, H = labels.height;
    if (W < 1 || H < 1) throw InputError("label image is empty");
    std::vector<int> comp_label;
    std::vector<int> comp = components(labels, comp_label);
    const int ncomp = static_cast<int>(comp_label.size());

    std::vector<Rect> box(ncomp, Rect{W, H, 0, 0});
    std::vector<int> bx1(ncomp, -1), by1(ncomp, -1);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const int c = comp[static_cast<size_t>(y) * W + x];
            box[c].x = std::min(box[c].x, x);
            box[c].y = std::min(box[c].y, y);
            bx1[c] = std::max(bx1[c], x + 1);
            by1[c] = std::max(by1[c], y + 1);
        }

    // Fill holes: background pixels inside a component's bbox that the
    // 8-connected outside cannot reach.
    for (int c = 0; c < ncomp; ++c) {
        const int x0 = box[c].x - 1, y0 = box[c].y - 1;
        const int w = bx1[c] - box[c].x + 2, h = by1[c] - box[c].y + 2;
        if (bx1[c] < 0) continue;
        std::vector<std::uint8_t> reach(static_cast<size_t>(w) * h, 0);
        auto is_fg = [&](int lx, int ly) {
            const int gx = lx + x0, gy = ly + y0;
            if (gx < 0 || gy < 0 || gx >= W || gy >= H) return false;
            return comp[static_cast<size_t>(gy) * W + gx] == c;
        };
        std::deque<std::pair<int, int>> q;
        for (int lx = 0; lx < w; ++lx) {
            q.emplace_back(lx, 0);
            q.emplace_back(lx, h - 1);
        }
        for (int ly = 0; ly < h; ++ly) {
            q.emplace_back(0, ly);
            q.emplace_back(w - 1, ly);
        }
        for (auto& [lx, ly] : q) reach[static_cast<size_t>(ly) * w + lx] = 1;
        while (!q.empty()) {
            auto [lx, ly] = q.front();
            q.pop_front();
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = lx + dx, ny = ly + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const size_t k = static_cast<size_t>(ny) * w + nx;
                    if (reach[k] || is_fg(nx, ny)) continue;
                    reach[k] = 1;
                    q.emplace_back(nx, ny);
                }
        }
        for (int ly = 1; ly < h - 1; ++ly)
            for (int lx = 1; lx < w - 1; ++lx)
                if (!reach[static_cast<size_t>(ly) * w + lx] && !is_fg(lx, ly))
                    comp[static_cast<size_t>(ly + y0) * W + lx + x0] = c;
    }

    // Compact ids in raster order of first appearance.
    std::map<int, int> remap;
    std::vector<std::vector<PixelRun>> runs;
    std::vector<int> source_label;
    for (int y = 0; y < H; ++y) {
        int x = 0;
        while (x < W) {
            const int c = comp[static_cast<size_t>(y) * W + x];
            const int x0 = x;
            while (x < W && comp[static_cast<size_t>(y) * W + x] == c) ++x;
            auto it = remap.find(c);
            if (it == remap.end()) {
                it = remap.emplace(c, static_cast<int>(runs.size())).first;
                runs.emplace_back();
                source_label.push_back(comp_label[c]);
            }
            runs[it->second].push_back({y, x0, x});
        }
    }

    Segmentation seg;
    seg.width = W;
    seg.height = H;
    seg.kind = kind;
    std::set<int> offenders;
    for (int i = 0; i < static_cast<int>(runs.size()); ++i) {
        PatchRegion r = make_region(i, runs[i]);
        r.label = "P" + std::to_string(i);
        if (!fab.admits(r.shape)) offenders.insert(source_label[i]);
        seg.regions.push_back(std::move(r));
    }
    if (!offenders.empty()) {
        std::string msg = "regions below the fabricable minimum for labels:";
        for (int l : offenders) msg += " " + std::to_string(l);
        throw FabricabilityError(msg, std::vector<int>(offenders.begin(), offenders.end()));
    }
    return seg;
}

LabelMap load_label_map(const std::filesystem::path& path) {
    const cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw InputError("cannot read label image: " + path.string());
    LabelMap lm(m.cols, m.rows, 0);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            int v = 0;
            if (m.depth() == CV_8U) {
                const auto* p = m.ptr<unsigned char>(y) + static_cast<size_t>(x) * m.channels();
                for (int c = 0; c < std::min(3, m.channels()); ++c) v = (v << 8) | p[c];
            } else if (m.depth() == CV_16U) {
                const auto* p = m.ptr<unsigned short>(y) + static_cast<size_t>(x) * m.channels();
                v = p[0];
                if (m.channels() >= 3) v = ((p[0] >> 8) << 16) | ((p[1] >> 8) << 8) | (p[2] >> 8);
            } else {
                throw InputError("label images must be 8 or 16 bit");
            }
            lm.at(x, y) = v;
        }
    return lm;
}

bool quad_splittable(const PatchRegion& r, const Fabricability& fab) {
    if (!r.shape.is_rectangle() || r.bbox.w < 2 || r.bbox.h < 2) return false;
    const int wl = r.bbox.w / 2, wr = r.bbox.w - wl, ht = r.bbox.h / 2, hb = r.bbox.h - ht;
    for (auto [w, h] : {std::pair{wl, ht}, {wr, ht}, {wl, hb}, {wr, hb}})
        if (!fab.admits(Shape::rectangle(w, h))) return false;
    return true;
}

std::vector<PatchRegion> quad_split(const PatchRegion& r, int first_id, const Fabricability& fab) {
    if (!quad_splittable(r, fab)) throw InputError("region " + std::to_string(r.id) + " is too small to split");
    const int wl = r.bbox.w / 2, ht = r.bbox.h / 2;
    const Rect quads[4] = {{r.bbox.x, r.bbox.y, wl, ht},
                           {r.bbox.x + wl, r.bbox.y, r.bbox.w - wl, ht},
                           {r.bbox.x, r.bbox.y + ht, wl, r.bbox.h - ht},
                           {r.bbox.x + wl, r.bbox.y + ht, r.bbox.w - wl, r.bbox.h - ht}};
    std::vector<PatchRegion> out;
    for (int q = 0; q < 4; ++q) {
        std::vector<PixelRun> runs;
        for (int y = quads[q].y; y < quads[q].y1(); ++y) runs.push_back({y, quads[q].x, quads[q].x1()});
        PatchRegion c = make_region(first_id + q, runs);
        c.depth = r.depth + 1;
        c.target_id = r.target_id;
        c.row = r.row;
        c.col = r.col;
        c.label = r.label + "." + std::to_string(q + 1);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace parquetry
