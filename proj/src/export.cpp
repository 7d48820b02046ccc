#include "parquetry/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "parquetry/error.hpp"

namespace parquetry {

Preview render_preview(const ReconstructionResult& result, const LabelMap& own, const SourcePool& pool,
                       int target_id) {
    int channels = 1;
    for (const auto& s : pool.sources) channels = std::max(channels, s.base.channels);
    const double dpi = pool.sources.empty() ? 300.0 : pool.sources.front().base.dpi;
    Preview pv;
    pv.image = Image(own.width, own.height, channels, 0.5f, dpi);
    std::map<int, const PatchAssignment*> by_id;
    for (const auto& a : result.assignments)
        if (a.target_id == target_id) by_id[a.patch_id] = &a;
    for (int y = 0; y < own.height; ++y)
        for (int x = 0; x < own.width; ++x) {
            const auto it = by_id.find(own.at(x, y));
            if (it == by_id.end()) {
                ++pv.unassigned;
                continue;
            }
            const PatchAssignment& a = *it->second;
            const Image& src = pool.sources.at(a.source_index).rotations.at(a.rotation_index).image;
            const int vx = a.x + x - a.target_x, vy = a.y + y - a.target_y;
            for (int c = 0; c < channels; ++c) pv.image.at(x, y, c) = src.at(vx, vy, std::min(c, src.channels - 1));
        }
    return pv;
}

namespace {

const Rotation& rotation_of(const PatchAssignment& a, const SourcePool& pool) {
    return pool.sources.at(a.source_index).rotations.at(a.rotation_index).rotation;
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    std::string s(buf);
    if (s == "-0.0000") s = "0.0000";
    return s;
}

bool inside_usable(const BinaryMask& usable, Vec2 q, double eps) {
    const int xs[2] = {static_cast<int>(std::floor(q.x - eps)), static_cast<int>(std::floor(q.x + eps))};
    const int ys[2] = {static_cast<int>(std::floor(q.y - eps)), static_cast<int>(std::floor(q.y + eps))};
    for (int x : xs)
        for (int y : ys)
            if (usable.get_or_false(x, y)) return true;
    return false;
}

}  // namespace

Vec2 target_to_panel(const PatchAssignment& a, const SourcePool& pool, Vec2 p) {
    return rotation_of(a, pool).to_base({p.x - a.target_x + a.x, p.y - a.target_y + a.y});
}

Vec2 panel_to_target(const PatchAssignment& a, const SourcePool& pool, Vec2 q) {
    const Vec2 v = rotation_of(a, pool).to_variant(q);
    return {v.x - a.x + a.target_x, v.y - a.y + a.target_y};
}

Vec2 mirror(Vec2 q, double panel_width) { return {panel_width - q.x, q.y}; }

CutPlan emit_cut_plan(const ReconstructionResult& result, const LabelMap& own, const SourcePool& pool,
                      const CutPlanOptions& opt, int target_id) {
    CutPlan plan;
    plan.dpi = pool.sources.empty() ? 300.0 : pool.sources.front().base.dpi;
    plan.kerf_mm = px_to_mm(pool.kerf_px, plan.dpi);
    const CutNetwork net = fit_cut_curves(own, opt.curves);

    std::map<int, const PatchRegion*> regions;
    if (target_id < static_cast<int>(result.segmentations.size()))
        for (const auto& r : result.segmentations[target_id].regions) regions[r.id] = &r;

    std::vector<const PatchAssignment*> order;
    for (const auto& a : result.assignments)
        if (a.target_id == target_id) order.push_back(&a);
    std::sort(order.begin(), order.end(), [](auto* l, auto* r) { return l->patch_id < r->patch_id; });

    std::vector<int> offenders;
    for (const PatchAssignment* ap : order) {
        const PatchAssignment& a = *ap;
        const SourceTexture& src = pool.sources.at(a.source_index);
        const double pw = src.base.width;
        const double scale = 25.4 / plan.dpi;
        auto to_mm = [&](Vec2 p) {
            const Vec2 q = mirror(target_to_panel(a, pool, p), pw);
            return Vec2{q.x * scale, q.y * scale};
        };

        CutPiece piece;
        piece.patch_id = a.patch_id;
        piece.target_id = a.target_id;
        piece.source_id = a.source_id;
        piece.rotation_degrees = a.rotation_degrees;
        piece.target_origin = {double(a.target_x), double(a.target_y)};
        const auto rit = regions.find(a.patch_id);
        piece.label = rit != regions.end() && !rit->second->label.empty() ? rit->second->label
                                                                            : "P" + std::to_string(a.patch_id);

        bool escapes = false;
        for (const CutCurve& loop : piece_outline(net, a.patch_id)) {
            CutCurve out;
            out.continuity = loop.continuity;
            for (const auto& seg : loop.segments) {
                for (int k = 0; k <= 16 && !escapes; ++k)
                    if (!inside_usable(src.usable, target_to_panel(a, pool, seg.eval(k / 16.0)), opt.containment_eps))
                        escapes = true;
                out.segments.push_back({to_mm(seg.p0), to_mm(seg.p1), to_mm(seg.p2), to_mm(seg.p3)});
            }
            piece.loops.push_back(std::move(out));
        }

        // Label at the owned pixel farthest from the piece boundary. The same
        // scan catches holes in the panel that the outline alone would miss.
        int x0 = own.width, y0 = own.height, x1 = -1, y1 = -1;
        for (int y = 0; y < own.height; ++y)
            for (int x = 0; x < own.width; ++x)
                if (own.at(x, y) == a.patch_id) {
                    if (!escapes && !inside_usable(src.usable, target_to_panel(a, pool, {x + 0.5, y + 0.5}), 0.0))
                        escapes = true;
                    x0 = std::min(x0, x);
                    y0 = std::min(y0, y);
                    x1 = std::max(x1, x);
                    y1 = std::max(y1, y);
                }
        if (x1 >= 0) {
            const int w = x1 - x0 + 3, h = y1 - y0 + 3;
            BinaryMask outside(w, h, true);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x)
                    if (own.at(x, y) == a.patch_id) outside.set(x - x0 + 1, y - y0 + 1, false);
            const ScalarField d = distance_transform(outside);
            int bx = 0, by = 0;
            double best = -1;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (d.at(x, y) > best) {
                        best = d.at(x, y);
                        bx = x;
                        by = y;
                    }
            piece.label_anchor = to_mm({bx + x0 - 1 + 0.5, by + y0 - 1 + 0.5});
            const double radius_mm = std::max(0.0, best - 0.5) * scale;
            const double n = static_cast<double>(piece.label.size());
            piece.label_size = std::min(3.0, radius_mm / std::sqrt(0.09 * n * n + 0.25));
        }
        if (escapes) offenders.push_back(a.patch_id);
        plan.pieces.push_back(std::move(piece));
    }
    if (!offenders.empty()) {
        std::string msg = "cut outlines leave the usable panel area for patches:";
        for (int id : offenders) msg += " " + std::to_string(id);
        throw FabricabilityError(msg, offenders);
    }

    for (const auto& p : plan.pieces) plan.panels.push_back(p.source_id);
    std::sort(plan.panels.begin(), plan.panels.end());
    plan.panels.erase(std::unique(plan.panels.begin(), plan.panels.end()), plan.panels.end());
    for (const auto& id : plan.panels) {
        const auto& s = pool.sources.at(pool.index_of(id));
        plan.panel_size_mm.push_back({px_to_mm(s.base.width, plan.dpi), px_to_mm(s.base.height, plan.dpi)});
    }
    return plan;
}

std::string svg_path_data(const std::vector<CutCurve>& loops) {
    std::string d;
    for (const auto& loop : loops) {
        if (loop.segments.empty()) continue;
        if (!d.empty()) d += ' ';
        d += "M " + num(loop.front().x) + " " + num(loop.front().y);
        for (const auto& s : loop.segments)
            d += " C " + num(s.p1.x) + " " + num(s.p1.y) + " " + num(s.p2.x) + " " + num(s.p2.y) + " " + num(s.p3.x) +
                 " " + num(s.p3.y);
        d += " Z";
    }
    return d;
}

std::string panel_svg(const CutPlan& plan, const std::string& panel_id) {
    const auto it = std::find(plan.panels.begin(), plan.panels.end(), panel_id);
    if (it == plan.panels.end()) throw InputError("no pieces on panel " + panel_id);
    const Vec2 size = plan.panel_size_mm[it - plan.panels.begin()];
    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(size.x) + "mm\" height=\"" +
         num(size.y) + "mm\" viewBox=\"0 0 " + num(size.x) + " " + num(size.y) + "\">\n";
    s += "<!-- panel " + panel_id + ", back side (mirrored), kerf " + num(plan.kerf_mm) + " mm -->\n";
    s += "<g id=\"cut\" fill=\"none\" stroke=\"#FF0000\" stroke-width=\"0.01\">\n";
    for (const auto& p : plan.pieces)
        if (p.source_id == panel_id)
            s += "<path id=\"cut-" + p.label + "\" d=\"" + svg_path_data(p.loops) + "\"/>\n";
    s += "</g>\n";
    s += "<g id=\"engrave\" fill=\"#000000\" stroke=\"none\" font-family=\"sans-serif\" text-anchor=\"middle\" "
         "dominant-baseline=\"central\">\n";
    for (const auto& p : plan.pieces)
        if (p.source_id == panel_id)
            s += "<text x=\"" + num(p.label_anchor.x) + "\" y=\"" + num(p.label_anchor.y) + "\" font-size=\"" +
                 num(p.label_size) + "\">" + p.label + "</text>\n";
    s += "</g>\n</svg>\n";
    return s;
}

std::vector<std::filesystem::path> write_cut_plan(const CutPlan& plan, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> out;
    for (const auto& id : plan.panels) {
        const auto path = dir / ("plan_" + id + ".svg");
        std::ofstream(path, std::ios::binary) << panel_svg(plan, id);
        out.push_back(path);
    }
    return out;
}

namespace {

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const size_t k = static_cast<size_t>(pos);
    const double t = pos - k;
    return k + 1 < v.size() ? v[k] + (v[k + 1] - v[k]) * t : v[k];
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    size_t i = 0;
    while (i < idx.size()) {
        size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double avg = (i + j) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

RunStats run_stats(const ReconstructionResult& r, int run) {
    RunStats s;
    s.run = run;
    s.assigned = static_cast<int>(r.assignments.size());
    s.exhausted = static_cast<int>(r.exhausted.size());
    std::vector<double> costs;
    for (const auto& a : r.assignments) costs.push_back(a.cost.total);
    s.total_cost = r.total_cost();
    s.mean_cost = r.mean_cost();
    s.median_cost = quantile(costs, 0.5);
    s.p90_cost = quantile(costs, 0.9);
    s.availability = r.availability;
    return s;
}

std::vector<RunStats> ablation_report(const std::vector<ReconstructionResult>& runs) {
    std::vector<RunStats> out;
    for (int i = 0; i < static_cast<int>(runs.size()); ++i) out.push_back(run_stats(runs[i], i));
    return out;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) return 0;
    const auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) return 0;
    return sxy / std::sqrt(sxx * syy);
}

void write_report_csv(const std::vector<RunStats>& stats, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << "run,assigned,exhausted,mean_cost,median_cost,p90_cost,total_cost";
    if (!stats.empty())
        for (const auto& [id, f] : stats.front().availability) out << ",available_" << id;
    out << "\n";
    for (const auto& s : stats) {
        out << s.run << "," << s.assigned << "," << s.exhausted << "," << num(s.mean_cost) << "," << num(s.median_cost)
            << "," << num(s.p90_cost) << "," << num(s.total_cost);
        for (const auto& [id, f] : s.availability) out << "," << num(f);
        out << "\n";
    }
}

void write_report_plot(const std::vector<RunStats>& stats, const std::filesystem::path& path) {
    const int W = 640, H = 360, m = 40;
    cv::Mat img(H, W, CV_8UC3, cv::Scalar(255, 255, 255));
    cv::line(img, {m, H - m}, {W - m, H - m}, cv::Scalar(0, 0, 0));
    cv::line(img, {m, m}, {m, H - m}, cv::Scalar(0, 0, 0));
    if (!stats.empty()) {
        double cmax = 0;
        for (const auto& s : stats) cmax = std::max(cmax, s.mean_cost);
        const int n = static_cast<int>(stats.size());
        auto px = [&](int i) { return n == 1 ? W / 2 : m + (W - 2 * m) * i / (n - 1); };
        std::vector<cv::Point> cost, avail;
        for (int i = 0; i < n; ++i) {
            const double c = cmax > 0 ? stats[i].mean_cost / cmax : 0;
            double a = 0;
            for (const auto& [id, f] : stats[i].availability) a += f;
            if (!stats[i].availability.empty()) a /= static_cast<double>(stats[i].availability.size());
            cost.emplace_back(px(i), static_cast<int>(H - m - c * (H - 2 * m)));
            avail.emplace_back(px(i), static_cast<int>(H - m - a * (H - 2 * m)));
        }
        cv::polylines(img, cost, false, cv::Scalar(0, 0, 200), 2);
        cv::polylines(img, avail, false, cv::Scalar(200, 120, 0), 2);
        for (const auto& p : cost) cv::circle(img, p, 3, cv::Scalar(0, 0, 200), -1);
    }
    cv::putText(img, "mean patch cost (red), availability (blue) per run", {m, 24}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                cv::Scalar(0, 0, 0));
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    cv::imwrite(path.string(), img);
}

}  // namespace parquetry
