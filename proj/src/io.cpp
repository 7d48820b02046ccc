#include "parquetry/io.hpp"

#include <fstream>
#include <sstream>

#include "parquetry/error.hpp"

namespace parquetry {

namespace {

Json point(Vec2 p) { return Json::array({p.x, p.y}); }
Vec2 point_from(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

const char* kind_name(SegmentationKind k) {
    switch (k) {
        case SegmentationKind::Regular: return "regular";
        case SegmentationKind::Morphed: return "morphed";
        default: return "custom";
    }
}

SegmentationKind kind_from(const std::string& s) {
    if (s == "regular") return SegmentationKind::Regular;
    if (s == "morphed") return SegmentationKind::Morphed;
    if (s == "custom") return SegmentationKind::Custom;
    throw InputError("unknown segmentation kind " + s);
}

}  // namespace

Json to_json(const Shape& s) {
    Json runs = Json::array();
    for (const auto& r : s.runs) runs.push_back({r.y, r.x0, r.x1});
    return {{"width", s.width}, {"height", s.height}, {"runs", runs}};
}

Shape shape_from_json(const Json& j) {
    Shape s;
    s.width = j.at("width");
    s.height = j.at("height");
    for (const auto& r : j.at("runs")) s.runs.push_back({r.at(0), r.at(1), r.at(2)});
    return s;
}

Json to_json(const Segmentation& s) {
    Json j;
    j["width"] = s.width;
    j["height"] = s.height;
    j["kind"] = kind_name(s.kind);
    if (s.grid) {
        j["grid"] = {{"rows", s.grid->rows}, {"cols", s.grid->cols}, {"spacing", s.grid->spacing},
                     {"xs", s.grid->xs},     {"ys", s.grid->ys}};
    } else {
        j["grid"] = nullptr;
    }
    Json regions = Json::array();
    for (const auto& r : s.regions) {
        Json outline = Json::array();
        for (const auto& p : r.outline) outline.push_back(point(p));
        regions.push_back({{"id", r.id},
                           {"label", r.label},
                           {"target_id", r.target_id},
                           {"bbox", {r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h}},
                           {"depth", r.depth},
                           {"row", r.row},
                           {"col", r.col},
                           {"priority_key", r.priority_key},
                           {"shape", to_json(r.shape)},
                           {"outline", outline}});
    }
    j["regions"] = regions;
    return j;
}

Segmentation segmentation_from_json(const Json& j) {
    Segmentation s;
    s.width = j.at("width");
    s.height = j.at("height");
    s.kind = kind_from(j.at("kind"));
    if (!j.at("grid").is_null()) {
        const Json& g = j.at("grid");
        s.grid = GridMeta{g.at("rows"), g.at("cols"), g.at("spacing"), g.at("xs").get<std::vector<int>>(),
                          g.at("ys").get<std::vector<int>>()};
    }
    for (const auto& rj : j.at("regions")) {
        PatchRegion r;
        r.id = rj.at("id");
        r.label = rj.at("label");
        r.target_id = rj.at("target_id");
        const auto& b = rj.at("bbox");
        r.bbox = {b.at(0), b.at(1), b.at(2), b.at(3)};
        r.depth = rj.at("depth");
        r.row = rj.at("row");
        r.col = rj.at("col");
        r.priority_key = rj.at("priority_key");
        r.shape = shape_from_json(rj.at("shape"));
        for (const auto& p : rj.at("outline")) r.outline.push_back(point_from(p));
        s.regions.push_back(std::move(r));
    }
    return s;
}

Json to_json(const PatchAssignment& a) {
    return {{"patch_id", a.patch_id},
            {"target_id", a.target_id},
            {"source_id", a.source_id},
            {"source_index", a.source_index},
            {"rotation_index", a.rotation_index},
            {"rotation_degrees", a.rotation_degrees},
            {"x", a.x},
            {"y", a.y},
            {"target_x", a.target_x},
            {"target_y", a.target_y},
            {"depth", a.depth},
            {"cost", {{"total", a.cost.total}, {"intensity", a.cost.intensity}, {"edge", a.cost.edge}}}};
}

PatchAssignment assignment_from_json(const Json& j) {
    PatchAssignment a;
    a.patch_id = j.at("patch_id");
    a.target_id = j.at("target_id");
    a.source_id = j.at("source_id");
    a.source_index = j.at("source_index");
    a.rotation_index = j.at("rotation_index");
    a.rotation_degrees = j.at("rotation_degrees");
    a.x = j.at("x");
    a.y = j.at("y");
    a.target_x = j.at("target_x");
    a.target_y = j.at("target_y");
    a.depth = j.at("depth");
    const auto& c = j.at("cost");
    a.cost = {c.at("total"), c.at("intensity"), c.at("edge")};
    return a;
}

Json to_json(const ReconstructionResult& r) {
    Json j;
    j["segmentations"] = Json::array();
    for (const auto& s : r.segmentations) j["segmentations"].push_back(to_json(s));
    j["assignments"] = Json::array();
    for (const auto& a : r.assignments) j["assignments"].push_back(to_json(a));
    j["exhausted"] = Json::array();
    for (const auto& e : r.exhausted) j["exhausted"].push_back({{"target_id", e.target_id}, {"patch_id", e.patch_id}});
    j["availability"] = Json::array();
    for (const auto& [id, f] : r.availability) j["availability"].push_back({{"source", id}, {"fraction", f}});
    j["total_cost"] = r.total_cost();
    j["mean_cost"] = r.mean_cost();
    return j;
}

ReconstructionResult result_from_json(const Json& j) {
    ReconstructionResult r;
    for (const auto& s : j.at("segmentations")) r.segmentations.push_back(segmentation_from_json(s));
    for (const auto& a : j.at("assignments")) r.assignments.push_back(assignment_from_json(a));
    for (const auto& e : j.at("exhausted")) r.exhausted.push_back({e.at("target_id"), e.at("patch_id")});
    for (const auto& a : j.at("availability")) r.availability.emplace_back(a.at("source"), a.at("fraction"));
    return r;
}

Json to_json(const CubicBezier& c) { return Json::array({point(c.p0), point(c.p1), point(c.p2), point(c.p3)}); }

CubicBezier bezier_from_json(const Json& j) {
    return {point_from(j.at(0)), point_from(j.at(1)), point_from(j.at(2)), point_from(j.at(3))};
}

Json to_json(const MorphGrid& g) {
    Json j;
    j["width"] = g.width;
    j["height"] = g.height;
    j["rows"] = g.rows;
    j["cols"] = g.cols;
    j["spacing"] = g.spacing;
    j["vertices"] = Json::array();
    for (const auto& v : g.vertices) j["vertices"].push_back(point(v));
    j["snapped"] = Json::array();
    for (auto s : g.snapped) j["snapped"].push_back(s != 0);
    j["edges"] = Json::array();
    for (const auto& e : g.edges)
        j["edges"].push_back(
            {{"a", e.a}, {"b", e.b}, {"fitted", e.fitted}, {"diagonal", e.diagonal}, {"curve", to_json(e.curve)}});
    j["cells"] = Json::array();
    for (const auto& c : g.cells) {
        std::vector<bool> fwd(c.forward.begin(), c.forward.end());
        j["cells"].push_back(
            {{"row", c.row}, {"col", c.col}, {"label", c.label}, {"edges", c.edges}, {"forward", fwd}});
    }
    return j;
}

MorphGrid grid_from_json(const Json& j) {
    MorphGrid g;
    g.width = j.at("width");
    g.height = j.at("height");
    g.rows = j.at("rows");
    g.cols = j.at("cols");
    g.spacing = j.at("spacing");
    for (const auto& v : j.at("vertices")) g.vertices.push_back(point_from(v));
    for (const auto& s : j.at("snapped")) g.snapped.push_back(s.get<bool>() ? 1 : 0);
    for (const auto& e : j.at("edges")) {
        GridEdge ge;
        ge.a = e.at("a");
        ge.b = e.at("b");
        ge.fitted = e.at("fitted");
        ge.diagonal = e.at("diagonal");
        ge.curve = bezier_from_json(e.at("curve"));
        g.edges.push_back(ge);
    }
    for (const auto& c : j.at("cells")) {
        GridCell gc;
        gc.row = c.at("row");
        gc.col = c.at("col");
        gc.label = c.at("label");
        gc.edges = c.at("edges").get<std::vector<int>>();
        for (const auto& f : c.at("forward")) gc.forward.push_back(f.get<bool>());
        if (gc.edges.size() != gc.forward.size()) throw InputError("grid cell edge/direction count mismatch");
        for (int e : gc.edges)
            if (e < 0 || e >= static_cast<int>(g.edges.size())) throw InputError("grid cell references unknown edge");
        g.cells.push_back(std::move(gc));
    }
    if (g.vertices.size() != static_cast<size_t>((g.rows + 1) * (g.cols + 1)))
        throw InputError("grid vertex count does not match rows/cols");
    return g;
}

Json to_json(const CutPlan& p) {
    Json j;
    j["units"] = "mm";
    j["dpi"] = p.dpi;
    j["kerf_mm"] = p.kerf_mm;
    j["panels"] = Json::array();
    for (size_t i = 0; i < p.panels.size(); ++i)
        j["panels"].push_back({{"id", p.panels[i]},
                               {"width_mm", p.panel_size_mm[i].x},
                               {"height_mm", p.panel_size_mm[i].y},
                               {"file", "plan_" + p.panels[i] + ".svg"}});
    j["pieces"] = Json::array();
    for (const auto& c : p.pieces) {
        Json loops = Json::array();
        for (const auto& l : c.loops) {
            Json segs = Json::array();
            for (const auto& s : l.segments) segs.push_back(to_json(s));
            loops.push_back(segs);
        }
        j["pieces"].push_back({{"patch_id", c.patch_id},
                               {"target_id", c.target_id},
                               {"label", c.label},
                               {"source_id", c.source_id},
                               {"rotation_degrees", c.rotation_degrees},
                               {"target_origin", point(c.target_origin)},
                               {"label_anchor", point(c.label_anchor)},
                               {"label_size", c.label_size},
                               {"loops", loops}});
    }
    return j;
}

Json to_json(const LabelMap& m) {
    Json runs = Json::array();
    size_t i = 0;
    while (i < m.labels.size()) {
        size_t k = i;
        while (k < m.labels.size() && m.labels[k] == m.labels[i]) ++k;
        runs.push_back({m.labels[i], k - i});
        i = k;
    }
    return {{"width", m.width}, {"height", m.height}, {"runs", runs}};
}

LabelMap label_map_from_json(const Json& j) {
    LabelMap m(j.at("width"), j.at("height"));
    size_t pos = 0;
    for (const auto& r : j.at("runs")) {
        const int v = r.at(0);
        const size_t n = r.at(1);
        if (pos + n > m.labels.size()) throw InputError("label map runs overflow the raster");
        std::fill_n(m.labels.begin() + pos, n, v);
        pos += n;
    }
    if (pos != m.labels.size()) throw InputError("label map runs do not cover the raster");
    return m;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_json(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << dump(j);
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::vector<unsigned char>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kB64[v >> 18];
        out += kB64[(v >> 12) & 63];
        out += kB64[(v >> 6) & 63];
        out += kB64[v & 63];
    }
    if (i < bytes.size()) {
        unsigned v = bytes[i] << 16;
        if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
        out += kB64[v >> 18];
        out += kB64[(v >> 12) & 63];
        out += i + 1 < bytes.size() ? kB64[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
    std::string_view s(text);
    if (const auto comma = s.find(','); s.substr(0, 5) == "data:" && comma != std::string_view::npos)
        s.remove_prefix(comma + 1);
    std::vector<unsigned char> out;
    unsigned acc = 0;
    int bits = 0;
    for (char c : s) {
        if (c == '=' || c == '\n' || c == '\r' || c == ' ') continue;
        const char* p = std::char_traits<char>::find(kB64, 64, c);
        if (!p) throw InputError("invalid base64 payload");
        acc = (acc << 6) | static_cast<unsigned>(p - kB64);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<unsigned char>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

}  // namespace parquetry
