#include "parquetry/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "parquetry/error.hpp"

namespace parquetry {

namespace {

constexpr double kEps = 1e-9;

void exact_trig(double degrees, double& c, double& s) {
    const double turns = degrees / 90.0;
    const double r = std::round(turns);
    if (std::abs(turns - r) < 1e-12) {
        const int q = ((static_cast<int>(r) % 4) + 4) % 4;
        const double cs[4] = {1, 0, -1, 0};
        const double sn[4] = {0, 1, 0, -1};
        c = cs[q];
        s = sn[q];
        return;
    }
    const double rad = degrees * M_PI / 180.0;
    c = std::cos(rad);
    s = std::sin(rad);
}

// Inclusive index range of base pixels whose squares can meet a rotated unit
// square centred at coordinate `c` (pixel i spans [i, i+1)); `h` is the half
// extent of the rotated square's bounding box.
void touched_range(double c, double h, int& lo, int& hi) {
    lo = static_cast<int>(std::floor(c - 1.0 - h + kEps)) + 1;
    hi = static_cast<int>(std::ceil(c + h - kEps)) - 1;
}

float sample_channel(const Image& img, double x, double y, int ch) {
    // Pixel centres at integer coordinates.
    const double fx = std::floor(x), fy = std::floor(y);
    const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
    const double ax = x - fx, ay = y - fy;
    auto px = [&](int xi, int yi) {
        xi = std::clamp(xi, 0, img.width - 1);
        yi = std::clamp(yi, 0, img.height - 1);
        return static_cast<double>(img.at(xi, yi, ch));
    };
    const double v = (1 - ay) * ((1 - ax) * px(x0, y0) + ax * px(x0 + 1, y0)) +
                     ay * ((1 - ax) * px(x0, y0 + 1) + ax * px(x0 + 1, y0 + 1));
    return static_cast<float>(v);
}

}  // namespace

Rotation Rotation::make(double degrees, int bw, int bh) {
    Rotation r;
    r.degrees = degrees;
    exact_trig(degrees, r.cos_t, r.sin_t);
    r.base_width = bw;
    r.base_height = bh;
    const double w = std::abs(bw * r.cos_t) + std::abs(bh * r.sin_t);
    const double h = std::abs(bw * r.sin_t) + std::abs(bh * r.cos_t);
    r.width = std::max(1, static_cast<int>(std::ceil(w - kEps)));
    r.height = std::max(1, static_cast<int>(std::ceil(h - kEps)));
    return r;
}

Vec2 Rotation::to_base(Vec2 v) const {
    const Vec2 d{v.x - width / 2.0, v.y - height / 2.0};
    // Inverse rotation.
    return {cos_t * d.x + sin_t * d.y + base_width / 2.0, -sin_t * d.x + cos_t * d.y + base_height / 2.0};
}

Vec2 Rotation::to_variant(Vec2 b) const {
    const Vec2 d{b.x - base_width / 2.0, b.y - base_height / 2.0};
    return {cos_t * d.x - sin_t * d.y + width / 2.0, sin_t * d.x + cos_t * d.y + height / 2.0};
}

int SourcePool::index_of(const std::string& id) const {
    for (int i = 0; i < static_cast<int>(sources.size()); ++i)
        if (sources[i].id == id) return i;
    return -1;
}

std::vector<double> rotation_angles(int n_rot, double span_degrees) {
    if (n_rot < 1) throw InputError("n_rot must be at least 1");
    std::vector<double> a;
    for (int k = 0; k < n_rot; ++k) a.push_back(k * span_degrees / n_rot);
    return a;
}

namespace {

bool variant_pixel_available(const SourceTexture& src, const Rotation& rot, int vx, int vy) {
    const Vec2 c = rot.to_base({vx + 0.5, vy + 0.5});
    const double h = rot.half_extent();
    int x0, x1, y0, y1;
    touched_range(c.x, h, x0, x1);
    touched_range(c.y, h, y0, y1);
    if (x0 < 0 || y0 < 0 || x1 >= src.base.width || y1 >= src.base.height) return false;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (!src.available.get(x, y)) return false;
    return true;
}

}  // namespace

void refresh_variant_masks(SourceTexture& src, std::optional<Rect> base_box) {
    for (auto& var : src.rotations) {
        const Rotation& rot = var.rotation;
        int vx0 = 0, vy0 = 0, vx1 = rot.width, vy1 = rot.height;
        if (base_box) {
            double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
            for (Vec2 corner : {Vec2{double(base_box->x), double(base_box->y)},
                                Vec2{double(base_box->x1()), double(base_box->y)},
                                Vec2{double(base_box->x), double(base_box->y1())},
                                Vec2{double(base_box->x1()), double(base_box->y1())}}) {
                const Vec2 v = rot.to_variant(corner);
                minx = std::min(minx, v.x);
                miny = std::min(miny, v.y);
                maxx = std::max(maxx, v.x);
                maxy = std::max(maxy, v.y);
            }
            vx0 = std::max(0, static_cast<int>(std::floor(minx)) - 2);
            vy0 = std::max(0, static_cast<int>(std::floor(miny)) - 2);
            vx1 = std::min(rot.width, static_cast<int>(std::ceil(maxx)) + 2);
            vy1 = std::min(rot.height, static_cast<int>(std::ceil(maxy)) + 2);
        }
        for (int y = vy0; y < vy1; ++y)
            for (int x = vx0; x < vx1; ++x) var.available.set(x, y, variant_pixel_available(src, rot, x, y));
    }
}

SourceTexture make_source(std::string id, Image base, std::optional<BinaryMask> mask, const IngestOptions& opt) {
    if (opt.n_rot < 1) throw InputError("n_rot must be at least 1");
    if (base.width < 1 || base.height < 1) throw InputError("source image is empty");
    if (mask && (mask->width != base.width || mask->height != base.height))
        throw InputError("mask size does not match source image '" + id + "'");
    SourceTexture src;
    src.id = std::move(id);
    base.dpi = opt.dpi;
    src.base = std::move(base);
    src.usable = mask ? *mask : BinaryMask(src.base.width, src.base.height, true);
    src.available = src.usable;
    src.initial_usable = static_cast<long>(src.usable.count());
    for (double deg : rotation_angles(opt.n_rot, opt.span_degrees)) {
        Variant v;
        v.rotation = Rotation::make(deg, src.base.width, src.base.height);
        const Rotation& rot = v.rotation;
        v.image = Image(rot.width, rot.height, src.base.channels, 0.0f, opt.dpi);
        v.available = BinaryMask(rot.width, rot.height);
        for (int y = 0; y < rot.height; ++y)
            for (int x = 0; x < rot.width; ++x) {
                const Vec2 b = rot.to_base({x + 0.5, y + 0.5});
                if (b.x < 0 || b.y < 0 || b.x > src.base.width || b.y > src.base.height) continue;
                for (int c = 0; c < src.base.channels; ++c)
                    v.image.at(x, y, c) = sample_channel(src.base, b.x - 0.5, b.y - 0.5, c);
            }
        src.rotations.push_back(std::move(v));
    }
    refresh_variant_masks(src);
    return src;
}

SourceTexture load_source(const std::filesystem::path& image_path,
                          const std::optional<std::filesystem::path>& mask_path, const IngestOptions& opt,
                          std::string id) {
    if (opt.n_rot < 1) throw InputError("n_rot must be at least 1");
    Image img = load_image(image_path, opt.dpi);
    std::optional<BinaryMask> mask;
    if (mask_path) mask = load_mask(*mask_path);
    if (id.empty()) id = image_path.parent_path().filename().string();
    SourceTexture s = make_source(std::move(id), std::move(img), std::move(mask), opt);
    s.provenance = image_path;
    return s;
}

bool placement_available(const SourcePool& pool, const Placement& p, const Shape& shape) {
    if (p.source < 0 || p.source >= static_cast<int>(pool.sources.size())) return false;
    const auto& src = pool.sources[p.source];
    if (p.rotation < 0 || p.rotation >= static_cast<int>(src.rotations.size())) return false;
    const auto& mask = src.rotations[p.rotation].available;
    for (const auto& run : shape.runs)
        for (int x = run.x0; x < run.x1; ++x)
            if (!mask.get_or_false(p.x + x, p.y + run.y)) return false;
    return true;
}

BinaryMask footprint_in_base(const SourceTexture& src, const Placement& p, const Shape& shape, Rect& box) {
    const Rotation& rot = src.rotations[p.rotation].rotation;
    const double h = rot.half_extent();
    BinaryMask out(src.base.width, src.base.height);
    int bx0 = src.base.width, by0 = src.base.height, bx1 = -1, by1 = -1;
    for (const auto& run : shape.runs)
        for (int x = run.x0; x < run.x1; ++x) {
            const Vec2 c = rot.to_base({p.x + x + 0.5, p.y + run.y + 0.5});
            int x0, x1, y0, y1;
            touched_range(c.x, h, x0, x1);
            touched_range(c.y, h, y0, y1);
            for (int yy = std::max(0, y0); yy <= std::min(src.base.height - 1, y1); ++yy)
                for (int xx = std::max(0, x0); xx <= std::min(src.base.width - 1, x1); ++xx) {
                    out.set(xx, yy, true);
                    bx0 = std::min(bx0, xx);
                    by0 = std::min(by0, yy);
                    bx1 = std::max(bx1, xx);
                    by1 = std::max(by1, yy);
                }
        }
    box = bx1 < 0 ? Rect{} : Rect{bx0, by0, bx1 - bx0 + 1, by1 - by0 + 1};
    return out;
}

void consume(SourcePool& pool, const Placement& p, const Shape& shape, int patch_id) {
    if (!placement_available(pool, p, shape))
        throw ResourceCollision("placement overlaps unavailable material on source '" +
                                (p.source >= 0 && p.source < static_cast<int>(pool.sources.size())
                                     ? pool.sources[p.source].id
                                     : std::string("?")) +
                                "'");
    SourceTexture& src = pool.sources[p.source];
    Rect box;
    BinaryMask fp = footprint_in_base(src, p, shape, box);
    const int k = std::max(0, pool.kerf_px);
    const Rect grown{std::max(0, box.x - k), std::max(0, box.y - k), 0, 0};
    const int gx1 = std::min(src.base.width, box.x1() + k), gy1 = std::min(src.base.height, box.y1() + k);
    const Rect gbox{grown.x, grown.y, gx1 - grown.x, gy1 - grown.y};

    LabelMap local(gbox.w, gbox.h, -1);
    long area = 0;
    for (int y = gbox.y; y < gbox.y1(); ++y)
        for (int x = gbox.x; x < gbox.x1(); ++x) {
            bool hit = false;
            for (int dy = -k; dy <= k && !hit; ++dy)
                for (int dx = -k; dx <= k && !hit; ++dx) hit = fp.get_or_false(x + dx, y + dy);
            if (!hit || !src.available.get(x, y)) continue;
            src.available.set(x, y, false);
            local.at(x - gbox.x, y - gbox.y) = 0;
            ++area;
        }
    ConsumedRegion rec;
    rec.source_id = src.id;
    rec.rotation_index = p.rotation;
    rec.offset_x = p.x;
    rec.offset_y = p.y;
    rec.patch_id = patch_id;
    rec.area = area;
    for (auto loop : trace_outline(local, 0)) {
        for (auto& pt : loop.points) pt += Vec2{double(gbox.x), double(gbox.y)};
        rec.loops.push_back(std::move(loop));
    }
    pool.consumed.push_back(std::move(rec));
    refresh_variant_masks(src, gbox);
}

double availability_fraction(const SourcePool& pool, const std::string& source_id) {
    const int i = pool.index_of(source_id);
    if (i < 0) throw InputError("unknown source id '" + source_id + "'");
    const auto& s = pool.sources[i];
    if (s.initial_usable == 0) return 0.0;
    return static_cast<double>(s.available.count()) / static_cast<double>(s.initial_usable);
}

SourcePool load_project_sources(const std::filesystem::path& project_dir, const IngestOptions& opt, int kerf_px) {
    namespace fs = std::filesystem;
    const fs::path dir = project_dir / "sources";
    if (!fs::is_directory(dir)) throw InputError("no sources/ directory in " + project_dir.string());
    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && fs::exists(e.path() / "image.png")) ids.push_back(e.path().filename().string());
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw InputError("no sources/<id>/image.png found in " + project_dir.string());
    SourcePool pool;
    pool.kerf_px = kerf_px;
    for (const auto& id : ids) {
        const fs::path img = dir / id / "image.png";
        const fs::path mask = dir / id / "mask.png";
        pool.sources.push_back(
            load_source(img, fs::exists(mask) ? std::optional<fs::path>(mask) : std::nullopt, opt, id));
    }
    return pool;
}

namespace {

nlohmann::json loops_json(const std::vector<Loop>& loops) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : loops) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : l.points) pts.push_back({p.x, p.y});
        arr.push_back(pts);
    }
    return arr;
}

std::vector<Loop> loops_from_json(const nlohmann::json& arr) {
    std::vector<Loop> out;
    for (const auto& pts : arr) {
        Loop l;
        for (const auto& p : pts) l.points.push_back({p[0].get<double>(), p[1].get<double>()});
        out.push_back(std::move(l));
    }
    return out;
}

}  // namespace

void save_pool_state(const SourcePool& pool, const std::filesystem::path& json_path) {
    nlohmann::json j;
    j["kerf_px"] = pool.kerf_px;
    j["sources"] = nlohmann::json::array();
    for (const auto& s : pool.sources) {
        const std::string mask_file = json_path.stem().string() + "_" + s.id + "_available.png";
        j["sources"].push_back({{"id", s.id},
                                {"initial_usable", s.initial_usable},
                                {"available", static_cast<long>(s.available.count())},
                                {"n_rot", s.rotations.size()},
                                {"mask", mask_file}});
        save_mask(json_path.parent_path() / mask_file, s.available);
    }
    j["consumed"] = nlohmann::json::array();
    for (const auto& c : pool.consumed)
        j["consumed"].push_back({{"source_id", c.source_id},
                                 {"rotation_index", c.rotation_index},
                                 {"offset", {c.offset_x, c.offset_y}},
                                 {"patch_id", c.patch_id},
                                 {"area", c.area},
                                 {"loops", loops_json(c.loops)}});
    if (json_path.has_parent_path()) std::filesystem::create_directories(json_path.parent_path());
    std::ofstream(json_path) << j.dump(1) << "\n";
}

void load_pool_state(SourcePool& pool, const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw InputError("cannot read pool state " + json_path.string());
    const nlohmann::json j = nlohmann::json::parse(in);
    pool.kerf_px = j.at("kerf_px").get<int>();
    for (const auto& s : j.at("sources")) {
        const int i = pool.index_of(s.at("id").get<std::string>());
        if (i < 0) throw InputError("pool state references unknown source " + s.at("id").get<std::string>());
        BinaryMask m = load_mask(json_path.parent_path() / s.at("mask").get<std::string>());
        auto& src = pool.sources[i];
        if (m.width != src.base.width || m.height != src.base.height)
            throw InputError("pool state mask size mismatch for " + src.id);
        for (size_t k = 0; k < m.bits.size(); ++k) m.bits[k] = m.bits[k] && src.usable.bits[k];
        src.available = std::move(m);
        refresh_variant_masks(src);
    }
    pool.consumed.clear();
    for (const auto& c : j.at("consumed")) {
        ConsumedRegion r;
        r.source_id = c.at("source_id").get<std::string>();
        r.rotation_index = c.at("rotation_index").get<int>();
        r.offset_x = c.at("offset")[0].get<int>();
        r.offset_y = c.at("offset")[1].get<int>();
        r.patch_id = c.at("patch_id").get<int>();
        r.area = c.at("area").get<long>();
        r.loops = loops_from_json(c.at("loops"));
        pool.consumed.push_back(std::move(r));
    }
}

}  // namespace parquetry
