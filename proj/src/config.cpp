#include "parquetry/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "parquetry/error.hpp"
#include "parquetry/segment.hpp"

namespace parquetry {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

template <class E>
struct Names {
    std::vector<std::pair<E, std::string>> items;

    std::string name(E e) const {
        for (const auto& [k, n] : items)
            if (k == e) return n;
        return "?";
    }
    E parse(const std::string& key, const std::string& v) const {
        std::string all;
        for (const auto& [k, n] : items) {
            if (n == v) return k;
            all += (all.empty() ? "" : "|") + n;
        }
        throw ConfigError("'" + key + "' expects one of " + all + ", got '" + v + "'");
    }
};

const Names<QueuePolicy> kQueue{{{QueuePolicy::SaliencyDesc, "saliency"}, {QueuePolicy::CenterDistanceAsc, "center"}}};
const Names<MatchMethod> kMethod{{{MatchMethod::Auto, "auto"}, {MatchMethod::Direct, "direct"}, {MatchMethod::Fft, "fft"}}};
const Names<SegmentMode> kSegment{
    {{SegmentMode::Regular, "regular"}, {SegmentMode::Labels, "labels"}, {SegmentMode::Morph, "morph"}}};
const Names<Continuity> kContinuity{{{Continuity::G0, "g0"}, {Continuity::G1, "g1"}}};

struct Field {
    std::string key;
    std::function<std::string(const Config&)> get;
    std::function<void(Config&, const std::string&)> set;
};

#define DOUBLE_FIELD(KEY, member) \
    Field{KEY, [](const Config& c) { return fmt(c.member); }, [](Config& c, const std::string& v) { c.member = to_double(KEY, v); }}
#define INT_FIELD(KEY, member) \
    Field{KEY, [](const Config& c) { return std::to_string(c.member); }, [](Config& c, const std::string& v) { c.member = to_int(KEY, v); }}
#define BOOL_FIELD(KEY, member) \
    Field{KEY, [](const Config& c) { return std::string(c.member ? "true" : "false"); }, [](Config& c, const std::string& v) { c.member = to_bool(KEY, v); }}
#define ENUM_FIELD(KEY, member, table) \
    Field{KEY, [](const Config& c) { return table.name(c.member); }, [](Config& c, const std::string& v) { c.member = table.parse(KEY, v); }}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        DOUBLE_FIELD("w_intens", w_intens),
        DOUBLE_FIELD("w_edge", w_edge),
        DOUBLE_FIELD("w_hist", w_hist),
        DOUBLE_FIELD("s_image", s_image),
        DOUBLE_FIELD("s_patch", s_patch),
        INT_FIELD("n_adaptive", n_adaptive),
        DOUBLE_FIELD("w_adaptive", w_adaptive),
        INT_FIELD("n_rot", n_rot),
        DOUBLE_FIELD("rot_span", rot_span),
        DOUBLE_FIELD("dpi", dpi),
        ENUM_FIELD("queue", queue, kQueue),
        BOOL_FIELD("interleave", interleave),
        ENUM_FIELD("match_method", match_method, kMethod),
        ENUM_FIELD("segment", segment, kSegment),
        DOUBLE_FIELD("morph_m", morph.m),
        DOUBLE_FIELD("morph_gamma", morph.gamma),
        DOUBLE_FIELD("morph_w", morph.w),
        DOUBLE_FIELD("morph_dt", morph.dt),
        DOUBLE_FIELD("morph_tol", morph.tol),
        INT_FIELD("morph_max_steps", morph.max_steps),
        DOUBLE_FIELD("morph_min_distance", morph.min_distance),
        DOUBLE_FIELD("morph_snap", morph.snap),
        DOUBLE_FIELD("rg_sigma_space", edges.rg_sigma_space),
        DOUBLE_FIELD("rg_sigma_range", edges.rg_sigma_range),
        INT_FIELD("rg_iterations", edges.rg_iterations),
        DOUBLE_FIELD("bilateral_sigma_space", edges.bilateral_sigma_space),
        DOUBLE_FIELD("bilateral_sigma_range", edges.bilateral_sigma_range),
        DOUBLE_FIELD("canny_lo", edges.canny_lo),
        DOUBLE_FIELD("canny_hi", edges.canny_hi),
        BOOL_FIELD("seams", seams),
        DOUBLE_FIELD("overlap", overlap),
        INT_FIELD("seam_rounds", seam_rounds),
        ENUM_FIELD("continuity", continuity, kContinuity),
        INT_FIELD("kerf_px", kerf_px),
        INT_FIELD("ablate_max_runs", ablate_max_runs),
        INT_FIELD("threads", threads),
    };
    return f;
}

const std::map<std::string, std::string>& comments() {
    static const std::map<std::string, std::string> c = {
        {"w_intens", "feature weights, each in [0,1]"},
        {"w_hist", "blend between raw and gamut-mapped target intensity"},
        {"s_image", "target size in mm along its shorter axis"},
        {"s_patch", "patch edge in mm (>= 5)"},
        {"n_adaptive", "quad-split levels and acceptance ratio"},
        {"n_rot", "rotated variants per source panel over rot_span degrees"},
        {"queue", "saliency | center"},
        {"match_method", "auto | direct | fft"},
        {"segment", "regular | labels | morph"},
        {"morph_m", "grid morphing: stiffness, damping, edge weight, step, tolerance"},
        {"rg_sigma_space", "edge detection on the smoothed targets"},
        {"seams", "seam refinement on regular grids; overlap as a fraction of the spacing"},
        {"continuity", "cut curve continuity: g0 | g1"},
        {"kerf_px", "material reserved around every consumed piece"},
        {"threads", "0 uses every core"},
    };
    return c;
}

}  // namespace

int Config::patch_px() const { return static_cast<int>(std::lround(mm_to_px(s_patch, dpi))); }

void Config::validate() const {
    auto unit = [](const char* k, double v) {
        if (!(v >= 0 && v <= 1)) throw ConfigError(std::string(k) + " must lie in [0,1]");
    };
    unit("w_intens", w_intens);
    unit("w_edge", w_edge);
    unit("w_hist", w_hist);
    if (s_patch < 5) throw ConfigError("s_patch must be at least 5 mm");
    if (s_image <= 0) throw ConfigError("s_image must be positive");
    if (!(w_adaptive > 0)) throw ConfigError("w_adaptive must be positive");
    if (n_adaptive < 0) throw ConfigError("n_adaptive must be non-negative");
    if (n_rot < 1) throw ConfigError("n_rot must be at least 1");
    if (!(rot_span > 0 && rot_span <= 360)) throw ConfigError("rot_span must lie in (0,360]");
    if (!(dpi > 0)) throw ConfigError("dpi must be positive");
    if (kerf_px < 0) throw ConfigError("kerf_px must be non-negative");
    if (!(overlap >= 0 && overlap < 1)) throw ConfigError("overlap must lie in [0,1)");
    if (seam_rounds < 1) throw ConfigError("seam_rounds must be at least 1");
    if (morph.m < 0 || morph.gamma < 0 || morph.w < 0) throw ConfigError("morph_m, morph_gamma, morph_w must be non-negative");
    if (!(morph.dt > 0) || !(morph.tol > 0)) throw ConfigError("morph_dt and morph_tol must be positive");
    if (morph.max_steps < 0) throw ConfigError("morph_max_steps must be non-negative");
    if (!(edges.canny_lo >= 0 && edges.canny_lo <= edges.canny_hi && edges.canny_hi <= 1))
        throw ConfigError("need 0 <= canny_lo <= canny_hi <= 1");
    if (edges.rg_iterations < 1) throw ConfigError("rg_iterations must be at least 1");
    if (ablate_max_runs < 2) throw ConfigError("ablate_max_runs must be at least 2");
    if (threads < 0) throw ConfigError("threads must be non-negative");
}

void set_config_value(Config& c, const std::string& key, const std::string& value) {
    for (const auto& f : fields())
        if (f.key == key) {
            f.set(c, value);
            return;
        }
    throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> config_entries(const Config& c) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : fields()) out.emplace_back(f.key, f.get(c));
    return out;
}

Config parse_config(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(n) + ": expected key = value");
        set_config_value(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    c.validate();
    return c;
}

std::string emit_config(const Config& c) {
    std::string out = "# parquetry project configuration\n";
    for (const auto& [k, v] : config_entries(c)) {
        if (const auto it = comments().find(k); it != comments().end()) out += "\n# " + it->second + "\n";
        out += k + " = " + v + "\n";
    }
    return out;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string() + " (run `init` to create one)");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void save_config(const Config& c, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream(path) << emit_config(c);
}

}  // namespace parquetry
