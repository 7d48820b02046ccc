#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "parquetry/features.hpp"
#include "parquetry/geometry.hpp"
#include "parquetry/match.hpp"
#include "parquetry/morph.hpp"

namespace parquetry {

enum class SegmentMode { Regular, Labels, Morph };

struct Config {
    double w_intens = 0.5;
    double w_edge = 0.5;
    double w_hist = 0.5;
    double s_image = 360.0;  // mm along the shorter target axis
    double s_patch = 14.0;   // mm
    int n_adaptive = 0;
    double w_adaptive = 1.2;
    int n_rot = 15;
    double rot_span = 360.0;
    double dpi = 300.0;
    QueuePolicy queue = QueuePolicy::SaliencyDesc;
    bool interleave = true;
    MatchMethod match_method = MatchMethod::Auto;
    SegmentMode segment = SegmentMode::Regular;
    MorphParams morph;
    EdgeParams edges;
    bool seams = true;
    double overlap = 0.25;  // fraction of the grid spacing
    int seam_rounds = 2;
    Continuity continuity = Continuity::G1;
    int kerf_px = 1;
    int ablate_max_runs = 64;
    int threads = 0;  // 0: library default

    FeatureWeights weights() const { return {w_intens, w_edge}; }
    int patch_px() const;
    // Throws ConfigError on any violated range.
    void validate() const;

    bool operator==(const Config&) const = default;
};

// Assigns one `key = value` pair; throws ConfigError on unknown keys or bad values.
void set_config_value(Config& c, const std::string& key, const std::string& value);
// All keys with their current values, in file order.
std::vector<std::pair<std::string, std::string>> config_entries(const Config& c);

// Text format: one `key = value` per line, `#` starts a comment.
Config parse_config(const std::string& text);
std::string emit_config(const Config& c);
Config load_config(const std::filesystem::path& path);
void save_config(const Config& c, const std::filesystem::path& path);

}  // namespace parquetry
