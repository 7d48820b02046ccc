#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "parquetry/match.hpp"
#include "parquetry/seams.hpp"

namespace parquetry {

struct Preview {
    Image image;
    long unassigned = 0;  // pixels filled with mid-gray
};

// Copies every owned target pixel from its placement in the rotated variant.
Preview render_preview(const ReconstructionResult& result, const LabelMap& ownership, const SourcePool& pool,
                       int target_id = 0);

// Target pixel coordinates to unrotated panel pixels and back.
Vec2 target_to_panel(const PatchAssignment& a, const SourcePool& pool, Vec2 p);
Vec2 panel_to_target(const PatchAssignment& a, const SourcePool& pool, Vec2 q);
// Horizontal flip about the panel's vertical centre line (back-side cutting).
Vec2 mirror(Vec2 q, double panel_width);

struct CutPiece {
    int patch_id = -1;
    int target_id = 0;
    std::string label;
    std::string source_id;
    std::vector<CutCurve> loops;  // mm, mirrored panel coordinates
    Vec2 label_anchor;            // mm, mirrored panel coordinates
    double label_size = 0;        // mm font size
    Vec2 target_origin;           // px, where the patch box sits in the target
    double rotation_degrees = 0;
};

struct CutPlan {
    double dpi = 300;
    double kerf_mm = 0;
    std::vector<CutPiece> pieces;
    std::vector<std::string> panels;       // ids with at least one piece, sorted
    std::vector<Vec2> panel_size_mm;       // parallel to panels
};

struct CutPlanOptions {
    CurveFitOptions curves;
    double containment_eps = 1e-6;  // px
};

// One piece per assignment, outlined by the shared ownership curves. Throws
// FabricabilityError listing patch ids whose outline leaves the usable mask.
CutPlan emit_cut_plan(const ReconstructionResult& result, const LabelMap& ownership, const SourcePool& pool,
                      const CutPlanOptions& opt = {}, int target_id = 0);

std::string svg_path_data(const std::vector<CutCurve>& loops);
// SVG document for one panel: groups `cut` and `engrave`, millimetre units.
std::string panel_svg(const CutPlan& plan, const std::string& panel_id);
// Writes plan_<panel>.svg for every panel and returns the written paths.
std::vector<std::filesystem::path> write_cut_plan(const CutPlan& plan, const std::filesystem::path& dir);

struct RunStats {
    int run = 0;
    int assigned = 0;
    int exhausted = 0;
    double mean_cost = 0;
    double median_cost = 0;
    double p90_cost = 0;
    double total_cost = 0;
    std::vector<std::pair<std::string, double>> availability;
};

RunStats run_stats(const ReconstructionResult& r, int run);
std::vector<RunStats> ablation_report(const std::vector<ReconstructionResult>& runs);
// Rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);
void write_report_csv(const std::vector<RunStats>& stats, const std::filesystem::path& path);
void write_report_plot(const std::vector<RunStats>& stats, const std::filesystem::path& path);

}  // namespace parquetry
