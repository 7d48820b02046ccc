#pragma once

#include <vector>

#include "parquetry/features.hpp"
#include "parquetry/geometry.hpp"
#include "parquetry/match.hpp"
#include "parquetry/segment.hpp"

namespace parquetry {

// One cut coordinate per row (or column). Value x means the first x cells of
// that row go to the first participant.
struct SeamPath {
    std::vector<int> cut;
    double cost = 0;
};

// cost[i][x] for i over rows and x in [0, n]. Minimizes the row-ordered sum
// over paths with |cut[i+1] - cut[i]| <= 1; among equal sums the
// lexicographically smallest path wins.
SeamPath optimal_seam(const std::vector<std::vector<double>>& cost);
// Row-ordered sum of a path's costs.
double path_cost(const std::vector<std::vector<double>>& cost, const std::vector<int>& cut);

enum class OverlapKind {
    HorizontalPair,  // left | right neighbors, the seam runs down the rows
    VerticalPair,    // top / bottom neighbors, the seam runs along the columns
    CornerQuad       // TL, TR, BL, BR
};

struct OverlapRegion {
    OverlapKind kind = OverlapKind::HorizontalPair;
    Rect extent;                     // target pixels
    std::vector<int> patches;        // patch ids in participant order
    std::vector<ScalarField> error;  // per participant, squared feature error over the extent
    // Cuts leave at least this many cells to every participant in each line,
    // keeping smoothed cut curves off the edges of the placed material.
    int margin = 0;
};

// Cost of cut x in row y: left part summed left to right, then right part
// summed left to right.
std::vector<std::vector<double>> pair_cost_table(const OverlapRegion& ov);
SeamPath pairwise_seam(const OverlapRegion& ov);

struct CornerSeams {
    SeamPath vertical;    // per row: cells left of the cut belong to TL/BL
    SeamPath horizontal;  // per column: cells above the cut belong to TL/TR
    std::vector<double> history;  // quad cost at the start and after every half-step
};

// Ownership inside a corner quad, as participant index 0..3.
int corner_owner(const CornerSeams& s, int x, int y);
double corner_cost(const OverlapRegion& ov, const std::vector<int>& vcut, const std::vector<int>& hcut);
// Alternating optimization from straight cuts at n/2 (or the given start).
CornerSeams corner_seams(const OverlapRegion& ov, int n_rounds = 2, int start = -1);

// Expands every grid cell by the overlap on its interior sides: floor(n/2)
// before a shared boundary, the rest after it.
Segmentation expand_for_overlap(const Segmentation& grid, int overlap_px);
int overlap_pixels(const Segmentation& grid, double fraction);

// Target-space squared feature error of a placed patch, over `box`.
ScalarField placement_error(const PatchAssignment& a, const FeatureMap& target, const SourceFeatures& features,
                            const Rect& box);

// Per-pixel owner patch id (-1 where nothing was assigned).
LabelMap straight_ownership(const Segmentation& seg, const ReconstructionResult& result, int target_id = 0);

struct SeamResult {
    LabelMap ownership;
    std::vector<OverlapRegion> overlaps;
    std::vector<SeamPath> pair_seams;      // one per pair overlap, same order
    std::vector<CornerSeams> corner_seams; // one per corner overlap, same order
    double cost_before = 0;
    double cost_after = 0;
};

// Requires a regular grid without adaptive splits; the result must have been
// matched on expand_for_overlap(seg, overlap_px). Throws ConfigError otherwise.
SeamResult refine_seams(const Segmentation& seg, const ReconstructionResult& result, const FeatureMap& target,
                        const SourceFeatures& features, int overlap_px, int n_rounds = 2, int target_id = 0);

// Sum over owned pixels of the squared feature difference between the
// composited source features and the target, in raster order.
double reproduction_cost(const LabelMap& ownership, const ReconstructionResult& result, const FeatureMap& target,
                         const SourceFeatures& features, int target_id = 0);

// Boundary network of an ownership map with one fitted curve per chain, so
// neighboring pieces share identical geometry.
struct CutNetwork {
    int width = 0, height = 0;
    std::vector<BoundaryChain> chains;
    std::vector<CutCurve> curves;  // parallel to chains
};

CutNetwork fit_cut_curves(const LabelMap& ownership, const CurveFitOptions& opt = {});

// Closed outlines of one label, built from the shared curves.
std::vector<CutCurve> piece_outline(const CutNetwork& net, int label);

}  // namespace parquetry
