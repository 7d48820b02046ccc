#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "parquetry/features.hpp"
#include "parquetry/ingest.hpp"
#include "parquetry/segment.hpp"

namespace parquetry {

struct ChannelCost {
    double total = 0;
    double intensity = 0;
    double edge = 0;
};

// Sum of squared feature differences over the shape's pixels. The shape sits
// at `origin` in the target and at (ox, oy) in the variant. Pixels are
// visited run by run, left to right.
ChannelCost score_placement(const Shape& shape, int origin_x, int origin_y, const FeatureMap& target,
                            const FeatureMap& variant, int ox, int oy);
ChannelCost score_placement(const PatchRegion& patch, const FeatureMap& target, const FeatureMap& variant, int ox,
                            int oy);

struct PatchAssignment {
    int patch_id = -1;
    int target_id = 0;
    std::string source_id;
    int source_index = 0;
    int rotation_index = 0;
    double rotation_degrees = 0;
    int x = 0, y = 0;  // shape box origin in the rotated variant
    int target_x = 0, target_y = 0;  // the same origin in the target
    ChannelCost cost;
    int depth = 0;

    Placement placement() const { return {source_index, rotation_index, x, y}; }
};

enum class MatchMethod { Auto, Direct, Fft };

// Dense search over every source, rotation and fully available offset. The
// FFT path only nominates candidates; winners are always rescored exactly,
// so both methods return identical assignments.
class Matcher {
public:
    Matcher(const SourcePool& pool, const SourceFeatures& features, MatchMethod method = MatchMethod::Auto);
    ~Matcher();

    // Throws ResourceExhausted when no placement is available anywhere.
    PatchAssignment match(const PatchRegion& patch, const FeatureMap& target) const;

private:
    struct Spectra;
    const Spectra& spectra(int source, int rotation) const;

    const SourcePool& pool_;
    const SourceFeatures& features_;
    MatchMethod method_;
    mutable std::map<std::pair<int, int>, std::unique_ptr<Spectra>> cache_;
};

PatchAssignment match_patch(const PatchRegion& patch, const FeatureMap& target, const SourcePool& pool,
                            const SourceFeatures& features, MatchMethod method = MatchMethod::Auto);

enum class QueuePolicy { SaliencyDesc, CenterDistanceAsc };

struct QueueEntry {
    int target_id = 0;
    int region_index = 0;
    int patch_id = 0;
    double key = 0;
};

struct MatchQueue {
    QueuePolicy policy = QueuePolicy::SaliencyDesc;
    std::vector<QueueEntry> order;  // pop order
};

// All regions of all segmentations in one queue. `saliency` holds one field
// per segmentation and may be empty under the center policy. Ties keep patch
// id order, then target order.
MatchQueue build_queue(const std::vector<Segmentation>& segs, const std::vector<ScalarField>& saliency,
                       QueuePolicy policy);

struct MatchParams {
    QueuePolicy policy = QueuePolicy::SaliencyDesc;
    bool interleave = true;  // one shared queue; otherwise targets run one after another
    int n_adaptive = 0;
    double w_adaptive = 1.2;
    Fabricability fab;
    MatchMethod method = MatchMethod::Auto;
};

struct ExhaustionRecord {
    int target_id = 0;
    int patch_id = -1;
};

struct ReconstructionResult {
    std::vector<Segmentation> segmentations;   // after adaptive splits
    std::vector<PatchAssignment> assignments;  // consumption order
    std::vector<ExhaustionRecord> exhausted;
    std::vector<std::pair<std::string, double>> availability;  // per source, after the run

    double total_cost() const;
    double mean_cost() const;
    bool any_exhausted() const { return !exhausted.empty(); }
    const PatchAssignment* find(int target_id, int patch_id) const;
};

// Greedy reconstruction in queue order, consuming the pool as it goes. Split
// candidates are matched best-first on a checkpointed pool that is rolled
// back before the decision is applied.
ReconstructionResult reconstruct(const std::vector<FeatureMap>& targets, const std::vector<Segmentation>& segs,
                                 const std::vector<ScalarField>& saliency, SourcePool& pool,
                                 const SourceFeatures& features, const MatchParams& params);

}  // namespace parquetry
