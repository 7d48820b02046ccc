#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "parquetry/config.hpp"
#include "parquetry/export.hpp"
#include "parquetry/match.hpp"

namespace parquetry {

// Project directory layout:
//   config.txt
//   targets/*.png               target images
//   sources/<id>/image.png      veneer scans (+ optional mask.png)
//   masks/[<target>/]m_rg.png, m_bilateral.png   morph selectors
//   labels/<target>.png         custom segmentation
//   work/                       stage artifacts, stamps, pool state
//   output/                     preview.png, plan_<panel>.svg, plan.json, report.*
struct ProjectPaths {
    std::filesystem::path root;

    std::filesystem::path config() const { return root / "config.txt"; }
    std::filesystem::path work() const { return root / "work"; }
    std::filesystem::path output() const { return root / "output"; }
    std::filesystem::path pool_state() const { return work() / "pool" / "pool.json"; }
};

// Exit status of a stage run.
enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kExhausted = 3, kFabricability = 4 };

class Pipeline {
public:
    Pipeline(std::filesystem::path project, Config config);

    const Config& config() const { return cfg_; }
    const ProjectPaths& paths() const { return paths_; }

    // Progress lines go here; defaults to stdout.
    std::function<void(const std::string&)> log;
    // Re-run stages whose stamps are current.
    bool force = false;

    void ingest();
    void features();
    void morph();
    void segment();
    // Consumes the persisted pool unless reset_pool. Returns kExhausted when
    // any patch found no material; the partial result is still written.
    int match(bool reset_pool = false);
    void seams();
    // Throws FabricabilityError when an outline leaves its panel.
    void export_plan();
    void render();
    int ablate();
    // ingest .. export with a fresh pool.
    int all();

    std::vector<std::string> target_ids() const;
    Image load_target(int k) const;

private:
    bool fresh(const std::string& stage, const std::vector<std::filesystem::path>& inputs,
               const std::vector<std::string>& keys, const std::vector<std::filesystem::path>& outputs) const;
    void stamp(const std::string& stage, const std::vector<std::filesystem::path>& inputs,
               const std::vector<std::string>& keys) const;
    void require(const std::filesystem::path& artifact, const std::string& stage) const;
    SourcePool load_pool(bool with_state) const;
    int seam_overlap(const Segmentation& seg) const;
    std::vector<LabelMap> ownership_maps() const;

    ProjectPaths paths_;
    Config cfg_;
};

// Deterministic 64-bit FNV-1a over bytes, used for stage stamps.
std::uint64_t fnv1a(const void* data, size_t n, std::uint64_t seed = 1469598103934665603ull);

}  // namespace parquetry
