#pragma once

#include <filesystem>

#include "parquetry/config.hpp"
#include "parquetry/raster.hpp"

namespace parquetry {

// Small synthetic project: one target and a few procedurally grained panels,
// at a resolution where a 5 mm patch is 10 px.
struct DemoOptions {
    int target_size = 64;
    int panel_size = 96;
    int panels = 2;
    unsigned seed = 7;
};

Config demo_config(const DemoOptions& opt = {});
Image demo_target(int size);
// Grain direction and tone vary with `index`; every pixel is deterministic.
Image demo_panel(int width, int height, int index, unsigned seed);
// A round knot hole near the panel centre is marked unusable on odd panels.
BinaryMask demo_panel_mask(int width, int height, int index);
void write_demo_project(const std::filesystem::path& dir, const DemoOptions& opt = {});

}  // namespace parquetry
