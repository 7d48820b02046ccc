#pragma once

#include <optional>
#include <string>
#include <vector>

#include "parquetry/geometry.hpp"
#include "parquetry/raster.hpp"

namespace parquetry {

struct Rect {
    int x = 0, y = 0, w = 0, h = 0;

    int x1() const { return x + w; }
    int y1() const { return y + h; }
    long area() const { return static_cast<long>(w) * h; }
    bool contains(int px, int py) const { return px >= x && py >= y && px < x1() && py < y1(); }
    bool operator==(const Rect&) const = default;
};

// One horizontal run of pixels [x0, x1) on row y.
struct PixelRun {
    int y = 0, x0 = 0, x1 = 0;
    bool operator==(const PixelRun&) const = default;
};

// A pixel set stored as row runs relative to its own origin.
struct Shape {
    int width = 0, height = 0;
    std::vector<PixelRun> runs;

    static Shape rectangle(int w, int h);
    long area() const;
    bool is_rectangle() const;
    BinaryMask to_mask() const;
    static Shape from_mask(const BinaryMask& m);
    bool operator==(const Shape&) const = default;
};

// Physical producibility limits in pixels at a given resolution.
struct Fabricability {
    double min_edge_px = 59;
    double min_area_px = 59.0 * 59.0 / 2.0;

    // 5 mm minimum edge.
    static Fabricability at_dpi(double dpi);
    // Area at least min_area and a 1-px erosion leaves something behind.
    bool admits(const Shape& s) const;
};

double mm_to_px(double mm, double dpi);
double px_to_mm(double px, double dpi);

struct PatchRegion {
    int id = 0;
    Rect bbox;
    Shape shape;            // relative to bbox origin
    Polyline outline;       // closed, target pixel-lattice coordinates
    int depth = 0;
    double priority_key = 0;
    int target_id = 0;
    std::string label;      // engraving label, e.g. R2C3 or P17
    int row = -1, col = -1; // grid cell, when the region came from a grid

    long area() const { return shape.area(); }
};

enum class SegmentationKind { Regular, Morphed, Custom };

struct GridMeta {
    int rows = 0, cols = 0;
    int spacing = 0;
    std::vector<int> xs;  // cols+1 column boundaries
    std::vector<int> ys;  // rows+1 row boundaries
};

struct Segmentation {
    int width = 0, height = 0;
    std::vector<PatchRegion> regions;
    std::optional<GridMeta> grid;
    SegmentationKind kind = SegmentationKind::Regular;

    LabelMap label_map() const;  // region index per pixel
};

// Grid lines at multiples of patch_px; a trailing strip of at most half a
// patch is merged into its inner neighbor.
std::vector<int> grid_lines(int extent, int patch_px);

Segmentation regular_grid(int width, int height, int patch_px, const Fabricability& fab);
// Connected components of each label become regions; enclosed holes join the
// surrounding region. Throws FabricabilityError listing offending labels.
Segmentation from_label_map(const LabelMap& labels, const Fabricability& fab,
                            SegmentationKind kind = SegmentationKind::Custom);
// Reads a label PNG (8/16-bit gray or RGB) into integer labels.
LabelMap load_label_map(const std::filesystem::path& path);

bool quad_splittable(const PatchRegion& r, const Fabricability& fab);
// Splits a rectangular region into quadrants (TL, TR, BL, BR) with ids
// first_id..first_id+3. Throws InputError when the region cannot be split.
std::vector<PatchRegion> quad_split(const PatchRegion& r, int first_id, const Fabricability& fab);

// Builds a region from absolute-coordinate runs.
PatchRegion make_region(int id, const std::vector<PixelRun>& absolute_runs);

}  // namespace parquetry
