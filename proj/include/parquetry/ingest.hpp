#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "parquetry/geometry.hpp"
#include "parquetry/raster.hpp"
#include "parquetry/segment.hpp"

namespace parquetry {

// Rigid rotation of a panel about its center onto a fresh canvas that holds
// the whole rotated panel. Pixel (i, j) covers [i, i+1) x [j, j+1).
struct Rotation {
    double degrees = 0;
    double cos_t = 1, sin_t = 0;
    int base_width = 0, base_height = 0;
    int width = 0, height = 0;  // rotated canvas

    static Rotation make(double degrees, int base_width, int base_height);
    Vec2 to_base(Vec2 v) const;
    Vec2 to_variant(Vec2 b) const;
    // Half extent of the axis-aligned box around a rotated unit square.
    double half_extent() const { return (std::abs(cos_t) + std::abs(sin_t)) / 2.0; }
};

struct Variant {
    Rotation rotation;
    Image image;
    BinaryMask available;
};

struct SourceTexture {
    std::string id;
    Image base;
    BinaryMask usable;     // as scanned; never changes
    BinaryMask available;  // usable minus consumed material
    std::vector<Variant> rotations;
    std::filesystem::path provenance;
    long initial_usable = 0;
};

struct ConsumedRegion {
    std::string source_id;
    int rotation_index = 0;
    int offset_x = 0, offset_y = 0;
    int patch_id = -1;
    std::vector<Loop> loops;  // base-panel pixel lattice, kerf included
    long area = 0;
};

struct Placement {
    int source = 0;    // index into SourcePool::sources
    int rotation = 0;  // index into SourceTexture::rotations
    int x = 0, y = 0;  // top-left of the shape's box in the rotated canvas
    bool operator==(const Placement&) const = default;
};

struct IngestOptions {
    int n_rot = 15;
    double span_degrees = 360.0;
    double dpi = 300.0;
};

struct SourcePool {
    std::vector<SourceTexture> sources;  // sorted by id
    std::vector<ConsumedRegion> consumed;
    int kerf_px = 1;

    int index_of(const std::string& id) const;  // -1 when unknown
};

std::vector<double> rotation_angles(int n_rot, double span_degrees);

// Builds the rotated variant pool. A missing mask means the whole panel is
// usable. Throws InputError on size mismatch or n_rot < 1.
SourceTexture make_source(std::string id, Image base, std::optional<BinaryMask> mask, const IngestOptions& opt);
SourceTexture load_source(const std::filesystem::path& image_path,
                          const std::optional<std::filesystem::path>& mask_path, const IngestOptions& opt,
                          std::string id = {});

// Recomputes every variant availability mask inside the given base-space box
// (the whole panel when omitted).
void refresh_variant_masks(SourceTexture& src, std::optional<Rect> base_box = std::nullopt);

// True when every shape pixel lands on an available variant pixel.
bool placement_available(const SourcePool& pool, const Placement& p, const Shape& shape);

// Base-panel pixels whose squares meet the placed shape (before kerf).
BinaryMask footprint_in_base(const SourceTexture& src, const Placement& p, const Shape& shape, Rect& box);

// Marks the footprint plus kerf unavailable in the base mask and all
// variants and records the consumed region. Throws ResourceCollision if any
// footprint pixel is already unavailable.
void consume(SourcePool& pool, const Placement& p, const Shape& shape, int patch_id);

double availability_fraction(const SourcePool& pool, const std::string& source_id);

// Discovers sources/<id>/image.png (+ optional mask.png) under a project.
SourcePool load_project_sources(const std::filesystem::path& project_dir, const IngestOptions& opt, int kerf_px);

// Pool state: JSON record of consumed regions plus one availability PNG per
// source next to it.
void save_pool_state(const SourcePool& pool, const std::filesystem::path& json_path);
void load_pool_state(SourcePool& pool, const std::filesystem::path& json_path);

}  // namespace parquetry
