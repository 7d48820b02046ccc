#pragma once

#include <array>
#include <vector>

#include "parquetry/ingest.hpp"
#include "parquetry/raster.hpp"

namespace parquetry {

struct FeatureWeights {
    double intensity = 0.5;
    double edge = 0.5;
};

// Two-channel filter response with the weights already multiplied in, so
// squared differences need no further weighting.
struct FeatureMap {
    int width = 0, height = 0;
    ScalarField intensity;
    ScalarField edge;
    FeatureWeights weights;
};

// Intensity response of `img` weighted by w.intensity, Sobel response of its
// grayscale weighted by w.edge.
FeatureMap compute_feature_map(const Image& img, FeatureWeights w);
// Same, with a precomputed (possibly remapped) intensity channel; the edge
// channel still comes from the image itself.
FeatureMap compute_feature_map(const Image& img, const ScalarField& intensity, FeatureWeights w);

// Histogram specification from target intensities to the pooled intensities
// of every usable source pixel.
struct GamutMap {
    std::array<double, 256> lut{};  // indexed by target intensity * 255
    double w_hist = 0.5;

    double operator()(double v) const;  // linear interpolation between entries
};

GamutMap build_gamut_map(const Image& target, const SourcePool& pool, double w_hist = 0.5);
// Same construction from raw samples; used when the pool is not at hand.
GamutMap build_gamut_map(std::vector<double> target_values, std::vector<double> source_values, double w_hist = 0.5);

// (1 - w_hist) * v + w_hist * lut(v), per pixel.
ScalarField apply_gamut(const ScalarField& target_intensity, const GamutMap& map);

// Multi-scale centre-surround contrast: sum over s in {1,2,4,8} of
// |gray - box(gray, 2s+1)|, scaled to [0,1].
ScalarField saliency_map(const Image& target);

// Feature maps of every rotated variant, [source][rotation].
using SourceFeatures = std::vector<std::vector<FeatureMap>>;
SourceFeatures compute_source_features(const SourcePool& pool, FeatureWeights w);

// Target feature map with gamut-mapped intensity.
FeatureMap target_features(const Image& target, const GamutMap& map, FeatureWeights w);

}  // namespace parquetry
