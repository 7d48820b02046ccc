#include "parquetry/features.hpp"

#include <algorithm>
#include <cmath>

#include "parquetry/error.hpp"

namespace parquetry {

FeatureMap compute_feature_map(const Image& img, const ScalarField& intensity, FeatureWeights w) {
    const Image gray = to_grayscale(img);
    if (intensity.width != gray.width || intensity.height != gray.height)
        throw InputError("intensity channel size does not match image");
    FeatureMap fm;
    fm.width = gray.width;
    fm.height = gray.height;
    fm.weights = w;
    fm.intensity = ScalarField(fm.width, fm.height);
    for (size_t i = 0; i < fm.intensity.values.size(); ++i) fm.intensity.values[i] = w.intensity * intensity.values[i];
    fm.edge = sobel_magnitude(gray);
    for (double& v : fm.edge.values) v *= w.edge;
    return fm;
}

FeatureMap compute_feature_map(const Image& img, FeatureWeights w) {
    return compute_feature_map(img, to_field(to_grayscale(img)), w);
}

double GamutMap::operator()(double v) const {
    const double p = std::clamp(v, 0.0, 1.0) * 255.0;
    const int i = std::min(static_cast<int>(p), 254);
    const double t = p - i;
    return lut[i] + (lut[i + 1] - lut[i]) * t;
}

GamutMap build_gamut_map(std::vector<double> target_values, std::vector<double> source_values, double w_hist) {
    if (source_values.empty()) throw InputError("gamut map needs at least one usable source pixel");
    if (target_values.empty()) throw InputError("gamut map needs a non-empty target");
    std::sort(target_values.begin(), target_values.end());
    std::sort(source_values.begin(), source_values.end());
    const double nt = static_cast<double>(target_values.size());
    const double ns = static_cast<double>(source_values.size());

    GamutMap g;
    g.w_hist = w_hist;
    for (int i = 0; i < 256; ++i) {
        const double v = i / 255.0;
        // mid-rank CDF so that a level shared by many pixels lands in the
        // middle of its source quantile range
        const auto lo = std::lower_bound(target_values.begin(), target_values.end(), v - 1e-12);
        const auto hi = std::upper_bound(target_values.begin(), target_values.end(), v + 1e-12);
        const double q = (static_cast<double>(lo - target_values.begin()) + 0.5 * static_cast<double>(hi - lo)) / nt;
        const double pos = std::clamp(q * ns - 0.5, 0.0, ns - 1.0);
        const size_t k = static_cast<size_t>(pos);
        const double t = pos - static_cast<double>(k);
        const double a = source_values[k];
        const double b = source_values[std::min(k + 1, source_values.size() - 1)];
        g.lut[i] = a + (b - a) * t;
    }
    return g;
}

GamutMap build_gamut_map(const Image& target, const SourcePool& pool, double w_hist) {
    const Image tg = to_grayscale(target);
    std::vector<double> tv(tg.data.begin(), tg.data.end());
    std::vector<double> sv;
    for (const auto& src : pool.sources) {
        const Image g = to_grayscale(src.base);
        for (int y = 0; y < g.height; ++y)
            for (int x = 0; x < g.width; ++x)
                if (src.usable.get(x, y)) sv.push_back(g.at(x, y));
    }
    if (sv.empty()) throw InputError("source pool has no usable pixels");
    return build_gamut_map(std::move(tv), std::move(sv), w_hist);
}

ScalarField apply_gamut(const ScalarField& v, const GamutMap& map) {
    if (map.w_hist == 0.0) return v;
    ScalarField out(v.width, v.height);
    const double w = map.w_hist;
    for (size_t i = 0; i < v.values.size(); ++i) out.values[i] = (1.0 - w) * v.values[i] + w * map(v.values[i]);
    return out;
}

ScalarField saliency_map(const Image& target) {
    const ScalarField g = to_field(to_grayscale(target));
    ScalarField sal(g.width, g.height, 0.0);
    for (int s : {1, 2, 4, 8}) {
        const ScalarField b = box_blur(g, 2 * s + 1);
        for (size_t i = 0; i < sal.values.size(); ++i) sal.values[i] += std::abs(g.values[i] - b.values[i]);
    }
    const double m = sal.max_value();
    if (m > 1e-9)  // box-filter round-off on flat input
        for (double& v : sal.values) v /= m;
    else
        std::fill(sal.values.begin(), sal.values.end(), 0.0);
    return sal;
}

SourceFeatures compute_source_features(const SourcePool& pool, FeatureWeights w) {
    SourceFeatures out(pool.sources.size());
    for (size_t i = 0; i < pool.sources.size(); ++i)
        for (const auto& var : pool.sources[i].rotations) out[i].push_back(compute_feature_map(var.image, w));
    return out;
}

FeatureMap target_features(const Image& target, const GamutMap& map, FeatureWeights w) {
    return compute_feature_map(target, apply_gamut(to_field(to_grayscale(target)), map), w);
}

}  // namespace parquetry
