#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "parquetry/error.hpp"
#include "parquetry/features.hpp"
#include "support.hpp"

using namespace parquetry;
using testing_support::random_gray;
using testing_support::vertical_step;

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    return d;
}

// Saliency computed straight from its definition, unnormalized.
std::vector<double> raw_saliency(const Image& gray) {
    const int w = gray.width, h = gray.height;
    std::vector<double> out(size_t(w) * h, 0.0);
    for (int s : {1, 2, 4, 8})
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double sum = 0;
                for (int dy = -s; dy <= s; ++dy)
                    for (int dx = -s; dx <= s; ++dx)
                        sum += gray.at(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1));
                const double mean = sum / ((2 * s + 1) * (2 * s + 1));
                out[size_t(y) * w + x] += std::abs(gray.at(x, y) - mean);
            }
    return out;
}

}  // namespace

TEST(FeatureMap, ConstantImage) {
    const FeatureMap fm = compute_feature_map(Image(8, 8, 1, 0.4f), {1.0, 1.0});
    for (double v : fm.intensity.values) EXPECT_NEAR(v, 0.4, 1e-7);
    for (double v : fm.edge.values) EXPECT_EQ(v, 0.0);
}

TEST(FeatureMap, ZeroIntensityWeight) {
    std::mt19937 rng(1);
    const FeatureMap fm = compute_feature_map(random_gray(9, 9, rng), {0.0, 1.0});
    for (double v : fm.intensity.values) EXPECT_EQ(v, 0.0);
}

TEST(FeatureMap, HalfWeightedStep) {
    const FeatureMap fm = compute_feature_map(vertical_step(10, 5, 5), {0.5, 0.5});
    for (int y = 0; y < 5; ++y) {
        EXPECT_NEAR(fm.edge.at(4, y), 0.5 * 0.7071067811865476, 1e-12);
        EXPECT_NEAR(fm.edge.at(5, y), 0.3536, 1e-4);
    }
}

TEST(FeatureMap, LinearInEachWeight) {
    std::mt19937 rng(2);
    const Image img = random_gray(12, 10, rng);
    const FeatureMap a = compute_feature_map(img, {0.25, 0.25});
    const FeatureMap b = compute_feature_map(img, {0.5, 0.5});
    for (size_t i = 0; i < a.edge.values.size(); ++i) {
        EXPECT_EQ(b.edge.values[i], 2.0 * a.edge.values[i]);
        EXPECT_EQ(b.intensity.values[i], 2.0 * a.intensity.values[i]);
    }
}

TEST(Gamut, IdenticalHistogramIsIdentity) {
    std::vector<double> v;
    for (int i = 0; i < 256; ++i)
        for (int k = 0; k < 40; ++k) v.push_back(i / 255.0);
    const GamutMap g = build_gamut_map(v, v, 1.0);
    for (int i = 0; i < 256; ++i) EXPECT_LE(std::abs(g.lut[i] - i / 255.0), 1.0 / 256);
}

TEST(Gamut, ConstantSourceCollapses) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> t(1000);
    for (auto& x : t) x = u(rng);
    const GamutMap g = build_gamut_map(t, std::vector<double>(500, 0.5), 1.0);
    for (double v : g.lut) EXPECT_DOUBLE_EQ(v, 0.5);
    ScalarField f(10, 10);
    for (size_t i = 0; i < f.values.size(); ++i) f.values[i] = u(rng);
    for (double v : apply_gamut(f, g).values) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Gamut, UniformToNarrowUniform) {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> ut(0, 1), us(0.25, 0.75);
    std::vector<double> t(100000), s(100000);
    for (auto& x : t) x = ut(rng);
    for (auto& x : s) x = us(rng);
    const GamutMap g = build_gamut_map(t, s, 1.0);
    for (int i = 0; i < 256; ++i) EXPECT_LE(std::abs(g.lut[i] - (0.25 + 0.5 * i / 255.0)), 2.0 / 256) << i;
}

TEST(Gamut, BlendEndpointsAndArithmetic) {
    std::mt19937 rng(5);
    ScalarField f(16, 16);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& v : f.values) v = u(rng);
    GamutMap g;
    for (int i = 0; i < 256; ++i) g.lut[i] = 1.0 - i / 255.0;
    g.w_hist = 0.0;
    EXPECT_EQ(apply_gamut(f, g).values, f.values);

    GamutMap lift;
    lift.w_hist = 0.5;
    for (int i = 0; i < 256; ++i) lift.lut[i] = i / 255.0 + 0.4;
    ScalarField p(1, 1, 51.0 / 255.0);
    EXPECT_NEAR(apply_gamut(p, lift).at(0, 0), 0.5 * 0.2 + 0.5 * 0.6, 1e-12);
}

TEST(Gamut, MonotoneBlend) {
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> t(3000), s(2000);
    for (auto& x : t) x = u(rng) * u(rng);
    for (auto& x : s) x = 0.3 + 0.4 * u(rng);
    for (double w : {0.0, 0.3, 0.5, 1.0}) {
        const GamutMap g = build_gamut_map(t, s, w);
        ScalarField ramp(1001, 1);
        for (int i = 0; i <= 1000; ++i) ramp.values[i] = i / 1000.0;
        const ScalarField out = apply_gamut(ramp, g);
        for (int i = 1; i <= 1000; ++i) EXPECT_GE(out.values[i], out.values[i - 1]);
    }
}

TEST(Gamut, KolmogorovSmirnovAtFullWeight) {
    std::mt19937 rng(7);
    std::normal_distribution<double> nt(0.35, 0.12), ns(0.6, 0.08);
    Image target(100, 100, 1);
    for (auto& v : target.data) v = float(std::clamp(nt(rng), 0.0, 1.0));
    SourcePool pool;
    Image panel(100, 100, 1);
    for (auto& v : panel.data) v = float(std::clamp(ns(rng), 0.0, 1.0));
    pool.sources.push_back(make_source("s", panel, std::nullopt, {1, 360.0, 300.0}));
    const GamutMap g = build_gamut_map(target, pool, 1.0);
    const ScalarField mapped = apply_gamut(to_field(target), g);
    std::vector<double> src(panel.data.begin(), panel.data.end());
    EXPECT_LE(ks_distance(mapped.values, src), 0.05);
}

TEST(Gamut, EmptyPoolRejected) {
    SourcePool pool;
    std::mt19937 rng(1);
    BinaryMask none(4, 4, false);
    pool.sources.push_back(make_source("s", random_gray(4, 4, rng), none, {1, 360.0, 300.0}));
    EXPECT_THROW(build_gamut_map(random_gray(4, 4, rng), pool), InputError);
}

TEST(Saliency, ConstantIsZero) {
    for (double v : saliency_map(Image(20, 20, 1, 0.6f)).values) EXPECT_EQ(v, 0.0);
}

TEST(Saliency, SinglePixelIsMaximum) {
    Image img(21, 21, 1, 0.0f);
    img.at(7, 12) = 1.0f;
    const ScalarField s = saliency_map(img);
    const auto it = std::max_element(s.values.begin(), s.values.end());
    EXPECT_EQ(it - s.values.begin(), 12 * 21 + 7);
    EXPECT_DOUBLE_EQ(*it, 1.0);
}

TEST(Saliency, MatchesDefinitionAndContrastRatio) {
    Image img(64, 32, 1, 0.5f);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 64; ++x) {
            if (std::hypot(x - 16, y - 16) <= 4) img.at(x, y) = 0.7f;
            if (std::hypot(x - 48, y - 16) <= 4) img.at(x, y) = 0.9f;
        }
    const ScalarField s = saliency_map(img);
    const std::vector<double> raw = raw_saliency(img);
    const double m = *std::max_element(raw.begin(), raw.end());
    for (size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(s.values[i], raw[i] / m, 1e-9);
    double left = 0, right = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 64; ++x) (x < 32 ? left : right) += s.at(x, y);
    EXPECT_NEAR(right / left, 2.0, 0.2);
}
