#pragma once

// Naive reference implementations shared by the unit tests and the
// acceptance runner. They follow the definitions directly and share no code
// with the library beyond its data types.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "parquetry/features.hpp"
#include "parquetry/ingest.hpp"
#include "parquetry/segment.hpp"

namespace oracle {

struct BruteMatch {
    double cost = std::numeric_limits<double>::infinity();
    int source = -1, rotation = -1, x = -1, y = -1;
};

// Squared feature difference summed over the shape's pixels in raster order.
inline double ssd(const parquetry::Shape& shape, int tx, int ty, const parquetry::FeatureMap& target,
                  const parquetry::FeatureMap& variant, int vx, int vy) {
    const parquetry::BinaryMask m = shape.to_mask();
    double s = 0;
    for (int y = 0; y < shape.height; ++y)
        for (int x = 0; x < shape.width; ++x) {
            if (!m.get(x, y)) continue;
            const double di = target.intensity.at(tx + x, ty + y) - variant.intensity.at(vx + x, vy + y);
            const double de = target.edge.at(tx + x, ty + y) - variant.edge.at(vx + x, vy + y);
            s += di * di + de * de;
        }
    return s;
}

// Every source, rotation and offset whose footprint is fully available;
// the first strict minimum in (source, rotation, y, x) order wins.
inline BruteMatch brute_force_match(const parquetry::PatchRegion& patch, const parquetry::FeatureMap& target,
                                    const parquetry::SourcePool& pool, const parquetry::SourceFeatures& features) {
    const parquetry::BinaryMask m = patch.shape.to_mask();
    BruteMatch best;
    for (int s = 0; s < int(pool.sources.size()); ++s)
        for (int r = 0; r < int(pool.sources[s].rotations.size()); ++r) {
            const auto& avail = pool.sources[s].rotations[r].available;
            const auto& fm = features[s][r];
            for (int y = 0; y + patch.shape.height <= avail.height; ++y)
                for (int x = 0; x + patch.shape.width <= avail.width; ++x) {
                    bool ok = true;
                    for (int j = 0; j < m.height && ok; ++j)
                        for (int i = 0; i < m.width && ok; ++i)
                            if (m.get(i, j) && !avail.get(x + i, y + j)) ok = false;
                    if (!ok) continue;
                    const double c = ssd(patch.shape, patch.bbox.x, patch.bbox.y, target, fm, x, y);
                    if (c < best.cost) best = {c, s, r, x, y};
                }
        }
    return best;
}

struct BrutePath {
    std::vector<int> cut;
    double cost = std::numeric_limits<double>::infinity();
};

// All paths with cut[i] in [lo, hi] and |cut[i+1]-cut[i]| <= 1, visited in
// lexicographic order; the first strict minimum wins.
inline BrutePath enumerate_paths(const std::vector<std::vector<double>>& cost, int lo = 0, int hi = -1) {
    const int rows = int(cost.size());
    if (hi < 0) hi = int(cost[0].size()) - 1;
    BrutePath best;
    std::vector<int> cut(rows);
    auto rec = [&](auto&& self, int i) -> void {
        if (i == rows) {
            double s = 0;
            for (int k = 0; k < rows; ++k) s += cost[k][cut[k]];
            if (s < best.cost) best = {cut, s};
            return;
        }
        const int a = i == 0 ? lo : std::max(lo, cut[i - 1] - 1);
        const int b = i == 0 ? hi : std::min(hi, cut[i - 1] + 1);
        for (int x = a; x <= b; ++x) {
            cut[i] = x;
            self(self, i + 1);
        }
    };
    rec(rec, 0);
    return best;
}

// Pair seam cost from its definition: cells left of the cut take the first
// participant's error, the rest the second's.
inline std::vector<std::vector<double>> pair_costs(const parquetry::ScalarField& e1, const parquetry::ScalarField& e2,
                                                   bool along_rows) {
    const int lines = along_rows ? e1.height : e1.width;
    const int n = along_rows ? e1.width : e1.height;
    std::vector<std::vector<double>> c(lines, std::vector<double>(n + 1));
    for (int l = 0; l < lines; ++l)
        for (int x = 0; x <= n; ++x) {
            double left = 0, right = 0;
            for (int k = 0; k < x; ++k) left += along_rows ? e1.at(k, l) : e1.at(l, k);
            for (int k = x; k < n; ++k) right += along_rows ? e2.at(k, l) : e2.at(l, k);
            c[l][x] = left + right;
        }
    return c;
}

}  // namespace oracle
