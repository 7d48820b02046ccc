#include "parquetry/match.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <opencv2/core.hpp>

#include "parquetry/error.hpp"

namespace parquetry {

ChannelCost score_placement(const Shape& shape, int origin_x, int origin_y, const FeatureMap& target,
                            const FeatureMap& variant, int ox, int oy) {
    if (ox < 0 || oy < 0 || ox + shape.width > variant.width || oy + shape.height > variant.height)
        throw InputError("placement footprint leaves the variant");
    if (origin_x < 0 || origin_y < 0 || origin_x + shape.width > target.width ||
        origin_y + shape.height > target.height)
        throw InputError("patch leaves the target");
    ChannelCost c;
    for (const auto& run : shape.runs)
        for (int x = run.x0; x < run.x1; ++x) {
            const double di = target.intensity.at(origin_x + x, origin_y + run.y) -
                              variant.intensity.at(ox + x, oy + run.y);
            const double de = target.edge.at(origin_x + x, origin_y + run.y) - variant.edge.at(ox + x, oy + run.y);
            c.total += di * di + de * de;
            c.intensity += di * di;
            c.edge += de * de;
        }
    return c;
}

ChannelCost score_placement(const PatchRegion& patch, const FeatureMap& target, const FeatureMap& variant, int ox,
                            int oy) {
    return score_placement(patch.shape, patch.bbox.x, patch.bbox.y, target, variant, ox, oy);
}

struct Matcher::Spectra {
    int pw = 0, ph = 0;
    cv::Mat intensity, edge, squares;  // packed real spectra
};

namespace {

cv::Mat padded_field(const ScalarField& f, int pw, int ph) {
    cv::Mat m = cv::Mat::zeros(ph, pw, CV_64F);
    for (int y = 0; y < f.height; ++y) {
        double* row = m.ptr<double>(y);
        for (int x = 0; x < f.width; ++x) row[x] = f.at(x, y);
    }
    return m;
}

cv::Mat forward(const cv::Mat& m) {
    cv::Mat f;
    cv::dft(m, f, 0);
    return f;
}

// Exact early-abandoning score: stops once the partial sum exceeds `bound`.
double exact_total(const Shape& shape, int origin_x, int origin_y, const FeatureMap& t, const FeatureMap& v, int ox,
                   int oy, double bound) {
    double total = 0;
    for (const auto& run : shape.runs) {
        for (int x = run.x0; x < run.x1; ++x) {
            const double di = t.intensity.at(origin_x + x, origin_y + run.y) - v.intensity.at(ox + x, oy + run.y);
            const double de = t.edge.at(origin_x + x, origin_y + run.y) - v.edge.at(ox + x, oy + run.y);
            total += di * di + de * de;
        }
        if (total > bound) return total;
    }
    return total;
}

// Row prefix sums of unavailable pixels for exact footprint tests.
struct BlockedRows {
    int width = 0, height = 0;
    std::vector<int> prefix;  // (width+1) per row

    explicit BlockedRows(const BinaryMask& avail) : width(avail.width), height(avail.height) {
        prefix.assign(static_cast<size_t>(width + 1) * height, 0);
        for (int y = 0; y < height; ++y) {
            int* p = &prefix[static_cast<size_t>(y) * (width + 1)];
            for (int x = 0; x < width; ++x) p[x + 1] = p[x] + (avail.get(x, y) ? 0 : 1);
        }
    }
    bool clear(const Shape& s, int ox, int oy) const {
        for (const auto& r : s.runs) {
            const int* p = &prefix[static_cast<size_t>(oy + r.y) * (width + 1)];
            if (p[ox + r.x1] != p[ox + r.x0]) return false;
        }
        return true;
    }
};

struct Best {
    bool found = false;
    double cost = std::numeric_limits<double>::infinity();
    int x = 0, y = 0;
};

}  // namespace

Matcher::Matcher(const SourcePool& pool, const SourceFeatures& features, MatchMethod method)
    : pool_(pool), features_(features), method_(method) {
    if (features.size() != pool.sources.size()) throw InputError("feature maps do not match the source pool");
    for (size_t i = 0; i < pool.sources.size(); ++i)
        if (features[i].size() != pool.sources[i].rotations.size())
            throw InputError("feature maps do not match the rotations of " + pool.sources[i].id);
}

Matcher::~Matcher() = default;

const Matcher::Spectra& Matcher::spectra(int source, int rotation) const {
    auto& slot = cache_[{source, rotation}];
    if (!slot) {
        const FeatureMap& v = features_[source][rotation];
        auto s = std::make_unique<Spectra>();
        s->pw = cv::getOptimalDFTSize(v.width);
        s->ph = cv::getOptimalDFTSize(v.height);
        ScalarField sq(v.width, v.height);
        for (size_t i = 0; i < sq.values.size(); ++i)
            sq.values[i] = v.intensity.values[i] * v.intensity.values[i] + v.edge.values[i] * v.edge.values[i];
        s->intensity = forward(padded_field(v.intensity, s->pw, s->ph));
        s->edge = forward(padded_field(v.edge, s->pw, s->ph));
        s->squares = forward(padded_field(sq, s->pw, s->ph));
        slot = std::move(s);
    }
    return *slot;
}

PatchAssignment Matcher::match(const PatchRegion& patch, const FeatureMap& target) const {
    const Shape& shape = patch.shape;
    const int w = shape.width, h = shape.height;
    const long area = shape.area();
    if (area == 0) throw InputError("cannot match an empty patch");

    struct Job {
        int source, rotation;
        bool fft;
    };
    std::vector<Job> jobs;
    for (int s = 0; s < static_cast<int>(pool_.sources.size()); ++s)
        for (int r = 0; r < static_cast<int>(pool_.sources[s].rotations.size()); ++r) {
            const FeatureMap& v = features_[s][r];
            if (v.width < w || v.height < h) continue;
            bool fft = method_ == MatchMethod::Fft;
            if (method_ == MatchMethod::Auto) {
                const double offsets = double(v.width - w + 1) * (v.height - h + 1);
                const double n = double(v.width) * v.height;
                fft = offsets * area > 40.0 * n * std::log2(std::max(2.0, n));
            }
            jobs.push_back({s, r, fft});
        }

    // Spectra are built serially; the parallel part only reads them.
    struct KernelSpectra {
        cv::Mat t_intensity, t_edge, mask;
        double sum_sq = 0;
    };
    std::map<std::pair<int, int>, KernelSpectra> kernels;
    for (const Job& j : jobs) {
        if (!j.fft) continue;
        const Spectra& sp = spectra(j.source, j.rotation);
        auto [it, fresh] = kernels.try_emplace({sp.pw, sp.ph});
        if (!fresh) continue;
        cv::Mat ti = cv::Mat::zeros(sp.ph, sp.pw, CV_64F), te = ti.clone(), m = ti.clone();
        double sum_sq = 0;
        for (const auto& run : shape.runs)
            for (int x = run.x0; x < run.x1; ++x) {
                const double a = target.intensity.at(patch.bbox.x + x, patch.bbox.y + run.y);
                const double b = target.edge.at(patch.bbox.x + x, patch.bbox.y + run.y);
                ti.at<double>(run.y, x) = a;
                te.at<double>(run.y, x) = b;
                m.at<double>(run.y, x) = 1.0;
                sum_sq += a * a + b * b;
            }
        it->second = {forward(ti), forward(te), forward(m), sum_sq};
    }

    std::vector<Best> results(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (int ji = 0; ji < static_cast<int>(jobs.size()); ++ji) {
        const Job& j = jobs[ji];
        const FeatureMap& v = features_[j.source][j.rotation];
        const BlockedRows blocked(pool_.sources[j.source].rotations[j.rotation].available);
        Best best;
        const int nx = v.width - w + 1, ny = v.height - h + 1;
        if (!j.fft) {
            for (int oy = 0; oy < ny; ++oy)
                for (int ox = 0; ox < nx; ++ox) {
                    if (!blocked.clear(shape, ox, oy)) continue;
                    const double c = exact_total(shape, patch.bbox.x, patch.bbox.y, target, v, ox, oy, best.cost);
                    if (c < best.cost) best = {true, c, ox, oy};
                }
        } else {
            const Spectra& sp = *cache_.at({j.source, j.rotation});
            const KernelSpectra& k = kernels.at({sp.pw, sp.ph});
            cv::Mat a, b, c;
            cv::mulSpectrums(sp.intensity, k.t_intensity, a, 0, true);
            cv::mulSpectrums(sp.edge, k.t_edge, b, 0, true);
            cv::mulSpectrums(sp.squares, k.mask, c, 0, true);
            cv::Mat combined = c - 2.0 * (a + b);
            cv::Mat approx;
            cv::dft(combined, approx, cv::DFT_INVERSE | cv::DFT_REAL_OUTPUT | cv::DFT_SCALE);
            double amin = std::numeric_limits<double>::infinity();
            std::vector<double> vals(static_cast<size_t>(nx) * ny, std::numeric_limits<double>::infinity());
            for (int oy = 0; oy < ny; ++oy)
                for (int ox = 0; ox < nx; ++ox) {
                    if (!blocked.clear(shape, ox, oy)) continue;
                    const double val = k.sum_sq + approx.at<double>(oy, ox);
                    vals[static_cast<size_t>(oy) * nx + ox] = val;
                    amin = std::min(amin, val);
                }
            if (std::isfinite(amin)) {
                const double n = double(sp.pw) * sp.ph;
                const double slack = 1e-10 * (1.0 + std::log2(n)) * (1.0 + std::sqrt(n * double(area)));
                for (int oy = 0; oy < ny; ++oy)
                    for (int ox = 0; ox < nx; ++ox) {
                        if (!(vals[static_cast<size_t>(oy) * nx + ox] <= amin + 2.0 * slack)) continue;
                        const double cst =
                            exact_total(shape, patch.bbox.x, patch.bbox.y, target, v, ox, oy, best.cost);
                        if (cst < best.cost) best = {true, cst, ox, oy};
                    }
            }
        }
        results[ji] = best;
    }

    int winner = -1;
    for (int ji = 0; ji < static_cast<int>(jobs.size()); ++ji)
        if (results[ji].found && (winner < 0 || results[ji].cost < results[winner].cost)) winner = ji;
    if (winner < 0) throw ResourceExhausted("no available placement for patch " + std::to_string(patch.id));

    const Job& j = jobs[winner];
    const auto& src = pool_.sources[j.source];
    PatchAssignment a;
    a.patch_id = patch.id;
    a.target_id = patch.target_id;
    a.source_id = src.id;
    a.source_index = j.source;
    a.rotation_index = j.rotation;
    a.rotation_degrees = src.rotations[j.rotation].rotation.degrees;
    a.x = results[winner].x;
    a.y = results[winner].y;
    a.target_x = patch.bbox.x;
    a.target_y = patch.bbox.y;
    a.cost = score_placement(patch, target, features_[j.source][j.rotation], a.x, a.y);
    a.depth = patch.depth;
    return a;
}

PatchAssignment match_patch(const PatchRegion& patch, const FeatureMap& target, const SourcePool& pool,
                            const SourceFeatures& features, MatchMethod method) {
    return Matcher(pool, features, method).match(patch, target);
}

MatchQueue build_queue(const std::vector<Segmentation>& segs, const std::vector<ScalarField>& saliency,
                       QueuePolicy policy) {
    if (policy == QueuePolicy::SaliencyDesc && saliency.size() != segs.size())
        throw InputError("saliency policy needs one saliency field per target");
    MatchQueue q;
    q.policy = policy;
    for (int t = 0; t < static_cast<int>(segs.size()); ++t) {
        const Segmentation& seg = segs[t];
        for (int i = 0; i < static_cast<int>(seg.regions.size()); ++i) {
            const PatchRegion& r = seg.regions[i];
            double key = 0;
            if (policy == QueuePolicy::SaliencyDesc) {
                const ScalarField& s = saliency[t];
                if (s.width != seg.width || s.height != seg.height)
                    throw InputError("saliency field does not match its segmentation");
                for (const auto& run : r.shape.runs)
                    for (int x = run.x0; x < run.x1; ++x) key += s.at(r.bbox.x + x, r.bbox.y + run.y);
            } else {
                double sx = 0, sy = 0;
                for (const auto& run : r.shape.runs) {
                    const double n = run.x1 - run.x0;
                    sx += n * (r.bbox.x + (run.x0 + run.x1) / 2.0);
                    sy += n * (r.bbox.y + run.y + 0.5);
                }
                const double a = static_cast<double>(r.area());
                key = std::hypot(sx / a - seg.width / 2.0, sy / a - seg.height / 2.0);
            }
            q.order.push_back({t, i, r.id, key});
        }
    }
    std::stable_sort(q.order.begin(), q.order.end(), [&](const QueueEntry& a, const QueueEntry& b) {
        if (a.key != b.key) return policy == QueuePolicy::SaliencyDesc ? a.key > b.key : a.key < b.key;
        if (a.patch_id != b.patch_id) return a.patch_id < b.patch_id;
        return a.target_id < b.target_id;
    });
    return q;
}

double ReconstructionResult::total_cost() const {
    double s = 0;
    for (const auto& a : assignments) s += a.cost.total;
    return s;
}

double ReconstructionResult::mean_cost() const {
    return assignments.empty() ? 0.0 : total_cost() / static_cast<double>(assignments.size());
}

const PatchAssignment* ReconstructionResult::find(int target_id, int patch_id) const {
    for (const auto& a : assignments)
        if (a.target_id == target_id && a.patch_id == patch_id) return &a;
    return nullptr;
}

namespace {

struct Checkpoint {
    std::vector<BinaryMask> base;
    std::vector<std::vector<BinaryMask>> variants;
    size_t consumed = 0;

    explicit Checkpoint(const SourcePool& pool) : consumed(pool.consumed.size()) {
        for (const auto& s : pool.sources) {
            base.push_back(s.available);
            variants.emplace_back();
            for (const auto& v : s.rotations) variants.back().push_back(v.available);
        }
    }
    void restore(SourcePool& pool) const {
        for (size_t i = 0; i < pool.sources.size(); ++i) {
            pool.sources[i].available = base[i];
            for (size_t r = 0; r < pool.sources[i].rotations.size(); ++r)
                pool.sources[i].rotations[r].available = variants[i][r];
        }
        pool.consumed.resize(consumed);
    }
};

class Reconstructor {
public:
    Reconstructor(const std::vector<FeatureMap>& targets, SourcePool& pool, const SourceFeatures& features,
                  const MatchParams& params, ReconstructionResult& out)
        : targets_(targets), pool_(pool), matcher_(pool, features, params.method), params_(params), out_(out) {}

    int next_id = 0;

    // Returns the leaf regions that replaced `r`.
    std::vector<PatchRegion> process(const PatchRegion& r) {
        const FeatureMap& t = targets_[r.target_id];
        PatchAssignment a;
        try {
            a = matcher_.match(r, t);
        } catch (const ResourceExhausted&) {
            out_.exhausted.push_back({r.target_id, r.id});
            return {r};
        }
        if (r.depth < params_.n_adaptive && quad_splittable(r, params_.fab)) {
            std::vector<PatchRegion> kids = quad_split(r, next_id, params_.fab);
            for (auto& k : kids) k.target_id = r.target_id;
            const Checkpoint cp(pool_);
            std::vector<PatchRegion> order;
            double sum = 0;
            bool ok = true;
            std::vector<PatchRegion> rest = kids;
            while (ok && !rest.empty()) {
                int pick = -1;
                PatchAssignment best;
                for (int i = 0; i < static_cast<int>(rest.size()); ++i) {
                    try {
                        PatchAssignment c = matcher_.match(rest[i], t);
                        if (pick < 0 || c.cost.total < best.cost.total) {
                            pick = i;
                            best = c;
                        }
                    } catch (const ResourceExhausted&) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) break;
                consume(pool_, best.placement(), rest[pick].shape, rest[pick].id);
                sum += best.cost.total;
                order.push_back(rest[pick]);
                rest.erase(rest.begin() + pick);
            }
            cp.restore(pool_);
            if (ok && sum < params_.w_adaptive * a.cost.total) {
                next_id += 4;
                std::vector<PatchRegion> leaves;
                for (const auto& k : order)
                    for (auto& leaf : process(k)) leaves.push_back(std::move(leaf));
                return leaves;
            }
        }
        consume(pool_, a.placement(), r.shape, r.id);
        out_.assignments.push_back(a);
        return {r};
    }

private:
    const std::vector<FeatureMap>& targets_;
    SourcePool& pool_;
    Matcher matcher_;
    const MatchParams& params_;
    ReconstructionResult& out_;
};

}  // namespace

ReconstructionResult reconstruct(const std::vector<FeatureMap>& targets, const std::vector<Segmentation>& segs,
                                 const std::vector<ScalarField>& saliency, SourcePool& pool,
                                 const SourceFeatures& features, const MatchParams& params) {
    if (targets.size() != segs.size()) throw InputError("one segmentation per target is required");
    if (params.w_adaptive <= 0) throw ConfigError("w_adaptive must be positive");
    for (size_t t = 0; t < segs.size(); ++t)
        if (targets[t].width != segs[t].width || targets[t].height != segs[t].height)
            throw InputError("segmentation size does not match its target");

    ReconstructionResult out;
    out.segmentations = segs;
    int max_id = -1;
    for (size_t t = 0; t < segs.size(); ++t)
        for (auto& r : out.segmentations[t].regions) {
            r.target_id = static_cast<int>(t);
            max_id = std::max(max_id, r.id);
        }

    Reconstructor rec(targets, pool, features, params, out);
    rec.next_id = max_id + 1;

    std::vector<std::vector<std::vector<PatchRegion>>> leaves(segs.size());
    for (size_t t = 0; t < segs.size(); ++t) leaves[t].resize(segs[t].regions.size());

    auto run_queue = [&](const MatchQueue& q) {
        for (const auto& e : q.order)
            leaves[e.target_id][e.region_index] = rec.process(out.segmentations[e.target_id].regions[e.region_index]);
    };
    if (params.interleave) {
        run_queue(build_queue(out.segmentations, saliency, params.policy));
    } else {
        for (size_t t = 0; t < segs.size(); ++t) {
            std::vector<Segmentation> one{out.segmentations[t]};
            std::vector<ScalarField> sal;
            if (params.policy == QueuePolicy::SaliencyDesc) sal.push_back(saliency.at(t));
            MatchQueue q = build_queue(one, sal, params.policy);
            for (auto& e : q.order) e.target_id = static_cast<int>(t);
            run_queue(q);
        }
    }

    for (size_t t = 0; t < segs.size(); ++t) {
        std::vector<PatchRegion> flat;
        for (auto& group : leaves[t])
            for (auto& r : group) flat.push_back(std::move(r));
        out.segmentations[t].regions = std::move(flat);
    }
    for (const auto& s : pool.sources) out.availability.emplace_back(s.id, availability_fraction(pool, s.id));
    return out;
}

}  // namespace parquetry
