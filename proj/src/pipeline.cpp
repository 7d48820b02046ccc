#include "parquetry/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "parquetry/error.hpp"
#include "parquetry/features.hpp"
#include "parquetry/io.hpp"
#include "parquetry/morph.hpp"
#include "parquetry/seams.hpp"

namespace parquetry {

namespace fs = std::filesystem;

std::uint64_t fnv1a(const void* data, size_t n, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".tif" || ext == ".tiff";
}

std::uint64_t hash_string(const std::string& s, std::uint64_t h) { return fnv1a(s.data(), s.size(), h); }

std::uint64_t hash_file(const fs::path& p, std::uint64_t h) {
    std::ifstream in(p, std::ios::binary);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h = fnv1a(buf.data(), static_cast<size_t>(in.gcount()), h);
    }
    return h;
}

std::uint64_t hash_path(const fs::path& p, std::uint64_t h) {
    h = hash_string(p.generic_string(), h);
    if (fs::is_regular_file(p)) return hash_file(p, h);
    if (fs::is_directory(p)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(p))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) h = hash_file(f, hash_string(f.generic_string(), h));
        return h;
    }
    return hash_string("<missing>", h);
}

GamutMap gamut_from_json(const Json& j) {
    GamutMap g;
    g.w_hist = j.at("w_hist");
    const auto lut = j.at("lut").get<std::vector<double>>();
    if (lut.size() != g.lut.size()) throw InputError("gamut table must have 256 entries");
    std::copy(lut.begin(), lut.end(), g.lut.begin());
    return g;
}

std::optional<BinaryMask> find_mask(const fs::path& root, const std::string& target, const std::string& name, int w,
                                    int h) {
    for (const fs::path& p : {root / "masks" / target / name, root / "masks" / name})
        if (fs::exists(p)) {
            BinaryMask m = load_mask(p);
            if (m.width != w || m.height != h)
                throw InputError(p.string() + " is " + std::to_string(m.width) + "x" + std::to_string(m.height) +
                                 ", target is " + std::to_string(w) + "x" + std::to_string(h));
            return m;
        }
    return std::nullopt;
}

}  // namespace

Pipeline::Pipeline(fs::path project, Config config) : paths_{std::move(project)}, cfg_(std::move(config)) {
    cfg_.validate();
    log = [](const std::string& s) { std::cout << s << std::endl; };
}

std::vector<std::string> Pipeline::target_ids() const {
    const fs::path summary = paths_.work() / "ingest.json";
    std::vector<std::string> ids;
    if (fs::exists(summary)) {
        const Json j = read_json(summary);
        for (const auto& t : j.at("targets")) ids.push_back(t.at("id"));
        return ids;
    }
    const fs::path dir = paths_.root / "targets";
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && is_image_file(e.path())) ids.push_back(e.path().stem().string());
    std::sort(ids.begin(), ids.end());
    return ids;
}

Image Pipeline::load_target(int k) const {
    const auto ids = target_ids();
    const fs::path p = paths_.work() / "targets" / (ids.at(k) + ".png");
    require(p, "ingest");
    return load_image(p, cfg_.dpi);
}

void Pipeline::require(const fs::path& artifact, const std::string& stage) const {
    if (!fs::exists(artifact))
        throw MissingArtifact(artifact.string() + " is missing; run the `" + stage + "` stage first", stage);
}

bool Pipeline::fresh(const std::string& stage, const std::vector<fs::path>& inputs,
                     const std::vector<std::string>& keys, const std::vector<fs::path>& outputs) const {
    if (force) return false;
    for (const auto& o : outputs)
        if (!fs::exists(o)) return false;
    std::ifstream in(paths_.work() / "stamps" / stage);
    std::string old;
    std::getline(in, old);
    std::uint64_t h = hash_string(stage, 1469598103934665603ull);
    const auto entries = config_entries(cfg_);
    for (const auto& k : keys)
        for (const auto& [ek, ev] : entries)
            if (ek == k) h = hash_string(ek + "=" + ev + "\n", h);
    for (const auto& p : inputs) h = hash_path(p, h);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    if (old == buf) {
        log("[" + stage + "] up to date");
        return true;
    }
    return false;
}

void Pipeline::stamp(const std::string& stage, const std::vector<fs::path>& inputs,
                     const std::vector<std::string>& keys) const {
    std::uint64_t h = hash_string(stage, 1469598103934665603ull);
    const auto entries = config_entries(cfg_);
    for (const auto& k : keys)
        for (const auto& [ek, ev] : entries)
            if (ek == k) h = hash_string(ek + "=" + ev + "\n", h);
    for (const auto& p : inputs) h = hash_path(p, h);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    fs::create_directories(paths_.work() / "stamps");
    std::ofstream(paths_.work() / "stamps" / stage) << buf << "\n";
}

SourcePool Pipeline::load_pool(bool with_state) const {
    SourcePool pool = load_project_sources(paths_.root, {cfg_.n_rot, cfg_.rot_span, cfg_.dpi}, cfg_.kerf_px);
    if (with_state && fs::exists(paths_.pool_state())) load_pool_state(pool, paths_.pool_state());
    return pool;
}

int Pipeline::seam_overlap(const Segmentation& seg) const {
    if (!cfg_.seams || cfg_.n_adaptive != 0 || seg.kind != SegmentationKind::Regular || !seg.grid) return 0;
    const int n = overlap_pixels(seg, cfg_.overlap);
    return n >= 2 ? n : 0;
}

void Pipeline::ingest() {
    const std::vector<fs::path> inputs = {paths_.root / "targets", paths_.root / "sources"};
    const std::vector<std::string> keys = {"dpi", "s_image", "n_rot", "rot_span", "kerf_px"};
    const fs::path summary = paths_.work() / "ingest.json";
    if (fresh("ingest", inputs, keys, {summary, paths_.pool_state()})) return;

    std::vector<std::string> ids;
    std::vector<fs::path> files;
    const fs::path dir = paths_.root / "targets";
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("no target images under " + dir.string());

    Json j;
    j["targets"] = Json::array();
    const int short_px = static_cast<int>(std::lround(mm_to_px(cfg_.s_image, cfg_.dpi)));
    for (const auto& f : files) {
        Image img = load_image(f, cfg_.dpi);
        const double scale = static_cast<double>(short_px) / std::min(img.width, img.height);
        img = resize_image(img, std::max(1, static_cast<int>(std::lround(img.width * scale))),
                       std::max(1, static_cast<int>(std::lround(img.height * scale))));
        const std::string id = f.stem().string();
        save_image(paths_.work() / "targets" / (id + ".png"), img);
        j["targets"].push_back({{"id", id}, {"file", f.filename().string()}, {"width", img.width},
                                {"height", img.height}, {"channels", img.channels}});
    }
    const SourcePool pool = load_pool(false);
    j["sources"] = Json::array();
    for (const auto& s : pool.sources)
        j["sources"].push_back({{"id", s.id}, {"width", s.base.width}, {"height", s.base.height},
                                {"usable_pixels", s.initial_usable}, {"rotations", s.rotations.size()}});
    fs::remove_all(paths_.work() / "pool");
    save_pool_state(pool, paths_.pool_state());
    write_json(summary, j);
    stamp("ingest", inputs, keys);
    log("[ingest] " + std::to_string(files.size()) + " target(s), " + std::to_string(pool.sources.size()) +
        " source panel(s); pool reset");
}

void Pipeline::features() {
    const fs::path summary = paths_.work() / "ingest.json";
    require(summary, "ingest");
    const std::vector<fs::path> inputs = {summary, paths_.work() / "targets"};
    const std::vector<std::string> keys = {"w_intens", "w_edge", "w_hist"};
    const fs::path out = paths_.work() / "features.json";
    if (fresh("features", inputs, keys, {out})) return;

    // Only the unrotated scans feed the gamut.
    const SourcePool pool = load_project_sources(paths_.root, {1, 360.0, cfg_.dpi}, cfg_.kerf_px);
    Json j;
    j["weights"] = {{"intensity", cfg_.w_intens}, {"edge", cfg_.w_edge}};
    j["targets"] = Json::array();
    const auto ids = target_ids();
    for (int k = 0; k < static_cast<int>(ids.size()); ++k) {
        const Image target = load_target(k);
        const GamutMap g = build_gamut_map(target, pool, cfg_.w_hist);
        const FeatureMap fm = target_features(target, g, cfg_.weights());
        const fs::path cache = paths_.work() / "features";
        fs::create_directories(cache);
        save_float_tiff(cache / (ids[k] + "_intensity.tiff"), fm.intensity);
        save_float_tiff(cache / (ids[k] + "_edge.tiff"), fm.edge);
        save_float_tiff(cache / (ids[k] + "_saliency.tiff"), saliency_map(target));
        j["targets"].push_back({{"id", ids[k]}, {"w_hist", g.w_hist}, {"lut", std::vector<double>(g.lut.begin(), g.lut.end())}});
    }
    write_json(out, j);
    stamp("features", inputs, keys);
    log("[features] gamut tables and feature maps for " + std::to_string(ids.size()) + " target(s)");
}

void Pipeline::morph() {
    const fs::path summary = paths_.work() / "ingest.json";
    require(summary, "ingest");
    const std::vector<fs::path> inputs = {summary, paths_.work() / "targets", paths_.root / "masks"};
    const std::vector<std::string> keys = {"dpi", "s_patch", "morph_m", "morph_gamma", "morph_w", "morph_dt",
                                           "morph_tol", "morph_max_steps", "morph_min_distance", "morph_snap",
                                           "rg_sigma_space", "rg_sigma_range", "rg_iterations",
                                           "bilateral_sigma_space", "bilateral_sigma_range", "canny_lo", "canny_hi"};
    const auto ids = target_ids();
    std::vector<fs::path> outs;
    for (const auto& id : ids) outs.push_back(paths_.work() / "morph" / (id + ".json"));
    if (fresh("morph", inputs, keys, outs)) return;

    const Fabricability fab = Fabricability::at_dpi(cfg_.dpi);
    for (int k = 0; k < static_cast<int>(ids.size()); ++k) {
        const Image target = load_target(k);
        const auto m_rg = find_mask(paths_.root, ids[k], "m_rg.png", target.width, target.height);
        const auto m_bil = find_mask(paths_.root, ids[k], "m_bilateral.png", target.width, target.height);
        if (!m_rg && !m_bil) log("[morph] " + ids[k] + ": no masks given, grid stays regular");
        const EdgeSpec spec = build_edge_spec(target, m_rg.value_or(BinaryMask(target.width, target.height)),
                                              m_bil.value_or(BinaryMask(target.width, target.height)), cfg_.edges);
        MorphState s = make_morph_state(target.width, target.height, cfg_.patch_px(), spec.e, cfg_.morph);
        const RelaxStats st = relax(s, cfg_.morph.max_steps);
        const MorphGrid grid = fit_grid_curves(s, spec.e, fab);
        Json j = to_json(grid);
        j["relax"] = {{"steps", st.accepted}, {"rejected", st.rejected}, {"converged", st.converged},
                      {"final_kinetic", st.kinetic.empty() ? 0.0 : st.kinetic.back()}};
        write_json(outs[k], j);
        save_mask(paths_.work() / "morph" / (ids[k] + "_edges.png"), spec.e);
        log("[morph] " + ids[k] + ": " + std::to_string(st.accepted) + " steps, " +
            (st.converged ? "converged" : "not converged"));
    }
    stamp("morph", inputs, keys);
}

void Pipeline::segment() {
    const fs::path summary = paths_.work() / "ingest.json";
    require(summary, "ingest");
    const auto ids = target_ids();
    std::vector<fs::path> inputs = {summary};
    if (cfg_.segment == SegmentMode::Labels) inputs.push_back(paths_.root / "labels");
    if (cfg_.segment == SegmentMode::Morph) {
        for (const auto& id : ids) {
            require(paths_.work() / "morph" / (id + ".json"), "morph");
            inputs.push_back(paths_.work() / "morph" / (id + ".json"));
        }
    }
    const std::vector<std::string> keys = {"segment", "dpi", "s_patch"};
    const fs::path out = paths_.work() / "segmentation.json";
    if (fresh("segment", inputs, keys, {out})) return;

    const Fabricability fab = Fabricability::at_dpi(cfg_.dpi);
    Json j;
    j["targets"] = Json::array();
    for (int k = 0; k < static_cast<int>(ids.size()); ++k) {
        const Json t = read_json(summary).at("targets").at(k);
        const int w = t.at("width"), h = t.at("height");
        Segmentation seg;
        switch (cfg_.segment) {
            case SegmentMode::Regular: seg = regular_grid(w, h, cfg_.patch_px(), fab); break;
            case SegmentMode::Labels: {
                const fs::path p = paths_.root / "labels" / (ids[k] + ".png");
                if (!fs::exists(p))
                    throw MissingArtifact(p.string() + " is missing; provide a label image or set segment = regular",
                                          "labels");
                const LabelMap lm = load_label_map(p);
                if (lm.width != w || lm.height != h)
                    throw InputError(p.string() + " does not match the ingested target size");
                seg = from_label_map(lm, fab);
                break;
            }
            case SegmentMode::Morph:
                seg = grid_segmentation(grid_from_json(read_json(paths_.work() / "morph" / (ids[k] + ".json"))), fab);
                break;
        }
        for (auto& r : seg.regions) r.target_id = k;
        j["targets"].push_back(to_json(seg));
        log("[segment] " + ids[k] + ": " + std::to_string(seg.regions.size()) + " patches");
    }
    write_json(out, j);
    stamp("segment", inputs, keys);
}

int Pipeline::match(bool reset_pool) {
    const fs::path seg_path = paths_.work() / "segmentation.json";
    const fs::path feat_path = paths_.work() / "features.json";
    require(paths_.work() / "ingest.json", "ingest");
    require(feat_path, "features");
    require(seg_path, "segment");

    SourcePool pool = load_pool(!reset_pool);
    const long consumed_before = static_cast<long>(pool.consumed.size());
    const SourceFeatures sf = compute_source_features(pool, cfg_.weights());
    const Json fj = read_json(feat_path);
    const Json sj = read_json(seg_path);
    const auto ids = target_ids();

    std::vector<Segmentation> segs;
    std::vector<FeatureMap> targets;
    std::vector<ScalarField> saliency;
    Json overlaps = Json::array();
    for (int k = 0; k < static_cast<int>(ids.size()); ++k) {
        const Image img = load_target(k);
        targets.push_back(target_features(img, gamut_from_json(fj.at("targets").at(k)), cfg_.weights()));
        saliency.push_back(saliency_map(img));
        Segmentation seg = segmentation_from_json(sj.at("targets").at(k));
        const int n = seam_overlap(seg);
        overlaps.push_back(n);
        segs.push_back(n > 0 ? expand_for_overlap(seg, n) : seg);
    }

    MatchParams mp;
    mp.policy = cfg_.queue;
    mp.interleave = cfg_.interleave;
    mp.n_adaptive = cfg_.n_adaptive;
    mp.w_adaptive = cfg_.w_adaptive;
    mp.fab = Fabricability::at_dpi(cfg_.dpi);
    mp.method = cfg_.match_method;
    const ReconstructionResult r = reconstruct(targets, segs, saliency, pool, sf, mp);

    save_pool_state(pool, paths_.pool_state());
    Json j;
    j["pool_consumed_before"] = consumed_before;
    j["seam_overlap_px"] = overlaps;
    j["result"] = to_json(r);
    write_json(paths_.work() / "match.json", j);
    std::ostringstream msg;
    msg << "[match] " << r.assignments.size() << " patches placed, mean cost " << r.mean_cost();
    for (const auto& [id, f] : r.availability) msg << ", " << id << " " << std::lround(f * 100) << "% left";
    log(msg.str());
    if (r.any_exhausted()) {
        log("[match] source material exhausted: " + std::to_string(r.exhausted.size()) +
            " patch(es) unassigned; run with --reset-pool to start from fresh panels");
        return kExhausted;
    }
    return kOk;
}

void Pipeline::seams() {
    const fs::path match_path = paths_.work() / "match.json";
    const fs::path seg_path = paths_.work() / "segmentation.json";
    require(match_path, "match");
    require(seg_path, "segment");
    const std::vector<fs::path> inputs = {match_path, seg_path, paths_.work() / "features.json"};
    const std::vector<std::string> keys = {"seam_rounds", "w_intens", "w_edge", "n_rot", "rot_span"};
    const fs::path out = paths_.work() / "seams.json";
    if (fresh("seams", inputs, keys, {out})) return;

    const Json mj = read_json(match_path);
    const ReconstructionResult r = result_from_json(mj.at("result"));
    const Json sj = read_json(seg_path);
    const Json fj = read_json(paths_.work() / "features.json");
    const auto ids = target_ids();
    std::optional<SourcePool> pool;
    std::optional<SourceFeatures> sf;

    Json j;
    j["targets"] = Json::array();
    for (int k = 0; k < static_cast<int>(ids.size()); ++k) {
        const int n = mj.at("seam_overlap_px").at(k);
        Json t;
        t["id"] = ids[k];
        t["overlap_px"] = n;
        if (n > 0) {
            if (!pool) {
                pool = load_pool(false);
                sf = compute_source_features(*pool, cfg_.weights());
            }
            const Image img = load_target(k);
            const FeatureMap tfm = target_features(img, gamut_from_json(fj.at("targets").at(k)), cfg_.weights());
            const Segmentation seg = segmentation_from_json(sj.at("targets").at(k));
            const SeamResult sr = refine_seams(seg, r, tfm, *sf, n, cfg_.seam_rounds, k);
            t["cost_straight"] = sr.cost_before;
            t["cost_refined"] = sr.cost_after;
            Json pairs = Json::array();
            for (size_t i = 0; i < sr.pair_seams.size(); ++i) {
                const auto& ov = sr.overlaps[i];
                pairs.push_back({{"patches", ov.patches},
                                 {"extent", {ov.extent.x, ov.extent.y, ov.extent.w, ov.extent.h}},
                                 {"cut", sr.pair_seams[i].cut},
                                 {"cost", sr.pair_seams[i].cost}});
            }
            t["pair_seams"] = pairs;
            Json corners = Json::array();
            for (const auto& c : sr.corner_seams)
                corners.push_back({{"vertical", c.vertical.cut}, {"horizontal", c.horizontal.cut}, {"history", c.history}});
            t["corner_seams"] = corners;
            t["ownership"] = to_json(sr.ownership);
            log("[seams] " + ids[k] + ": reproduction cost " + std::to_string(sr.cost_before) + " -> " +
                std::to_string(sr.cost_after));
        } else {
            t["ownership"] = to_json(straight_ownership(r.segmentations.at(k), r, k));
            log("[seams] " + ids[k] + ": straight patch boundaries");
        }
        j["targets"].push_back(t);
    }
    write_json(out, j);
    stamp("seams", inputs, keys);
}

std::vector<LabelMap> Pipeline::ownership_maps() const {
    const fs::path p = paths_.work() / "seams.json";
    require(p, "seams");
    std::vector<LabelMap> out;
    const Json j = read_json(p);
    for (const auto& t : j.at("targets")) out.push_back(label_map_from_json(t.at("ownership")));
    return out;
}

void Pipeline::render() {
    const fs::path match_path = paths_.work() / "match.json";
    require(match_path, "match");
    const ReconstructionResult r = result_from_json(read_json(match_path).at("result"));
    const auto owners = ownership_maps();
    const SourcePool pool = load_pool(false);
    const auto ids = target_ids();
    fs::create_directories(paths_.output());
    for (int k = 0; k < static_cast<int>(ids.size()); ++k) {
        const Preview pv = render_preview(r, owners.at(k), pool, k);
        const std::string name = ids.size() == 1 ? "preview.png" : "preview_" + ids[k] + ".png";
        save_image(paths_.output() / name, pv.image);
        log("[render] " + name + (pv.unassigned ? ", " + std::to_string(pv.unassigned) + " pixels unassigned" : ""));
    }
}

void Pipeline::export_plan() {
    const fs::path match_path = paths_.work() / "match.json";
    require(match_path, "match");
    require(paths_.work() / "seams.json", "seams");
    const std::vector<fs::path> inputs = {match_path, paths_.work() / "seams.json", paths_.root / "sources"};
    const std::vector<std::string> keys = {"continuity", "dpi", "kerf_px", "n_rot", "rot_span"};
    const fs::path plan_json = paths_.output() / "plan.json";
    if (fresh("export", inputs, keys, {plan_json})) return;

    render();
    const ReconstructionResult r = result_from_json(read_json(match_path).at("result"));
    const auto owners = ownership_maps();
    const SourcePool pool = load_pool(false);
    CutPlanOptions opt;
    opt.curves.continuity = cfg_.continuity;

    CutPlan plan;
    std::vector<int> offenders;
    for (int k = 0; k < static_cast<int>(owners.size()); ++k) {
        try {
            CutPlan p = emit_cut_plan(r, owners[k], pool, opt, k);
            plan.dpi = p.dpi;
            plan.kerf_mm = p.kerf_mm;
            for (auto& piece : p.pieces) plan.pieces.push_back(std::move(piece));
            for (size_t i = 0; i < p.panels.size(); ++i)
                if (std::find(plan.panels.begin(), plan.panels.end(), p.panels[i]) == plan.panels.end()) {
                    plan.panels.push_back(p.panels[i]);
                    plan.panel_size_mm.push_back(p.panel_size_mm[i]);
                }
        } catch (const FabricabilityError& e) {
            offenders.insert(offenders.end(), e.offenders().begin(), e.offenders().end());
        }
    }
    if (!offenders.empty()) {
        std::string msg = "cut outlines escape the usable panel area for patches:";
        for (int id : offenders) msg += " " + std::to_string(id);
        throw FabricabilityError(msg, offenders);
    }
    std::vector<size_t> order(plan.panels.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return plan.panels[a] < plan.panels[b]; });
    CutPlan sorted = plan;
    for (size_t i = 0; i < order.size(); ++i) {
        sorted.panels[i] = plan.panels[order[i]];
        sorted.panel_size_mm[i] = plan.panel_size_mm[order[i]];
    }
    plan = std::move(sorted);

    fs::create_directories(paths_.output());
    for (const auto& e : fs::directory_iterator(paths_.output()))
        if (e.path().filename().string().rfind("plan_", 0) == 0) fs::remove(e.path());
    const auto files = write_cut_plan(plan, paths_.output());
    write_json(plan_json, to_json(plan));
    stamp("export", inputs, keys);
    log("[export] " + std::to_string(plan.pieces.size()) + " pieces on " + std::to_string(files.size()) +
        " panel file(s)");
}

int Pipeline::ablate() {
    const fs::path seg_path = paths_.work() / "segmentation.json";
    const fs::path feat_path = paths_.work() / "features.json";
    require(feat_path, "features");
    require(seg_path, "segment");
    SourcePool pool = load_pool(false);
    const SourceFeatures sf = compute_source_features(pool, cfg_.weights());
    const Json fj = read_json(feat_path);
    const Json sj = read_json(seg_path);
    const auto ids = target_ids();
    std::vector<Segmentation> segs;
    std::vector<FeatureMap> targets;
    std::vector<ScalarField> saliency;
    for (int k = 0; k < static_cast<int>(ids.size()); ++k) {
        const Image img = load_target(k);
        targets.push_back(target_features(img, gamut_from_json(fj.at("targets").at(k)), cfg_.weights()));
        saliency.push_back(saliency_map(img));
        segs.push_back(segmentation_from_json(sj.at("targets").at(k)));
    }
    MatchParams mp;
    mp.policy = cfg_.queue;
    mp.interleave = cfg_.interleave;
    mp.n_adaptive = cfg_.n_adaptive;
    mp.w_adaptive = cfg_.w_adaptive;
    mp.fab = Fabricability::at_dpi(cfg_.dpi);
    mp.method = cfg_.match_method;

    const fs::path dir = paths_.output() / "ablation";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<ReconstructionResult> runs;
    for (int run = 0; run < cfg_.ablate_max_runs; ++run) {
        ReconstructionResult r = reconstruct(targets, segs, saliency, pool, sf, mp);
        for (int k = 0; k < static_cast<int>(ids.size()); ++k) {
            const Preview pv = render_preview(r, straight_ownership(r.segmentations[k], r, k), pool, k);
            char name[64];
            std::snprintf(name, sizeof name, "run_%03d_%s.png", run, ids[k].c_str());
            save_image(dir / name, pv.image);
        }
        log("[ablate] run " + std::to_string(run) + ": " + std::to_string(r.assignments.size()) + " placed, " +
            std::to_string(r.exhausted.size()) + " unplaced, mean cost " + std::to_string(r.mean_cost()));
        const bool done = r.any_exhausted();
        runs.push_back(std::move(r));
        if (done) break;
    }
    const auto stats = ablation_report(runs);
    std::vector<double> xs, ys;
    for (const auto& s : stats) {
        xs.push_back(s.run);
        ys.push_back(s.mean_cost);
    }
    const double rho = spearman(xs, ys);
    write_report_csv(stats, paths_.output() / "report.csv");
    write_report_plot(stats, paths_.output() / "report.png");
    Json j;
    j["runs"] = Json::array();
    for (const auto& s : stats)
        j["runs"].push_back({{"run", s.run}, {"assigned", s.assigned}, {"exhausted", s.exhausted},
                             {"mean_cost", s.mean_cost}, {"median_cost", s.median_cost}, {"p90_cost", s.p90_cost},
                             {"total_cost", s.total_cost}});
    j["spearman"] = rho;
    j["final_exhausted"] = !runs.empty() && runs.back().any_exhausted();
    write_json(paths_.output() / "ablation.json", j);
    log("[ablate] " + std::to_string(runs.size()) + " runs, Spearman rho of mean cost vs run " + std::to_string(rho));
    return kOk;
}

int Pipeline::all() {
    ingest();
    features();
    if (cfg_.segment == SegmentMode::Morph) morph();
    segment();
    const int code = match(true);
    seams();
    export_plan();
    return code;
}

}  // namespace parquetry
