#include "parquetry/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <httplib.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "parquetry/error.hpp"
#include "parquetry/export.hpp"
#include "parquetry/features.hpp"
#include "parquetry/io.hpp"
#include "parquetry/match.hpp"
#include "parquetry/morph.hpp"
#include "parquetry/seams.hpp"

namespace parquetry {

namespace fs = std::filesystem;

namespace {

constexpr int kDraftWidth = 128;
constexpr int kDraftRotations = 4;

struct Session {
    std::string id;
    fs::path dir;
    Config cfg;
    std::vector<unsigned char> target_bytes;
    Image target;
    BinaryMask e_rg, e_bilateral;

    std::mutex mu;  // guards everything below except `state`
    std::condition_variable idle;
    BinaryMask m_rg, m_bilateral;
    int latest = 0;  // last version handed out
    int ready = 0;   // last version with a finished grid
    std::string grid_json;
    bool converged = false;
    std::map<int, std::pair<std::vector<unsigned char>, double>> previews;

    std::mutex mutation;  // one mask update at a time
    MorphState state;     // owned by the worker while it runs
    std::thread worker;
    std::atomic<bool> cancel{false};
    std::atomic<bool> running{false};
};

Json error_body(const std::string& msg) { return {{"error", msg}}; }

void reply(httplib::Response& res, int status, const Json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

std::vector<unsigned char> watermarked_png(const Image& img) {
    cv::Mat m(img.height, img.width, CV_8UC3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const float v = img.at(x, y, std::min(c, img.channels - 1));
                // BGR order for OpenCV
                m.at<cv::Vec3b>(y, x)[2 - c] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255));
            }
    const double scale = std::max(0.3, img.width / 160.0);
    int base = 0;
    const cv::Size ts = cv::getTextSize("draft", cv::FONT_HERSHEY_SIMPLEX, scale, 1, &base);
    const cv::Point at(std::max(1, img.width - ts.width - 2), std::max(ts.height + 1, img.height - base - 2));
    cv::putText(m, "draft", at, cv::FONT_HERSHEY_SIMPLEX, scale, cv::Scalar(0, 0, 0), 2, cv::LINE_8);
    cv::putText(m, "draft", at, cv::FONT_HERSHEY_SIMPLEX, scale, cv::Scalar(255, 255, 255), 1, cv::LINE_8);
    std::vector<unsigned char> buf;
    cv::imencode(".png", m, buf);
    return buf;
}

}  // namespace

struct Service::Impl {
    fs::path project;
    Config cfg;
    httplib::Server server;
    std::thread server_thread;

    mutable std::mutex sessions_mu;
    std::map<std::string, std::shared_ptr<Session>> sessions;
    int next_id = 1;

    std::mutex pool_mu;
    std::map<int, SourcePool> draft_pools;  // keyed by draft width / target width in 1/1000

    Impl(fs::path p, Config c) : project(std::move(p)), cfg(std::move(c)) {
        rehydrate();
        routes();
    }

    ~Impl() {
        server.stop();
        if (server_thread.joinable()) server_thread.join();
        std::lock_guard lk(sessions_mu);
        for (auto& [id, s] : sessions) {
            s->cancel = true;
            if (s->worker.joinable()) s->worker.join();
        }
    }

    std::shared_ptr<Session> find(const std::string& id) const {
        std::lock_guard lk(sessions_mu);
        const auto it = sessions.find(id);
        return it == sessions.end() ? nullptr : it->second;
    }

    static BinaryMask edges_of(const Session& s) {
        return combine_edges(s.e_rg, s.m_rg, s.e_bilateral, s.m_bilateral);
    }

    static std::string grid_text(const MorphGrid& g, int version, bool converged) {
        Json j = to_json(g);
        j["version"] = version;
        j["converged"] = converged;
        return j.dump();
    }

    // Caller holds s.mu.
    static void persist(Session& s) {
        fs::create_directories(s.dir);
        Json cfg = Json::object();
        for (const auto& [k, v] : config_entries(s.cfg)) cfg[k] = v;
        write_json(s.dir / "session.json",
                   {{"id", s.id}, {"version", s.ready}, {"converged", s.converged}, {"config", cfg}});
        save_mask(s.dir / "m_rg.png", s.m_rg);
        save_mask(s.dir / "m_bilateral.png", s.m_bilateral);
        std::ofstream(s.dir / "grid.json", std::ios::binary) << s.grid_json;
    }

    void rehydrate() {
        const fs::path root = project / "sessions";
        if (!fs::is_directory(root)) return;
        std::vector<fs::path> dirs;
        for (const auto& e : fs::directory_iterator(root))
            if (e.is_directory() && fs::exists(e.path() / "session.json")) dirs.push_back(e.path());
        std::sort(dirs.begin(), dirs.end());
        for (const auto& d : dirs) {
            try {
                const Json j = read_json(d / "session.json");
                auto s = std::make_shared<Session>();
                s->id = j.at("id");
                s->dir = d;
                s->cfg = cfg;
                for (const auto& [k, v] : j.at("config").items()) set_config_value(s->cfg, k, v.get<std::string>());
                s->target_bytes = read_bytes(d / "target.img");
                s->target = decode_image(s->target_bytes, s->cfg.dpi);
                detect_edges(s->target, s->cfg.edges, s->e_rg, s->e_bilateral);
                s->m_rg = load_mask(d / "m_rg.png");
                s->m_bilateral = load_mask(d / "m_bilateral.png");
                std::ifstream gin(d / "grid.json", std::ios::binary);
                s->grid_json.assign(std::istreambuf_iterator<char>(gin), std::istreambuf_iterator<char>());
                const Json gj = Json::parse(s->grid_json);
                const MorphGrid g = grid_from_json(gj);
                s->state = make_morph_state(s->target.width, s->target.height, s->cfg.patch_px(), edges_of(*s),
                                            s->cfg.morph);
                if (g.vertices.size() == s->state.pos.size()) s->state.pos = g.vertices;
                s->latest = s->ready = j.at("version");
                s->converged = j.at("converged");
                sessions[s->id] = s;
                if (s->id.size() > 1 && s->id[0] == 's')
                    next_id = std::max(next_id, std::atoi(s->id.c_str() + 1) + 1);
            } catch (const std::exception&) {
                // unreadable snapshot; leave it on disk for inspection
            }
        }
    }

    void relax_worker(std::shared_ptr<Session> s, int version, BinaryMask e) {
        const RelaxStats st = relax(s->state, s->cfg.morph.max_steps, &s->cancel);
        if (!st.cancelled) {
            const MorphGrid g = fit_grid_curves(s->state, e, Fabricability::at_dpi(s->cfg.dpi));
            std::lock_guard lk(s->mu);
            if (version == s->latest) {
                s->ready = version;
                s->converged = st.converged;
                s->grid_json = grid_text(g, version, st.converged);
                s->previews.clear();
                persist(*s);
            }
        }
        std::lock_guard lk(s->mu);
        s->running = false;
        s->idle.notify_all();
    }

    void create_session(const httplib::Request& req, httplib::Response& res) {
        Json body;
        try {
            body = Json::parse(req.body);
        } catch (const Json::exception&) {
            return reply(res, 400, error_body("request body must be JSON"));
        }
        auto s = std::make_shared<Session>();
        s->cfg = cfg;
        try {
            if (!body.contains("target") || !body["target"].is_string())
                throw InputError("field 'target' must hold a base64 image");
            s->target_bytes = base64_decode(body["target"].get<std::string>());
            if (body.contains("config")) {
                for (const auto& [k, v] : body["config"].items())
                    set_config_value(s->cfg, k, v.is_string() ? v.get<std::string>() : v.dump());
                s->cfg.validate();
            }
            s->target = decode_image(s->target_bytes, s->cfg.dpi);
            if (s->target.width < 1 || s->target.height < 1) throw InputError("empty target image");
        } catch (const std::exception& e) {
            return reply(res, 400, error_body(e.what()));
        }
        detect_edges(s->target, s->cfg.edges, s->e_rg, s->e_bilateral);
        s->m_rg = BinaryMask(s->target.width, s->target.height);
        s->m_bilateral = BinaryMask(s->target.width, s->target.height);
        const BinaryMask e = edges_of(*s);
        try {
            s->state = make_morph_state(s->target.width, s->target.height, s->cfg.patch_px(), e, s->cfg.morph);
        } catch (const std::exception& ex) {
            return reply(res, 400, error_body(ex.what()));
        }
        const MorphGrid g = fit_grid_curves(s->state, e, Fabricability::at_dpi(s->cfg.dpi));
        {
            std::lock_guard lk(sessions_mu);
            s->id = "s" + std::to_string(next_id++);
            s->dir = project / "sessions" / s->id;
            sessions[s->id] = s;
        }
        {
            std::lock_guard lk(s->mu);
            s->converged = true;
            s->grid_json = grid_text(g, 0, true);
            fs::create_directories(s->dir);
            write_bytes(s->dir / "target.img", s->target_bytes);
            persist(*s);
        }
        reply(res, 201,
              {{"session_id", s->id},
               {"width", s->target.width},
               {"height", s->target.height},
               {"grid_version", 0},
               {"edge_images",
                {{"rg", base64_encode(encode_png(s->e_rg))}, {"bilateral", base64_encode(encode_png(s->e_bilateral))}}}});
    }

    void put_masks(Session& s, std::shared_ptr<Session> sp, const httplib::Request& req, httplib::Response& res) {
        BinaryMask m_rg, m_bil;
        try {
            const Json body = Json::parse(req.body);
            m_rg = decode_mask(base64_decode(body.at("m_rg").get<std::string>()));
            m_bil = decode_mask(base64_decode(body.at("m_bilateral").get<std::string>()));
        } catch (const std::exception& e) {
            return reply(res, 400, error_body(std::string("masks: ") + e.what()));
        }
        for (const BinaryMask* m : {&m_rg, &m_bil})
            if (m->width != s.target.width || m->height != s.target.height)
                return reply(res, 400, error_body("mask is " + std::to_string(m->width) + "x" + std::to_string(m->height) +
                                                  ", target is " + std::to_string(s.target.width) + "x" +
                                                  std::to_string(s.target.height)));

        std::unique_lock mutation(s.mutation, std::try_to_lock);
        if (!mutation.owns_lock()) return reply(res, 409, error_body("another mask update is in flight; retry"));
        {
            std::unique_lock lk(s.mu);
            if (s.running) {
                s.cancel = true;
                if (!s.idle.wait_for(lk, std::chrono::seconds(2), [&] { return !s.running.load(); }))
                    return reply(res, 409, error_body("previous relaxation is still being cancelled; retry"));
            }
        }
        if (s.worker.joinable()) s.worker.join();
        s.cancel = false;

        int version = 0;
        BinaryMask e;
        {
            std::lock_guard lk(s.mu);
            s.m_rg = std::move(m_rg);
            s.m_bilateral = std::move(m_bil);
            e = edges_of(s);
            version = std::max(s.latest, s.ready) + 1;
            s.latest = version;
            s.running = true;
        }
        set_edges(s.state, e);
        s.worker = std::thread([this, sp, version, e] { relax_worker(sp, version, e); });
        reply(res, 200, {{"grid_version", version}});
    }

    void get_grid(Session& s, const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lk(s.mu);
        int v = s.ready;
        if (req.has_param("version")) {
            try {
                v = std::stoi(req.get_param_value("version"));
            } catch (const std::exception&) {
                return reply(res, 400, error_body("version must be an integer"));
            }
        }
        if (v == s.ready) {
            res.status = 200;
            res.set_content(s.grid_json, "application/json");
            return;
        }
        if (v == s.latest && s.latest > s.ready)
            return reply(res, 202, {{"status", "relaxing"}, {"version", v}, {"ready_version", s.ready}});
        reply(res, 404, {{"error", "stale or unknown grid version"}, {"ready_version", s.ready}, {"latest_version", s.latest}});
    }

    const SourcePool& draft_pool(double scale) {
        const int key = static_cast<int>(std::lround(scale * 1000));
        std::lock_guard lk(pool_mu);
        if (auto it = draft_pools.find(key); it != draft_pools.end()) return it->second;
        const SourcePool full = load_project_sources(project, {1, 360.0, cfg.dpi}, cfg.kerf_px);
        SourcePool pool;
        pool.kerf_px = cfg.kerf_px;
        const IngestOptions opt{kDraftRotations, 360.0, cfg.dpi * scale};
        for (const auto& src : full.sources) {
            const int w = std::max(1, static_cast<int>(std::lround(src.base.width * scale)));
            const int h = std::max(1, static_cast<int>(std::lround(src.base.height * scale)));
            Image base = resize_image(src.base, w, h);
            base.dpi = opt.dpi;
            pool.sources.push_back(make_source(src.id, std::move(base), resize_mask(src.usable, w, h), opt));
        }
        return draft_pools.emplace(key, std::move(pool)).first->second;
    }

    void preview(Session& s, const httplib::Request& req, httplib::Response& res) {
        int v = 0;
        std::string grid;
        {
            std::lock_guard lk(s.mu);
            v = s.ready;
            if (!req.body.empty()) {
                try {
                    const Json body = Json::parse(req.body);
                    if (body.contains("version")) v = body.at("version").get<int>();
                } catch (const std::exception&) {
                    return reply(res, 400, error_body("request body must be JSON with an integer version"));
                }
            }
            if (req.has_param("version")) v = std::atoi(req.get_param_value("version").c_str());
            if (v != s.ready) {
                if (v == s.latest && s.latest > s.ready) return reply(res, 202, {{"status", "relaxing"}, {"version", v}});
                return reply(res, 404, {{"error", "stale or unknown grid version"}, {"ready_version", s.ready}});
            }
            if (auto it = s.previews.find(v); it != s.previews.end()) {
                res.set_header("X-Grid-Version", std::to_string(v));
                res.set_header("X-Preview-Cost", std::to_string(it->second.second));
                res.set_content(std::string(it->second.first.begin(), it->second.first.end()), "image/png");
                return;
            }
            grid = s.grid_json;
        }

        const double scale = std::min(1.0, static_cast<double>(kDraftWidth) / s.target.width);
        const int w = std::max(1, static_cast<int>(std::lround(s.target.width * scale)));
        const int h = std::max(1, static_cast<int>(std::lround(s.target.height * scale)));
        SourcePool pool;
        try {
            pool = draft_pool(scale);  // scratch copy; the project pool is never touched
        } catch (const std::exception& e) {
            return reply(res, 409, error_body(std::string("no source panels for a preview: ") + e.what()));
        }
        Image target = resize_image(s.target, w, h);

        const MorphGrid g = grid_from_json(Json::parse(grid));
        const LabelMap full = rasterize_grid(g);
        LabelMap small(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                small.at(x, y) = full.at(std::min(full.width - 1, static_cast<int>((x + 0.5) * full.width / w)),
                                         std::min(full.height - 1, static_cast<int>((y + 0.5) * full.height / h)));
        const Fabricability loose{1, 1};
        Segmentation seg;
        try {
            seg = from_label_map(small, loose, SegmentationKind::Morphed);
        } catch (const FabricabilityError&) {
            seg = regular_grid(w, h, std::max(2, static_cast<int>(std::lround(g.spacing * scale))), loose);
        }

        const SourceFeatures sf = compute_source_features(pool, s.cfg.weights());
        const FeatureMap tfm = target_features(target, build_gamut_map(target, pool, s.cfg.w_hist), s.cfg.weights());
        MatchParams mp;
        mp.policy = s.cfg.queue;
        mp.fab = loose;
        const ReconstructionResult r = reconstruct({tfm}, {seg}, {saliency_map(target)}, pool, sf, mp);
        const Preview pv = render_preview(r, straight_ownership(r.segmentations[0], r, 0), pool, 0);
        long area = 0;
        for (const auto& reg : r.segmentations[0].regions)
            if (r.find(0, reg.id)) area += reg.area();
        const double per_pixel = area > 0 ? r.total_cost() / area : 0.0;
        auto png = watermarked_png(pv.image);
        {
            std::lock_guard lk(s.mu);
            if (s.ready == v) s.previews[v] = {png, per_pixel};
        }
        res.set_header("X-Grid-Version", std::to_string(v));
        res.set_header("X-Preview-Cost", std::to_string(per_pixel));
        res.set_header("X-Unassigned-Pixels", std::to_string(pv.unassigned));
        res.set_content(std::string(png.begin(), png.end()), "image/png");
    }

    void routes() {
        server.Post("/session", [this](const httplib::Request& req, httplib::Response& res) { create_session(req, res); });

        auto with_session = [this](auto fn) {
            return [this, fn](const httplib::Request& req, httplib::Response& res) {
                auto s = find(req.matches[1]);
                if (!s) return reply(res, 404, error_body("unknown session"));
                fn(s, req, res);
            };
        };

        server.Get(R"(/session/([A-Za-z0-9_-]+))", with_session([](std::shared_ptr<Session> s, const httplib::Request&,
                                                                   httplib::Response& res) {
            std::lock_guard lk(s->mu);
            reply(res, 200, {{"session_id", s->id}, {"width", s->target.width}, {"height", s->target.height},
                             {"latest_version", s->latest}, {"ready_version", s->ready},
                             {"relaxing", s->running.load()}, {"converged", s->converged}});
        }));
        server.Put(R"(/session/([A-Za-z0-9_-]+)/masks)",
                   with_session([this](std::shared_ptr<Session> s, const httplib::Request& req, httplib::Response& res) {
                       put_masks(*s, s, req, res);
                   }));
        server.Get(R"(/session/([A-Za-z0-9_-]+)/masks)",
                   with_session([](std::shared_ptr<Session> s, const httplib::Request&, httplib::Response& res) {
                       std::lock_guard lk(s->mu);
                       reply(res, 200, {{"m_rg", base64_encode(encode_png(s->m_rg))},
                                        {"m_bilateral", base64_encode(encode_png(s->m_bilateral))},
                                        {"version", s->latest}});
                   }));
        server.Get(R"(/session/([A-Za-z0-9_-]+)/grid)",
                   with_session([this](std::shared_ptr<Session> s, const httplib::Request& req, httplib::Response& res) {
                       get_grid(*s, req, res);
                   }));
        server.Post(R"(/session/([A-Za-z0-9_-]+)/preview)",
                    with_session([this](std::shared_ptr<Session> s, const httplib::Request& req, httplib::Response& res) {
                        try {
                            preview(*s, req, res);
                        } catch (const std::exception& e) {
                            reply(res, 500, error_body(e.what()));
                        }
                    }));
        if (fs::is_directory(project / "ui")) server.set_mount_point("/ui", (project / "ui").string());
    }
};

Service::Service(fs::path project, Config config) : impl_(std::make_unique<Impl>(std::move(project), std::move(config))) {}

Service::~Service() = default;

int Service::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw InputError("cannot bind " + host + ":" + std::to_string(port));
    impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void Service::stop() {
    impl_->server.stop();
    if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

int Service::session_count() const {
    std::lock_guard lk(impl_->sessions_mu);
    return static_cast<int>(impl_->sessions.size());
}

}  // namespace parquetry
