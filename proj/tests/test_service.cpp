#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "parquetry/demo.hpp"
#include "parquetry/io.hpp"
#include "parquetry/morph.hpp"
#include "parquetry/pipeline.hpp"
#include "parquetry/service.hpp"
#include "support.hpp"

using namespace parquetry;
using testing_support::TempDir;
namespace fs = std::filesystem;

namespace {

std::string b64(const std::vector<unsigned char>& bytes) { return base64_encode(bytes); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Image step_target(int w, int h, int col) {
    Image img(w, h, 1, 0.2f);
    for (int y = 0; y < h; ++y)
        for (int x = col; x < w; ++x) img.at(x, y) = 0.8f;
    return img;
}

struct Server {
    TempDir dir{"svc"};
    Config cfg;
    std::unique_ptr<Service> service;
    int port = 0;

    Server() {
        write_demo_project(dir.path);
        cfg = demo_config();
        restart();
    }
    void restart() {
        if (service) service->stop();
        service.reset();
        service = std::make_unique<Service>(dir.path, cfg);
        port = service->start("127.0.0.1", 0);
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(120, 0);
        return c;
    }
};

Json post_session(const httplib::Client& c0, const Image& target, const Json& config = Json::object()) {
    auto& c = const_cast<httplib::Client&>(c0);
    Json body = {{"target", b64(encode_png(target))}};
    if (!config.empty()) body["config"] = config;
    auto res = c.Post("/session", body.dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 201) << res->body;
    return Json::parse(res->body);
}

int put_masks(httplib::Client& c, const std::string& id, const BinaryMask& rg, const BinaryMask& bil) {
    const Json body = {{"m_rg", b64(encode_png(rg))}, {"m_bilateral", b64(encode_png(bil))}};
    auto res = c.Put("/session/" + id + "/masks", body.dump(), "application/json");
    EXPECT_TRUE(res);
    EXPECT_EQ(res->status, 200) << res->body;
    return Json::parse(res->body).at("grid_version").get<int>();
}

Json wait_grid(httplib::Client& c, const std::string& id, int version) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
    while (std::chrono::steady_clock::now() < deadline) {
        auto res = c.Get("/session/" + id + "/grid?version=" + std::to_string(version));
        if (res && res->status == 200) return Json::parse(res->body);
        EXPECT_TRUE(res && res->status == 202) << (res ? res->body : "no response");
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ADD_FAILURE() << "grid version " << version << " never became ready";
    return {};
}

}  // namespace

TEST(Service, CreateSessionReturnsEdgeImages) {
    Server srv;
    auto c = srv.client();
    const Image target = demo_target(64);
    const Json j = post_session(c, target);
    EXPECT_EQ(j["grid_version"], 0);
    for (const char* k : {"rg", "bilateral"}) {
        const auto bytes = base64_decode(j["edge_images"][k].get<std::string>());
        const BinaryMask m = decode_mask(bytes);
        EXPECT_EQ(m.width, 64);
        EXPECT_EQ(m.height, 64);
    }
    EXPECT_EQ(srv.service->session_count(), 1);
}

TEST(Service, MalformedRequestsRejected) {
    Server srv;
    auto c = srv.client();
    EXPECT_EQ(c.Post("/session", "not json", "application/json")->status, 400);
    EXPECT_EQ(c.Post("/session", Json{{"nope", 1}}.dump(), "application/json")->status, 400);
    EXPECT_EQ(c.Post("/session", Json{{"target", "AAAA"}}.dump(), "application/json")->status, 400);
    const Json bad_cfg = {{"target", b64(encode_png(demo_target(64)))}, {"config", {{"w_edge", "7"}}}};
    EXPECT_EQ(c.Post("/session", bad_cfg.dump(), "application/json")->status, 400);
    EXPECT_EQ(c.Get("/session/s999")->status, 404);
    EXPECT_EQ(srv.service->session_count(), 0);
}

TEST(Service, EmptyMasksKeepRegularGrid) {
    Server srv;
    auto c = srv.client();
    const std::string id = post_session(c, demo_target(64))["session_id"];
    const BinaryMask none(64, 64);
    const int v = put_masks(c, id, none, none);
    EXPECT_EQ(v, 1);
    const MorphGrid g = grid_from_json(wait_grid(c, id, v));
    const MorphState rest = make_morph_state(64, 64, srv.cfg.patch_px(), none, srv.cfg.morph);
    ASSERT_EQ(g.vertices.size(), rest.rest.size());
    for (size_t i = 0; i < g.vertices.size(); ++i) {
        EXPECT_NEAR(g.vertices[i].x, rest.rest[i].x, 1e-6);
        EXPECT_NEAR(g.vertices[i].y, rest.rest[i].y, 1e-6);
    }
    EXPECT_EQ(rasterize_grid(g).labels, regular_grid(64, 64, srv.cfg.patch_px(), {1, 1}).label_map().labels);
}

TEST(Service, SelectedEdgeAttractsVertices) {
    Server srv;
    auto c = srv.client();
    const std::string id = post_session(c, step_target(60, 60, 21), {{"morph_w", "20"}})["session_id"];
    const int v = put_masks(c, id, BinaryMask(60, 60, true), BinaryMask(60, 60));
    const MorphGrid g = grid_from_json(wait_grid(c, id, v));
    int snapped = 0;
    for (size_t i = 0; i < g.vertices.size(); ++i)
        if (g.snapped[i]) {
            ++snapped;
            EXPECT_NEAR(g.vertices[i].x, 20.5, 1.0);
        }
    EXPECT_GE(snapped, 3);
}

TEST(Service, MaskValidationAndRoundTrip) {
    Server srv;
    auto c = srv.client();
    const std::string id = post_session(c, demo_target(64))["session_id"];
    const Json big = {{"m_rg", b64(encode_png(BinaryMask(65, 64)))}, {"m_bilateral", b64(encode_png(BinaryMask(64, 64)))}};
    EXPECT_EQ(c.Put("/session/" + id + "/masks", big.dump(), "application/json")->status, 400);
    EXPECT_EQ(c.Put("/session/" + id + "/masks", "{}", "application/json")->status, 400);

    std::mt19937 rng(5);
    BinaryMask rg(64, 64), bil(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            rg.set(x, y, rng() % 2);
            bil.set(x, y, rng() % 3 == 0);
        }
    const int v = put_masks(c, id, rg, bil);
    const Json got = Json::parse(c.Get("/session/" + id + "/masks")->body);
    EXPECT_EQ(decode_mask(base64_decode(got["m_rg"].get<std::string>())).bits, rg.bits);
    EXPECT_EQ(decode_mask(base64_decode(got["m_bilateral"].get<std::string>())).bits, bil.bits);
    EXPECT_EQ(got["version"], v);
    wait_grid(c, id, v);
}

TEST(Service, VersionsAndStaleness) {
    Server srv;
    auto c = srv.client();
    const std::string id = post_session(c, demo_target(64))["session_id"];
    const BinaryMask all(64, 64, true), none(64, 64);
    const int v1 = put_masks(c, id, all, none);
    wait_grid(c, id, v1);
    const int v2 = put_masks(c, id, none, all);
    EXPECT_EQ(v2, v1 + 1);
    const Json g2 = wait_grid(c, id, v2);
    EXPECT_EQ(g2["version"], v2);
    EXPECT_EQ(c.Get("/session/" + id + "/grid?version=" + std::to_string(v1))->status, 404);
    EXPECT_EQ(c.Get("/session/" + id + "/grid?version=99")->status, 404);
    EXPECT_EQ(c.Post("/session/" + id + "/preview", Json{{"version", v1}}.dump(), "application/json")->status, 404);
}

TEST(Service, SessionsAreIndependent) {
    Server srv;
    auto c = srv.client();
    const std::string a = post_session(c, demo_target(64))["session_id"];
    const std::string b = post_session(c, demo_target(64))["session_id"];
    EXPECT_NE(a, b);
    const int v = put_masks(c, a, BinaryMask(64, 64, true), BinaryMask(64, 64, true));
    wait_grid(c, a, v);
    const Json sb = Json::parse(c.Get("/session/" + b)->body);
    EXPECT_EQ(sb["ready_version"], 0);
    const Json mb = Json::parse(c.Get("/session/" + b + "/masks")->body);
    EXPECT_FALSE(decode_mask(base64_decode(mb["m_rg"].get<std::string>())).any());
    EXPECT_EQ(srv.service->session_count(), 2);
}

TEST(Service, PreviewDeterministicCheapAndPoolUntouched) {
    Server srv;
    // Full-resolution reference on the project's own pipeline.
    Pipeline p(srv.dir.path, srv.cfg);
    p.log = [](const std::string&) {};
    p.ingest();
    p.features();
    p.segment();
    ASSERT_EQ(p.match(true), kOk);
    const ReconstructionResult full = result_from_json(read_json(srv.dir.path / "work" / "match.json").at("result"));
    const double full_cost = full.total_cost() / (64.0 * 64.0);
    const std::string pool_before = slurp(p.paths().pool_state());

    auto c = srv.client();
    const Image target = load_image(srv.dir.path / "work" / "targets" / "demo.png", srv.cfg.dpi);
    const std::string id = post_session(c, target)["session_id"];
    auto r1 = c.Post("/session/" + id + "/preview", "{}", "application/json");
    ASSERT_EQ(r1->status, 200) << r1->body;
    EXPECT_EQ(r1->get_header_value("Content-Type"), "image/png");
    const double draft_cost = std::stod(r1->get_header_value("X-Preview-Cost"));
    EXPECT_GT(draft_cost, 0.0);
    EXPECT_LE(draft_cost, 2.0 * full_cost);
    EXPECT_GE(draft_cost, 0.5 * full_cost);
    auto r2 = c.Post("/session/" + id + "/preview", Json{{"version", 0}}.dump(), "application/json");
    EXPECT_EQ(r2->body, r1->body);
    EXPECT_EQ(slurp(p.paths().pool_state()), pool_before);

    // A fresh server renders the same bytes for the same version.
    srv.restart();
    auto c2 = srv.client();
    auto r3 = c2.Post("/session/" + id + "/preview", "{}", "application/json");
    ASSERT_EQ(r3->status, 200);
    EXPECT_EQ(r3->body, r1->body);
}

TEST(Service, RehydratesAfterRestart) {
    Server srv;
    std::string id;
    int v = 0;
    BinaryMask rg(64, 64);
    for (int y = 10; y < 30; ++y)
        for (int x = 5; x < 50; ++x) rg.set(x, y, true);
    std::string grid;
    {
        auto c = srv.client();
        id = post_session(c, demo_target(64))["session_id"];
        v = put_masks(c, id, rg, BinaryMask(64, 64));
        grid = wait_grid(c, id, v).dump();
    }
    srv.restart();
    EXPECT_EQ(srv.service->session_count(), 1);
    auto c = srv.client();
    const Json st = Json::parse(c.Get("/session/" + id)->body);
    EXPECT_EQ(st["ready_version"], v);
    EXPECT_EQ(wait_grid(c, id, v).dump(), grid);
    const Json m = Json::parse(c.Get("/session/" + id + "/masks")->body);
    EXPECT_EQ(decode_mask(base64_decode(m["m_rg"].get<std::string>())).bits, rg.bits);
    // New sessions do not reuse the id.
    EXPECT_NE(post_session(c, demo_target(64))["session_id"].get<std::string>(), id);
}
