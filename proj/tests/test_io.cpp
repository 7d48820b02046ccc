#include <gtest/gtest.h>

#include <random>

#include "parquetry/config.hpp"
#include "parquetry/error.hpp"
#include "parquetry/io.hpp"
#include "support.hpp"

using namespace parquetry;
using testing_support::random_gray;
using testing_support::TempDir;

TEST(Base64, KnownVectors) {
    auto enc = [](const std::string& s) { return base64_encode({s.begin(), s.end()}); };
    EXPECT_EQ(enc(""), "");
    EXPECT_EQ(enc("f"), "Zg==");
    EXPECT_EQ(enc("fo"), "Zm8=");
    EXPECT_EQ(enc("foo"), "Zm9v");
    EXPECT_EQ(enc("foob"), "Zm9vYg==");
    EXPECT_EQ(enc("fooba"), "Zm9vYmE=");
    EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
}

TEST(Base64, RoundTrip) {
    std::mt19937 rng(1);
    for (int n = 0; n < 70; ++n) {
        std::vector<unsigned char> bytes(n);
        for (auto& b : bytes) b = static_cast<unsigned char>(rng());
        EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
    }
}

TEST(Json, LabelMapRunLengthRoundTrip) {
    std::mt19937 rng(2);
    LabelMap m(23, 17);
    for (auto& v : m.labels) v = int(rng() % 4) - 1;
    const Json j = to_json(m);
    const LabelMap back = label_map_from_json(j);
    EXPECT_EQ(back.width, 23);
    EXPECT_EQ(back.height, 17);
    EXPECT_EQ(back.labels, m.labels);

    LabelMap flat(10, 10, 3);
    EXPECT_EQ(label_map_from_json(to_json(flat)).labels, flat.labels);
}

TEST(Json, ShapeAndBezier) {
    BinaryMask mask(7, 5);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) mask.set(x, y, (x + y) % 3 != 0);
    const Shape s = Shape::from_mask(mask);
    EXPECT_EQ(shape_from_json(to_json(s)), s);
    const CubicBezier c{{0.1, 0.2}, {1.0 / 3, 2.5}, {7.25, -1e-7}, {1e6, 3}};
    EXPECT_EQ(bezier_from_json(to_json(c)), c);
}

TEST(Json, SegmentationRoundTrip) {
    LabelMap labels(30, 24, 0);
    for (int y = 0; y < 24; ++y)
        for (int x = 15; x < 30; ++x) labels.at(x, y) = 1;
    const Segmentation seg = from_label_map(labels, {2, 2});
    const Segmentation grid = regular_grid(37, 29, 10, {2, 2});
    for (const Segmentation* s : std::vector<const Segmentation*>{&seg, &grid}) {
        const Json j = to_json(*s);
        const Segmentation back = segmentation_from_json(j);
        EXPECT_EQ(to_json(back), j);
        EXPECT_EQ(back.label_map().labels, s->label_map().labels);
        EXPECT_EQ(back.grid.has_value(), s->grid.has_value());
    }
}

TEST(Json, ReconstructionRoundTrip) {
    std::mt19937 rng(3);
    const Image target = gaussian_blur(random_gray(24, 24, rng), 1.0);
    const FeatureWeights w{0.5, 0.5};
    SourcePool pool;
    pool.kerf_px = 1;
    pool.sources.push_back(make_source("oak", random_gray(40, 40, rng), std::nullopt, {2, 360.0, 300.0}));
    const SourceFeatures f = compute_source_features(pool, w);
    MatchParams params;
    params.fab = {2, 2};
    const ReconstructionResult r = reconstruct({compute_feature_map(target, w)}, {regular_grid(24, 24, 8, {2, 2})},
                                               {saliency_map(target)}, pool, f, params);
    const Json j = to_json(r);
    const ReconstructionResult back = result_from_json(j);
    EXPECT_EQ(to_json(back), j);
    ASSERT_EQ(back.assignments.size(), r.assignments.size());
    for (size_t i = 0; i < r.assignments.size(); ++i) {
        EXPECT_EQ(back.assignments[i].cost.total, r.assignments[i].cost.total);
        EXPECT_EQ(back.assignments[i].placement().x, r.assignments[i].placement().x);
        EXPECT_EQ(back.assignments[i].source_id, "oak");
    }
    EXPECT_EQ(back.total_cost(), r.total_cost());
}

TEST(Json, MorphGridRoundTrip) {
    MorphParams p;
    p.w = 20;
    BinaryMask e(40, 40);
    for (int y = 0; y < 40; ++y) e.set(21, y, true);
    MorphState s = make_morph_state(40, 40, 10, e, p);
    relax(s, 500);
    const MorphGrid g = fit_grid_curves(s, e);
    const Json j = to_json(g);
    const MorphGrid back = grid_from_json(j);
    EXPECT_EQ(to_json(back), j);
    EXPECT_EQ(back.vertices, g.vertices);
    EXPECT_EQ(back.cells.size(), g.cells.size());
}

TEST(Json, DumpIsStableAndFileRoundTrips) {
    Json j = {{"b", 0.1 + 0.2}, {"a", {1, 2, 3}}};
    const std::string text = dump(j);
    EXPECT_EQ(text.back(), '\n');
    EXPECT_EQ(dump(Json::parse(text)), text);
    TempDir dir("json");
    write_json(dir.path / "x.json", j);
    const Json back = read_json(dir.path / "x.json");
    EXPECT_EQ(back["b"].get<double>(), 0.1 + 0.2);
    EXPECT_THROW(read_json(dir.path / "missing.json"), std::exception);
}

TEST(Config, EmitParseRoundTrip) {
    const Config d;
    EXPECT_EQ(parse_config(emit_config(d)), d);

    Config c;
    c.w_intens = 0.3;
    c.w_hist = 0;
    c.n_rot = 4;
    c.queue = QueuePolicy::CenterDistanceAsc;
    c.match_method = MatchMethod::Fft;
    c.segment = SegmentMode::Morph;
    c.morph.gamma = 0.25;
    c.continuity = Continuity::G0;
    c.seams = false;
    c.s_image = 1.0 / 3.0;
    EXPECT_EQ(parse_config(emit_config(c)), c);

    TempDir dir("cfg");
    save_config(c, dir.path / "parquetry.cfg");
    EXPECT_EQ(load_config(dir.path / "parquetry.cfg"), c);
}

TEST(Config, ParsesCommentsAndWhitespace) {
    const Config c = parse_config("# header\n\n  n_rot =  3   # trailing\nqueue=center\r\nseams = off\n");
    EXPECT_EQ(c.n_rot, 3);
    EXPECT_EQ(c.queue, QueuePolicy::CenterDistanceAsc);
    EXPECT_FALSE(c.seams);
    EXPECT_EQ(c.w_intens, Config{}.w_intens);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse_config("nonsense = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("n_rot = three\n"), ConfigError);
    EXPECT_THROW(parse_config("n_rot = 2.5\n"), ConfigError);
    EXPECT_THROW(parse_config("queue = random\n"), ConfigError);
    EXPECT_THROW(parse_config("seams = maybe\n"), ConfigError);
    EXPECT_THROW(parse_config("just a line\n"), ConfigError);
    EXPECT_THROW(parse_config("w_edge = 1.5\n"), ConfigError);
    EXPECT_THROW(parse_config("s_patch = 4\n"), ConfigError);
    EXPECT_THROW(parse_config("n_rot = 0\n"), ConfigError);
    EXPECT_THROW(parse_config("rot_span = 400\n"), ConfigError);
    Config c;
    EXPECT_THROW(set_config_value(c, "kerf", "1"), ConfigError);
    TempDir dir("cfg");
    EXPECT_THROW(load_config(dir.path / "absent.cfg"), ConfigError);
}

TEST(Config, EntriesCoverEveryKey) {
    const auto entries = config_entries(Config{});
    Config c;
    for (const auto& [k, v] : entries) EXPECT_NO_THROW(set_config_value(c, k, v)) << k;
    EXPECT_EQ(c, Config{});
    EXPECT_GE(entries.size(), 30u);
}

TEST(Config, PatchPixels) {
    Config c;
    c.dpi = 300;
    c.s_patch = 14;
    EXPECT_EQ(c.patch_px(), 165);
}
