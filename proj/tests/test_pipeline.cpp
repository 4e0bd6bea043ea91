#include <cstdlib>
#include <fstream>
#include <regex>

#include <gtest/gtest.h>

#include "cli/run.hpp"
#include "dancelift/config.hpp"
#include "dancelift/io.hpp"
#include "dancelift/manifest.hpp"
#include "dancelift/model_io.hpp"
#include "dancelift/render.hpp"
#include "dancelift/synth.hpp"

namespace dl = dancelift;
namespace io = dancelift::io;
namespace fs = std::filesystem;
using dl::ErrorKind;

namespace {

/// Fresh scratch directory per test.
fs::path scratch() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    const fs::path p = fs::temp_directory_path() / "dancelift_tests" / (std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const dl::Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no dancelift::Error thrown";
    return ErrorKind::InvalidArgument;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const dl::Error& e) {
        return e.what();
    }
    return "";
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

dl::SynthClip small_clip(std::uint64_t seed, double sigma = 0.0) {
    dl::MotionConfig m;
    m.frames = 12;
    m.noise_sigma = sigma;
    m.seed = seed;
    return dl::gen_motion(m);
}

/// Every regular file below `dir` except manifests, keyed by relative path.
std::map<std::string, std::string> tree_contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json")
            out[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
    return out;
}

dl::cli::Options opts(std::vector<std::string> inputs, const fs::path& out, std::vector<std::string> sets = {}) {
    dl::cli::Options o;
    o.inputs = std::move(inputs);
    o.output = out.string();
    o.sets = std::move(sets);
    return o;
}

} // namespace

// ---- file formats -----------------------------------------------------------------------

TEST(Formats, Pose2DRoundTripIsExact) {
    const fs::path d = scratch();
    const auto clip = small_clip(5, 2.0);
    dl::PoseSeq2D seq = clip.poses2d;
    seq[3].confidence[7] = 0.0;
    io::write_pose2d(d / "p.jsonl", seq, {{"track", 4}});
    io::json h;
    const auto back = io::read_pose2d(d / "p.jsonl", &h);
    EXPECT_EQ(h["track"], 4);
    ASSERT_EQ(back.size(), seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) {
        EXPECT_EQ(back[t].frame_index, seq[t].frame_index);
        for (int j = 0; j < dl::kNumJoints; ++j) {
            EXPECT_EQ(back[t].joints[j], seq[t].joints[j]);
            EXPECT_EQ(back[t].confidence[j], seq[t].confidence[j]);
        }
    }
}

TEST(Formats, Pose3DCameraLabelsRoundTrip) {
    const fs::path d = scratch();
    const auto clip = small_clip(6);
    io::write_pose3d(d / "p.jsonl", clip.poses3d);
    const auto p3 = io::read_pose3d(d / "p.jsonl");
    for (std::size_t t = 0; t < p3.size(); ++t)
        for (int j = 0; j < dl::kNumJoints; ++j) EXPECT_EQ(p3[t].joints[j], clip.poses3d[t].joints[j]);

    io::write_camera(d / "camera.json", {clip.camera, 256, 256});
    const auto cam = io::read_camera(d / "camera.json");
    EXPECT_EQ(cam.camera.fx, clip.camera.fx);
    EXPECT_EQ(cam.camera.cy, clip.camera.cy);

    const dl::LabelSeq labels = dl::gen_genre_labels(2, 15, 9);
    io::write_labels(d / "m.jsonl", labels);
    const auto lb = io::read_labels(d / "m.jsonl");
    EXPECT_EQ(lb.genre, 2);
    EXPECT_EQ(lb.frames, labels.frames);
}

TEST(Formats, TracksBoxesDetectionsRoundTrip) {
    const fs::path d = scratch();
    const std::vector<dl::Box> boxes = {{1.5, 2.25, 30, 60}, {100, 50, 20.125, 40}};
    io::write_boxes(d / "b.json", 3, boxes);
    int frame = -1;
    const auto b = io::read_boxes(d / "b.json", &frame);
    EXPECT_EQ(frame, 3);
    ASSERT_EQ(b.size(), 2u);
    EXPECT_EQ(b[1].w, 20.125);

    std::vector<std::vector<dl::TrackRecord>> rec = {{{3, 0, boxes[0], dl::TrackStatus::Tracking},
                                                       {3, 1, boxes[1], dl::TrackStatus::Occluded}}};
    io::write_tracks(d / "t.jsonl", rec, {});
    const auto t = io::read_tracks(d / "t.jsonl");
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0][1].status, dl::TrackStatus::Occluded);
    EXPECT_EQ(t[0][0].box.x, 1.5);

    io::Detections det;
    det.frames.push_back({0, {std::vector<std::array<double, 3>>(dl::kNumJoints, {1.0, 2.0, 0.5})}});
    io::write_detections(d / "d.jsonl", det);
    const auto back = io::read_detections(d / "d.jsonl");
    EXPECT_EQ(back.mapping, "body25-identity");
    ASSERT_EQ(back.frames.size(), 1u);
    EXPECT_EQ(back.frames[0].candidates[0][24][2], 0.5);
}

TEST(Formats, SeventeenDigitsAndNoNonFinite) {
    EXPECT_EQ(io::format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(std::stod(io::format_number(1.0 / 3.0)), 1.0 / 3.0);
    EXPECT_EQ(kind_of([] { io::format_number(std::nan("")); }), ErrorKind::Format);
}

TEST(Formats, PpmRoundTrip) {
    const fs::path d = scratch();
    dl::Image img(5, 3, {10, 20, 30});
    img.at(4, 2) = {255, 0, 7};
    io::write_ppm(d / "f.ppm", img);
    const dl::Image back = io::read_ppm(d / "f.ppm");
    ASSERT_EQ(back.width(), 5);
    ASSERT_EQ(back.height(), 3);
    EXPECT_EQ(back.at(4, 2).r, 255);
    EXPECT_EQ(back.at(4, 2).b, 7);
    EXPECT_EQ(back.at(0, 0).g, 20);
}

TEST(Formats, SchemaMismatchIsFormatError) {
    const fs::path d = scratch();
    io::write_pose3d(d / "p.jsonl", small_clip(1).poses3d);
    // right file, wrong reader
    EXPECT_EQ(kind_of([&] { io::read_pose2d(d / "p.jsonl"); }), ErrorKind::Format);
    // newer version
    std::string text = io::read_file(d / "p.jsonl");
    text.replace(text.find("\"version\":1"), 11, "\"version\":2");
    write_text(d / "v2.jsonl", text);
    EXPECT_EQ(kind_of([&] { io::read_pose3d(d / "v2.jsonl"); }), ErrorKind::Format);
    write_text(d / "junk.json", "{not json");
    EXPECT_EQ(kind_of([&] { io::read_camera(d / "junk.json"); }), ErrorKind::Format);
    // 24 joints
    write_text(d / "short.jsonl", "{\"format\":\"dancelift.pose3d\",\"version\":1}\n{\"frame\":0,\"joints\":[[0,0,0]]}\n");
    EXPECT_EQ(kind_of([&] { io::read_pose3d(d / "short.jsonl"); }), ErrorKind::Format);
}

TEST(Formats, MissingFileNamesThePath) {
    const fs::path p = scratch() / "nowhere" / "pose2d_0.jsonl";
    EXPECT_EQ(kind_of([&] { io::read_pose2d(p); }), ErrorKind::File);
    EXPECT_NE(message_of([&] { io::read_pose2d(p); }).find(p.string()), std::string::npos);
}

TEST(Formats, AtomicWriteLeavesNoTemporaries) {
    const fs::path d = scratch();
    io::write_atomic(d / "a" / "b" / "x.txt", "one");
    io::write_atomic(d / "a" / "b" / "x.txt", "two");
    EXPECT_EQ(io::read_file(d / "a" / "b" / "x.txt"), "two");
    int n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(d / "a" / "b")) ++n;
    EXPECT_EQ(n, 1);
}

// ---- config -------------------------------------------------------------------------------

TEST(ConfigFile, SectionsFlagsAndTypos) {
    const fs::path d = scratch();
    write_text(d / "c.ini", "seed = 11\n[tracker]\nocclusion_iou = 0.25\n[init3d]\nwarm_start = false\nepochs = 7\n");
    dl::Config c = dl::Config::load(d / "c.ini");
    EXPECT_EQ(c.get<int>("seed", 0), 11);
    EXPECT_EQ(c.get("tracker.occlusion_iou", 0.0), 0.25);
    const auto ic = dl::init_config(c, 1, 1);
    EXPECT_FALSE(ic.warm_start);
    EXPECT_EQ(ic.epochs, 7);

    c.set("init3d.epochs", "seven");
    EXPECT_EQ(kind_of([&] { dl::init_config(c, 1, 1); }), ErrorKind::InvalidArgument);
    c.set("init3d.epochs", "7");
    c.set("init3d.epoch", "3");
    EXPECT_EQ(kind_of([&] { c.check_unused({"seed"}); }), ErrorKind::InvalidArgument);
    EXPECT_EQ(kind_of([&] { dl::Config::load(d / "missing.ini"); }), ErrorKind::File);
}

TEST(ConfigFile, LiftDilationsList) {
    dl::Config c;
    c.set("lift.dilations", "1,2,4");
    EXPECT_EQ(dl::lift_config(c, 0).dilations, (std::vector<int>{1, 2, 4}));
    c.set("lift.dilations", "1,x");
    EXPECT_EQ(kind_of([&] { dl::lift_config(c, 0); }), ErrorKind::InvalidArgument);
}

// ---- manifests ----------------------------------------------------------------------------

TEST(Manifest, Sha256KnownVector) {
    EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Manifest, ChainDetectsUpstreamChange) {
    const fs::path d = scratch();
    const fs::path a = d / "a", b = d / "b";
    io::RunManifest ma("first", 1, "", 1);
    io::write_atomic(a / "x.txt", "data");
    ma.add_output("x.txt");
    ma.finalize(a, 0.0);

    io::RunManifest mb("second", 1, "", 1);
    mb.add_input(a / "x.txt");
    io::write_atomic(b / "y.txt", "derived");
    mb.add_output("y.txt");
    mb.finalize(b, 0.0);
    EXPECT_TRUE(io::verify_manifest_chain(b).empty());

    io::write_atomic(a / "x.txt", "tampered");
    const auto issues = io::verify_manifest_chain(b);
    ASSERT_FALSE(issues.empty());
    EXPECT_NE(issues.front().find("x.txt"), std::string::npos);
}

// ---- rendering ------------------------------------------------------------------------------

TEST(Render, JointCirclesSitOnStoredJoints) {
    const auto clip = small_clip(3);
    for (int t : {0, 5, 11}) {
        const std::string svg = dl::render_svg(clip.poses3d[t], clip.camera, 256, 256, &clip.poses2d_clean[t]);
        const std::regex circle(R"re(<circle data-joint="([a-z_]+)" cx="([^"]+)" cy="([^"]+)")re");
        int seen = 0;
        for (auto it = std::sregex_iterator(svg.begin(), svg.end(), circle); it != std::sregex_iterator(); ++it) {
            const int j = seen++;
            EXPECT_EQ((*it)[1].str(), std::string(dl::kJointNames[j]));
            EXPECT_LE(std::abs(std::stod((*it)[2].str()) - clip.poses2d_clean[t].joints[j].x()), 0.5);
            EXPECT_LE(std::abs(std::stod((*it)[3].str()) - clip.poses2d_clean[t].joints[j].y()), 0.5);
        }
        EXPECT_EQ(seen, dl::kNumJoints);
    }
}

// ---- models -----------------------------------------------------------------------------------

TEST(ModelFiles, LiftNetRoundTripPredictsIdentically) {
    const fs::path d = scratch();
    dl::LiftConfig cfg;
    cfg.channels = 8;
    cfg.dilations = {1, 2};
    cfg.image_width = 320;
    const auto clip = small_clip(4);
    dl::LiftNet net = dl::make_lift_net(cfg, std::vector<double>(dl::kLiftOutputs, 1.0));
    io::save_lift_net(d, "lift", net);
    const dl::LiftNet back = io::load_lift_net(d, "lift");
    EXPECT_EQ(back.config.dilations, cfg.dilations);
    EXPECT_EQ(back.config.image_width, 320.0);
    const auto a = dl::infer(net, clip.poses2d), b = dl::infer(back, clip.poses2d);
    for (std::size_t t = 0; t < a.size(); ++t)
        for (int j = 0; j < dl::kNumJoints; ++j) EXPECT_EQ(a[t].joints[j], b[t].joints[j]);

    std::string meta = io::read_file(d / "lift.json");
    meta.replace(meta.find("dancelift.lift_model"), 20, "dancelift.genre_model");
    write_text(d / "bad.json", meta);
    EXPECT_EQ(kind_of([&] { io::load_lift_net(d, "bad"); }), ErrorKind::Format);
}

TEST(ModelFiles, RecognizersRoundTrip) {
    const fs::path d = scratch();
    dl::RecognizeConfig cfg;
    cfg.hidden = 6;
    dl::MovementModel m = dl::make_movement_model(4, cfg);
    m.feature_mean.assign(m.net.inputs, 0.25);
    m.feature_scale.assign(m.net.inputs, 2.0);
    io::save_movement_model(d, "mv", m);
    const auto back = io::load_movement_model(d, "mv");
    const auto seq = small_clip(8).poses3d;
    EXPECT_EQ(dl::movement_probabilities(m, 4, seq), dl::movement_probabilities(back, 4, seq));

    dl::GenreModel g = dl::make_genre_model(cfg);
    g.net.params[0].value.values()[3] = 0.5;
    io::save_genre_model(d, "g", g);
    const auto gb = io::load_genre_model(d, "g");
    const auto labels = dl::gen_genre_labels(1, 10, 2);
    EXPECT_EQ(dl::genre_logits(g, labels), dl::genre_logits(gb, labels));
}

// ---- commands ---------------------------------------------------------------------------------

TEST(Commands, SynthGenIsByteIdenticalAcrossRuns) {
    const fs::path d = scratch();
    for (const std::string kind : {"clip", "scene", "dataset"}) {
        std::vector<std::string> sets;
        if (kind == "scene") sets = {"synth.frames=12"};
        if (kind == "dataset") sets = {"synth.clips_per_label=1", "synth.genre_clips=1"};
        for (const char* run : {"a", "b"}) {
            auto o = opts({}, d / (kind + run), sets);
            o.kind = kind;
            o.seed = 7;
            EXPECT_EQ(dl::cli::synth_gen(o), 0);
        }
        const auto a = tree_contents(d / (kind + "a")), b = tree_contents(d / (kind + "b"));
        EXPECT_FALSE(a.empty());
        EXPECT_EQ(a, b) << kind;
    }
}

TEST(Commands, ExampleConfigIsAccepted) {
    const fs::path d = scratch();
    auto o = opts({}, d / "a");
    o.config = DANCELIFT_EXAMPLE_CONFIG;
    EXPECT_EQ(dl::cli::synth_gen(o), 0);
    const dl::Config c = dl::Config::load(DANCELIFT_EXAMPLE_CONFIG);
    EXPECT_EQ(dl::lift_config(c, 0).dilations, (std::vector<int>{1, 1, 2}));
}

TEST(Commands, SeedChangesOutput) {
    const fs::path d = scratch();
    auto o = opts({}, d / "a");
    o.seed = 1;
    dl::cli::synth_gen(o);
    o.seed = 2;
    o.output = (d / "b").string();
    dl::cli::synth_gen(o);
    EXPECT_NE(io::read_file(d / "a" / "pose2d_0.jsonl"), io::read_file(d / "b" / "pose2d_0.jsonl"));
}

TEST(Commands, UnknownConfigKeyAndMissingInput) {
    const fs::path d = scratch();
    EXPECT_EQ(kind_of([&] { dl::cli::synth_gen(opts({}, d / "a", {"synth.framez=3"})); }), ErrorKind::InvalidArgument);
    // keys of other stages are fine
    EXPECT_EQ(dl::cli::synth_gen(opts({}, d / "b", {"tracker.overlap_iou=0.3", "lift.epochs=3"})), 0);
    EXPECT_EQ(kind_of([&] { dl::cli::init3d(opts({(d / "none").string()}, d / "c")); }), ErrorKind::File);
    const std::string msg = message_of([&] { dl::cli::track(opts({(d / "b").string()}, d / "c")); });
    EXPECT_NE(msg.find("boxes_init.json"), std::string::npos);
}

TEST(Commands, FullPipelineOnSynthClip) {
    const fs::path d = scratch();
    auto s = [&](const fs::path& p) { return p.string(); };
    auto clip = opts({}, d / "clip", {"synth.frames=14"});
    clip.seed = 3;
    ASSERT_EQ(dl::cli::synth_gen(clip), 0);
    ASSERT_EQ(dl::cli::init3d(opts({s(d / "clip")}, d / "init", {"init3d.epochs=5"})), 0);
    ASSERT_EQ(dl::cli::lift_train(opts({s(d / "init")}, d / "lift_model", {"lift.epochs=5", "lift.channels=8"})), 0);
    auto inf = opts({s(d / "init")}, d / "lifted");
    inf.model = s(d / "lift_model");
    ASSERT_EQ(dl::cli::lift_infer(inf), 0);

    auto ds = opts({}, d / "dataset", {"synth.clips_per_label=1", "synth.genre_clips=1", "synth.frames=12"});
    ds.kind = "dataset";
    ASSERT_EQ(dl::cli::synth_gen(ds), 0);
    ASSERT_EQ(dl::cli::recognize_train(opts({s(d / "dataset")}, d / "rec_model", {"recognize.epochs=2", "recognize.hidden=4"})), 0);
    auto run = opts({s(d / "lifted")}, d / "recognized");
    run.model = s(d / "rec_model");
    ASSERT_EQ(dl::cli::recognize_run(run), 0);

    const io::json genre = io::read_json(d / "recognized" / "genre.json", "genre");
    ASSERT_EQ(genre["tracks"].size(), 1u);
    EXPECT_GE(genre["tracks"][0]["genre"].get<int>(), 0);
    EXPECT_TRUE(fs::exists(d / "recognized" / "movements_0.jsonl"));
    EXPECT_TRUE(io::verify_manifest_chain(d / "recognized").empty());

    // the chain reaches back to the synthetic clip
    io::write_atomic(d / "clip" / "pose2d_0.jsonl", io::read_file(d / "clip" / "pose2d_0.jsonl") + "\n");
    EXPECT_FALSE(io::verify_manifest_chain(d / "recognized").empty());
}

TEST(Commands, SceneThroughAssignmentAndMetrics) {
    const fs::path d = scratch();
    auto s = [&](const fs::path& p) { return p.string(); };
    auto scene = opts({}, d / "scene", {"synth.frames=30"});
    scene.kind = "scene";
    scene.seed = 5;
    ASSERT_EQ(dl::cli::synth_gen(scene), 0);
    ASSERT_EQ(dl::cli::track(opts({s(d / "scene")}, d / "tracks")), 0);
    ASSERT_EQ(dl::cli::assign(opts({s(d / "tracks"), s(d / "scene")}, d / "poses")), 0);
    io::json h;
    const auto p = io::read_pose2d(d / "poses" / "pose2d_1.jsonl", &h);
    EXPECT_EQ(p.size(), 30u);
    EXPECT_EQ(h["image_width"], 480);

    auto m = opts({s(d / "tracks")}, d / "metrics");
    m.reference = s(d / "scene");
    ASSERT_EQ(dl::cli::metrics(m), 0);
    const io::json r = io::read_json(d / "metrics" / "metrics.json", "metrics");
    EXPECT_GT(r["tracking"]["tracks"][0]["mean_iou"].get<double>(), 0.5);
    EXPECT_TRUE(fs::exists(d / "metrics" / "metrics.txt"));
}

TEST(Commands, MetricsWithoutReferenceDataIsUndefined) {
    const fs::path d = scratch();
    fs::create_directories(d / "empty");
    EXPECT_EQ(kind_of([&] { dl::cli::metrics(opts({(d / "empty").string()}, d / "m")); }), ErrorKind::UndefinedMetric);
}

TEST(Commands, RenderMatchesStoredJoints) {
    const fs::path d = scratch();
    auto clip = opts({}, d / "clip");
    clip.seed = 2;
    ASSERT_EQ(dl::cli::synth_gen(clip), 0);
    fs::copy_file(d / "clip" / "pose3d_0_gt.jsonl", d / "clip" / "pose3d_0.jsonl");
    auto r = opts({(d / "clip").string()}, d / "svg");
    r.frame = 4;
    ASSERT_EQ(dl::cli::render(r), 0);
    const std::string svg = io::read_file(d / "svg" / "render_0_4.svg");
    const auto gt = io::read_pose2d(d / "clip" / "pose2d_0_gt.jsonl");
    const std::regex circle(R"re(cx="([^"]+)" cy="([^"]+)")re");
    int j = 0;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), circle); it != std::sregex_iterator(); ++it, ++j) {
        EXPECT_LE(std::abs(std::stod((*it)[1].str()) - gt[4].joints[j].x()), 0.5);
        EXPECT_LE(std::abs(std::stod((*it)[2].str()) - gt[4].joints[j].y()), 0.5);
    }
    EXPECT_EQ(j, dl::kNumJoints);
}

// ---- executable -------------------------------------------------------------------------------

#ifdef DANCELIFT_CLI
TEST(Executable, ExitCodes) {
    const fs::path d = scratch();
    const std::string exe = DANCELIFT_CLI;
    auto code = [](const std::string& cmd) {
        const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    EXPECT_EQ(code(exe + " synth-gen --seed 7 --output " + (d / "ok").string()), 0);
    EXPECT_EQ(code(exe + " init3d --input " + (d / "missing").string() + " --output " + (d / "x").string()), 2);
    EXPECT_EQ(code(exe + " bogus"), 2);
    EXPECT_EQ(code(exe + " metrics report --input " + (d / "ok").string() + " --output " + (d / "m").string()), 3);
    write_text(d / "bad.ini", "[synth]\nframes = many\n");
    EXPECT_EQ(code(exe + " synth-gen --config " + (d / "bad.ini").string() + " --output " + (d / "y").string()), 2);
}
#endif
