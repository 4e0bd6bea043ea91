#include "dancelift/init3d.hpp"
#include "dancelift/lift3d.hpp"
#include "dancelift/model_io.hpp"
#include "run.hpp"

namespace dancelift::cli {

namespace {

using io::json;

/// Track ids with a pose2d_<id>.jsonl in `dir`.
std::map<int, fs::path> tracks_in(const fs::path& dir) { return numbered_files(dir, "pose2d_", ".jsonl"); }

/// Image size: pose2d header first, then a camera.json beside it, then config.
std::pair<int, int> image_size(const Run& run, const json& header, const fs::path& dir) {
    if (header.contains("image_width") && header.contains("image_height"))
        return {header["image_width"].get<int>(), header["image_height"].get<int>()};
    if (fs::exists(dir / "camera.json")) {
        run.used(dir / "camera.json");
        const auto c = io::read_camera(dir / "camera.json");
        return {c.width, c.height};
    }
    const int w = run.config().get("image.width", 256), h = run.config().get("image.height", 256);
    require(w > 0 && h > 0, "image.width and image.height must be positive");
    return {w, h};
}

json carried(const json& header) {
    json out = json::object();
    for (const char* k : {"track", "image_width", "image_height"})
        if (header.contains(k)) out[k] = header[k];
    return out;
}

std::map<int, fs::path> all_tracks(const Run& run) {
    std::map<int, fs::path> out;
    for (const auto& d : Run::input_dirs(run.options()))
        for (const auto& [id, p] : tracks_in(d)) out.emplace(id, p);  // first input wins
    if (out.empty()) fail(ErrorKind::File, "no pose2d_<id>.jsonl found in the inputs");
    return out;
}

LiftClip unlabeled_clip(const Run& run, const fs::path& dir, int id, std::pair<int, int>& size) {
    const std::string s = std::to_string(id);
    json h;
    LiftClip c;
    const fs::path p2 = dir / ("pose2d_" + s + ".jsonl");
    run.used(p2);
    c.poses2d = io::read_pose2d(p2, &h);
    const fs::path p3 = dir / ("pose3d_init_" + s + ".jsonl"), pc = dir / ("camera_init_" + s + ".json");
    if (!fs::exists(p3) || !fs::exists(pc))
        fail(ErrorKind::File, dir.string() + ": track " + s + " has no init3d output (run init3d first)");
    run.used(p3);
    run.used(pc);
    c.poses3d = io::read_pose3d(p3);
    c.camera = io::read_camera(pc).camera;
    size = image_size(run, h, dir);
    return c;
}

LiftClip labeled_clip(const Run& run, const fs::path& dir, int id, std::pair<int, int>& size) {
    const std::string s = std::to_string(id);
    json h;
    LiftClip c;
    const fs::path p2 = dir / ("pose2d_" + s + ".jsonl"), p3 = dir / ("pose3d_" + s + "_gt.jsonl"),
                   pc = dir / "camera.json";
    if (!fs::exists(p3) || !fs::exists(pc))
        fail(ErrorKind::File, dir.string() + ": labeled clip needs pose3d_" + s + "_gt.jsonl and camera.json");
    for (const auto& p : {p2, p3, pc}) run.used(p);
    c.poses2d = io::read_pose2d(p2, &h);
    c.poses3d = io::read_pose3d(p3);
    const auto cam = io::read_camera(pc);
    c.camera = cam.camera;
    size = image_size(run, h, dir);
    return c;
}

} // namespace

int init3d(const Options& opt) {
    Run run("init3d", opt);
    InitConfig cfg = init_config(run.config(), run.seed(), run.jobs());
    for (const auto& [id, path] : all_tracks(run)) {
        run.used(path);
        json h;
        const PoseSeq2D seq = io::read_pose2d(path, &h);
        std::tie(cfg.image_width, cfg.image_height) = image_size(run, h, path.parent_path());
        const InitResult r = initialize_sequence(seq, cfg);
        const std::string s = std::to_string(id);
        json extra = carried(h);
        extra["track"] = id;
        double err = 0.0;
        for (double e : r.frame_errors) err += e;
        extra["mean_frame_error"] = r.frame_errors.empty() ? 0.0 : err / static_cast<double>(r.frame_errors.size());
        io::write_pose3d(run.output("pose3d_init_" + s + ".jsonl"), r.poses, extra);
        io::write_camera(run.output("camera_init_" + s + ".json"), {r.camera, cfg.image_width, cfg.image_height});
        io::write_pose2d(run.output("pose2d_" + s + ".jsonl"), seq, carried(h));
    }
    run.finish();
    return 0;
}

int lift_train(const Options& opt) {
    Run run("lift-train", opt);
    LiftConfig cfg = lift_config(run.config(), run.seed());
    std::vector<LiftClip> unlabeled, labeled;
    std::optional<std::pair<int, int>> size;
    auto same_size = [&](const std::pair<int, int>& s, const fs::path& where) {
        if (size && *size != s) fail(ErrorKind::InvalidArgument, where.string() + ": clips use different image sizes");
        size = s;
    };
    for (const auto& d : Run::input_dirs(opt)) {
        const auto ids = tracks_in(d);
        if (ids.empty()) fail(ErrorKind::File, d.string() + ": no pose2d_<id>.jsonl");
        for (const auto& [id, p] : ids) {
            std::pair<int, int> s;
            unlabeled.push_back(unlabeled_clip(run, d, id, s));
            same_size(s, p);
        }
    }
    for (const auto& ds : opt.labeled) {
        const fs::path d(ds);
        if (!fs::is_directory(d)) fail(ErrorKind::File, "labeled directory not found: " + d.string());
        const auto ids = tracks_in(d);
        if (ids.empty()) fail(ErrorKind::File, d.string() + ": no pose2d_<id>.jsonl");
        for (const auto& [id, p] : ids) {
            std::pair<int, int> s;
            labeled.push_back(labeled_clip(run, d, id, s));
            same_size(s, p);
        }
    }
    require(!unlabeled.empty(), "lift-train: needs at least one --input clip");
    cfg.image_width = size->first;
    cfg.image_height = size->second;

    const LiftTraining t = labeled.empty() ? train_lift(unlabeled, cfg) : train_lift_semisup(labeled, unlabeled, cfg);
    io::save_lift_net(run.out_dir(), "lift_model", t.net);
    run.output("lift_model.json");
    run.output("lift_model.bin");

    io::Jsonl log{io::header("lift_log"), {}};
    log.header["labeled"] = t.labeled;
    log.header["unlabeled"] = t.unlabeled;
    for (const auto& r : t.log)
        log.rows.push_back({{"epoch", r.epoch},
                            {"smooth2d", r.terms.smooth2d},
                            {"smooth3d", r.terms.smooth3d},
                            {"reprojection", r.terms.reprojection},
                            {"target", r.terms.target},
                            {"supervised", r.terms.supervised},
                            {"total", r.terms.total()}});
    io::write_jsonl(run.output("lift_log.jsonl"), log);
    run.finish();
    return 0;
}

int lift_infer(const Options& opt) {
    Run run("lift-infer", opt);
    require(!opt.model.empty(), "lift-infer: --model is required");
    const fs::path mdir(opt.model);
    run.used(mdir / "lift_model.json");
    run.used(mdir / "lift_model.bin");
    const LiftNet net = io::load_lift_net(mdir, "lift_model");
    for (const auto& [id, path] : all_tracks(run)) {
        run.used(path);
        json h;
        const PoseSeq2D seq = io::read_pose2d(path, &h);
        const std::string s = std::to_string(id);
        json extra = carried(h);
        extra["track"] = id;
        io::write_pose3d(run.output("pose3d_" + s + ".jsonl"), infer(net, seq), extra);
    }
    run.finish();
    return 0;
}

} // namespace dancelift::cli
