#include <cstdio>

#include "dancelift/image.hpp"
#include "dancelift/metrics.hpp"
#include "dancelift/render.hpp"
#include "run.hpp"

namespace dancelift::cli {

namespace {

using io::json;

std::optional<fs::path> existing(const fs::path& p) {
    if (fs::exists(p)) return p;
    return std::nullopt;
}

/// Camera for track `id`: camera_init_<id>.json, then camera.json, searched in the inputs.
std::optional<io::CameraFile> camera_for(const Run& run, int id) {
    auto p = run.try_find("camera_init_" + std::to_string(id) + ".json");
    if (!p) p = run.try_find("camera.json");
    if (!p) return std::nullopt;
    return io::read_camera(*p);
}

json pose_metrics(const Run& run, const fs::path& ref, const PoseSeq3D& pred, int id) {
    json m = json::object();
    const std::string s = std::to_string(id);
    if (!ref.empty()) {
        auto gt = existing(ref / ("pose3d_" + s + "_gt.jsonl"));
        if (!gt) gt = existing(ref / ("pose3d_" + s + ".jsonl"));
        if (gt) {
            run.used(*gt);
            const PoseSeq3D g = io::read_pose3d(*gt);
            m["mpjpe_mm"] = mpjpe(pred, g);
            m["root_aligned_mpjpe_mm"] = mpjpe(root_aligned(pred), root_aligned(g));
            m["scaled_mpjpe"] = scaled_mpjpe(pred, g);
        }
    }
    const auto p2 = run.try_find("pose2d_" + s + ".jsonl");
    const auto cam = camera_for(run, id);
    if (p2 && cam) m["reprojection_rmse_px"] = reprojection_rmse(pred, io::read_pose2d(*p2), cam->camera);
    return m;
}

json tracking_metrics(const Run& run, const fs::path& ref) {
    const auto pred_path = run.try_find("tracks.jsonl");
    const auto gt_path = ref.empty() ? std::nullopt : existing(ref / "tracks_gt.jsonl");
    if (!pred_path || !gt_path) return nullptr;
    run.used(*gt_path);
    const auto pred = io::read_tracks(*pred_path), gt = io::read_tracks(*gt_path);
    const std::size_t T = std::min(pred.size(), gt.size());
    require(T > 0, "metrics: empty track files");
    json out = json::object();
    out["frames"] = T;
    out["tracks"] = json::array();
    for (std::size_t k = 0; k < pred.front().size() && k < gt.front().size(); ++k) {
        double sum = 0.0;
        int hits = 0;
        for (std::size_t t = 0; t < T; ++t) {
            const double o = iou(pred[t][k].box, gt[t][k].box);
            sum += o;
            hits += o >= 0.5;
        }
        out["tracks"].push_back({{"track", pred.front()[k].id},
                                 {"mean_iou", sum / static_cast<double>(T)},
                                 {"frames_iou_0_5", static_cast<double>(hits) / static_cast<double>(T)}});
    }
    return out;
}

std::optional<LabelSeq> reference_labels(const Run& run, const fs::path& ref, int id) {
    if (ref.empty()) return std::nullopt;
    auto p = existing(ref / ("movements_" + std::to_string(id) + ".jsonl"));
    if (!p) p = existing(ref / "movement_labels.jsonl");
    if (!p) return std::nullopt;
    run.used(*p);
    return io::read_labels(*p);
}

void flatten(const json& j, const std::string& prefix, std::string& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
    } else if (j.is_number_float()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", j.get<double>());
        out += prefix + " " + buf + "\n";
    } else {
        out += prefix + " " + (j.is_string() ? j.get<std::string>() : j.dump()) + "\n";
    }
}

} // namespace

int metrics(const Options& opt) {
    Run run("metrics", opt);
    const fs::path ref = opt.reference.empty() ? fs::path() : fs::path(opt.reference);
    if (!ref.empty() && !fs::is_directory(ref)) fail(ErrorKind::File, "reference directory not found: " + ref.string());

    json report = io::header("metrics");
    json tracks = json::object();
    int computed = 0;
    for (const auto& d : Run::input_dirs(opt)) {
        for (const auto& [prefix, key] : {std::pair{"pose3d_", "lift"}, std::pair{"pose3d_init_", "init3d"}})
            for (const auto& [id, p] : numbered_files(d, prefix, ".jsonl")) {
                json& slot = tracks[std::to_string(id)][key];
                if (!slot.is_null()) continue;
                run.used(p);
                slot = pose_metrics(run, ref, io::read_pose3d(p), id);
                computed += static_cast<int>(slot.size());
            }
        for (const auto& [id, p] : numbered_files(d, "movements_", ".jsonl")) {
            json& slot = tracks[std::to_string(id)]["movements"];
            if (!slot.is_null()) continue;
            run.used(p);
            const LabelSeq pred = io::read_labels(p);
            const auto gt = reference_labels(run, ref, id);
            slot = json::object();
            if (gt) {
                require(gt->frames.size() == pred.frames.size(), "metrics: movement label lengths differ");
                slot["f1_macro"] = fscore_macro(pred, *gt);
                slot["f1_per_part"] = fscore_per_part(pred, *gt);
                if (gt->genre >= 0) slot["genre_correct"] = pred.genre == gt->genre;
                computed += 1;
            }
        }
    }
    report["tracks"] = tracks;
    if (json t = tracking_metrics(run, ref); !t.is_null()) {
        report["tracking"] = t;
        ++computed;
    }
    if (computed == 0)
        fail(ErrorKind::UndefinedMetric, "metrics: nothing to compare (missing reference files or cameras)");

    io::write_json(run.output("metrics.json"), report);
    std::string text;
    flatten(report, "", text);
    io::write_atomic(run.output("metrics.txt"), text);
    run.finish();
    return 0;
}

int render(const Options& opt) {
    Run run("render", opt);
    std::map<int, fs::path> ids;
    for (const auto& d : Run::input_dirs(opt)) {
        for (const auto& [id, p] : numbered_files(d, "pose3d_", ".jsonl")) ids.emplace(id, p);
        for (const auto& [id, p] : numbered_files(d, "pose3d_init_", ".jsonl")) ids.emplace(id, p);
    }
    if (ids.empty()) fail(ErrorKind::File, "render: no pose3d_<id>.jsonl in the inputs");
    for (const auto& [id, p] : ids) {
        run.used(p);
        const PoseSeq3D seq = io::read_pose3d(p);
        const auto at = std::find_if(seq.begin(), seq.end(), [&](const Pose3D& q) { return q.frame_index == opt.frame; });
        if (at == seq.end())
            fail(ErrorKind::BoundsViolation, "render: frame " + std::to_string(opt.frame) + " not in " + p.string());
        const auto cam = camera_for(run, id);
        if (!cam) fail(ErrorKind::File, "render: no camera_init_" + std::to_string(id) + ".json or camera.json");
        std::optional<Pose2D> obs;
        if (const auto p2 = run.try_find("pose2d_" + std::to_string(id) + ".jsonl"))
            for (const auto& q : io::read_pose2d(*p2))
                if (q.frame_index == opt.frame) obs = q;
        const std::string name = "render_" + std::to_string(id) + "_" + std::to_string(opt.frame) + ".svg";
        io::write_atomic(run.output(name), render_svg(*at, cam->camera, cam->width, cam->height, obs ? &*obs : nullptr));
    }
    run.finish();
    return 0;
}

} // namespace dancelift::cli
