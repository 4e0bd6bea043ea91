#include <algorithm>
#include <cstdio>

#include "dancelift/model_io.hpp"
#include "dancelift/parallel.hpp"
#include "dancelift/recognize.hpp"
#include "run.hpp"

namespace dancelift::cli {

namespace {

using io::json;

std::string movement_stem(int part) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "movement_%02d", part);
    return buf;
}

/// Labeled clip directories: <input>/clips/* in name order, or the input itself.
std::vector<fs::path> clip_dirs(const Options& opt) {
    std::vector<fs::path> out;
    auto is_clip = [](const fs::path& d) {
        return fs::exists(d / "pose3d_0.jsonl") && fs::exists(d / "movement_labels.jsonl");
    };
    for (const auto& d : Run::input_dirs(opt)) {
        if (is_clip(d)) out.push_back(d);
        if (!fs::is_directory(d / "clips")) continue;
        std::vector<fs::path> sub;
        for (const auto& e : fs::directory_iterator(d / "clips"))
            if (e.is_directory() && is_clip(e.path())) sub.push_back(e.path());
        std::sort(sub.begin(), sub.end());
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

std::vector<fs::path> genre_files(const Options& opt) {
    std::vector<fs::path> out;
    for (const auto& d : Run::input_dirs(opt)) {
        if (!fs::is_directory(d / "genres")) continue;
        std::vector<fs::path> sub;
        for (const auto& e : fs::directory_iterator(d / "genres"))
            if (e.is_regular_file() && e.path().extension() == ".jsonl") sub.push_back(e.path());
        std::sort(sub.begin(), sub.end());
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

bool part_active(const LabelSeq& s, int part) {
    for (std::size_t t = 0; t < s.frames.size(); ++t) {
        const auto l = s.part_labels(static_cast<int>(t), part);
        if (std::find(l.begin(), l.end(), 1) != l.end()) return true;
    }
    return false;
}

json log_json(const TrainingLog& l) { return {{"initial", l.initial()}, {"final", l.final()}, {"loss", l.loss}}; }

} // namespace

int recognize_train(const Options& opt) {
    Run run("recognize-train", opt);
    const RecognizeConfig cfg = recognize_config(run.config(), run.seed());
    const bool all_clips = run.config().get("recognize.all_clips", false);

    std::vector<PoseSeq3D> poses;
    std::vector<LabelSeq> labels;
    for (const auto& d : clip_dirs(opt)) {
        run.used(d / "pose3d_0.jsonl");
        run.used(d / "movement_labels.jsonl");
        poses.push_back(io::read_pose3d(d / "pose3d_0.jsonl"));
        labels.push_back(io::read_labels(d / "movement_labels.jsonl"));
    }
    std::vector<LabelSeq> genres;
    for (const auto& p : genre_files(opt)) {
        run.used(p);
        genres.push_back(io::read_labels(p));
    }
    require(!poses.empty(), "recognize-train: no labeled clips (pose3d_0.jsonl + movement_labels.jsonl) in the inputs");
    require(!genres.empty(), "recognize-train: no genre label files under <input>/genres");

    // each part learns from the clips that exercise it, unless told to use all
    std::vector<MovementTraining> models(kNumParts);
    parallel_for(kNumParts, run.jobs(), [&](int e) {
        std::vector<PoseSeq3D> p;
        std::vector<LabelSeq> l;
        for (std::size_t i = 0; i < poses.size(); ++i)
            if (all_clips || part_active(labels[i], e)) {
                p.push_back(poses[i]);
                l.push_back(labels[i]);
            }
        if (p.size() < 2)
            fail(ErrorKind::InvalidArgument, "recognize-train: part " + std::string(body_parts()[e].name) +
                                                 " has fewer than 2 clips with active labels");
        models[e] = train_movement(e, p, l, cfg);
    });
    const GenreTraining g = train_genre(genres, cfg);

    json log = io::header("recognize_log");
    log["movement"] = json::array();
    for (int e = 0; e < kNumParts; ++e) {
        const std::string stem = movement_stem(e);
        io::save_movement_model(run.out_dir(), stem, models[e].model);
        run.output(stem + ".json");
        run.output(stem + ".bin");
        json row = log_json(models[e].log);
        row["part"] = e;
        log["movement"].push_back(row);
    }
    io::save_genre_model(run.out_dir(), "genre_model", g.model);
    run.output("genre_model.json");
    run.output("genre_model.bin");
    log["genre"] = log_json(g.log);
    log["clips"] = poses.size();
    log["genre_clips"] = genres.size();
    io::write_json(run.output("recognize_log.json"), log);
    run.finish();
    return 0;
}

int recognize_run(const Options& opt) {
    Run run("recognize-run", opt);
    require(!opt.model.empty(), "recognize-run: --model is required");
    const fs::path mdir(opt.model);
    std::vector<MovementModel> models;
    for (int e = 0; e < kNumParts; ++e) {
        const std::string stem = movement_stem(e);
        run.used(mdir / (stem + ".json"));
        run.used(mdir / (stem + ".bin"));
        models.push_back(io::load_movement_model(mdir, stem));
    }
    run.used(mdir / "genre_model.json");
    run.used(mdir / "genre_model.bin");
    const GenreModel gm = io::load_genre_model(mdir, "genre_model");

    std::map<int, fs::path> ids;
    for (const auto& d : Run::input_dirs(opt))
        for (const auto& [id, p] : numbered_files(d, "pose3d_", ".jsonl")) ids.emplace(id, p);
    if (ids.empty()) fail(ErrorKind::File, "recognize-run: no pose3d_<id>.jsonl in the inputs");

    json summary = io::header("genre");
    summary["tracks"] = json::array();
    for (const auto& [id, p] : ids) {
        run.used(p);
        const PoseSeq3D seq = io::read_pose3d(p);
        LabelSeq labels = predict_movements(models, seq);
        const std::vector<double> logits = genre_logits(gm, labels);
        labels.genre = predict_genre(gm, labels);
        io::write_labels(run.output("movements_" + std::to_string(id) + ".jsonl"), labels, {{"track", id}});
        summary["tracks"].push_back({{"track", id},
                                     {"genre", labels.genre},
                                     {"genre_name", std::string(kGenreNames[labels.genre])},
                                     {"logits", logits}});
    }
    io::write_json(run.output("genre.json"), summary);
    run.finish();
    return 0;
}

} // namespace dancelift::cli
