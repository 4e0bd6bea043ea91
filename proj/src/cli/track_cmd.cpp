#include "dancelift/assign2d.hpp"
#include "dancelift/tracker.hpp"
#include "run.hpp"

namespace dancelift::cli {

namespace {

/// Consecutive frames starting at `first` from the first input holding frames/.
std::vector<fs::path> frame_files(const Run& run, int first) {
    const fs::path dir = run.find("frames");
    std::vector<fs::path> out;
    for (int t = first;; ++t) {
        const fs::path p = dir / io::frame_name(t);
        if (!fs::exists(p)) break;
        out.push_back(p);
    }
    if (out.empty()) fail(ErrorKind::File, "no frames starting at " + (dir / io::frame_name(first)).string());
    return out;
}

Frame load_frame(const Run& run, const fs::path& p, int index) {
    run.used(p);
    return Frame(index, io::read_ppm(p));
}

} // namespace

int track(const Options& opt) {
    Run run("track", opt);
    const TrackerConfig cfg = tracker_config(run.config());
    int first = 0;
    const std::vector<Box> boxes = io::read_boxes(run.find("boxes_init.json"), &first);
    const auto files = frame_files(run, first);

    MultiTracker mt(cfg, load_frame(run, files[0], first), boxes);
    std::vector<std::vector<TrackRecord>> frames = {mt.records(first)};
    for (std::size_t k = 1; k < files.size(); ++k)
        frames.push_back(mt.update(load_frame(run, files[k], first + static_cast<int>(k))));
    io::write_tracks(run.output("tracks.jsonl"), frames, mt.events());
    run.finish();
    return 0;
}

int assign(const Options& opt) {
    Run run("assign", opt);
    const AssignConfig cfg = assign_config(run.config());
    const auto tracks = io::read_tracks(run.find("tracks.jsonl"));
    const io::Detections det = io::read_detections(run.find("detections.jsonl"));
    require(!tracks.empty(), "assign: tracks.jsonl has no frames");
    std::map<int, const io::DetectionFrame*> by_frame;
    for (const auto& f : det.frames) by_frame[f.frame] = &f;

    const int first = tracks.front().front().frame;
    const auto files = frame_files(run, first);
    require(files.size() >= tracks.size(), "assign: fewer frames than track rows");
    auto boxes_at = [&](std::size_t k) {
        std::vector<Box> b;
        for (const auto& r : tracks[k]) b.push_back(r.box);
        return b;
    };

    const std::size_t n_tracks = tracks.front().size();
    std::vector<PoseSeq2D> out(n_tracks);
    std::vector<int> gaps(n_tracks, 0);
    int width = 0, height = 0;
    std::optional<PoseAssigner> pa;
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        const int t = tracks[k].front().frame;
        const Frame f = load_frame(run, files[k], t);
        width = f.width();
        height = f.height();
        if (!pa) pa.emplace(f, boxes_at(k), cfg);
        std::vector<Pose2D> cands;
        if (auto it = by_frame.find(t); it != by_frame.end())
            for (const auto& raw : it->second->candidates) cands.push_back(remap_keypoints(raw, det.mapping, t));
        const auto a = pa->step(f, boxes_at(k), cands);
        for (std::size_t i = 0; i < n_tracks; ++i) {
            out[i].push_back(a[i].pose);
            gaps[i] += a[i].gap_filled;
        }
    }
    for (std::size_t i = 0; i < n_tracks; ++i) {
        const int id = tracks.front()[i].id;
        io::write_pose2d(run.output("pose2d_" + std::to_string(id) + ".jsonl"), out[i],
                         {{"track", id}, {"image_width", width}, {"image_height", height}, {"gap_filled", gaps[i]}});
    }
    run.finish();
    return 0;
}

} // namespace dancelift::cli
