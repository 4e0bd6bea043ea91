#include <cstdio>

#include "dancelift/parallel.hpp"
#include "dancelift/synth.hpp"
#include "run.hpp"

namespace dancelift::cli {

namespace {

void write_clip(Run& run) {
    const Config& c = run.config();
    MotionConfig m;
    m.frames = c.get("synth.frames", m.frames);
    m.noise_sigma = c.get("synth.noise_sigma", m.noise_sigma);
    m.image_width = c.get("synth.width", m.image_width);
    m.image_height = c.get("synth.height", m.image_height);
    m.max_step = c.get("synth.max_step", m.max_step);
    m.amplitude = c.get("synth.amplitude", m.amplitude);
    m.seed = run.seed();
    const SynthClip clip = gen_motion(m);
    const io::json size = {{"image_width", m.image_width}, {"image_height", m.image_height}, {"track", 0}};
    io::write_pose2d(run.output("pose2d_0.jsonl"), clip.poses2d, size);
    io::write_pose2d(run.output("pose2d_0_gt.jsonl"), clip.poses2d_clean, size);
    io::write_pose3d(run.output("pose3d_0_gt.jsonl"), clip.poses3d, {{"track", 0}});
    io::write_camera(run.output("camera.json"), {clip.camera, m.image_width, m.image_height});
}

void write_scene(Run& run) {
    const Config& c = run.config();
    CrossingConfig s;
    s.actors = c.get("synth.actors", s.actors);
    s.frames = c.get("synth.frames", s.frames);
    s.width = c.get("synth.width", s.width);
    s.height = c.get("synth.height", s.height);
    s.background_noise = c.get("synth.background_noise", s.background_noise);
    s.disjoint = c.get("synth.disjoint", s.disjoint);
    s.seed = run.seed();
    const double jitter = c.get("synth.detection_jitter", 1.5);
    const CrossingScene scene = gen_crossing_scene(s);

    std::vector<Image> images(s.frames);
    parallel_for(s.frames, run.jobs(), [&](int t) { images[t] = scene.render(t).image(); });
    for (int t = 0; t < s.frames; ++t) io::write_ppm(run.output("frames/" + io::frame_name(t)), images[t]);
    io::write_boxes(run.output("boxes_init.json"), 0, scene.boxes[0]);

    std::vector<std::vector<TrackRecord>> truth;
    io::Detections det;
    io::Jsonl actors{io::header("detection_actors"), {}};
    for (int t = 0; t < s.frames; ++t) {
        std::vector<TrackRecord> recs;
        for (int a = 0; a < s.actors; ++a) recs.push_back({t, a, scene.boxes[t][a], TrackStatus::Tracking});
        truth.push_back(std::move(recs));
        io::DetectionFrame fr;
        fr.frame = t;
        io::json ids = io::json::array();
        for (const auto& d : gen_detections(scene, t, jitter)) {
            std::vector<std::array<double, 3>> kp;
            for (int j = 0; j < kNumJoints; ++j) kp.push_back({d.pose.joints[j].x(), d.pose.joints[j].y(), d.pose.confidence[j]});
            fr.candidates.push_back(std::move(kp));
            ids.push_back(d.actor);
        }
        det.frames.push_back(std::move(fr));
        actors.rows.push_back({{"frame", t}, {"actors", ids}});
    }
    io::write_tracks(run.output("tracks_gt.jsonl"), truth, {},
                     {{"occlusion_start", scene.occlusion_start}, {"occlusion_end", scene.occlusion_end},
                      {"first_contact", scene.first_contact}});
    io::write_detections(run.output("detections.jsonl"), det);
    io::write_jsonl(run.output("detections_gt.jsonl"), actors);
}

/// Labeled primitive clips for every part plus genre label sequences.
void write_dataset(Run& run) {
    const Config& c = run.config();
    const int per_label = c.get("synth.clips_per_label", 20);
    const int frames = c.get("synth.frames", 30);
    const int genre_clips = c.get("synth.genre_clips", 10);
    const int genre_frames = c.get("synth.genre_frames", 40);
    require(per_label >= 1 && genre_clips >= 1, "synth: clip counts must be positive");

    struct Item {
        std::string dir;
        SynthClip clip;
    };
    const int n = kNumParts * kNumPrimitives * per_label;
    std::vector<Item> items(n);
    parallel_for(n, run.jobs(), [&](int k) {
        const int e = k / (kNumPrimitives * per_label), l = (k / per_label) % kNumPrimitives, i = k % per_label;
        PrimitiveConfig pc;
        pc.frames = frames;
        pc.seed = mix_seed(run.seed(), static_cast<std::uint64_t>(k));
        char name[64];
        std::snprintf(name, sizeof name, "clips/p%02d_%s_%03d/", e, std::string(kPrimitiveNames[l]).c_str(), i);
        items[k] = {name, gen_primitive(e, l, pc)};
    });
    for (const auto& it : items) {
        io::write_pose3d(run.output(it.dir + "pose3d_0.jsonl"), it.clip.poses3d, {{"track", 0}});
        io::write_labels(run.output(it.dir + "movement_labels.jsonl"), it.clip.labels);
    }
    for (int g = 0; g < kNumGenres; ++g)
        for (int i = 0; i < genre_clips; ++i) {
            char name[64];
            std::snprintf(name, sizeof name, "genres/%s_%03d.jsonl", std::string(kGenreNames[g]).c_str(), i);
            io::write_labels(run.output(name),
                             gen_genre_labels(g, genre_frames, mix_seed(run.seed(), 100000 + 1000 * g + i)));
        }
}

} // namespace

int synth_gen(const Options& opt) {
    Run run("synth-gen", opt);
    if (opt.kind == "clip")
        write_clip(run);
    else if (opt.kind == "scene")
        write_scene(run);
    else if (opt.kind == "dataset")
        write_dataset(run);
    else
        fail(ErrorKind::InvalidArgument, "synth-gen: --kind must be clip, scene or dataset");
    run.finish();
    return 0;
}

} // namespace dancelift::cli
