#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "camera.hpp"
#include "error.hpp"
#include "image.hpp"
#include "pose.hpp"
#include "random.hpp"
#include "skeleton.hpp"
#include "taxonomy.hpp"

namespace dancelift {

/// Ground-truth clip: joint-angle trajectories plus everything derived from them.
struct SynthClip {
    std::uint64_t seed = 0;
    std::vector<ThetaVec> theta;  // one per frame
    BoneVec bones = BoneVec::Zero();
    double height = 1800.0;
    std::vector<RootPose> root;  // one per frame
    CameraParams camera;
    int image_width = 256;
    int image_height = 256;
    PoseSeq3D poses3d;
    PoseSeq2D poses2d_clean;
    PoseSeq2D poses2d;  // poses2d_clean plus pixel noise
    double noise_sigma = 0.0;
    LabelSeq labels;

    int frames() const { return static_cast<int>(theta.size()); }

    SkeletonModel model_at(int t) const {
        SkeletonModel m = SkeletonModel::dancer(height);
        m.bone_ratios = bones;
        m.root = root.at(t);
        return m;
    }
};

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Catmull-Rom through keys placed every `spacing` frames.
inline double catmull_rom(const std::vector<double>& keys, int spacing, int t) {
    const int n = static_cast<int>(keys.size());
    const int i = std::min(t / spacing, n - 2);
    const double u = static_cast<double>(t - i * spacing) / spacing;
    const double p0 = keys[std::max(i - 1, 0)], p1 = keys[i], p2 = keys[i + 1],
                 p3 = keys[std::min(i + 2, n - 1)];
    const double u2 = u * u, u3 = u2 * u;
    return 0.5 * (2.0 * p1 + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3);
}

inline std::vector<double> smooth_curve(std::mt19937_64& rng, int frames, int spacing, double center,
                                        double amplitude) {
    const int nkeys = (frames - 1 + spacing - 1) / spacing + 1;
    std::vector<double> keys(std::max(nkeys, 2));
    for (double& k : keys) k = center + uniform(rng, -amplitude, amplitude);
    std::vector<double> out(frames);
    for (int t = 0; t < frames; ++t) out[t] = catmull_rom(keys, spacing, t);
    return out;
}

inline CameraParams random_camera(std::mt19937_64& rng, int w, int h) {
    CameraParams c;
    c.fx = c.fy = uniform(rng, 0.9, 1.2) * w;
    c.cx = 0.5 * w + uniform(rng, -0.03, 0.03) * w;
    c.cy = 0.5 * h + uniform(rng, -0.03, 0.03) * h;
    return c;
}

} // namespace detail

/// Fills poses3d / poses2d_clean / poses2d from theta, bones, root, camera.
inline void render_clip(SynthClip& clip) {
    const int T = clip.frames();
    require(static_cast<int>(clip.root.size()) == T, "root trajectory length differs from theta");
    clip.poses3d.assign(T, {});
    clip.poses2d_clean.assign(T, {});
    for (int t = 0; t < T; ++t) {
        clip.poses3d[t] = forward_kinematics(clip.model_at(t), clip.theta[t]);
        clip.poses3d[t].frame_index = t;
        clip.poses2d_clean[t] = project(clip.poses3d[t], clip.camera);
    }
    clip.poses2d = clip.poses2d_clean;
    if (clip.noise_sigma > 0.0) {
        std::mt19937_64 rng(mix_seed(clip.seed, 99));
        std::normal_distribution<double> n(0.0, clip.noise_sigma);
        for (auto& p : clip.poses2d)
            for (auto& j : p.joints) {
                j.x() += n(rng);
                j.y() += n(rng);
            }
    }
}

struct MotionConfig {
    int frames = 31;
    int window = 3;             // half-width the clip must cover at least once (T >= 2*window+1)
    int keyframe_spacing = 10;
    double max_step = 0.05;     // rad per frame
    double amplitude = 0.3;     // rad around the standing posture
    double noise_sigma = 0.0;   // pixels
    int image_width = 256;
    int image_height = 256;
    double height = 1800.0;
    std::uint64_t seed = 0;
};

/// Smooth random dance-like motion around the standing posture.
inline SynthClip gen_motion(const MotionConfig& cfg) {
    require(cfg.frames >= 2 * cfg.window + 1, "gen_motion: frames must be >= 2*window+1");
    require(cfg.keyframe_spacing >= 1 && cfg.max_step > 0.0 && cfg.amplitude >= 0.0,
            "gen_motion: invalid smoothness settings");
    require(cfg.image_width > 0 && cfg.image_height > 0, "gen_motion: invalid image size");

    const SkeletonModel base = SkeletonModel::dancer(cfg.height);
    std::mt19937_64 rng(mix_seed(cfg.seed, 1));
    SynthClip clip;
    clip.seed = cfg.seed;
    clip.height = cfg.height;
    clip.image_width = cfg.image_width;
    clip.image_height = cfg.image_height;
    clip.noise_sigma = cfg.noise_sigma;
    clip.bones = sample_bones(base, mix_seed(cfg.seed, 2));

    const int T = cfg.frames;
    const ThetaVec rest = base.rest_theta();
    clip.theta.assign(T, rest);
    for (int k = 0; k < kNumOffsets; ++k) {
        const auto curve = detail::smooth_curve(rng, T, cfg.keyframe_spacing, rest[k], cfg.amplitude);
        const Interval& iv = base.theta_bounds[k];
        double prev = iv.clamp(curve[0]);
        clip.theta[0][k] = prev;
        for (int t = 1; t < T; ++t) {
            // Projection onto the bounds never lengthens a step taken from inside them.
            const double step = std::clamp(curve[t] - prev, -cfg.max_step, cfg.max_step);
            prev = iv.clamp(prev + step);
            clip.theta[t][k] = prev;
        }
    }

    const double az0 = detail::uniform(rng, -0.5, 0.5);
    const auto az = detail::smooth_curve(rng, T, cfg.keyframe_spacing, az0, 0.15);
    const Eigen::Vector3d p0(detail::uniform(rng, -150, 150), detail::uniform(rng, -100, 100),
                             detail::uniform(rng, 3500, 4500));
    const Eigen::Vector3d drift(detail::uniform(rng, -100, 100), detail::uniform(rng, -30, 30),
                                detail::uniform(rng, -100, 100));
    clip.root.resize(T);
    for (int t = 0; t < T; ++t) {
        RootPose r;
        r.azimuth = az[t];
        r.position = p0 + drift * (static_cast<double>(t) / std::max(T - 1, 1));
        clip.root[t] = r;
    }
    clip.camera = detail::random_camera(rng, cfg.image_width, cfg.image_height);
    clip.labels.frames.assign(T, std::vector<std::uint8_t>(kNumLabels, 0));
    render_clip(clip);
    return clip;
}

// ---------------------------------------------------------------------------
// Movement primitives

/// Which offsets drive a part and which joint's height defines "up".
struct PartControl {
    std::vector<int> candidates;  // theta indices; empty means the root moves
    int joint = MidHip;
};

inline const std::array<PartControl, kNumParts>& part_controls() {
    static const std::array<PartControl, kNumParts> c = {{
        {{2, 3, 4, 5, 6}, Nose},
        {{1, 0}, Neck},
        {{13, 14}, LElbow},
        {{7, 8}, RElbow},
        {{15, 16, 17}, LWrist},
        {{9, 10, 11}, RWrist},
        {{13, 14, 15}, LElbow},
        {{7, 8, 9}, RElbow},
        {{0, 1}, Neck},
        {{}, MidHip},
        {{29, 28}, LAnkle},
        {{22, 21}, RAnkle},
        {{26, 27}, LKnee},
        {{19, 20}, RKnee},
        {{30, 31}, LBigToe},
        {{23, 24}, RBigToe},
    }};
    return c;
}

/// Height above the camera's horizontal plane (camera y points down).
inline double vertical(const Pose3D& p, int joint) { return -p.joints[joint].y(); }

/// A span of one offset over which the controlled joint's height is strictly monotone.
struct MonotoneRun {
    int offset = -1;
    double lo = 0.0, hi = 0.0;  // theta values; height rises from lo to hi
    double rise = 0.0;          // mm gained across the run
};

namespace detail {

inline MonotoneRun best_run(const SkeletonModel& m, const ThetaVec& base, int k, int joint) {
    constexpr int kGrid = 121;
    const Interval iv = m.theta_bounds[k];
    const double lo = std::max(iv.min, base[k] - 1.2), hi = std::min(iv.max, base[k] + 1.2);
    std::vector<double> v(kGrid), h(kGrid);
    ThetaVec th = base;
    for (int i = 0; i < kGrid; ++i) {
        v[i] = lo + (hi - lo) * i / (kGrid - 1);
        th[k] = v[i];
        h[i] = vertical(forward_kinematics(m, th), joint);
    }
    auto sign = [&](int i) { return (h[i + 1] > h[i]) - (h[i + 1] < h[i]); };
    MonotoneRun best;
    best.offset = k;
    for (int s = 0; s + 1 < kGrid;) {
        int e = s;
        while (e + 2 < kGrid && sign(e + 1) == sign(s)) ++e;
        if (sign(s) != 0) {
            const double rise = std::abs(h[e + 1] - h[s]);
            if (rise > best.rise) {
                best.rise = rise;
                best.lo = sign(s) > 0 ? v[s] : v[e + 1];
                best.hi = sign(s) > 0 ? v[e + 1] : v[s];
            }
        }
        s = e + 1;
    }
    return best;
}

} // namespace detail

struct PrimitiveConfig {
    int frames = 30;
    double jitter = 0.05;  // rad, static perturbation of the whole posture
    int image_width = 256;
    int image_height = 256;
    std::uint64_t seed = 0;
};

/// A clip in which one part rises, falls or circles; that label is hot on every frame.
inline SynthClip gen_primitive(int part, int label, const PrimitiveConfig& cfg) {
    require(part >= 0 && part < kNumParts, "gen_primitive: part out of range");
    if (label < 0 || label >= kNumPrimitives)
        fail(ErrorKind::InvalidArgument, "gen_primitive: unsupported label " + std::to_string(label));
    require(cfg.frames >= 4, "gen_primitive: need at least 4 frames");
    const int T = cfg.frames;
    const PartControl& ctl = part_controls()[part];
    const auto prim = static_cast<Primitive>(label);

    for (int attempt = 0; attempt < 32; ++attempt) {
        std::mt19937_64 rng(mix_seed(cfg.seed, 1000 + attempt));
        SynthClip clip;
        clip.seed = cfg.seed;
        clip.image_width = cfg.image_width;
        clip.image_height = cfg.image_height;
        clip.bones = sample_bones(SkeletonModel::dancer(), mix_seed(cfg.seed, 2000 + attempt));

        SkeletonModel m = SkeletonModel::dancer(clip.height);
        m.bone_ratios = clip.bones;
        ThetaVec base = m.rest_theta();
        for (int k = 0; k < kNumOffsets; ++k) base[k] += detail::uniform(rng, -cfg.jitter, cfg.jitter);
        m.clamp_theta(base);

        RootPose r0;
        r0.azimuth = detail::uniform(rng, -0.6, 0.6);
        r0.position = {detail::uniform(rng, -200, 200), detail::uniform(rng, -100, 100),
                       detail::uniform(rng, 3500, 4500)};
        m.root = r0;
        clip.theta.assign(T, base);
        clip.root.assign(T, r0);

        const double speed = detail::uniform(rng, 0.6, 1.0);  // fraction of the available range
        const double phase0 = detail::uniform(rng, 0.0, 1.0 - speed);
        if (ctl.candidates.empty()) {
            const double amp = detail::uniform(rng, 150.0, 300.0);
            for (int t = 0; t < T; ++t) {
                const double s = static_cast<double>(t) / (T - 1);
                Eigen::Vector3d& p = clip.root[t].position;
                if (prim == Primitive::Up) p.y() -= amp * s;
                if (prim == Primitive::Down) p.y() += amp * s;
                if (prim == Primitive::Circle) {
                    const double a = 2.0 * std::numbers::pi * s;
                    p.x() += 0.6 * amp * std::sin(a);
                    p.z() += 0.6 * amp * (1.0 - std::cos(a));
                }
            }
        } else {
            std::vector<MonotoneRun> runs;
            for (int k : ctl.candidates) runs.push_back(detail::best_run(m, base, k, ctl.joint));
            std::stable_sort(runs.begin(), runs.end(),
                             [](const MonotoneRun& a, const MonotoneRun& b) { return a.rise > b.rise; });
            const MonotoneRun& primary = runs[0];
            if (primary.rise < 20.0) continue;
            const double a = primary.lo + (primary.hi - primary.lo) * phase0;
            const double b = a + (primary.hi - primary.lo) * speed;
            for (int t = 0; t < T; ++t) {
                const double s = static_cast<double>(t) / (T - 1);
                ThetaVec& th = clip.theta[t];
                if (prim == Primitive::Up) th[primary.offset] = a + (b - a) * s;
                if (prim == Primitive::Down) th[primary.offset] = b + (a - b) * s;
                if (prim == Primitive::Circle) {
                    const double ang = 2.0 * std::numbers::pi * s;
                    th[primary.offset] = 0.5 * (a + b) + 0.5 * (b - a) * std::sin(ang);
                    if (runs.size() > 1) {
                        const MonotoneRun& sec = runs[1];
                        const double r2 = 0.4 * std::abs(sec.hi - sec.lo);
                        th[sec.offset] = base[sec.offset] + r2 * (1.0 - std::cos(ang)) *
                                                                (sec.hi > sec.lo ? 1.0 : -1.0);
                    }
                }
                m.clamp_theta(th);
            }
        }

        clip.camera = detail::random_camera(rng, cfg.image_width, cfg.image_height);
        clip.labels.frames.assign(T, std::vector<std::uint8_t>(kNumLabels, 0));
        for (auto& f : clip.labels.frames) f[label_offset(part) + label] = 1;
        try {
            render_clip(clip);
        } catch (const Error&) {
            continue;
        }
        if (prim != Primitive::Circle) {
            bool mono = true;
            for (int t = 1; t < T && mono; ++t) {
                const double dh = vertical(clip.poses3d[t], ctl.joint) - vertical(clip.poses3d[t - 1], ctl.joint);
                mono = prim == Primitive::Up ? dh > 0.0 : dh < 0.0;
            }
            if (!mono) continue;
        }
        return clip;
    }
    fail(ErrorKind::Divergence, "gen_primitive: no monotone ramp found for part " + std::to_string(part));
}

// ---------------------------------------------------------------------------
// Genre mixtures

namespace detail {

/// Per-genre, per-part label weights; slot 0 of each part is "no movement".
inline const std::vector<std::vector<std::vector<double>>>& genre_profiles() {
    static const auto profiles = [] {
        std::mt19937_64 rng(0x5eed0f9e77e5ULL);
        std::normal_distribution<double> n(0.0, 1.0);
        std::vector<std::vector<std::vector<double>>> p(kNumGenres);
        for (int g = 0; g < kNumGenres; ++g) {
            p[g].resize(kNumParts);
            for (int e = 0; e < kNumParts; ++e) {
                auto& w = p[g][e];
                w.resize(body_parts()[e].vocab_size + 1);
                for (double& x : w) x = std::exp(1.5 * n(rng));
            }
        }
        return p;
    }();
    return profiles;
}

} // namespace detail

/// Movement labels whose per-part label frequencies follow the genre's profile.
inline LabelSeq gen_genre_labels(int genre, int frames, std::uint64_t seed) {
    require(genre >= 0 && genre < kNumGenres, "gen_genre_labels: genre out of range");
    require(frames >= 1, "gen_genre_labels: need at least one frame");
    std::mt19937_64 rng(mix_seed(seed, 3000 + genre));
    LabelSeq seq;
    seq.genre = genre;
    seq.frames.assign(frames, std::vector<std::uint8_t>(kNumLabels, 0));
    const auto& prof = detail::genre_profiles()[genre];
    for (int e = 0; e < kNumParts; ++e) {
        std::discrete_distribution<int> pick(prof[e].begin(), prof[e].end());
        std::uniform_int_distribution<int> len(6, 16);
        for (int t = 0; t < frames;) {
            const int slot = pick(rng);
            const int n = len(rng);
            for (int u = t; u < std::min(frames, t + n); ++u)
                if (slot > 0) seq.frames[u][label_offset(e) + slot - 1] = 1;
            t += n;
        }
    }
    return seq;
}

// ---------------------------------------------------------------------------
// Crossing scenes

struct CrossingConfig {
    int actors = 2;
    int frames = 70;
    int width = 480;
    int height = 480;
    bool disjoint = false;    // every actor in its own lane
    double background_noise = 12.0;  // +- gray levels
    std::uint64_t seed = 0;
};

struct ActorTruth {
    Box start;
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();  // px per frame
    Rgb color;

    Box at(int t) const { return start.shifted(velocity * static_cast<double>(t)); }
};

/// First frame (>= 0, < frames) at which two constant-velocity boxes overlap
/// with positive area, solved from the motion equations. -1 when never.
inline int kinematic_first_contact(const ActorTruth& a, const ActorTruth& b, int frames) {
    // Positive overlap on one axis: lo_gap(t) < 0 and hi_gap(t) < 0 where each gap is linear in t.
    double tlo = -1e300, thi = 1e300;
    auto constrain = [&](double c0, double c1) {  // requires c0 + c1 t < 0
        if (c1 == 0.0) {
            if (c0 >= 0.0) thi = -1e300;
            return;
        }
        const double root = -c0 / c1;
        if (c1 > 0.0) thi = std::min(thi, root);
        else tlo = std::max(tlo, root);
    };
    const Eigen::Vector2d dv = a.velocity - b.velocity;
    // b.x - (a.x + a.w) < 0   and   a.x - (b.x + b.w) < 0, same for y.
    constrain(b.start.x - a.start.x - a.start.w, -dv.x());
    constrain(a.start.x - b.start.x - b.start.w, dv.x());
    constrain(b.start.y - a.start.y - a.start.l, -dv.y());
    constrain(a.start.y - b.start.y - b.start.l, dv.y());
    if (!(tlo < thi)) return -1;
    // Open interval (tlo, thi): smallest integer strictly above tlo.
    int t = static_cast<int>(std::max(0.0, std::floor(tlo) + 1.0));
    if (tlo < 0.0) t = 0;
    if (t >= frames || !(static_cast<double>(t) < thi)) return -1;
    return t;
}

struct CrossingScene {
    CrossingConfig config;
    std::vector<ActorTruth> actors;
    std::vector<int> draw_order;                  // back to front
    std::vector<std::vector<Box>> boxes;          // [frame][actor]
    std::vector<std::vector<double>> visible;     // [frame][actor] unoccluded pixel fraction
    int first_contact = -1;    // first frame with IoU > 0 between actors 0 and 1
    int occlusion_start = -1;  // first frame with IoU > 0.2
    int occlusion_end = -1;    // first frame after occlusion_start with IoU <= 0.05

    Image background;  // static camera: one noisy gray backdrop per scene

    /// Rendered frame t; deterministic per (seed, t).
    Frame render(int t) const {
        require(t >= 0 && t < static_cast<int>(boxes.size()), "render: frame index out of range");
        Image img = background;
        for (int a : draw_order) img.fill_box(boxes[t][a], actors[a].color);
        return Frame(t, std::move(img));
    }
};

namespace detail {

inline Rgb hsv_to_rgb(double h, double s, double v) {
    const double c = v * s;
    const double hp = std::fmod(h, 360.0) / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1) r = c, g = x;
    else if (hp < 2) r = x, g = c;
    else if (hp < 3) g = c, b = x;
    else if (hp < 4) g = x, b = c;
    else if (hp < 5) r = x, b = c;
    else r = c, b = x;
    const double m = v - c;
    auto q = [&](double u) { return static_cast<std::uint8_t>(std::lround(255.0 * (u + m))); };
    return {q(r), q(g), q(b)};
}

inline double visible_fraction(const Image& canvas, const std::vector<Box>& boxes,
                               const std::vector<int>& order, int actor) {
    const auto [x0, x1, y0, y1] = canvas.pixel_range(boxes[actor]);
    const long total = static_cast<long>(x1 - x0) * (y1 - y0);
    if (total <= 0) return 0.0;
    const auto pos = std::find(order.begin(), order.end(), actor) - order.begin();
    long hidden = 0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            for (auto k = pos + 1; k < static_cast<long>(order.size()); ++k) {
                const auto [a0, a1, b0, b1] = canvas.pixel_range(boxes[order[k]]);
                if (x >= a0 && x < a1 && y >= b0 && y < b1) {
                    ++hidden;
                    break;
                }
            }
        }
    return 1.0 - static_cast<double>(hidden) / static_cast<double>(total);
}

} // namespace detail

/// Solid-color boxes on a noisy gray background. Actors 0 and 1 cross near
/// the image center unless `disjoint`; extra actors use their own lanes.
inline CrossingScene gen_crossing_scene(const CrossingConfig& cfg) {
    require(cfg.actors >= 2 && cfg.actors <= 4, "gen_crossing_scene: 2-4 actors");
    require(cfg.frames >= 2, "gen_crossing_scene: need at least 2 frames");
    require(cfg.width >= 320 && cfg.height >= 480, "gen_crossing_scene: image must be at least 320x480");
    std::mt19937_64 rng(mix_seed(cfg.seed, 4000));
    CrossingScene s;
    s.config = cfg;
    s.actors.resize(cfg.actors);

    const double lane_h = cfg.height / 4.0;
    auto lane_center = [&](int lane) { return lane_h * (lane + 0.5); };
    const double hue0 = detail::uniform(rng, 0.0, 360.0);
    for (int i = 0; i < cfg.actors; ++i) {
        ActorTruth& a = s.actors[i];
        const double hue = hue0 + i * 360.0 / cfg.actors + detail::uniform(rng, -15.0, 15.0);
        a.color = detail::hsv_to_rgb(hue, detail::uniform(rng, 0.75, 1.0), detail::uniform(rng, 0.7, 1.0));
        a.start.w = detail::uniform(rng, 30.0, 45.0);
        a.start.l = detail::uniform(rng, 50.0, 70.0);
    }

    const double cx = 0.5 * cfg.width;
    const int tc = std::uniform_int_distribution<int>(cfg.frames * 5 / 14, cfg.frames / 2)(rng);
    for (int i = 0; i < cfg.actors; ++i) {
        ActorTruth& a = s.actors[i];
        const bool crossing = !cfg.disjoint && i < 2;
        if (crossing) {
            const double dir = i == 0 ? 1.0 : -1.0;
            a.velocity = {dir * detail::uniform(rng, 2.0, 4.0), detail::uniform(rng, -0.15, 0.15)};
            const double dy = detail::uniform(rng, -0.2, 0.2) * a.start.l;
            const Eigen::Vector2d at_tc(cx + detail::uniform(rng, -5.0, 5.0), lane_center(1) + dy);
            a.start = Box::centered(at_tc - a.velocity * tc, a.start.w, a.start.l);
        } else {
            const int lane = cfg.disjoint ? i : (i == 2 ? 3 : 0);
            const double dir = (rng() & 1U) ? 1.0 : -1.0;
            a.velocity = {dir * detail::uniform(rng, 1.0, 3.0), detail::uniform(rng, -0.15, 0.15)};
            const double x0 = dir > 0 ? 0.18 * cfg.width : 0.82 * cfg.width;
            a.start = Box::centered({x0, lane_center(lane)}, a.start.w, a.start.l);
        }
    }
    s.draw_order.resize(cfg.actors);
    for (int i = 0; i < cfg.actors; ++i) s.draw_order[i] = i;
    std::shuffle(s.draw_order.begin(), s.draw_order.end(), rng);

    {
        std::mt19937_64 noise_rng(mix_seed(cfg.seed, 5000));
        std::uniform_int_distribution<int> noise(-static_cast<int>(cfg.background_noise),
                                                 static_cast<int>(cfg.background_noise));
        s.background = Image(cfg.width, cfg.height);
        for (int y = 0; y < cfg.height; ++y)
            for (int x = 0; x < cfg.width; ++x) {
                const auto g = static_cast<std::uint8_t>(std::clamp(128 + noise(noise_rng), 0, 255));
                s.background.at(x, y) = {g, g, g};
            }
    }

    const Image canvas(cfg.width, cfg.height);
    s.boxes.resize(cfg.frames);
    s.visible.resize(cfg.frames);
    for (int t = 0; t < cfg.frames; ++t) {
        for (const auto& a : s.actors) s.boxes[t].push_back(a.at(t));
        for (int i = 0; i < cfg.actors; ++i)
            s.visible[t].push_back(detail::visible_fraction(canvas, s.boxes[t], s.draw_order, i));
        const double o = iou(s.boxes[t][0], s.boxes[t][1]);
        if (s.first_contact < 0 && o > 0.0) s.first_contact = t;
        if (s.occlusion_start < 0 && o > 0.2) s.occlusion_start = t;
        if (s.occlusion_start >= 0 && s.occlusion_end < 0 && t > s.occlusion_start && o <= 0.05)
            s.occlusion_end = t;
    }
    return s;
}

/// A 2D pose candidate plus the actor it was derived from.
struct DetectionTruth {
    Pose2D pose;
    int actor = -1;
};

/// Standing-pose joints normalized to the unit square (x right, y down).
inline const std::array<Eigen::Vector2d, kNumJoints>& unit_pose_template() {
    static const auto tpl = [] {
        const SkeletonModel m = SkeletonModel::dancer();
        const Pose3D p = forward_kinematics(m, m.rest_theta());
        Eigen::Vector2d lo(1e300, 1e300), hi(-1e300, -1e300);
        for (const auto& j : p.joints) {
            lo = lo.cwiseMin(j.head<2>());
            hi = hi.cwiseMax(j.head<2>());
        }
        std::array<Eigen::Vector2d, kNumJoints> out;
        for (int j = 0; j < kNumJoints; ++j)
            out[j] = (p.joints[j].head<2>() - lo).cwiseQuotient(hi - lo);
        return out;
    }();
    return tpl;
}

/// Detector-like candidates for frame t: one per actor that is at least
/// half visible, joints jittered inside its box, in shuffled order.
inline std::vector<DetectionTruth> gen_detections(const CrossingScene& s, int t, double jitter_px = 1.5) {
    std::mt19937_64 rng(mix_seed(s.config.seed, 6000 + static_cast<std::uint64_t>(t)));
    std::normal_distribution<double> n(0.0, jitter_px);
    std::vector<DetectionTruth> out;
    for (int a = 0; a < static_cast<int>(s.actors.size()); ++a) {
        if (s.visible[t][a] < 0.5) continue;
        const Box& b = s.boxes[t][a];
        DetectionTruth d;
        d.actor = a;
        d.pose.frame_index = t;
        for (int j = 0; j < kNumJoints; ++j) {
            const Eigen::Vector2d& u = unit_pose_template()[j];
            d.pose.joints[j] = {b.x + u.x() * b.w + n(rng), b.y + u.y() * b.l + n(rng)};
            d.pose.confidence[j] = std::clamp(0.9 + 0.05 * n(rng) / std::max(jitter_px, 1e-9), 0.0, 1.0);
        }
        out.push_back(d);
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

} // namespace dancelift
