#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "camera.hpp"
#include "diff/adam.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "pose.hpp"
#include "random.hpp"
#include "skeleton.hpp"

namespace dancelift {

struct InitConfig {
    int window = 3;            // half-width
    int seeds = 2;
    int epochs = 50;
    int steps_per_epoch = 20;  // Adam iterations per epoch
    double learning_rate = 0.01;
    double final_lr_fraction = 0.05;  // exponential decay target at the last step
    int image_width = 256;
    int image_height = 256;
    int min_visible = 8;
    bool warm_start = true;    // false: every window draws fresh seeds
    double bone_prior_weight = 0.01;  // squared pixels per squared standard deviation
    double min_root_depth = 1500.0;  // mm
    double height = 1800.0;
    double collinear_tolerance = 1e-6;
    int jobs = 1;
    std::uint64_t seed = 0;

    void validate() const {
        require(window >= 1, "init3d: window must be >= 1");
        require(seeds >= 1, "init3d: need at least one seed");
        require(epochs >= 1 && steps_per_epoch >= 1, "init3d: epochs and steps must be positive");
        require(learning_rate > 0.0 && final_lr_fraction > 0.0, "init3d: learning rate must be positive");
        require(image_width > 0 && image_height > 0, "init3d: invalid image size");
        require(min_visible >= 1 && min_visible <= kNumJoints, "init3d: min_visible out of range");
    }
};

/// Everything that determines the fitted pose at one frame.
struct FitState {
    ThetaVec theta = ThetaVec::Zero();
    RootPose root;
    BoneVec bones = BoneVec::Zero();
    CameraParams camera;
};

inline SkeletonModel fit_model(const FitState& s, double height) {
    SkeletonModel m = SkeletonModel::dancer(height);
    m.bone_ratios = s.bones;
    m.root = s.root;
    return m;
}

inline Pose3D fit_pose(const FitState& s, double height) {
    return forward_kinematics(fit_model(s, height), s.theta);
}

/// Squared reprojection error summed over visible joints.
inline double frame_error(const Pose3D& p, const Pose2D& target, const CameraParams& cam) {
    double e = 0.0;
    for (int j = 0; j < kNumJoints; ++j)
        if (target.visible(j)) e += (project_point(p.joints[j], cam) - target.joints[j]).squaredNorm();
    return e;
}

struct SeedResult {
    int seed = 0;
    bool ok = false;
    std::vector<FitState> frames;  // per window frame; camera is that frame's own optimum
    CameraParams camera;           // running mean after the last frame
    std::vector<double> errors;    // per frame, under `camera`
    std::vector<std::vector<double>> history;  // per frame: best objective after each epoch

    double total() const {
        double s = 0.0;
        for (double e : errors) s += e;
        return s;
    }
};

struct WindowResult {
    int center = 0, first = 0, last = 0;
    std::vector<SeedResult> seeds;
    int winner = -1;
    bool flagged = false;
    std::string reason;

    const SeedResult& best() const { return seeds.at(winner); }
};

/// Index of the smallest total; ties keep the lower index.
inline int select_seed(std::span<const double> totals) {
    int best = -1;
    for (int k = 0; k < static_cast<int>(totals.size()); ++k)
        if (std::isfinite(totals[k]) && (best < 0 || totals[k] < totals[best])) best = k;
    return best;
}

namespace detail {

// Optimizer coordinates: theta (rad), azimuth (rad), root position (m),
// bones (x10), camera (fx, fy, cx, cy divided by the image width).
inline constexpr int kVarTheta = 0;
inline constexpr int kVarAz = kNumOffsets;
inline constexpr int kVarPos = kVarAz + 1;
inline constexpr int kVarBone = kVarPos + 3;
inline constexpr int kVarCam = kVarBone + kNumBones;
inline constexpr int kNumVars = kVarCam + 4;
inline constexpr double kBoneScale = 10.0;
inline constexpr double kPosScale = 1000.0;

using VarVec = Eigen::Matrix<double, kNumVars, 1>;

inline VarVec pack(const FitState& s, double W) {
    VarVec x;
    x.segment<kNumOffsets>(kVarTheta) = s.theta;
    x[kVarAz] = s.root.azimuth;
    x.segment<3>(kVarPos) = s.root.position / kPosScale;
    x.segment<kNumBones>(kVarBone) = s.bones * kBoneScale;
    x.segment<4>(kVarCam) = s.camera.as_vector() / W;
    return x;
}

inline FitState unpack(const VarVec& x, double W, const RootPose& like) {
    FitState s;
    s.theta = x.segment<kNumOffsets>(kVarTheta);
    s.root = like;
    s.root.azimuth = x[kVarAz];
    s.root.position = x.segment<3>(kVarPos) * kPosScale;
    s.bones = x.segment<kNumBones>(kVarBone) / kBoneScale;
    s.camera = CameraParams::from_vector(x.segment<4>(kVarCam) * W);
    return s;
}

/// Bounds, bone priors, a depth floor and positive focal lengths.
inline void project_feasible(VarVec& x, const SkeletonModel& m, const InitConfig& cfg) {
    for (int k = 0; k < kNumOffsets; ++k) x[kVarTheta + k] = m.theta_bounds[k].clamp(x[kVarTheta + k]);
    for (int i = 0; i < kNumBones; ++i)
        x[kVarBone + i] = std::clamp(x[kVarBone + i], m.bone_stats[i].lower() * kBoneScale,
                                     m.bone_stats[i].upper() * kBoneScale);
    x[kVarPos + 2] = std::max(x[kVarPos + 2], cfg.min_root_depth / kPosScale);
    x[kVarCam] = std::max(x[kVarCam], 0.05);
    x[kVarCam + 1] = std::max(x[kVarCam + 1], 0.05);
}

struct Objective {
    double value = std::numeric_limits<double>::infinity();  // reprojection + prior
    double reprojection = std::numeric_limits<double>::infinity();
};

inline Objective evaluate(const VarVec& x, const Pose2D& target, const InitConfig& cfg, const RootPose& like,
                          VarVec* grad) {
    const double W = cfg.image_width;
    const FitState s = unpack(x, W, like);
    const SkeletonModel m = fit_model(s, cfg.height);
    const CameraParams& c = s.camera;
    Objective out;

    Eigen::Matrix<double, 3 * kNumJoints, 1> gP = Eigen::Matrix<double, 3 * kNumJoints, 1>::Zero();
    double dfx = 0, dfy = 0, dcx = 0, dcy = 0;
    auto accumulate = [&](const Pose3D& pose) -> bool {
        double e = 0.0;
        for (int j = 0; j < kNumJoints; ++j) {
            if (!target.visible(j)) continue;
            const Eigen::Vector3d& P = pose.joints[j];
            if (!(P.z() > kMinDepth)) return false;
            const double iz = 1.0 / P.z();
            const double ru = c.fx * P.x() * iz + c.cx - target.joints[j].x();
            const double rv = c.fy * P.y() * iz + c.cy - target.joints[j].y();
            e += ru * ru + rv * rv;
            if (grad) {
                gP[3 * j] = 2.0 * ru * c.fx * iz;
                gP[3 * j + 1] = 2.0 * rv * c.fy * iz;
                gP[3 * j + 2] = -2.0 * (ru * c.fx * P.x() + rv * c.fy * P.y()) * iz * iz;
                dfx += 2.0 * ru * P.x() * iz;
                dfy += 2.0 * rv * P.y() * iz;
                dcx += 2.0 * ru;
                dcy += 2.0 * rv;
            }
        }
        out.reprojection = e;
        return std::isfinite(e);
    };

    bool finite;
    std::optional<PoseJacobian> jac;
    if (grad) {
        jac = pose_jacobian(m, s.theta);
        finite = accumulate(jac->pose);
    } else {
        finite = accumulate(forward_kinematics(m, s.theta));
    }
    if (!finite) {
        out.reprojection = out.value = std::numeric_limits<double>::infinity();
        return out;
    }

    double prior = 0.0;
    BoneVec dprior = BoneVec::Zero();
    for (int i = 0; i < kNumBones; ++i) {
        const double z = (s.bones[i] - m.bone_stats[i].average) / m.bone_stats[i].stddev;
        prior += z * z;
        dprior[i] = 2.0 * z / m.bone_stats[i].stddev;
    }
    out.value = out.reprojection + cfg.bone_prior_weight * prior;

    if (grad) {
        grad->segment<kNumOffsets>(kVarTheta) = jac->d_theta.transpose() * gP;
        (*grad)[kVarAz] = jac->d_azimuth.dot(gP);
        Eigen::Vector3d gpos = Eigen::Vector3d::Zero();
        for (int j = 0; j < kNumJoints; ++j) gpos += gP.segment<3>(3 * j);
        grad->segment<3>(kVarPos) = gpos * kPosScale;
        grad->segment<kNumBones>(kVarBone) =
            (jac->d_bones.transpose() * gP + cfg.bone_prior_weight * dprior) / kBoneScale;
        (*grad)[kVarCam] = dfx * W;
        (*grad)[kVarCam + 1] = dfy * W;
        (*grad)[kVarCam + 2] = dcx * W;
        (*grad)[kVarCam + 3] = dcy * W;
    }
    return out;
}

struct FrameFit {
    FitState state;
    Objective objective;
    std::vector<double> history;
};

/// Adam with exponential step decay, projection after every step and
/// best-iterate retention.
inline FrameFit optimize_frame(const FitState& start, const Pose2D& target, const InitConfig& cfg) {
    const double W = cfg.image_width;
    const SkeletonModel m = SkeletonModel::dancer(cfg.height);
    VarVec x = pack(start, W);
    project_feasible(x, m, cfg);
    VarVec best = x;
    Objective best_obj = evaluate(x, target, cfg, start.root, nullptr);

    diff::AdamState adam(cfg.learning_rate);
    FrameFit out;
    const double total = static_cast<double>(cfg.epochs) * cfg.steps_per_epoch;
    VarVec g;
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int s = 0; s < cfg.steps_per_epoch; ++s, ++step) {
            const Objective o = evaluate(x, target, cfg, start.root, &g);
            if (!std::isfinite(o.value) || !g.allFinite()) {
                x = best;  // step back into the finite region and keep going more gently
                adam = diff::AdamState(adam.lr * 0.5);
                continue;
            }
            if (o.value < best_obj.value) {
                best_obj = o;
                best = x;
            }
            adam.lr = cfg.learning_rate * std::pow(cfg.final_lr_fraction, static_cast<double>(step) / total);
            diff::adam_step(adam, std::span<double>(x.data(), kNumVars), std::span<const double>(g.data(), kNumVars));
            project_feasible(x, m, cfg);
        }
        out.history.push_back(best_obj.value);
    }
    const Objective last = evaluate(x, target, cfg, start.root, nullptr);
    if (last.value < best_obj.value) {
        best_obj = last;
        best = x;
        out.history.back() = best_obj.value;
    }
    // Unpacking is not bit-exact, so an unimproved feasible start is returned as given.
    VarVec x0 = pack(start, W);
    const VarVec raw = x0;
    project_feasible(x0, m, cfg);
    out.state = (best == x0 && x0 == raw) ? start : unpack(best, W, start.root);
    out.objective = best_obj;
    return out;
}

/// Places the root so the fitted pose's visible centroid and spread match the 2D target.
inline void place_root(FitState& s, const Pose2D& target, const InitConfig& cfg) {
    FitState at_origin = s;
    at_origin.root.position = Eigen::Vector3d::Zero();
    const Pose3D p = fit_pose(at_origin, cfg.height);
    Eigen::Vector2d c2 = Eigen::Vector2d::Zero();
    Eigen::Vector3d c3 = Eigen::Vector3d::Zero();
    int n = 0;
    for (int j = 0; j < kNumJoints; ++j)
        if (target.visible(j)) {
            c2 += target.joints[j];
            c3 += p.joints[j];
            ++n;
        }
    c2 /= n;
    c3 /= n;
    double s2 = 0.0, s3 = 0.0;
    for (int j = 0; j < kNumJoints; ++j)
        if (target.visible(j)) {
            s2 += (target.joints[j] - c2).squaredNorm();
            s3 += (p.joints[j] - c3).head<2>().squaredNorm();
        }
    const double f = 0.5 * (s.camera.fx + s.camera.fy);
    double depth = s2 > 0.0 ? f * std::sqrt(s3 / s2) : 4000.0;
    depth = std::max(depth - c3.z(), cfg.min_root_depth) + c3.z();
    s.root.position = backproject(c2, depth, s.camera) - c3;
    s.root.position.z() = std::max(s.root.position.z(), cfg.min_root_depth);
}

inline FitState fresh_seed(int k, std::uint64_t rng_seed, const Pose2D& target, const InitConfig& cfg) {
    const SkeletonModel m = SkeletonModel::dancer(cfg.height);
    const double W = cfg.image_width, H = cfg.image_height;
    FitState s;
    if (k == 0) {
        s.theta = m.rest_theta();
        s.bones = m.bone_ratios;
        s.camera = {W, W, 0.5 * W, 0.5 * H};
    } else {
        std::mt19937_64 rng(rng_seed);
        s.theta = sample_theta(m, rng());
        s.bones = sample_bones(m, rng());
        std::uniform_real_distribution<double> f(0.5 * W, 2.0 * W), u(-0.1, 0.1), az(-std::numbers::pi, std::numbers::pi);
        s.camera.fx = s.camera.fy = f(rng);
        s.camera.cx = 0.5 * W + u(rng) * W;
        s.camera.cy = 0.5 * H + u(rng) * H;
        s.root.azimuth = az(rng);
    }
    place_root(s, target, cfg);
    return s;
}

inline bool collinear(const Pose2D& p, double tol) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    int n = 0;
    for (int j = 0; j < kNumJoints; ++j)
        if (p.visible(j)) mean += p.joints[j], ++n;
    if (n < 3) return true;
    mean /= n;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (int j = 0; j < kNumJoints; ++j)
        if (p.visible(j)) cov += (p.joints[j] - mean) * (p.joints[j] - mean).transpose();
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
    return ev[1] <= 0.0 || ev[0] <= tol * ev[1];
}

inline bool same_input(const Pose2D& a, const Pose2D& b) {
    return a.joints == b.joints && a.confidence == b.confidence;
}

/// `fitted_for`, when given, is the 2D pose that `start` was already fitted to.
inline SeedResult run_seed(int k, const PoseSeq2D& poses2d, int first, int last, const FitState& start,
                           const Pose2D* fitted_for, const InitConfig& cfg) {
    SeedResult r;
    r.seed = k;
    FitState state = start;
    std::vector<CameraParams> cams;
    for (int i = first; i <= last; ++i) {
        const Pose2D* prev = i > first ? &poses2d[i - 1] : fitted_for;
        FrameFit fit;
        if (prev && same_input(*prev, poses2d[i])) {
            // Identical input: reuse the previous fit rather than drifting further.
            fit.state = i > first ? r.frames.back() : start;
            fit.objective.value = fit.objective.reprojection =
                frame_error(fit_pose(fit.state, cfg.height), poses2d[i], fit.state.camera);
            fit.history.assign(cfg.epochs, fit.objective.value);
        } else {
            fit = optimize_frame(state, poses2d[i], cfg);
        }
        if (!std::isfinite(fit.objective.value)) return r;
        cams.push_back(fit.state.camera);
        r.frames.push_back(fit.state);
        r.history.push_back(std::move(fit.history));
        state = fit.state;
        state.camera = smooth_camera(cams);
    }
    r.camera = smooth_camera(cams);
    for (int i = first; i <= last; ++i) {
        const double e = frame_error(fit_pose(r.frames[i - first], cfg.height), poses2d[i], r.camera);
        if (!std::isfinite(e)) return r;
        r.errors.push_back(e);
    }
    r.ok = true;
    return r;
}

} // namespace detail

/// Fits the window [t - window, t + window]. `warm`, when given, is the
/// starting state of seed 0 instead of the standing posture.
inline WindowResult initialize_window(const PoseSeq2D& poses2d, int t, const InitConfig& cfg,
                                      const FitState* warm = nullptr, int window_index = 0,
                                      const Pose2D* warm_fitted_for = nullptr) {
    cfg.validate();
    WindowResult w;
    w.center = t;
    w.first = t - cfg.window;
    w.last = t + cfg.window;
    require(w.first >= 0 && w.last < static_cast<int>(poses2d.size()),
            "init3d: window [" + std::to_string(w.first) + "," + std::to_string(w.last) + "] outside the sequence");
    for (int i = w.first; i <= w.last; ++i) {
        poses2d[i].validate();
        if (poses2d[i].visible_count() < cfg.min_visible)
            fail(ErrorKind::LowVisibility, "frame " + std::to_string(i) + " has " +
                                               std::to_string(poses2d[i].visible_count()) + " visible joints");
    }
    for (int i = w.first; i <= w.last; ++i)
        if (detail::collinear(poses2d[i], cfg.collinear_tolerance)) {
            w.flagged = true;
            w.reason = "collinear joints at frame " + std::to_string(i);
            return w;
        }

    w.seeds.resize(cfg.seeds);
    parallel_for(cfg.seeds, cfg.jobs, [&](int k) {
        const std::uint64_t s = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(window_index)), static_cast<std::uint64_t>(k));
        FitState start = (k == 0 && warm) ? *warm : detail::fresh_seed(k, s, poses2d[w.first], cfg);
        const bool warm_seed = k == 0 && warm;
        w.seeds[k] = detail::run_seed(k, poses2d, w.first, w.last, start,
                                      warm_seed ? warm_fitted_for : nullptr, cfg);
    });
    std::vector<double> totals;
    for (const auto& s : w.seeds) totals.push_back(s.ok ? s.total() : std::numeric_limits<double>::infinity());
    w.winner = select_seed(totals);
    if (w.winner < 0) fail(ErrorKind::Divergence, "init3d: every seed diverged in window at frame " + std::to_string(t));
    return w;
}

struct InitResult {
    PoseSeq3D poses;
    std::vector<FitState> states;        // per frame, camera = its window's smoothed camera
    std::vector<double> frame_errors;    // squared pixels, under states[t].camera
    std::vector<WindowResult> windows;
    CameraParams camera;                 // mean of the window cameras
};

/// Window centers: window, 3*window, ... plus one trailing window when the
/// stride leaves frames uncovered.
inline std::vector<int> window_centers(int frames, int window) {
    require(frames >= 2 * window + 1, "init3d: sequence of " + std::to_string(frames) +
                                          " frames is shorter than one window");
    std::vector<int> c;
    for (int t = window; t + window < frames; t += 2 * window) c.push_back(t);
    if (c.back() + window < frames - 1) c.push_back(frames - 1 - window);
    return c;
}

inline InitResult initialize_sequence(const PoseSeq2D& poses2d, const InitConfig& cfg) {
    cfg.validate();
    const int N = static_cast<int>(poses2d.size());
    const auto centers = window_centers(N, cfg.window);
    InitResult out;
    out.states.resize(N);
    std::vector<bool> covered(N, false), fitted(N, false);

    std::optional<FitState> warm;
    int warm_frame = -1;
    for (int wi = 0; wi < static_cast<int>(centers.size()); ++wi) {
        WindowResult w;
        try {
            const bool use = cfg.warm_start && warm;
            w = initialize_window(poses2d, centers[wi], cfg, use ? &*warm : nullptr, wi,
                                  use ? &poses2d[warm_frame] : nullptr);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::LowVisibility) throw;
            w.center = centers[wi];
            w.first = centers[wi] - cfg.window;
            w.last = centers[wi] + cfg.window;
            w.flagged = true;
            w.reason = e.what();
        }
        if (!w.flagged) {
            const SeedResult& best = w.best();
            for (int i = w.first; i <= w.last; ++i) {
                if (covered[i]) continue;  // overlap with the previous window keeps the earlier fit
                out.states[i] = best.frames[i - w.first];
                out.states[i].camera = best.camera;
                covered[i] = fitted[i] = true;
            }
            warm = best.frames.back();
            warm->camera = best.camera;
            warm_frame = w.last;
        }
        out.windows.push_back(std::move(w));
    }

    std::vector<int> good;
    for (int i = 0; i < N; ++i)
        if (fitted[i]) good.push_back(i);
    if (good.empty()) fail(ErrorKind::LowVisibility, "init3d: no window could be fitted");
    for (int i = 0; i < N; ++i) {
        if (fitted[i]) continue;
        const auto hi = std::lower_bound(good.begin(), good.end(), i);
        if (hi == good.begin()) {
            out.states[i] = out.states[*hi];
        } else if (hi == good.end()) {
            out.states[i] = out.states[good.back()];
        } else {
            const int a = *(hi - 1), b = *hi;
            const double u = static_cast<double>(i - a) / (b - a);
            FitState s = out.states[u < 0.5 ? a : b];
            s.theta = (1.0 - u) * out.states[a].theta + u * out.states[b].theta;
            s.root.position = (1.0 - u) * out.states[a].root.position + u * out.states[b].root.position;
            s.root.azimuth = (1.0 - u) * out.states[a].root.azimuth + u * out.states[b].root.azimuth;
            out.states[i] = s;
        }
    }

    out.poses.resize(N);
    out.frame_errors.resize(N);
    std::vector<CameraParams> cams;
    for (const auto& w : out.windows)
        if (!w.flagged) cams.push_back(w.best().camera);
    out.camera = smooth_camera(cams);
    for (int i = 0; i < N; ++i) {
        out.poses[i] = fit_pose(out.states[i], cfg.height);
        out.poses[i].frame_index = i;
        out.frame_errors[i] = frame_error(out.poses[i], poses2d[i], out.states[i].camera);
    }
    return out;
}

} // namespace dancelift
