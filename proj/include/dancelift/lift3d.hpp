#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "camera.hpp"
#include "diffcore.hpp"
#include "error.hpp"
#include "init3d.hpp"
#include "pose.hpp"
#include "random.hpp"

namespace dancelift {

inline constexpr int kLiftInputs = 3 * kNumJoints;   // u, v, visibility per joint
inline constexpr int kLiftOutputs = 3 * kNumJoints;

struct LiftConfig {
    int channels = 64;
    int kernel = 3;
    std::vector<int> dilations = {1, 1, 2};
    int epochs = 200;
    int steps_per_epoch = 1;
    double learning_rate = 2e-3;
    double final_lr_fraction = 0.1;
    double alpha_scale = 1.0;     // multiplies the per-window smoothness weight
    int window = 3;               // half width of the error windows behind alpha
    double image_width = 256.0;   // input normalization
    double image_height = 256.0;
    std::uint64_t seed = 0;

    int receptive_field() const {
        int r = 1;
        for (int d : dilations) r += (kernel - 1) * d;
        return r;
    }

    void validate() const {
        require(channels > 0, "lift: channels must be positive");
        require(kernel >= 1 && kernel % 2 == 1, "lift: kernel must be odd");
        require(!dilations.empty(), "lift: need at least one layer");
        for (int d : dilations) require(d >= 1, "lift: dilations must be positive");
        require(epochs >= 1 && steps_per_epoch >= 1, "lift: epochs and steps must be positive");
        require(learning_rate > 0.0 && final_lr_fraction > 0.0, "lift: learning rate must be positive");
        require(alpha_scale >= 0.0, "lift: alpha scale must be non-negative");
        require(window >= 1, "lift: window must be positive");
        require(image_width > 0.0 && image_height > 0.0, "lift: image size must be positive");
    }
};

/// Causal conv stack: tanh(conv) per dilation, then a per-frame dense layer
/// to 75 outputs in meters.
struct LiftNet {
    LiftConfig config;
    std::vector<diff::Parameter> params;  // conv W/b pairs, then output W/b

    int receptive_field() const { return config.receptive_field(); }

    std::vector<diff::Parameter*> parameters() {
        std::vector<diff::Parameter*> out;
        for (auto& p : params) out.push_back(&p);
        return out;
    }
    std::vector<const diff::Parameter*> parameters() const {
        std::vector<const diff::Parameter*> out;
        for (const auto& p : params) out.push_back(&p);
        return out;
    }
    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.value.size();
        return n;
    }
};

/// One training clip. `poses3d` holds the lifting targets: init3d output for
/// unlabeled clips, ground truth for labeled ones.
struct LiftClip {
    PoseSeq2D poses2d;
    PoseSeq3D poses3d;
    CameraParams camera;
};

struct LossTerms {
    double smooth2d = 0.0;
    double smooth3d = 0.0;
    double reprojection = 0.0;
    double target = 0.0;
    double supervised = 0.0;  // labeled clips only
    double total() const { return smooth2d + smooth3d + reprojection + target + supervised; }
};

struct LiftLogRow {
    int epoch = 0;
    LossTerms terms;
};

struct LiftTraining {
    LiftNet net;
    std::vector<LiftLogRow> log;
    int labeled = 0;
    int unlabeled = 0;
};

namespace detail {

/// Normalized network input (T, 75, 1): centered pixel coordinates divided
/// by the image width, plus a visibility flag. Hidden joints read as zero.
inline diff::Tensor encode_lift_input(const PoseSeq2D& seq, const LiftConfig& cfg) {
    const int T = static_cast<int>(seq.size());
    diff::Tensor x(diff::Shape{T, kLiftInputs, 1});
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < kNumJoints; ++j) {
            if (!seq[t].visible(j)) continue;
            x.at(t, 3 * j) = (seq[t].joints[j].x() - 0.5 * cfg.image_width) / cfg.image_width;
            x.at(t, 3 * j + 1) = (seq[t].joints[j].y() - 0.5 * cfg.image_height) / cfg.image_width;
            x.at(t, 3 * j + 2) = 1.0;
        }
    return x;
}

inline diff::Tensor pose_tensor(const PoseSeq3D& seq) {
    const int T = static_cast<int>(seq.size());
    diff::Tensor x(diff::Shape{T, kLiftOutputs, 1});
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < kNumJoints; ++j)
            for (int k = 0; k < 3; ++k) x.at(t, 3 * j + k) = seq[t].joints[j][k];
    return x;
}

inline PoseSeq3D tensor_poses(const diff::Tensor& x, const PoseSeq2D& like) {
    PoseSeq3D out(x.shape().time);
    for (int t = 0; t < x.shape().time; ++t) {
        out[t].frame_index = like[t].frame_index;
        for (int j = 0; j < kNumJoints; ++j)
            out[t].joints[j] = {x.at(t, 3 * j), x.at(t, 3 * j + 1), x.at(t, 3 * j + 2)};
    }
    return out;
}

inline diff::Parameter glorot(std::string name, int rows, int cols, int fan_in, int fan_out,
                              double gain, std::mt19937_64& rng) {
    const double a = gain * std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    diff::Tensor w(diff::Shape{rows, cols, 1});
    for (double& v : w.values()) v = u(rng);
    return {std::move(name), std::move(w)};
}

/// Forward pass; output in millimeters, shape (T, 75, B).
inline diff::Var lift_forward(diff::Graph& g, std::vector<diff::Var>& p, diff::Var x, const LiftConfig& cfg) {
    diff::Var h = x;
    std::size_t k = 0;
    for (int d : cfg.dilations) {
        h = diff::tanh(diff::conv1d(h, p[k], p[k + 1], cfg.kernel, d, diff::Padding::Causal));
        k += 2;
    }
    return diff::scale(diff::dense(h, p[k], p[k + 1]), 1000.0);
}

struct PreparedClip {
    diff::Tensor input;
    diff::Tensor target3d;    // (T, 75, 1) mm
    diff::Tensor target2d;    // (T, 50, 1) px
    diff::Tensor visible;     // (T, 50, 1) 0/1
    diff::Tensor alpha2d;     // (T-1, 50, 1) smoothness weights
    diff::Tensor alpha3d;     // (T-1, 75, 1) smoothness weights times beta
    diff::Tensor target_weight;  // (T, 75, 1) s^2
    diff::Tensor camera;      // (1, 4, 1)
    bool labeled = false;
    int frames = 0;
};

/// Per-frame RMS reprojection residual (px) over visible joints; NaN when
/// nothing is visible.
inline double frame_rms(const Pose3D& p, const Pose2D& q, const CameraParams& cam) {
    double s = 0.0;
    int n = 0;
    for (int j = 0; j < kNumJoints; ++j) {
        if (!q.visible(j)) continue;
        s += (project_point(p.joints[j], cam) - q.joints[j]).squaredNorm();
        ++n;
    }
    return n ? std::sqrt(s / n) : std::nan("");
}

/// alpha per frame: 1 / (1 + mean residual of the init3d window the frame
/// belongs to). Frames take the first window that covers them.
inline std::vector<double> window_alpha(const LiftClip& c, const LiftConfig& cfg) {
    const int T = static_cast<int>(c.poses2d.size());
    std::vector<double> rms(T);
    for (int t = 0; t < T; ++t) rms[t] = frame_rms(c.poses3d[t], c.poses2d[t], c.camera);
    std::vector<std::pair<int, int>> spans;
    if (T >= 2 * cfg.window + 1)
        for (int ctr : window_centers(T, cfg.window)) spans.emplace_back(ctr - cfg.window, ctr + cfg.window);
    else
        spans.emplace_back(0, T - 1);
    std::vector<double> alpha(T, -1.0);
    for (const auto& [a, b] : spans) {
        double s = 0.0;
        int n = 0;
        for (int t = a; t <= b; ++t)
            if (std::isfinite(rms[t])) s += rms[t], ++n;
        const double e = n ? s / n : 0.0;
        for (int t = a; t <= b; ++t)
            if (alpha[t] < 0.0) alpha[t] = 1.0 / (1.0 + e);
    }
    for (double& a : alpha) a *= cfg.alpha_scale;
    return alpha;
}

inline double mean_depth(const PoseSeq3D& seq) {
    double s = 0.0;
    for (const auto& p : seq)
        for (const auto& j : p.joints) s += j.z();
    return s / (static_cast<double>(seq.size()) * kNumJoints);
}

inline PreparedClip prepare_clip(const LiftClip& c, bool labeled, const LiftConfig& cfg) {
    const int T = static_cast<int>(c.poses2d.size());
    require(c.poses3d.size() == c.poses2d.size(),
            "lift: 2D and 3D sequences differ in length (" + std::to_string(c.poses2d.size()) + " vs " +
                std::to_string(c.poses3d.size()) + ")");
    require(T >= cfg.receptive_field(), "lift: clip of " + std::to_string(T) +
                                            " frames is shorter than the receptive field " +
                                            std::to_string(cfg.receptive_field()));
    require(c.camera.valid(), "lift: invalid camera");
    for (const auto& p : c.poses2d) p.validate();
    for (const auto& p : c.poses3d) require(p.finite(), "lift: non-finite 3D target");

    PreparedClip out;
    out.labeled = labeled;
    out.frames = T;
    out.input = encode_lift_input(c.poses2d, cfg);
    out.target3d = pose_tensor(c.poses3d);
    out.camera = diff::Tensor(diff::Shape{1, 4, 1}, {c.camera.fx, c.camera.fy, c.camera.cx, c.camera.cy});

    const double zbar = mean_depth(c.poses3d);
    require(zbar > kMinDepth, "lift: 3D targets lie behind the camera");
    const double s = c.camera.fx / zbar;  // px per mm at the mean depth
    out.target_weight = diff::Tensor(diff::Shape{T, kLiftOutputs, 1}, s * s / T);

    out.target2d = diff::Tensor(diff::Shape{T, 2 * kNumJoints, 1});
    out.visible = diff::Tensor(diff::Shape{T, 2 * kNumJoints, 1});
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < kNumJoints; ++j) {
            if (!c.poses2d[t].visible(j)) continue;
            out.target2d.at(t, 2 * j) = c.poses2d[t].joints[j].x();
            out.target2d.at(t, 2 * j + 1) = c.poses2d[t].joints[j].y();
            out.visible.at(t, 2 * j) = out.visible.at(t, 2 * j + 1) = 1.0 / T;
        }
    if (labeled) {
        // plain mean of squared joint distances (mm^2) over frames and joints
        out.target_weight = diff::Tensor(diff::Shape{T, kLiftOutputs, 1}, 1.0 / (T * kNumJoints));
        return out;
    }

    // beta balances the 3D smoothness term against the 2D one
    double d2 = 0.0, d3 = 0.0;
    int n2 = 0, n3 = 0;
    for (int t = 1; t < T; ++t)
        for (int j = 0; j < kNumJoints; ++j) {
            if (c.poses2d[t].visible(j) && c.poses2d[t - 1].visible(j)) {
                d2 += (c.poses2d[t].joints[j] - c.poses2d[t - 1].joints[j]).norm();
                ++n2;
            }
            d3 += (c.poses3d[t].joints[j] - c.poses3d[t - 1].joints[j]).norm();
            ++n3;
        }
    d2 = n2 ? d2 / n2 : 0.0;
    d3 = n3 ? d3 / n3 : 0.0;
    const double beta = (d2 > 0.0 && d3 > 0.0) ? (d2 / d3) * (d2 / d3) : s * s;

    const std::vector<double> alpha = window_alpha(c, cfg);
    out.alpha2d = diff::Tensor(diff::Shape{T - 1, 2 * kNumJoints, 1});
    out.alpha3d = diff::Tensor(diff::Shape{T - 1, kLiftOutputs, 1});
    for (int t = 1; t < T; ++t) {
        out.alpha2d.step(t - 1).setConstant(alpha[t] / T);
        out.alpha3d.step(t - 1).setConstant(alpha[t] * beta / T);
    }
    return out;
}

} // namespace detail

/// Training data with per-clip weights precomputed. Labeled clips come first.
struct LiftBatch {
    std::vector<detail::PreparedClip> clips;
    int labeled = 0;
    int unlabeled = 0;
};

inline LiftBatch prepare_lift_batch(const std::vector<LiftClip>& labeled, const std::vector<LiftClip>& unlabeled,
                                    const LiftConfig& cfg) {
    cfg.validate();
    LiftBatch b;
    for (const auto& c : labeled) b.clips.push_back(detail::prepare_clip(c, true, cfg));
    for (const auto& c : unlabeled) b.clips.push_back(detail::prepare_clip(c, false, cfg));
    b.labeled = static_cast<int>(labeled.size());
    b.unlabeled = static_cast<int>(unlabeled.size());
    return b;
}

/// Fresh network. The output bias starts at `mean_pose` (mm, 75 values), so
/// the untrained network already predicts the average target.
inline LiftNet make_lift_net(const LiftConfig& cfg, const std::vector<double>& mean_pose) {
    cfg.validate();
    require(mean_pose.size() == static_cast<std::size_t>(kLiftOutputs), "lift: mean pose must hold 75 values");
    LiftNet net;
    net.config = cfg;
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x11f7));
    int in = kLiftInputs;
    for (std::size_t l = 0; l < cfg.dilations.size(); ++l) {
        const std::string n = "conv" + std::to_string(l);
        net.params.push_back(detail::glorot(n + ".w", cfg.kernel * cfg.channels, in, cfg.kernel * in,
                                            cfg.channels, 1.0, rng));
        net.params.emplace_back(n + ".b", diff::Tensor(diff::Shape{1, cfg.channels, 1}));
        in = cfg.channels;
    }
    net.params.push_back(detail::glorot("out.w", kLiftOutputs, in, in, kLiftOutputs, 0.1, rng));
    diff::Tensor bias(diff::Shape{1, kLiftOutputs, 1});
    for (int k = 0; k < kLiftOutputs; ++k) bias[k] = mean_pose[k] / 1000.0;
    net.params.emplace_back("out.b", std::move(bias));
    return net;
}

inline std::vector<double> mean_target_pose(const LiftBatch& b) {
    std::vector<double> m(kLiftOutputs, 0.0);
    double n = 0.0;
    for (const auto& c : b.clips) {
        for (int t = 0; t < c.frames; ++t)
            for (int k = 0; k < kLiftOutputs; ++k) m[k] += c.target3d.at(t, k);
        n += c.frames;
    }
    for (double& v : m) v /= n;
    return m;
}

/// Loss on a batch, averaged over clips. With `backward` set, parameter
/// gradients are overwritten with the loss gradient.
inline LossTerms lift_loss(LiftNet& net, const LiftBatch& batch, bool backward = false) {
    using namespace diff;
    require(!batch.clips.empty(), "lift: empty batch");
    Graph g;
    std::vector<Var> p;
    for (auto& prm : net.params) p.push_back(g.param(prm));
    Var cst = g.constant(Tensor::scalar(0.0));
    Var total = cst;
    LossTerms terms;
    const double w = 1.0 / static_cast<double>(batch.clips.size());
    for (const auto& c : batch.clips) {
        Var out = dancelift::detail::lift_forward(g, p, g.constant(c.input), net.config);
        if (c.labeled) {
            Var sup = sum_squared_error(out, c.target3d, &c.target_weight);
            terms.supervised += w * g.value(sup).item();
            total = add(total, scale(sup, w));
            continue;
        }
        Var uv = project_pinhole(out, g.constant(c.camera), kMinDepth);
        Var rep = sum_squared_error(uv, c.target2d, &c.visible);
        Var tgt = sum_squared_error(out, c.target3d, &c.target_weight);
        Var s2 = sum_squared_error(time_diff(uv), Tensor(c.alpha2d.shape()), &c.alpha2d);
        Var s3 = sum_squared_error(time_diff(out), Tensor(c.alpha3d.shape()), &c.alpha3d);
        terms.reprojection += w * g.value(rep).item();
        terms.target += w * g.value(tgt).item();
        terms.smooth2d += w * g.value(s2).item();
        terms.smooth3d += w * g.value(s3).item();
        total = add(total, scale(add(add(rep, tgt), add(s2, s3)), w));
    }
    if (backward) {
        for (auto& prm : net.params) prm.zero_grad();
        g.backward(total);
    }
    return terms;
}

namespace detail {

/// Outputs pushed behind the camera count as divergence of the training run.
inline LossTerms checked_loss(LiftNet& net, const LiftBatch& batch, bool backward, int epoch) {
    try {
        return lift_loss(net, batch, backward);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::BehindCamera) throw;
        fail(ErrorKind::Divergence, "lift: prediction left the camera frustum at epoch " + std::to_string(epoch));
    }
}

} // namespace detail

/// Full-batch Adam with an exponentially decaying step size. The log holds
/// the loss evaluated at the start of every epoch plus one final row.
inline LiftTraining train_lift_batch(const LiftBatch& batch, const LiftConfig& cfg) {
    LiftTraining out;
    out.labeled = batch.labeled;
    out.unlabeled = batch.unlabeled;
    out.net = make_lift_net(cfg, mean_target_pose(batch));
    diff::AdamState adam(cfg.learning_rate);
    const int total_steps = cfg.epochs * cfg.steps_per_epoch;
    auto params = out.net.parameters();
    int step = 0;
    for (int e = 1; e <= cfg.epochs; ++e) {
        for (int k = 0; k < cfg.steps_per_epoch; ++k, ++step) {
            const LossTerms terms = detail::checked_loss(out.net, batch, true, e);
            if (!std::isfinite(terms.total()))
                fail(ErrorKind::Divergence, "lift: non-finite loss at epoch " + std::to_string(e));
            if (k == 0) out.log.push_back({e, terms});
            adam.lr = cfg.learning_rate *
                      std::pow(cfg.final_lr_fraction, static_cast<double>(step) / total_steps);
            diff::adam_step(adam, params);
        }
    }
    const LossTerms last = detail::checked_loss(out.net, batch, false, cfg.epochs + 1);
    if (!std::isfinite(last.total()))
        fail(ErrorKind::Divergence, "lift: non-finite loss at epoch " + std::to_string(cfg.epochs + 1));
    out.log.push_back({cfg.epochs + 1, last});
    return out;
}

inline LiftTraining train_lift(const std::vector<LiftClip>& clips, const LiftConfig& cfg) {
    require(!clips.empty(), "lift: no training clips");
    return train_lift_batch(prepare_lift_batch({}, clips, cfg), cfg);
}

inline LiftTraining train_lift(const PoseSeq2D& poses2d, const PoseSeq3D& init_poses3d, const CameraParams& cam,
                               const LiftConfig& cfg) {
    return train_lift(std::vector<LiftClip>{{poses2d, init_poses3d, cam}}, cfg);
}

/// Labeled clips carry ground-truth 3D; unlabeled clips carry init3d targets.
inline LiftTraining train_lift_semisup(const std::vector<LiftClip>& labeled, const std::vector<LiftClip>& unlabeled,
                                       const LiftConfig& cfg) {
    require(!labeled.empty(), "lift: semi-supervised training needs at least one labeled clip");
    require(!unlabeled.empty(), "lift: semi-supervised training needs at least one unlabeled clip");
    return train_lift_batch(prepare_lift_batch(labeled, unlabeled, cfg), cfg);
}

inline PoseSeq3D infer(const LiftNet& net, const PoseSeq2D& poses2d) {
    const int R = net.receptive_field();
    require(static_cast<int>(poses2d.size()) >= R,
            "lift: sequence of " + std::to_string(poses2d.size()) + " frames is shorter than the receptive field " +
                std::to_string(R));
    for (const auto& p : poses2d) p.validate();
    diff::Graph g;
    std::vector<diff::Var> p;
    for (const auto& prm : net.params) p.push_back(g.constant(prm.value));
    diff::Var out = detail::lift_forward(g, p, g.constant(detail::encode_lift_input(poses2d, net.config)), net.config);
    return detail::tensor_poses(g.value(out), poses2d);
}

} // namespace dancelift
