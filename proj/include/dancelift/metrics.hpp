#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "camera.hpp"
#include "error.hpp"
#include "pose.hpp"
#include "taxonomy.hpp"

namespace dancelift {

/// Mean per-joint Euclidean distance in millimeters, no alignment.
inline double mpjpe(const PoseSeq3D& pred, const PoseSeq3D& gt) {
    require(pred.size() == gt.size(), "mpjpe: sequence lengths differ");
    require(!pred.empty(), "mpjpe: empty sequences");
    double sum = 0.0;
    for (std::size_t t = 0; t < pred.size(); ++t)
        for (int j = 0; j < kNumJoints; ++j) sum += (pred[t].joints[j] - gt[t].joints[j]).norm();
    return sum / (static_cast<double>(pred.size()) * kNumJoints);
}

/// Mean over frames of the head-to-ankle path length
/// (nose, neck, mid hip, then the average of both knee-ankle legs).
inline double skeleton_height(const PoseSeq3D& seq) {
    require(!seq.empty(), "skeleton_height: empty sequence");
    double sum = 0.0;
    for (const auto& p : seq) {
        const auto& j = p.joints;
        const double trunk = (j[Nose] - j[Neck]).norm() + (j[Neck] - j[MidHip]).norm();
        const double right = (j[MidHip] - j[RKnee]).norm() + (j[RKnee] - j[RAnkle]).norm();
        const double left = (j[MidHip] - j[LKnee]).norm() + (j[LKnee] - j[LAnkle]).norm();
        sum += trunk + 0.5 * (right + left);
    }
    return sum / static_cast<double>(seq.size());
}

/// Copy with MidHip moved to the origin on every frame.
inline PoseSeq3D root_aligned(const PoseSeq3D& seq) {
    PoseSeq3D out = seq;
    for (auto& p : out) {
        const Eigen::Vector3d r = p.joints[MidHip];
        for (auto& j : p.joints) j -= r;
    }
    return out;
}

/// MPJPE after root alignment with each sequence divided by its own
/// skeleton height. Unitless; 0.15 means 15% of the height.
inline double scaled_mpjpe(const PoseSeq3D& pred, const PoseSeq3D& gt) {
    require(pred.size() == gt.size(), "scaled_mpjpe: sequence lengths differ");
    PoseSeq3D a = root_aligned(pred), b = root_aligned(gt);
    const double ha = skeleton_height(a), hb = skeleton_height(b);
    if (!(ha > 0.0) || !(hb > 0.0)) fail(ErrorKind::UndefinedMetric, "scaled_mpjpe: degenerate skeleton");
    for (auto& p : a)
        for (auto& j : p.joints) j /= ha;
    for (auto& p : b)
        for (auto& j : p.joints) j /= hb;
    return mpjpe(a, b);
}

/// Root-mean-square reprojection error over visible joints, in pixels.
inline double reprojection_rmse(const PoseSeq3D& pose3d, const PoseSeq2D& pose2d, const CameraParams& cam) {
    require(pose3d.size() == pose2d.size(), "reprojection_rmse: sequence lengths differ");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < pose3d.size(); ++t)
        for (int j = 0; j < kNumJoints; ++j) {
            if (!pose2d[t].visible(j)) continue;
            sum += (project_point(pose3d[t].joints[j], cam) - pose2d[t].joints[j]).squaredNorm();
            ++n;
        }
    if (n == 0) fail(ErrorKind::UndefinedMetric, "reprojection_rmse: no visible joints");
    return std::sqrt(sum / static_cast<double>(n));
}

struct Confusion {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;

    double precision() const { return tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0; }
    double recall() const { return tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0; }
    double f1() const {
        const double p = precision(), r = recall();
        return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    Confusion& operator+=(const Confusion& o) {
        tp += o.tp, fp += o.fp, fn += o.fn, tn += o.tn;
        return *this;
    }
};

using LabelGrid = std::vector<std::vector<std::uint8_t>>;  // [frame][label]

inline Confusion confusion(const LabelGrid& pred, const LabelGrid& gt) {
    require(pred.size() == gt.size(), "fscore: frame counts differ");
    Confusion c;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        require(pred[t].size() == gt[t].size(), "fscore: label counts differ at frame " + std::to_string(t));
        for (std::size_t l = 0; l < pred[t].size(); ++l) {
            const bool p = pred[t][l] != 0, g = gt[t][l] != 0;
            c.tp += p && g;
            c.fp += p && !g;
            c.fn += !p && g;
            c.tn += !p && !g;
        }
    }
    return c;
}

/// Micro-averaged F1 over all (frame, label) cells; 0 when P + R = 0.
inline double fscore(const LabelGrid& pred, const LabelGrid& gt) { return confusion(pred, gt).f1(); }

/// Per-part F1 on full 154-wide label sequences.
inline std::vector<double> fscore_per_part(const LabelSeq& pred, const LabelSeq& gt) {
    require(pred.frames.size() == gt.frames.size(), "fscore: frame counts differ");
    std::vector<double> out(kNumParts);
    for (int e = 0; e < kNumParts; ++e) {
        LabelGrid p, g;
        for (std::size_t t = 0; t < pred.frames.size(); ++t) {
            p.push_back(pred.part_labels(static_cast<int>(t), e));
            g.push_back(gt.part_labels(static_cast<int>(t), e));
        }
        out[e] = fscore(p, g);
    }
    return out;
}

/// Unweighted mean of per-part F1.
inline double fscore_macro(const LabelSeq& pred, const LabelSeq& gt) {
    const auto v = fscore_per_part(pred, gt);
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double accuracy(std::span<const int> pred, std::span<const int> gt) {
    require(pred.size() == gt.size(), "accuracy: length mismatch");
    if (pred.empty()) fail(ErrorKind::UndefinedMetric, "accuracy: no samples");
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == gt[i];
    return static_cast<double>(ok) / static_cast<double>(pred.size());
}

} // namespace dancelift
