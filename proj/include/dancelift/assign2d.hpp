#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"
#include "pose.hpp"

namespace dancelift {

struct AssignConfig {
    double min_iou = 0.1;
    double gap_decay = 0.5;
};

/// Bounding box of the visible joints; nullopt when fewer than two are visible
/// or the joints are degenerate.
inline std::optional<Box> keypoint_box(const Pose2D& p) {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    int n = 0;
    for (int j = 0; j < kNumJoints; ++j) {
        if (!p.visible(j)) continue;
        x0 = std::min(x0, p.joints[j].x());
        x1 = std::max(x1, p.joints[j].x());
        y0 = std::min(y0, p.joints[j].y());
        y1 = std::max(y1, p.joints[j].y());
        ++n;
    }
    if (n < 2 || !(x1 > x0) || !(y1 > y0)) return std::nullopt;
    return Box{x0, y0, x1 - x0, y1 - y0};
}

struct AssignTrack {
    int id = 0;
    Box box;              // track box in the current frame
    Histogram previous;   // histogram of the track box in the previous frame
};

struct Assignment {
    int track = 0;
    int candidate = -1;   // -1: gap filled
    Pose2D pose;
    bool gap_filled = false;
    double correlation = 0.0;
    double overlap = 0.0;
};

/// One-to-one greedy matching. Pairs with IoU > min_iou are ranked by
/// histogram correlation, then IoU, then lower candidate index, then lower
/// track index. Unmatched tracks repeat their previous pose with confidences
/// scaled by gap_decay (all-zero when there is none).
inline std::vector<Assignment> assign(const std::vector<Pose2D>& candidates, const std::vector<AssignTrack>& tracks,
                                      const Frame& frame, const std::vector<std::optional<Pose2D>>& previous,
                                      const AssignConfig& cfg = {}) {
    require(previous.size() == tracks.size(), "assign: previous-pose list must match the track list");
    for (const auto& t : tracks) {
        require(t.box.valid(), "assign: invalid box for track " + std::to_string(t.id));
        require(t.previous.size() == static_cast<std::size_t>(kHistBins),
                "assign: track " + std::to_string(t.id) + " lacks a previous-frame histogram");
    }
    struct Pair {
        int track, cand;
        double corr, overlap;
    };
    std::vector<std::optional<Box>> cand_box(candidates.size());
    std::vector<Histogram> cand_hist(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        candidates[c].validate();
        cand_box[c] = keypoint_box(candidates[c]);
        if (cand_box[c]) cand_hist[c] = frame.histogram(*cand_box[c]);
    }
    std::vector<Pair> pairs;
    for (std::size_t t = 0; t < tracks.size(); ++t)
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (!cand_box[c]) continue;
            const double o = iou(tracks[t].box, *cand_box[c]);
            if (o <= cfg.min_iou) continue;
            pairs.push_back({static_cast<int>(t), static_cast<int>(c), correlation(cand_hist[c], tracks[t].previous), o});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.corr != b.corr) return a.corr > b.corr;
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        if (a.cand != b.cand) return a.cand < b.cand;
        return a.track < b.track;
    });
    std::vector<Assignment> out(tracks.size());
    std::vector<bool> used(candidates.size(), false), done(tracks.size(), false);
    for (const Pair& p : pairs) {
        if (done[p.track] || used[p.cand]) continue;
        done[p.track] = used[p.cand] = true;
        Assignment& a = out[p.track];
        a.candidate = p.cand;
        a.pose = candidates[p.cand];
        a.correlation = p.corr;
        a.overlap = p.overlap;
    }
    for (std::size_t t = 0; t < tracks.size(); ++t) {
        Assignment& a = out[t];
        a.track = tracks[t].id;
        if (done[t]) {
            a.pose.frame_index = frame.index();
            continue;
        }
        a.gap_filled = true;
        if (previous[t]) {
            a.pose = *previous[t];
            for (double& c : a.pose.confidence) c *= cfg.gap_decay;
        }
        a.pose.frame_index = frame.index();
    }
    return out;
}

/// Keeps the per-track state (previous histogram and pose) across frames.
class PoseAssigner {
public:
    PoseAssigner(const Frame& first, const std::vector<Box>& boxes, AssignConfig cfg = {})
        : cfg_(cfg), previous_(boxes.size()) {
        for (const Box& b : boxes) hists_.push_back(first.histogram(b));
    }

    /// `boxes` are the track boxes in `frame`, index-aligned with the
    /// constructor's list.
    std::vector<Assignment> step(const Frame& frame, const std::vector<Box>& boxes,
                                 const std::vector<Pose2D>& candidates) {
        require(boxes.size() == hists_.size(), "assign: track count changed between frames");
        std::vector<AssignTrack> tracks;
        for (std::size_t i = 0; i < boxes.size(); ++i) tracks.push_back({static_cast<int>(i), boxes[i], hists_[i]});
        auto out = assign(candidates, tracks, frame, previous_, cfg_);
        for (std::size_t i = 0; i < boxes.size(); ++i) {
            hists_[i] = frame.histogram(boxes[i]);
            previous_[i] = out[i].pose;
        }
        return out;
    }

private:
    AssignConfig cfg_;
    std::vector<Histogram> hists_;
    std::vector<std::optional<Pose2D>> previous_;
};

// ---- keypoint layouts --------------------------------------------------------

inline constexpr int kCoco17 = 17;

/// COCO-17 joint order mapped onto the 25-joint layout.
inline constexpr std::array<int, kCoco17> kCocoToBody25 = {
    Nose, LEye, REye, LEar, REar, LShoulder, RShoulder, LElbow, RElbow,
    LWrist, RWrist, LHip, RHip, LKnee, RKnee, LAnkle, RAnkle,
};

/// Converts a raw detector keypoint list ([u, v, confidence] per joint) to
/// the 25-joint layout. "body25-identity" copies 25 joints; "coco17-lift"
/// places 17 joints and leaves the other 8 at zero confidence.
inline Pose2D remap_keypoints(const std::vector<std::array<double, 3>>& raw, const std::string& mapping,
                              int frame_index = 0) {
    Pose2D p;
    p.frame_index = frame_index;
    auto put = [&](int dst, const std::array<double, 3>& k) {
        p.joints[dst] = {k[0], k[1]};
        p.confidence[dst] = k[2];
    };
    if (mapping == "body25-identity") {
        require(raw.size() == static_cast<std::size_t>(kNumJoints),
                "remap: body25-identity expects 25 joints, got " + std::to_string(raw.size()));
        for (int j = 0; j < kNumJoints; ++j) put(j, raw[j]);
    } else if (mapping == "coco17-lift") {
        require(raw.size() == static_cast<std::size_t>(kCoco17),
                "remap: coco17-lift expects 17 joints, got " + std::to_string(raw.size()));
        for (int k = 0; k < kCoco17; ++k) put(kCocoToBody25[k], raw[k]);
    } else {
        fail(ErrorKind::InvalidArgument, "remap: unknown keypoint mapping '" + mapping + "'");
    }
    p.validate();
    return p;
}

} // namespace dancelift
