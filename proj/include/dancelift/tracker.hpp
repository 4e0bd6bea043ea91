#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "error.hpp"
#include "image.hpp"

namespace dancelift {

struct TrackerConfig {
    double search_factor = 2.0;      // search radius = factor * max(w, l)
    double ema = 0.5;                // velocity / histogram smoothing
    double overlap_iou = 0.2;
    double direction_deg = 60.0;
    double stall_ratio = 0.5;        // |d| below this fraction of |v| counts as a failed step
    double clear_iou = 0.05;
    int fallback_horizon = 30;
    double min_speed = 0.1;          // px / frame
    double cone_deg = 30.0;
    double cone_radius_factor = 3.0;
    double candidate_stride = 2.0;   // px between relocation candidates
    double min_correlation = 0.5;
    int lost_timeout = 60;
    int mean_shift_iterations = 20;

    void validate() const {
        require(search_factor > 0.0 && ema > 0.0 && ema <= 1.0, "tracker: bad search/ema settings");
        require(overlap_iou > 0.0 && overlap_iou < 1.0 && clear_iou >= 0.0 && clear_iou < overlap_iou,
                "tracker: IoU thresholds must satisfy 0 <= clear < overlap < 1");
        require(direction_deg > 0.0 && direction_deg <= 180.0, "tracker: direction threshold out of range");
        require(cone_deg > 0.0 && cone_deg < 90.0 && cone_radius_factor > 0.0, "tracker: bad cone settings");
        require(fallback_horizon >= 1 && lost_timeout >= 1, "tracker: horizons must be positive");
        require(candidate_stride > 0.0 && mean_shift_iterations >= 1, "tracker: bad search settings");
    }
};

enum class TrackStatus { Tracking, Occluded, Lost };

inline const char* status_name(TrackStatus s) {
    switch (s) {
    case TrackStatus::Tracking: return "tracking";
    case TrackStatus::Occluded: return "occluded";
    default: return "lost";
    }
}

struct TrackState {
    int id = 0;
    Box box;
    Histogram hist;                                        // reference appearance, sums to 1
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();    // px / frame
    TrackStatus status = TrackStatus::Tracking;
    int frame = 0;                 // frame of `box`
    // occlusion bookkeeping
    int occluded_at = -1;
    Box anchor;                    // extrapolated box at occluded_at
    int predicted_end = -1;
    Box predicted_box;
    int attempts = 0;              // relocation tries after predicted_end

    /// Box extrapolated with the stored velocity to frame t.
    Box extrapolated(int t) const {
        if (status == TrackStatus::Occluded)
            return anchor.shifted(velocity * static_cast<double>(t - occluded_at));
        return box.shifted(velocity * static_cast<double>(t - frame));
    }
};

inline TrackState init_track(int id, const Frame& frame, const Box& box) {
    require(box.valid(), "tracker: invalid initial box for track " + std::to_string(id));
    TrackState s;
    s.id = id;
    s.box = box;
    s.frame = frame.index();
    s.hist = frame.histogram(box);
    double sum = 0.0;
    for (double v : s.hist) sum += v;
    require(sum > 0.0, "tracker: initial box of track " + std::to_string(id) + " lies outside the image");
    return s;
}

/// Result of one tracker step before occlusion reasoning.
struct StepResult {
    TrackState state;
    Eigen::Vector2d displacement = Eigen::Vector2d::Zero();  // measured center motion
    bool empty = false;                                      // no target mass in the window
};

namespace detail {

inline double angle_between(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::acos(std::clamp(a.dot(b) / (na * nb), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

/// Weighted centroid of back-projected pixels inside `b`; false when empty.
inline bool backprojection_centroid(const Frame& f, const Box& b, const Histogram& h, Eigen::Vector2d& out) {
    const auto [x0, x1, y0, y1] = f.image().pixel_range(b);
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            const double w = h[f.bin(x, y)];
            sw += w;
            sx += w * (x + 0.5);
            sy += w * (y + 0.5);
        }
    if (!(sw > 0.0)) return false;
    out = {sx / sw, sy / sw};
    return true;
}

} // namespace detail

/// Mean-shift on the histogram back-projection, started at the kinematic
/// prediction and confined to the search radius around the previous box.
/// With `update_model` the velocity and reference histogram take an
/// exponential moving average step.
inline StepResult step_track(const TrackState& s, const Frame& frame, const TrackerConfig& cfg,
                             bool update_model = true) {
    require(s.status == TrackStatus::Tracking, "step_track: track " + std::to_string(s.id) + " is not tracking");
    StepResult r;
    r.state = s;
    const Eigen::Vector2d prev = s.box.center();
    const double radius = cfg.search_factor * std::max(s.box.w, s.box.l);
    if (prev.x() + radius < 0.0 || prev.y() + radius < 0.0 || prev.x() - radius > frame.width() ||
        prev.y() - radius > frame.height()) {
        r.state.status = TrackStatus::Lost;
        r.state.frame = frame.index();
        return r;
    }
    const int dt = std::max(1, frame.index() - s.frame);
    Eigen::Vector2d c = prev + s.velocity * dt;
    bool found = false;
    for (int it = 0; it < cfg.mean_shift_iterations; ++it) {
        Eigen::Vector2d m;
        if (!detail::backprojection_centroid(frame, Box::centered(c, s.box.w, s.box.l), s.hist, m)) break;
        found = true;
        const Eigen::Vector2d off = m - prev;
        if (off.norm() > radius) m = prev + off * (radius / off.norm());
        const double moved = (m - c).norm();
        c = m;
        if (moved < 0.05) break;
    }
    r.empty = !found;
    r.state.box = Box::centered(c, s.box.w, s.box.l);
    r.state.frame = frame.index();
    r.displacement = (c - prev) / dt;
    if (update_model && found) {
        r.state.velocity = cfg.ema * r.displacement + (1.0 - cfg.ema) * s.velocity;
        Histogram now = frame.histogram(r.state.box);
        double sum = 0.0;
        for (double v : now) sum += v;
        if (sum > 0.0) {
            for (std::size_t k = 0; k < now.size(); ++k) r.state.hist[k] = cfg.ema * now[k] + (1.0 - cfg.ema) * s.hist[k];
            // renormalize against round-off drift
            double total = 0.0;
            for (double v : r.state.hist) total += v;
            for (double& v : r.state.hist) v /= total;
        }
    }
    return r;
}

/// True when a step contradicts the track's motion model: the measured
/// direction turns away by more than the threshold, the target stalls, or
/// nothing of it is visible.
inline bool step_failed(const StepResult& r, const TrackState& before, const TrackerConfig& cfg) {
    if (r.empty) return true;
    const double speed = before.velocity.norm();
    if (speed < cfg.min_speed) return false;
    if (r.displacement.norm() < cfg.stall_ratio * speed) return true;
    return detail::angle_between(r.displacement, before.velocity) > cfg.direction_deg;
}

/// Earliest frame after t0 at which the extrapolated boxes overlap with
/// IoU <= clear_iou. Both boxes move with their own velocities; a relative
/// speed below min_speed falls back to t0 + fallback_horizon.
struct EndPrediction {
    int frame = -1;
    Box box;
    bool fallback = false;
};

inline EndPrediction predict_end(const Box& box, const Eigen::Vector2d& velocity, const Box& other,
                                 const Eigen::Vector2d& other_velocity, int t0, const TrackerConfig& cfg) {
    EndPrediction e;
    const Eigen::Vector2d rel = velocity - other_velocity;
    if (rel.norm() >= cfg.min_speed) {
        // enough frames to slide the boxes completely past each other
        const double reach = (box.w + other.w + box.l + other.l) / rel.norm() + 2.0;
        const int horizon = static_cast<int>(std::ceil(reach));
        for (int k = 1; k <= horizon; ++k) {
            const Box a = box.shifted(velocity * k), b = other.shifted(other_velocity * k);
            if (iou(a, b) <= cfg.clear_iou) {
                e.frame = t0 + k;
                e.box = a;
                return e;
            }
        }
    }
    e.fallback = true;
    e.frame = t0 + cfg.fallback_horizon;
    e.box = box.shifted(velocity * cfg.fallback_horizon);
    return e;
}

struct OcclusionEvent {
    int frame = 0;
    int track = 0;   // index of the occluded track
    int other = 0;
    EndPrediction end;
};

/// Pairwise overlap test on the kinematic predictions of tracks that were
/// tracking before this frame; a track whose own step failed while
/// overlapping becomes occluded. `before` and `steps` are index-aligned.
inline std::vector<OcclusionEvent> detect_occlusion(const std::vector<TrackState>& before,
                                                    const std::vector<StepResult>& steps, int frame,
                                                    const TrackerConfig& cfg) {
    require(before.size() == steps.size(), "detect_occlusion: state and step lists differ in length");
    std::vector<OcclusionEvent> events;
    std::vector<bool> taken(before.size(), false);
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (before[i].status != TrackStatus::Tracking || taken[i]) continue;
        const Box pi = before[i].extrapolated(frame);
        int partner = -1;
        double best = cfg.overlap_iou;
        for (std::size_t j = 0; j < before.size(); ++j) {
            if (j == i || before[j].status == TrackStatus::Lost) continue;
            const double o = iou(pi, before[j].extrapolated(frame));
            if (o > best) best = o, partner = static_cast<int>(j);
        }
        if (partner < 0 || !step_failed(steps[i], before[i], cfg)) continue;
        OcclusionEvent ev;
        ev.frame = frame;
        ev.track = static_cast<int>(i);
        ev.other = partner;
        const TrackState& o = before[partner];
        const Box other_now = o.status == TrackStatus::Tracking ? steps[partner].state.box : o.extrapolated(frame);
        ev.end = predict_end(pi, before[i].velocity, other_now, o.velocity, frame, cfg);
        events.push_back(ev);
        taken[i] = true;
    }
    return events;
}

/// Relocation candidates: same-size boxes whose centers lie in a cone around
/// the stored direction, apex at the anchor center, radius growing with the
/// time spent occluded. The pure extrapolation is always included.
inline std::vector<Box> cone_candidates(const TrackState& s, int frame, const TrackerConfig& cfg) {
    const int elapsed = std::max(1, frame - s.occluded_at);
    const Eigen::Vector2d apex = s.anchor.center();
    std::vector<Box> out{s.extrapolated(frame)};
    const double speed = s.velocity.norm();
    if (speed < cfg.min_speed) return out;
    const double radius = cfg.cone_radius_factor * speed * elapsed;
    const Eigen::Vector2d dir = s.velocity / speed, perp(-dir.y(), dir.x());
    const double half = cfg.cone_deg * std::numbers::pi / 180.0;
    const double lateral = radius * std::sin(half);
    for (double a = cfg.candidate_stride; a <= radius; a += cfg.candidate_stride)
        for (double b = -std::min(lateral, a * std::tan(half)); b <= lateral; b += cfg.candidate_stride) {
            const Eigen::Vector2d off = a * dir + b * perp;
            if (off.norm() > radius || detail::angle_between(off, dir) > cfg.cone_deg) continue;
            out.push_back(Box::centered(apex + off, s.box.w, s.box.l));
        }
    return out;
}

struct RelocateResult {
    bool found = false;
    int index = -1;
    double correlation = 0.0;
};

/// Picks the candidate whose histogram best correlates with the reference
/// (lowest index on ties). Below min_correlation the track stays occluded;
/// after lost_timeout failed frames it is lost and TrackLost is raised.
inline RelocateResult relocate(TrackState& s, const Frame& frame, const std::vector<Box>& candidates,
                               const TrackerConfig& cfg) {
    require(s.status == TrackStatus::Occluded, "relocate: track " + std::to_string(s.id) + " is not occluded");
    require(frame.index() >= s.predicted_end, "relocate: called before the predicted end of the occlusion");
    RelocateResult r;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const double c = correlation(s.hist, frame.histogram(candidates[k]));
        if (r.index < 0 || c > r.correlation) r.correlation = c, r.index = static_cast<int>(k);
    }
    if (r.index >= 0 && r.correlation >= cfg.min_correlation) {
        r.found = true;
        s.box = candidates[r.index];
        s.frame = frame.index();
        s.status = TrackStatus::Tracking;
        s.occluded_at = -1;
        s.attempts = 0;
        return r;
    }
    if (++s.attempts >= cfg.lost_timeout) {
        s.status = TrackStatus::Lost;
        fail(ErrorKind::TrackLost, "track " + std::to_string(s.id) + " not found within " +
                                       std::to_string(cfg.lost_timeout) + " frames after its predicted reappearance");
    }
    return r;
}

struct TrackRecord {
    int frame = 0;
    int id = 0;
    Box box;
    TrackStatus status = TrackStatus::Tracking;
};

/// Frame-by-frame driver for several tracks.
class MultiTracker {
public:
    MultiTracker(const TrackerConfig& cfg, const Frame& first, const std::vector<Box>& boxes) : cfg_(cfg) {
        cfg_.validate();
        require(!boxes.empty(), "tracker: no initial boxes");
        for (std::size_t i = 0; i < boxes.size(); ++i)
            tracks_.push_back(init_track(static_cast<int>(i), first, boxes[i]));
        last_frame_ = first.index();
    }

    const std::vector<TrackState>& tracks() const { return tracks_; }
    const std::vector<OcclusionEvent>& events() const { return events_; }

    std::vector<TrackRecord> records(int frame) const {
        std::vector<TrackRecord> out;
        for (const auto& t : tracks_) {
            const Box b = t.status == TrackStatus::Occluded ? t.extrapolated(frame) : t.box;
            out.push_back({frame, t.id, b, t.status});
        }
        return out;
    }

    std::vector<TrackRecord> update(const Frame& frame) {
        require(frame.index() > last_frame_, "tracker: frames must arrive in increasing order");
        const int t = frame.index();
        const std::vector<TrackState> before = tracks_;

        // which tracking boxes overlap anything this frame (by prediction)
        std::vector<bool> overlapping(before.size(), false);
        for (std::size_t i = 0; i < before.size(); ++i)
            for (std::size_t j = i + 1; j < before.size(); ++j) {
                if (before[i].status == TrackStatus::Lost || before[j].status == TrackStatus::Lost) continue;
                if (iou(before[i].extrapolated(t), before[j].extrapolated(t)) > 0.0)
                    overlapping[i] = overlapping[j] = true;
            }

        std::vector<StepResult> steps(before.size());
        for (std::size_t i = 0; i < before.size(); ++i) {
            if (before[i].status == TrackStatus::Tracking)
                steps[i] = step_track(before[i], frame, cfg_, !overlapping[i]);
            else
                steps[i].state = before[i];
        }
        const auto evs = detect_occlusion(before, steps, t, cfg_);
        for (std::size_t i = 0; i < before.size(); ++i) {
            tracks_[i] = steps[i].state;
            // an unreliable measurement while overlapping: coast on the prediction
            if (overlapping[i] && before[i].status == TrackStatus::Tracking &&
                steps[i].state.status == TrackStatus::Tracking && step_failed(steps[i], before[i], cfg_)) {
                tracks_[i].box = before[i].extrapolated(t);
                tracks_[i].frame = t;
            }
        }
        for (const auto& ev : evs) {
            TrackState& s = tracks_[ev.track];
            s = before[ev.track];
            s.status = TrackStatus::Occluded;
            s.occluded_at = t;
            s.anchor = before[ev.track].extrapolated(t);
            s.predicted_end = ev.end.frame;
            s.predicted_box = ev.end.box;
            s.attempts = 0;
            events_.push_back(ev);
        }
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            TrackState& s = tracks_[i];
            if (s.status != TrackStatus::Occluded || before[i].status != TrackStatus::Occluded) continue;
            if (t < s.predicted_end) continue;
            try {
                relocate(s, frame, cone_candidates(s, t, cfg_), cfg_);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::TrackLost) throw;
            }
        }
        last_frame_ = t;
        return records(t);
    }

private:
    TrackerConfig cfg_;
    std::vector<TrackState> tracks_;
    std::vector<OcclusionEvent> events_;
    int last_frame_ = 0;
};

} // namespace dancelift
