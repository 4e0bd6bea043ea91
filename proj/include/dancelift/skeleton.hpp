#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "error.hpp"
#include "pose.hpp"

namespace dancelift {

inline constexpr int kNumFrames = 34;   // DH rows
inline constexpr int kNumOffsets = 33;  // theta_0 .. theta_32
inline constexpr int kNumBones = 9;     // b_0 .. b_8

using ThetaVec = Eigen::Matrix<double, kNumOffsets, 1>;
using BoneVec = Eigen::Matrix<double, kNumBones, 1>;

/// Signed linear term `coef * b[bone] * h`. An empty term evaluates to 0.
struct LinearTerm {
    double coef = 0.0;
    int bone = -1;

    bool empty() const { return bone < 0; }
    double eval(const BoneVec& b, double h) const { return empty() ? 0.0 : coef * b[bone] * h; }
};

struct DHRow {
    double theta_base = 0.0;         // radians
    std::optional<int> theta_offset_index;
    LinearTerm d_expr;
    LinearTerm a_expr;
    double alpha = 0.0;              // radians, one of {-pi/2, 0, pi/2}
    int parent_joint = -1;           // -1: root frame
};

/// Placement of the chain base in camera space. The base is turned upside
/// down (model +y is up, camera +y is down) before the Euler angles apply.
struct RootPose {
    Eigen::Vector3d position = Eigen::Vector3d(0.0, 0.0, 4000.0);
    double azimuth = 0.0;    // about camera y
    double elevation = 0.0;  // about camera x
    double roll = 0.0;       // about camera z

    Eigen::Matrix3d rotation() const {
        using Eigen::AngleAxisd;
        using Eigen::Vector3d;
        const Eigen::Matrix3d upright =
            AngleAxisd(std::numbers::pi, Vector3d::UnitX()).toRotationMatrix();
        return (AngleAxisd(azimuth, Vector3d::UnitY()) * AngleAxisd(elevation, Vector3d::UnitX()) *
                AngleAxisd(roll, Vector3d::UnitZ()))
                   .toRotationMatrix() *
               upright;
    }

    Eigen::Matrix4d transform() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation();
        m.topRightCorner<3, 1>() = position;
        return m;
    }
};

struct Interval {
    double min = -std::numbers::pi;
    double max = std::numbers::pi;

    bool contains(double x) const { return x >= min && x <= max; }
    double clamp(double x) const { return x < min ? min : (x > max ? max : x); }
    double mid() const { return 0.5 * (min + max); }
};

struct BoneStat {
    double average = 0.0;
    double stddev = 0.0;

    double lower() const { return std::max(0.0, average - 3.0 * stddev); }
    double upper() const { return average + 3.0 * stddev; }
};

namespace detail {

inline constexpr double kDeg = std::numbers::pi / 180.0;

inline std::array<DHRow, kNumFrames> dancer_rows() {
    // {theta_base deg, offset, d term, a term, alpha deg, parent}
    struct Raw {
        double theta_deg;
        int offset;
        LinearTerm d, a;
        double alpha_deg;
        int parent;
    };
    constexpr LinearTerm none{};
    // clang-format off
    const std::array<Raw, kNumFrames> raw = {{
        // pelvis and spine
        {180, 0, none, none, 90, -1},
        {-90, 0, none, none, 90, 0},
        {90, 1, none, {1.0, 0}, -90, 1},
        // neck and head
        {0, 2, none, none, 90, 2},
        {90, 3, none, none, 90, 3},
        {90, 4, {1.0, 1}, none, 90, 4},
        {90, 5, none, none, 90, 5},
        {90, 6, none, {1.0, 1}, 0, 6},
        // right arm
        {0, 7, none, none, 90, 2},
        {90, 8, none, none, 90, 8},
        {90, 9, {1.0, 3}, none, 90, 9},
        {0, 10, none, none, -90, 10},
        {90, 11, {1.0, 4}, none, 90, 11},
        {90, 12, none, {0.6, 4}, 0, 12},
        // left arm
        {0, 13, none, none, -90, 2},
        {-90, 14, none, none, 90, 14},
        {90, 15, {-1.0, 3}, none, 90, 15},
        {0, 16, none, none, -90, 16},
        {90, 17, {-1.0, 4}, none, 90, 17},
        {-90, 18, none, {-0.6, 4}, 0, 18},
        // right leg
        {0, 19, none, none, -90, 1},
        {-90, 20, none, none, 90, 20},
        {0, 21, {-1.0, 6}, none, -90, 21},
        {90, 22, none, {1.0, 7}, 0, 22},
        {0, 23, none, none, 90, 23},
        {0, 24, {1.0, 8}, none, -90, 24},
        {-90, 25, none, {0.1, 8}, 0, 25},
        // left leg
        {0, 26, none, none, -90, 1},
        {-90, 27, none, none, 90, 27},
        {0, 28, {1.0, 6}, none, -90, 28},
        {90, 29, none, {-1.0, 7}, 0, 29},
        {0, 30, none, none, 90, 30},
        {0, 31, {-1.0, 8}, none, -90, 31},
        {-90, 32, none, {-0.1, 8}, 0, 32},
    }};
    // clang-format on
    std::array<DHRow, kNumFrames> rows{};
    for (int i = 0; i < kNumFrames; ++i) {
        rows[i].theta_base = raw[i].theta_deg * kDeg;
        rows[i].theta_offset_index = raw[i].offset;
        rows[i].d_expr = raw[i].d;
        rows[i].a_expr = raw[i].a;
        rows[i].alpha = raw[i].alpha_deg * kDeg;
        rows[i].parent_joint = raw[i].parent;
    }
    return rows;
}

inline std::array<Interval, kNumOffsets> dancer_theta_bounds() {
    constexpr double pi = std::numbers::pi;
    std::array<Interval, kNumOffsets> b{};
    auto set = [&](int k, double lo, double hi) { b[k] = {lo, hi}; };
    set(1, -pi / 8, pi / 8);
    set(2, -pi / 4, pi / 4);
    set(3, -pi / 4, pi / 4);
    set(7, -pi / 1.6, pi / 1.6);
    set(8, -pi / 4, pi / 1.6);
    set(9, -pi, 0);
    set(10, -pi / 2, 0);
    set(13, -pi / 1.6, pi / 1.6);
    set(14, -pi / 4, pi / 1.6);
    set(15, -pi, 0);
    set(16, -pi / 2, 0);
    set(19, -pi / 2, pi / 4);
    set(20, -pi, pi / 1.3);
    set(21, -pi / 2, pi / 2);
    set(22, 0, pi / 1.3);
    set(23, -pi / 4, pi / 2);
    set(26, -pi / 2, pi / 4);
    set(27, -pi, pi / 1.3);
    set(28, -pi / 2, pi / 2);
    set(29, 0, pi / 1.3);
    set(30, -pi / 4, pi / 2);
    return b;
}

inline std::array<BoneStat, kNumBones> dancer_bone_stats() {
    return {{{0.25, 0.05}, {0.08, 0.05}, {0.06, 0.05}, {0.17, 0.05}, {0.17, 0.05},
             {0.04, 0.05}, {0.21, 0.05}, {0.21, 0.05}, {0.04, 0.05}}};
}

// clang-format off
inline constexpr std::array<double, kNumOffsets> kRestTheta = {
    0.084, 0.004, -0.322, 0.042, -0.012, -0.002, 0.154, 1.963, -0.077, -2.898, -1.426,
    0.0, 0.0, -1.963, -0.155, 0.0, -1.395, 0.0, 0.0, -1.569, 0.242, -0.947, 0.0, 0.248,
    0.0, 0.0, -1.571, -3.14, 1.114, 0.0, 0.21, 0.0, 0.0,
};
// clang-format on

} // namespace detail

/// DH frame whose origin is reported as each output joint. Several joints
/// share an origin (shoulders at the neck, hips at the pelvis, heels at the
/// ankles) because the chain carries no offsets there.
inline constexpr std::array<int, kNumJoints> kJointFrame = {
    7,  // nose: end of head chain
    2,  // neck
    8, 10, 12,   // right shoulder, elbow, wrist
    14, 16, 18,  // left shoulder, elbow, wrist
    1,  // mid hip
    20, 22, 23,  // right hip, knee, ankle
    27, 29, 30,  // left hip, knee, ankle
    5, 6,  // eyes
    3, 4,  // ears
    33, 32, 31,  // left big toe, small toe, heel
    26, 25, 24,  // right big toe, small toe, heel
};

/// Joint pairs separated by exactly one DH translation; their distance is a
/// bone length and does not depend on theta.
inline constexpr std::array<std::pair<int, int>, 14> kRigidBones = {{
    {MidHip, Neck}, {Neck, REye}, {REye, Nose},
    {Neck, RElbow}, {RElbow, RWrist}, {Neck, LElbow}, {LElbow, LWrist},
    {MidHip, RKnee}, {RKnee, RAnkle}, {RAnkle, RSmallToe}, {RSmallToe, RBigToe},
    {MidHip, LKnee}, {LKnee, LAnkle}, {LAnkle, LSmallToe},
}};

struct SkeletonModel {
    std::array<DHRow, kNumFrames> rows{};
    BoneVec bone_ratios = BoneVec::Zero();
    double height = 1800.0;  // mm
    std::array<Interval, kNumOffsets> theta_bounds{};
    std::array<BoneStat, kNumBones> bone_stats{};
    RootPose root{};

    /// The 34-DOF dancer with average bone ratios.
    static SkeletonModel dancer(double height_mm = 1800.0) {
        SkeletonModel m;
        m.rows = detail::dancer_rows();
        m.theta_bounds = detail::dancer_theta_bounds();
        m.bone_stats = detail::dancer_bone_stats();
        for (int i = 0; i < kNumBones; ++i) m.bone_ratios[i] = m.bone_stats[i].average;
        m.height = height_mm;
        return m;
    }

    /// Standing posture inside the bounds; the neutral start for fitting.
    ThetaVec rest_theta() const {
        ThetaVec t;
        for (int k = 0; k < kNumOffsets; ++k) t[k] = theta_bounds[k].clamp(detail::kRestTheta[k]);
        return t;
    }

    bool bones_valid(const BoneVec& b) const {
        for (int i = 0; i < kNumBones; ++i) {
            if (!std::isfinite(b[i]) || b[i] < bone_stats[i].lower() - 1e-12 ||
                b[i] > bone_stats[i].upper() + 1e-12)
                return false;
        }
        return true;
    }

    void clamp_bones(BoneVec& b) const {
        for (int i = 0; i < kNumBones; ++i)
            b[i] = std::clamp(b[i], bone_stats[i].lower(), bone_stats[i].upper());
    }

    void clamp_theta(ThetaVec& t) const {
        for (int k = 0; k < kNumOffsets; ++k) t[k] = theta_bounds[k].clamp(t[k]);
    }
};

/// Rz(theta) Tz(d) Tx(a) Rx(alpha).
inline Eigen::Matrix4d dh_transform(double theta, double d, double a, double alpha) {
    require(std::isfinite(theta) && std::isfinite(d) && std::isfinite(a) && std::isfinite(alpha),
            "dh_transform: non-finite input");
    const double ct = std::cos(theta), st = std::sin(theta);
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    Eigen::Matrix4d m;
    m << ct, -st * ca, st * sa, a * ct,
         st, ct * ca, -ct * sa, a * st,
         0.0, sa, ca, d,
         0.0, 0.0, 0.0, 1.0;
    return m;
}

struct FkDiagnostics {
    int clamped = 0;  // offsets pulled back from a <=1e-9 bound excursion
};

namespace detail {

inline ThetaVec checked_theta(const SkeletonModel& model, const ThetaVec& theta,
                              FkDiagnostics* diag) {
    ThetaVec t = theta;
    for (int k = 0; k < kNumOffsets; ++k) {
        const Interval& iv = model.theta_bounds[k];
        if (!std::isfinite(t[k]))
            fail(ErrorKind::InvalidArgument, "theta[" + std::to_string(k) + "] is not finite");
        if (iv.contains(t[k])) continue;
        if (t[k] >= iv.min - 1e-9 && t[k] <= iv.max + 1e-9) {
            t[k] = iv.clamp(t[k]);
            if (diag) ++diag->clamped;
            continue;
        }
        fail(ErrorKind::BoundsViolation, "theta[" + std::to_string(k) + "] = " +
                                             std::to_string(t[k]) + " outside its bounds");
    }
    return t;
}

} // namespace detail

/// World transforms of all 34 DH frames (camera space, millimeters).
inline std::array<Eigen::Matrix4d, kNumFrames> dh_frames(const SkeletonModel& model,
                                                         const ThetaVec& theta,
                                                         FkDiagnostics* diag = nullptr) {
    const ThetaVec t = detail::checked_theta(model, theta, diag);
    require(model.bones_valid(model.bone_ratios), "bone ratios outside average +- 3 std");
    const Eigen::Matrix4d base = model.root.transform();
    std::array<Eigen::Matrix4d, kNumFrames> frames;
    for (int i = 0; i < kNumFrames; ++i) {
        const DHRow& r = model.rows[i];
        const double th = r.theta_base + (r.theta_offset_index ? t[*r.theta_offset_index] : 0.0);
        const Eigen::Matrix4d local =
            dh_transform(th, r.d_expr.eval(model.bone_ratios, model.height),
                         r.a_expr.eval(model.bone_ratios, model.height), r.alpha);
        frames[i] = (r.parent_joint < 0 ? base : frames[r.parent_joint]) * local;
    }
    return frames;
}

inline Pose3D forward_kinematics(const SkeletonModel& model, const ThetaVec& theta,
                                 FkDiagnostics* diag = nullptr) {
    const auto frames = dh_frames(model, theta, diag);
    Pose3D pose;
    for (int j = 0; j < kNumJoints; ++j) pose.joints[j] = frames[kJointFrame[j]].topRightCorner<3, 1>();
    return pose;
}

/// Partial derivatives of the 25 joint positions (stacked x,y,z per joint).
struct PoseJacobian {
    Pose3D pose;
    Eigen::Matrix<double, 3 * kNumJoints, kNumOffsets> d_theta;
    Eigen::Matrix<double, 3 * kNumJoints, kNumBones> d_bones;
    Eigen::Matrix<double, 3 * kNumJoints, 1> d_azimuth;
    // d/d root position is the identity block for every joint.
};

/// Analytic Jacobian. Revolute offsets contribute z_parent x (p - o_parent);
/// d terms move along z_parent, a terms along x of the row's own frame.
inline PoseJacobian pose_jacobian(const SkeletonModel& model, const ThetaVec& theta) {
    const auto frames = dh_frames(model, theta);
    const Eigen::Matrix4d base = model.root.transform();
    PoseJacobian jac;
    jac.d_theta.setZero();
    jac.d_bones.setZero();
    jac.d_azimuth.setZero();

    // ancestors[i] holds row i and every row above it.
    std::array<std::array<bool, kNumFrames>, kNumFrames> on_path{};
    for (int i = 0; i < kNumFrames; ++i) {
        for (int r = i; r >= 0; r = model.rows[r].parent_joint) on_path[i][r] = true;
    }

    for (int j = 0; j < kNumJoints; ++j) {
        const int f = kJointFrame[j];
        const Eigen::Vector3d p = frames[f].topRightCorner<3, 1>();
        jac.pose.joints[j] = p;
        for (int r = 0; r < kNumFrames; ++r) {
            if (!on_path[f][r]) continue;
            const DHRow& row = model.rows[r];
            const Eigen::Matrix4d& parent =
                row.parent_joint < 0 ? base : frames[row.parent_joint];
            const Eigen::Vector3d z = parent.block<3, 1>(0, 2);
            const Eigen::Vector3d o = parent.topRightCorner<3, 1>();
            if (row.theta_offset_index)
                jac.d_theta.block<3, 1>(3 * j, *row.theta_offset_index) += z.cross(p - o);
            if (!row.d_expr.empty())
                jac.d_bones.block<3, 1>(3 * j, row.d_expr.bone) += row.d_expr.coef * model.height * z;
            if (!row.a_expr.empty()) {
                const Eigen::Vector3d x = frames[r].block<3, 1>(0, 0);
                jac.d_bones.block<3, 1>(3 * j, row.a_expr.bone) += row.a_expr.coef * model.height * x;
            }
        }
        jac.d_azimuth.segment<3>(3 * j) = Eigen::Vector3d::UnitY().cross(p - model.root.position);
    }
    return jac;
}

inline ThetaVec sample_theta(const SkeletonModel& model, std::uint64_t rng_seed) {
    std::mt19937_64 rng(rng_seed);
    ThetaVec t;
    for (int k = 0; k < kNumOffsets; ++k) {
        std::uniform_real_distribution<double> u(model.theta_bounds[k].min, model.theta_bounds[k].max);
        t[k] = u(rng);
    }
    return t;
}

/// Gaussian at the tabulated (average, std), resampled until inside
/// [max(0, avg - 3 std), avg + 3 std].
inline BoneVec sample_bones(const SkeletonModel& model, std::uint64_t rng_seed) {
    std::mt19937_64 rng(rng_seed);
    BoneVec b;
    for (int i = 0; i < kNumBones; ++i) {
        const BoneStat& s = model.bone_stats[i];
        std::normal_distribution<double> n(s.average, s.stddev);
        double x;
        do {
            x = n(rng);
        } while (x < s.lower() || x > s.upper());
        b[i] = x;
    }
    return b;
}

inline nlohmann::json skeleton_to_json(const SkeletonModel& m) {
    nlohmann::json rows = nlohmann::json::array();
    auto term = [](const LinearTerm& t) -> nlohmann::json {
        if (t.empty()) return nullptr;
        return {{"coef", t.coef}, {"bone", t.bone}};
    };
    for (int i = 0; i < kNumFrames; ++i) {
        const DHRow& r = m.rows[i];
        rows.push_back({{"index", i},
                        {"theta_base", r.theta_base},
                        {"theta_offset", r.theta_offset_index ? nlohmann::json(*r.theta_offset_index)
                                                              : nlohmann::json(nullptr)},
                        {"d", term(r.d_expr)},
                        {"a", term(r.a_expr)},
                        {"alpha", r.alpha},
                        {"parent", r.parent_joint}});
    }
    nlohmann::json bounds = nlohmann::json::array();
    for (const auto& b : m.theta_bounds) bounds.push_back({b.min, b.max});
    nlohmann::json bones = nlohmann::json::array();
    for (int i = 0; i < kNumBones; ++i)
        bones.push_back({{"ratio", m.bone_ratios[i]},
                         {"average", m.bone_stats[i].average},
                         {"std", m.bone_stats[i].stddev}});
    nlohmann::json joints = nlohmann::json::array();
    for (int j = 0; j < kNumJoints; ++j)
        joints.push_back({{"name", std::string(kJointNames[j])}, {"frame", kJointFrame[j]}});
    return {{"height_mm", m.height},
            {"rows", rows},
            {"theta_bounds", bounds},
            {"bones", bones},
            {"joints", joints}};
}

} // namespace dancelift
