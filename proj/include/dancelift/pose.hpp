#pragma once

#include <array>
#include <cmath>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "error.hpp"

namespace dancelift {

inline constexpr int kNumJoints = 25;

/// Output joint order. Follows the BODY_25 keypoint layout so detector
/// exports can be copied through without reordering.
enum Joint : int {
    Nose = 0, Neck, RShoulder, RElbow, RWrist, LShoulder, LElbow, LWrist,
    MidHip, RHip, RKnee, RAnkle, LHip, LKnee, LAnkle,
    REye, LEye, REar, LEar, LBigToe, LSmallToe, LHeel, RBigToe, RSmallToe, RHeel,
};

inline constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "nose", "neck", "r_shoulder", "r_elbow", "r_wrist", "l_shoulder", "l_elbow", "l_wrist",
    "mid_hip", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle",
    "r_eye", "l_eye", "r_ear", "l_ear", "l_big_toe", "l_small_toe", "l_heel",
    "r_big_toe", "r_small_toe", "r_heel",
};

/// Limb segments drawn by the renderer.
inline constexpr std::array<std::pair<int, int>, 24> kLimbs = {{
    {Neck, Nose}, {Neck, RShoulder}, {RShoulder, RElbow}, {RElbow, RWrist},
    {Neck, LShoulder}, {LShoulder, LElbow}, {LElbow, LWrist}, {Neck, MidHip},
    {MidHip, RHip}, {RHip, RKnee}, {RKnee, RAnkle}, {MidHip, LHip},
    {LHip, LKnee}, {LKnee, LAnkle}, {Nose, REye}, {Nose, LEye},
    {REye, REar}, {LEye, LEar}, {LAnkle, LBigToe}, {LBigToe, LSmallToe},
    {LAnkle, LHeel}, {RAnkle, RBigToe}, {RBigToe, RSmallToe}, {RAnkle, RHeel},
}};

struct Pose3D {
    std::array<Eigen::Vector3d, kNumJoints> joints{};
    int frame_index = 0;

    bool finite() const {
        for (const auto& j : joints)
            if (!j.allFinite()) return false;
        return true;
    }
};

struct Pose2D {
    std::array<Eigen::Vector2d, kNumJoints> joints{};
    std::array<double, kNumJoints> confidence{};
    int frame_index = 0;

    bool visible(int j) const { return confidence[j] > 0.0; }

    int visible_count() const {
        int n = 0;
        for (double c : confidence) n += c > 0.0;
        return n;
    }

    void validate() const {
        for (int j = 0; j < kNumJoints; ++j) {
            require(confidence[j] >= 0.0 && confidence[j] <= 1.0,
                    "confidence out of [0,1] at joint " + std::to_string(j));
            require(!visible(j) || joints[j].allFinite(),
                    "non-finite coordinate at visible joint " + std::to_string(j));
        }
    }
};

using PoseSeq3D = std::vector<Pose3D>;
using PoseSeq2D = std::vector<Pose2D>;

} // namespace dancelift
