#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "pose.hpp"

namespace dancelift {

inline constexpr int kNumParts = 16;
inline constexpr int kNumLabels = 154;
inline constexpr int kNumGenres = 9;

enum Part : int {
    Head = 0, NeckPart, LeftShoulder, RightShoulder, LeftLowerArm, RightLowerArm,
    LeftUpperArm, RightUpperArm, Torso, Hips, LeftLowerLeg, RightLowerLeg,
    LeftUpperLeg, RightUpperLeg, LeftFoot, RightFoot,
};

struct BodyPartSpec {
    std::string_view name;
    std::vector<int> joints;  // J_e, output joint indices
    int vocab_size = 0;       // |Y^e|
};

inline constexpr std::array<std::string_view, kNumGenres> kGenreNames = {
    "ballet", "belly_dance", "flamenco", "hip_hop", "rumba", "swing", "tango", "tap", "waltz",
};

/// The 16 body parts and their label-vocabulary sizes (154 labels total).
inline const std::array<BodyPartSpec, kNumParts>& body_parts() {
    static const std::array<BodyPartSpec, kNumParts> parts = {{
        {"head", {Nose, REye, LEye, REar, LEar, Neck}, 7},
        {"neck", {Neck, Nose, MidHip}, 5},
        {"left_shoulder", {Neck, LShoulder, LElbow}, 5},
        {"right_shoulder", {Neck, RShoulder, RElbow}, 5},
        {"left_lower_arm", {LElbow, LWrist}, 11},
        {"right_lower_arm", {RElbow, RWrist}, 11},
        {"left_upper_arm", {LShoulder, LElbow, LWrist}, 11},
        {"right_upper_arm", {RShoulder, RElbow, RWrist}, 11},
        {"torso", {Neck, MidHip, RShoulder, LShoulder, RHip, LHip}, 10},
        {"hips", {MidHip, RHip, LHip, RKnee, LKnee}, 10},
        {"left_lower_leg", {LKnee, LAnkle, LHeel}, 15},
        {"right_lower_leg", {RKnee, RAnkle, RHeel}, 15},
        {"left_upper_leg", {LHip, LKnee, LAnkle}, 15},
        {"right_upper_leg", {RHip, RKnee, RAnkle}, 15},
        {"left_foot", {LAnkle, LBigToe, LSmallToe, LHeel}, 4},
        {"right_foot", {RAnkle, RBigToe, RSmallToe, RHeel}, 4},
    }};
    return parts;
}

/// Offset of part e's labels inside the concatenated 154-vector.
inline int label_offset(int part) {
    int off = 0;
    for (int e = 0; e < part; ++e) off += body_parts()[e].vocab_size;
    return off;
}

/// Names of the labels. Parts follow the movement table where it lists
/// them; the remainder are numbered. The first three entries of every part
/// are the synthetic primitives: rise, fall, circle.
inline std::vector<std::string> label_names(int part) {
    const auto& p = body_parts()[part];
    const std::string n(p.name);
    std::vector<std::string> out = {n + " moving upward", n + " moving downward", n + " circling"};
    for (int k = 3; k < p.vocab_size; ++k) out.push_back(n + " movement " + std::to_string(k));
    return out;
}

enum class Primitive : int { Up = 0, Down = 1, Circle = 2 };
inline constexpr int kNumPrimitives = 3;

inline constexpr std::array<std::string_view, kNumPrimitives> kPrimitiveNames = {"up", "down", "circle"};

/// Multi-hot movement labels per frame (154 entries, parts concatenated)
/// plus an optional clip-level genre.
struct LabelSeq {
    std::vector<std::vector<std::uint8_t>> frames;
    int genre = -1;

    std::vector<std::uint8_t> part_labels(int t, int part) const {
        const int off = label_offset(part);
        const auto& f = frames.at(t);
        return {f.begin() + off, f.begin() + off + body_parts()[part].vocab_size};
    }
};

} // namespace dancelift
