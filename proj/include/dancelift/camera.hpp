#pragma once

#include <span>
#include <string>

#include <Eigen/Core>

#include "error.hpp"
#include "pose.hpp"

namespace dancelift {

/// Ideal pinhole: u = fx X/Z + cx, v = fy Y/Z + cy.
struct CameraParams {
    double fx = 500.0;
    double fy = 500.0;
    double cx = 0.0;
    double cy = 0.0;

    bool valid() const {
        return std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) && std::isfinite(cy) &&
               fx > 0.0 && fy > 0.0;
    }

    Eigen::Vector4d as_vector() const { return {fx, fy, cx, cy}; }
    static CameraParams from_vector(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

inline constexpr double kMinDepth = 100.0;  // mm

inline Eigen::Vector2d project_point(const Eigen::Vector3d& p, const CameraParams& cam) {
    return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
}

/// Inverse of project_point for a known depth.
inline Eigen::Vector3d backproject(const Eigen::Vector2d& uv, double depth, const CameraParams& cam) {
    return {(uv.x() - cam.cx) * depth / cam.fx, (uv.y() - cam.cy) * depth / cam.fy, depth};
}

inline Pose2D project(const Pose3D& pose, const CameraParams& cam) {
    require(cam.valid(), "project: invalid camera parameters");
    Pose2D out;
    out.frame_index = pose.frame_index;
    for (int j = 0; j < kNumJoints; ++j) {
        const Eigen::Vector3d& p = pose.joints[j];
        if (!(p.z() > kMinDepth))
            fail(ErrorKind::BehindCamera,
                 "joint " + std::to_string(j) + " at depth " + std::to_string(p.z()) + " mm");
        out.joints[j] = project_point(p, cam);
        out.confidence[j] = 1.0;
    }
    return out;
}

/// Arithmetic mean of a window of optimized cameras.
inline CameraParams smooth_camera(std::span<const CameraParams> history) {
    require(!history.empty(), "smooth_camera: empty history");
    Eigen::Vector4d sum = Eigen::Vector4d::Zero();
    for (const auto& c : history) sum += c.as_vector();
    return CameraParams::from_vector(sum / static_cast<double>(history.size()));
}

} // namespace dancelift
