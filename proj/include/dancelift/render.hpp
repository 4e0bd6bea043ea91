#pragma once

#include <optional>
#include <string>

#include "camera.hpp"
#include "io.hpp"
#include "pose.hpp"

namespace dancelift {

/// One frame as SVG: limbs and joint circles of the reprojected 3D pose,
/// plus small crosses at the observed 2D joints when given. Joint circles
/// carry data-joint attributes and exact centers.
inline std::string render_svg(const Pose3D& pose, const CameraParams& cam, int width, int height,
                              const Pose2D* observed = nullptr) {
    const Pose2D p = project(pose, cam);
    auto num = [](double v) { return io::format_number(v); };
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
                    std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " +
                    std::to_string(height) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<g id=\"limbs\" stroke=\"steelblue\" stroke-width=\"1.5\">\n";
    for (const auto& [a, b] : kLimbs)
        s += "<line x1=\"" + num(p.joints[a].x()) + "\" y1=\"" + num(p.joints[a].y()) + "\" x2=\"" +
             num(p.joints[b].x()) + "\" y2=\"" + num(p.joints[b].y()) + "\"/>\n";
    s += "</g>\n<g id=\"joints\" fill=\"crimson\">\n";
    for (int j = 0; j < kNumJoints; ++j)
        s += "<circle data-joint=\"" + std::string(kJointNames[j]) + "\" cx=\"" + num(p.joints[j].x()) + "\" cy=\"" +
             num(p.joints[j].y()) + "\" r=\"2\"/>\n";
    s += "</g>\n";
    if (observed) {
        s += "<g id=\"observed\" stroke=\"darkgreen\" stroke-width=\"1\">\n";
        for (int j = 0; j < kNumJoints; ++j) {
            if (!observed->visible(j)) continue;
            const double x = observed->joints[j].x(), y = observed->joints[j].y();
            s += "<path data-joint=\"" + std::string(kJointNames[j]) + "\" d=\"M" + num(x - 3) + " " + num(y) + "H" +
                 num(x + 3) + "M" + num(x) + " " + num(y - 3) + "V" + num(y + 3) + "\"/>\n";
        }
        s += "</g>\n";
    }
    s += "</svg>\n";
    return s;
}

} // namespace dancelift
