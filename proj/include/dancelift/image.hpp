#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "error.hpp"

namespace dancelift {

/// Axis-aligned rectangle in pixels: top-left (x, y), width w, height l.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 1.0;
    double l = 1.0;

    bool valid() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(l) && w > 0.0 &&
               l > 0.0;
    }
    double area() const { return w * l; }
    Eigen::Vector2d center() const { return {x + 0.5 * w, y + 0.5 * l}; }
    Box shifted(const Eigen::Vector2d& d) const { return {x + d.x(), y + d.y(), w, l}; }
    static Box centered(const Eigen::Vector2d& c, double w, double l) {
        return {c.x() - 0.5 * w, c.y() - 0.5 * l, w, l};
    }
    bool operator==(const Box&) const = default;
};

inline double intersection_area(const Box& a, const Box& b) {
    const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double iy = std::min(a.y + a.l, b.y + b.l) - std::max(a.y, b.y);
    return (ix > 0.0 && iy > 0.0) ? ix * iy : 0.0;
}

inline double iou(const Box& a, const Box& b) {
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    return inter / (a.area() + b.area() - inter);
}

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

inline constexpr int kHueBins = 16;
inline constexpr int kSatBins = 16;
inline constexpr int kValBins = 4;
inline constexpr int kHistBins = kHueBins * kSatBins * kValBins;

using Histogram = std::vector<double>;

/// HSV bin of one pixel (hue-major, then saturation, then value).
inline int hsv_bin(Rgb c) {
    const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    double h = 0.0;
    if (delta > 0.0) {
        if (mx == r)
            h = std::fmod((g - b) / delta + 6.0, 6.0);
        else if (mx == g)
            h = (b - r) / delta + 2.0;
        else
            h = (r - g) / delta + 4.0;
        h /= 6.0;  // [0,1)
    }
    const double s = mx > 0.0 ? delta / mx : 0.0;
    const double v = mx;
    const int hb = std::min(kHueBins - 1, static_cast<int>(h * kHueBins));
    const int sb = std::min(kSatBins - 1, static_cast<int>(s * kSatBins));
    const int vb = std::min(kValBins - 1, static_cast<int>(v * kValBins));
    return (hb * kSatBins + sb) * kValBins + vb;
}

/// 8-bit RGB raster.
class Image {
public:
    Image() = default;
    Image(int width, int height, Rgb fill = {})
        : width_(width), height_(height), px_(static_cast<std::size_t>(width) * height, fill) {
        require(width > 0 && height > 0, "image dimensions must be positive");
    }

    int width() const { return width_; }
    int height() const { return height_; }

    Rgb& at(int x, int y) { return px_[static_cast<std::size_t>(y) * width_ + x]; }
    Rgb at(int x, int y) const { return px_[static_cast<std::size_t>(y) * width_ + x]; }

    /// Pixel (i, j) is covered when its center lies inside the box.
    void fill_box(const Box& b, Rgb c) {
        const auto [x0, x1, y0, y1] = pixel_range(b);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) at(x, y) = c;
    }

    /// Half-open pixel range [x0,x1) x [y0,y1) of a box, clipped to the image.
    std::array<int, 4> pixel_range(const Box& b) const {
        auto lo = [](double v, int n) { return std::clamp(static_cast<int>(std::ceil(v - 0.5)), 0, n); };
        return {lo(b.x, width_), lo(b.x + b.w, width_), lo(b.y, height_), lo(b.y + b.l, height_)};
    }

    bool contains(const Box& b) const {
        return b.x >= 0.0 && b.y >= 0.0 && b.x + b.w <= width_ && b.y + b.l <= height_;
    }

    const std::vector<Rgb>& pixels() const { return px_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> px_;
};

/// HSV bin of every 24-bit color, built once on first use.
inline const std::vector<std::uint16_t>& hsv_bin_table() {
    static const std::vector<std::uint16_t> table = [] {
        std::vector<std::uint16_t> t(1u << 24);
        for (std::uint32_t c = 0; c < (1u << 24); ++c)
            t[c] = static_cast<std::uint16_t>(hsv_bin({static_cast<std::uint8_t>(c >> 16),
                                                       static_cast<std::uint8_t>((c >> 8) & 0xff),
                                                       static_cast<std::uint8_t>(c & 0xff)}));
        return t;
    }();
    return table;
}

/// An image with histogram queries. Bins come from a shared color table.
class Frame {
public:
    Frame() = default;
    Frame(int index, Image img) : index_(index), img_(std::move(img)), table_(&hsv_bin_table()) {}

    int index() const { return index_; }
    const Image& image() const { return img_; }
    int width() const { return img_.width(); }
    int height() const { return img_.height(); }
    int bin(int x, int y) const {
        const Rgb c = img_.at(x, y);
        return (*table_)[(static_cast<std::uint32_t>(c.r) << 16) | (static_cast<std::uint32_t>(c.g) << 8) | c.b];
    }

    /// Normalized histogram of the box interior (clipped). An empty region
    /// yields an all-zero histogram.
    Histogram histogram(const Box& b) const {
        Histogram h(kHistBins, 0.0);
        const auto [x0, x1, y0, y1] = img_.pixel_range(b);
        std::size_t n = 0;
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) {
                h[bin(x, y)] += 1.0;
                ++n;
            }
        if (n > 0)
            for (double& v : h) v /= static_cast<double>(n);
        return h;
    }

private:
    int index_ = 0;
    Image img_;
    const std::vector<std::uint16_t>* table_ = nullptr;
};

/// Pearson correlation of two histograms; 0 when either is constant.
inline double correlation(const Histogram& a, const Histogram& b) {
    require(a.size() == b.size(), "histogram size mismatch");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

} // namespace dancelift
