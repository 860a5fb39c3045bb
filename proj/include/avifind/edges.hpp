#pragma once

#include "avifind/image.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace avifind {

struct PixelCoord {
    int x = 0;
    int y = 0;

    friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
    // Row-major order, the canonical ordering of EdgeMap::on().
    friend bool operator<(const PixelCoord& a, const PixelCoord& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    }
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

// Edge pixels of one image. `on` is sorted row-major and duplicate-free;
// every coordinate lies inside [0,width) x [0,height).
class EdgeMap {
public:
    EdgeMap() = default;
    EdgeMap(int width, int height, std::vector<PixelCoord> on);

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<PixelCoord>& on() const { return on_; }
    bool contains(PixelCoord p) const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<PixelCoord> on_;
};

// The n sampled boundary points of one image. Points are pairwise distinct.
struct ContourSet {
    std::vector<Point2> points;
    std::string source_id;
    // n as originally requested; points.size() is the effective n after the
    // clamp to the edge-pixel count.
    int requested_n = 0;

    int n() const { return static_cast<int>(points.size()); }
};

// Builds a ContourSet from arbitrary points: exact duplicates are removed,
// fewer than 2 surviving points is an error.
ContourSet make_contour(std::vector<Point2> points, std::string source_id = "");

struct EdgeParams {
    double sigma = 1.4;
    double low = 0.1;
    double high = 0.2;
};

// Separable Gaussian blur, kernel radius ceil(3*sigma), clamp-to-edge padding.
GrayImage gaussian_blur(const GrayImage& src, double sigma);

// Canny edge detection: Gaussian smoothing (clamp-to-edge padding), Sobel
// gradients, non-maximum suppression, double-threshold hysteresis. low and
// high are fractions of the image's maximum gradient magnitude.
EdgeMap detect_edges(const GrayImage& gray, double low = 0.1, double high = 0.2,
                     double sigma = 1.4);

// Draws n points from the edge map. With enough edge pixels, selection is
// greedy farthest-point (max-min distance) seeded from `seed`; with fewer
// than n pixels all of them are returned and the effective n drops.
ContourSet sample_contour(const EdgeMap& edges, int n, std::uint64_t seed,
                          std::string source_id = "");

}  // namespace avifind
