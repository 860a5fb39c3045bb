#include "avifind/edges.hpp"

#include "avifind/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace avifind {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (double& w : k) w /= sum;
    return k;
}

}  // namespace

// Separable Gaussian blur with clamp-to-edge padding. Shared with the
// scale-space code in keypoints.cpp.
GrayImage gaussian_blur(const GrayImage& src, double sigma) {
    const std::vector<double> k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    const int w = src.width(), h = src.height();

    GrayImage tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * src.at(std::clamp(x + i, 0, w - 1), y);
            tmp.at(x, y) = static_cast<float>(acc);
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * tmp.at(x, std::clamp(y + i, 0, h - 1));
            out.at(x, y) = static_cast<float>(acc);
        }
    }
    return out;
}

EdgeMap::EdgeMap(int width, int height, std::vector<PixelCoord> on)
    : width_(width), height_(height), on_(std::move(on)) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("EdgeMap dimensions must be >= 1");
    std::sort(on_.begin(), on_.end());
    on_.erase(std::unique(on_.begin(), on_.end()), on_.end());
    for (const PixelCoord& p : on_)
        if (p.x < 0 || p.x >= width_ || p.y < 0 || p.y >= height_)
            throw std::invalid_argument("edge pixel outside image bounds");
}

bool EdgeMap::contains(PixelCoord p) const {
    return std::binary_search(on_.begin(), on_.end(), p);
}

ContourSet make_contour(std::vector<Point2> points, std::string source_id) {
    std::sort(points.begin(), points.end(), [](const Point2& a, const Point2& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() < 2)
        throw NoContourError("contour needs at least 2 distinct points");
    ContourSet c;
    c.requested_n = static_cast<int>(points.size());
    c.points = std::move(points);
    c.source_id = std::move(source_id);
    return c;
}

EdgeMap detect_edges(const GrayImage& gray, double low, double high, double sigma) {
    if (!(0.0 <= low && low <= high && high <= 1.0))
        throw std::invalid_argument("thresholds must satisfy 0 <= low <= high <= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    const int ksize = 2 * radius + 1;
    const int w = gray.width(), h = gray.height();
    if (w < ksize || h < ksize)
        throw TooSmallError("image " + std::to_string(w) + "x" + std::to_string(h) +
                            " smaller than the " + std::to_string(ksize) +
                            "-pixel smoothing kernel");

    const GrayImage sm = gaussian_blur(gray, sigma);

    // Sobel / 8 gives gradients in intensity units per pixel.
    std::vector<float> gx(static_cast<std::size_t>(w) * h, 0.0f);
    std::vector<float> gy(static_cast<std::size_t>(w) * h, 0.0f);
    std::vector<float> mag(static_cast<std::size_t>(w) * h, 0.0f);
    auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
    float max_mag = 0.0f;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const double dx =
                (sm.at(x + 1, y - 1) + 2.0 * sm.at(x + 1, y) + sm.at(x + 1, y + 1) -
                 sm.at(x - 1, y - 1) - 2.0 * sm.at(x - 1, y) - sm.at(x - 1, y + 1)) / 8.0;
            const double dy =
                (sm.at(x - 1, y + 1) + 2.0 * sm.at(x, y + 1) + sm.at(x + 1, y + 1) -
                 sm.at(x - 1, y - 1) - 2.0 * sm.at(x, y - 1) - sm.at(x + 1, y - 1)) / 8.0;
            gx[idx(x, y)] = static_cast<float>(dx);
            gy[idx(x, y)] = static_cast<float>(dy);
            mag[idx(x, y)] = static_cast<float>(std::sqrt(dx * dx + dy * dy));
            max_mag = std::max(max_mag, mag[idx(x, y)]);
        }
    }
    if (max_mag == 0.0f) return EdgeMap(w, h, {});
    // Thresholds are fractions of the strongest gradient in this image, so
    // the same defaults work across contrast levels.
    const double lo_abs = low * max_mag;
    const double hi_abs = high * max_mag;

    // Non-maximum suppression along the gradient direction, quantized to four
    // sectors. Exactly one pixel of a two-pixel tie survives (strict test
    // forward, non-strict backward).
    std::vector<std::uint8_t> ridge(static_cast<std::size_t>(w) * h, 0);
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            const float m = mag[idx(x, y)];
            if (m <= 0.0f) continue;
            const double a = std::atan2(gy[idx(x, y)], gx[idx(x, y)]);
            // Fold to [0, pi) and quantize: 0 = E/W, 1 = NE/SW, 2 = N/S, 3 = NW/SE.
            const double deg = a < 0.0 ? (a + 3.14159265358979323846) : a;
            const int sector = static_cast<int>(std::floor(deg / (3.14159265358979323846 / 4.0) + 0.5)) % 4;
            static const int off[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};
            const float fwd = mag[idx(x + off[sector][0], y + off[sector][1])];
            const float bwd = mag[idx(x - off[sector][0], y - off[sector][1])];
            if (m > fwd && m >= bwd) ridge[idx(x, y)] = 1;
        }
    }

    // Double-threshold hysteresis: flood from strong pixels through weak ones.
    std::vector<std::uint8_t> state(static_cast<std::size_t>(w) * h, 0);
    std::vector<PixelCoord> stack;
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x)
            if (ridge[idx(x, y)] && mag[idx(x, y)] >= hi_abs) {
                state[idx(x, y)] = 1;
                stack.push_back({x, y});
            }
    while (!stack.empty()) {
        const PixelCoord p = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = p.x + dx, ny = p.y + dy;
                if (nx < 1 || nx >= w - 1 || ny < 1 || ny >= h - 1) continue;
                if (state[idx(nx, ny)]) continue;
                if (ridge[idx(nx, ny)] && mag[idx(nx, ny)] >= lo_abs) {
                    state[idx(nx, ny)] = 1;
                    stack.push_back({nx, ny});
                }
            }
    }

    std::vector<PixelCoord> on;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (state[idx(x, y)]) on.push_back({x, y});
    return EdgeMap(w, h, std::move(on));
}

ContourSet sample_contour(const EdgeMap& edges, int n, std::uint64_t seed,
                          std::string source_id) {
    if (n < 2) throw std::invalid_argument("sample_contour needs n >= 2");
    const std::vector<PixelCoord>& on = edges.on();
    if (on.empty()) throw NoContourError("empty edge map: no contour for this image");
    if (on.size() < 2) throw NoContourError("edge map has a single pixel: no contour");

    ContourSet out;
    out.requested_n = n;
    out.source_id = std::move(source_id);

    if (on.size() < static_cast<std::size_t>(n)) {
        out.points.reserve(on.size());
        for (const PixelCoord& p : on)
            out.points.push_back({static_cast<double>(p.x), static_cast<double>(p.y)});
        return out;
    }

    // Greedy max-min selection: start at a seed-determined pixel, then always
    // take the candidate farthest from the chosen set. Ties go to the lowest
    // row-major index.
    const std::size_t count = on.size();
    std::vector<double> min_d2(count, std::numeric_limits<double>::infinity());
    std::size_t current = static_cast<std::size_t>(seed % count);
    out.points.reserve(n);
    for (int picked = 0; picked < n; ++picked) {
        const PixelCoord c = on[current];
        out.points.push_back({static_cast<double>(c.x), static_cast<double>(c.y)});
        if (picked + 1 == n) break;
        std::size_t best = 0;
        double best_d2 = -1.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double dx = on[i].x - c.x, dy = on[i].y - c.y;
            const double d2 = dx * dx + dy * dy;
            if (d2 < min_d2[i]) min_d2[i] = d2;
            if (min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        current = best;
    }
    return out;
}

}  // namespace avifind
