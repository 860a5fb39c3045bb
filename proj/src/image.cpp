#include "avifind/image.hpp"

#include <stdexcept>

namespace avifind {

RasterImage::RasterImage(int width, int height, Rgb fill)
    : width_(width), height_(height) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("RasterImage dimensions must be >= 1");
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, float fill)
    : width_(width), height_(height) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("GrayImage dimensions must be >= 1");
    values_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage to_grayscale(const RasterImage& img) {
    GrayImage out(img.width(), img.height());
    const auto& px = img.pixels();
    auto& v = out.values();
    for (std::size_t i = 0; i < px.size(); ++i) {
        // 299/587/114 sum to 1000, so pure white maps to exactly 1.0.
        v[i] = static_cast<float>(
            (299.0 * px[i].r + 587.0 * px[i].g + 114.0 * px[i].b) / 255000.0);
    }
    return out;
}

}  // namespace avifind
