#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace avifind {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit RGB raster, row-major.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, Rgb fill = {});

    int width() const { return width_; }
    int height() const { return height_; }

    Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    const Rgb& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

    std::vector<Rgb>& pixels() { return pixels_; }
    const std::vector<Rgb>& pixels() const { return pixels_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
};

// Single-channel intensity grid with values in [0, 1], row-major.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }

    float& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    float at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }

    std::vector<float>& values() { return values_; }
    const std::vector<float>& values() const { return values_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<float> values_;
};

// Decodes a PNG or JPEG file to 8-bit RGB. Grayscale sources are replicated
// across channels. Throws IoError naming the path on unreadable, unsupported
// or corrupt files.
RasterImage load_image(const std::filesystem::path& path);

// BT.601 luma of each pixel: (0.299 r + 0.587 g + 0.114 b) / 255.
GrayImage to_grayscale(const RasterImage& img);

}  // namespace avifind
