#pragma once

#include "avifind/image.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace avifind::test {

// Unique per-process scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

void write_png(const std::filesystem::path& path, const RasterImage& img);
void write_gray8_png(const std::filesystem::path& path, int width, int height,
                     const std::vector<std::uint8_t>& values);
void write_jpeg(const std::filesystem::path& path, const RasterImage& img,
                int quality = 90);

// --- synthetic single images -------------------------------------------------

RasterImage constant_image(int width, int height, Rgb color);
// black left half, white right half, split at column `split`
GrayImage half_split(int width, int height, int split);
// white disk on black
GrayImage disk_image(int size, double cx, double cy, double radius);
// small bright dot (filled circle of the given radius) on black
GrayImage dot_image(int size, int cx, int cy, int radius);

// --- synthetic retrieval corpus ---------------------------------------------

// 3 silhouettes x 3 hue bands, same silhouette within a shape class and
// near-equal luminance across color classes, so grayscale-only descriptors
// cannot separate the colors. Each image gets a mild affine perturbation and
// pixel noise.
struct CorpusSpec {
    int images_per_class = 8;
    int image_size = 96;
    std::uint64_t seed = 7;
    int shape_classes = 3;  // <= 3: disk, triangle, cross
    int color_classes = 3;  // <= 3: red, green, blue band
};

// Writes PNGs under dir/<shape>_<color>/img_<i>.png; returns images written.
int generate_synthetic_corpus(const std::filesystem::path& dir, const CorpusSpec& spec);

// Deterministic standard normal from raw engine draws (Box-Muller).
double gauss(std::mt19937_64& gen);

}  // namespace avifind::test
