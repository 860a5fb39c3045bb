#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace avifind {

struct TrainMeta {
    std::uint64_t seed = 0;
    int iterations = 0;
    double final_distortion = 0.0;
    std::size_t descriptor_count = 0;
    // Mean squared distance after each assignment pass; non-increasing.
    std::vector<double> distortion_history;
};

// k centroid vectors defining the visual words.
struct Vocabulary {
    std::vector<std::vector<double>> centroids;
    TrainMeta train_meta;

    int k() const { return static_cast<int>(centroids.size()); }
    int dim() const { return centroids.empty() ? 0 : static_cast<int>(centroids[0].size()); }
};

// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded from
// the point farthest from its assigned centroid. Fully deterministic for a
// given (descriptors, k, seed, max_iter, tol); descriptor order matters.
Vocabulary train_kmeans(const std::vector<std::vector<double>>& descriptors, int k,
                        std::uint64_t seed, int max_iter = 100, double tol = 1e-4);

// Index of the centroid with minimal squared Euclidean distance, ties to the
// lowest index.
int assign_nearest(std::span<const double> desc, const Vocabulary& vocab);

// Canonical text form: "AVIVOCAB 1", "k d seed", then k rows of d values at 9
// significant digits. save/load and the fingerprint all use these bytes.
std::string serialize_vocabulary(const Vocabulary& vocab);
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

// FNV-1a 64 over the canonical serialized bytes, as 16 hex digits.
std::string vocabulary_fingerprint(const Vocabulary& vocab);

// Formats one value with 9 significant digits, locale-independent. Shared by
// every text format in the project.
std::string format_sig9(double v);

}  // namespace avifind
