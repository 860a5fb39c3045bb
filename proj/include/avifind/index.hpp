#pragma once

#include "avifind/corpus.hpp"
#include "avifind/descriptors.hpp"
#include "avifind/pipeline.hpp"
#include "avifind/vocabulary.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace avifind {

// k-dimensional BoW histogram, L1-normalized; all-zero when no descriptor
// was quantized.
struct BowHistogram {
    std::vector<double> weights;
    std::int64_t raw_count = 0;
};

struct IndexEntry {
    std::string image_id;
    std::string label;
    BowHistogram bow;
};

// The queryable store: per-image histograms plus the fingerprint of the
// vocabulary they were quantized against.
struct BowIndex {
    std::string vocab_fingerprint;
    std::vector<IndexEntry> entries;

    int k() const { return entries.empty() ? k_hint : static_cast<int>(entries[0].bow.weights.size()); }
    int k_hint = 0;
};

struct RetrievalHit {
    std::string image_id;
    std::string label;
    double distance = 0.0;
};

// Hits ascending by distance, ties by image_id.
struct RetrievalResult {
    std::string query_id;
    std::vector<RetrievalHit> ranked;
};

BowHistogram quantize(const DescriptorSet& ds, const Vocabulary& vocab);

// L1 distance between normalized histograms, in [0, 2].
double bow_distance(const BowHistogram& a, const BowHistogram& b);

struct LabeledImage {
    std::string image_id;
    std::string label;
    RasterImage image;
};

BowIndex build_index(const std::vector<LabeledImage>& images, const Vocabulary& vocab,
                     const PipelineConfig& cfg);

// Streaming variant: loads, describes and quantizes manifest entries in a
// worker pool; output order follows the manifest regardless of scheduling.
BowIndex build_index(const CorpusManifest& manifest, const Vocabulary& vocab,
                     const PipelineConfig& cfg);

RetrievalResult query(const BowHistogram& q_bow, const BowIndex& index, int top_m,
                      std::string query_id = "");

void save_index(const BowIndex& index, const std::filesystem::path& path);
BowIndex load_index(const std::filesystem::path& path);

}  // namespace avifind
