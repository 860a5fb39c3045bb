#pragma once

#include "avifind/descriptors.hpp"
#include "avifind/edges.hpp"
#include "avifind/keypoints.hpp"

#include <cstdint>
#include <string>

namespace avifind {

// Every knob of the end-to-end pipeline. All randomness derives from `seed`
// by fixed fan-out so a single flag reproduces a whole run.
struct PipelineConfig {
    int n = 300;  // contour samples per image
    ShapeContextParams shape;
    ScaleSpaceParams scale_space;
    EdgeParams edges;
    double color_weight = 0.5;
    int k = 200;  // vocabulary size
    std::uint64_t seed = 0;
    int max_iter = 100;
    double tol = 1e-4;
    int top_m = 10;
    int jobs = 0;  // 0 = AVIFIND_JOBS env or hardware concurrency

    std::uint64_t sampling_seed() const { return seed; }
    std::uint64_t kmeans_seed() const { return seed + 1; }
    std::uint64_t shuffle_seed() const { return seed + 2; }

    // L + 6, the fused descriptor dimension implied by the shape params.
    int descriptor_dim() const { return shape.bins() + 6; }

    void validate() const;
};

DescriptorSet describe(const RasterImage& img, const PipelineConfig& cfg,
                       std::string image_id = "");

}  // namespace avifind
