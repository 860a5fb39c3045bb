#include "avifind/pipeline.hpp"

#include <stdexcept>

namespace avifind {

void PipelineConfig::validate() const {
    shape.validate();
    scale_space.validate();
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    if (color_weight < 0.0)
        throw std::invalid_argument("color_weight must be non-negative");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (tol < 0.0) throw std::invalid_argument("tol must be >= 0");
    if (top_m < 1) throw std::invalid_argument("top_m must be >= 1");
    if (!(0.0 <= edges.low && edges.low <= edges.high && edges.high <= 1.0))
        throw std::invalid_argument("edge thresholds must satisfy 0 <= low <= high <= 1");
    if (!(edges.sigma > 0.0)) throw std::invalid_argument("edge sigma must be positive");
    if (jobs < 0) throw std::invalid_argument("jobs must be >= 0");
}

DescriptorSet describe(const RasterImage& img, const PipelineConfig& cfg,
                       std::string image_id) {
    return describe_image(img, cfg.shape, cfg.scale_space, cfg.n, cfg.color_weight,
                          cfg.sampling_seed(), std::move(image_id), cfg.edges);
}

}  // namespace avifind
