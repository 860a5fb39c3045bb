#pragma once

#include "avifind/image.hpp"

#include <vector>

namespace avifind {

struct ScaleSpaceParams {
    int octaves = 4;
    int scales_per_octave = 3;
    double sigma0 = 1.6;
    double contrast_thresh = 0.03;
    double edge_thresh = 10.0;

    void validate() const;
};

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    // sigma of the detecting level, in original-image pixels
    double scale = 0.0;
    // dominant local gradient direction, radians in [0, 2*pi)
    double orientation = 0.0;
    // |DoG| at the refined extremum
    double response = 0.0;

    // Discrete sample the detection ran on; lets tests re-check the contrast
    // and edge-response thresholds against the pyramid.
    struct Grid {
        int octave = 0;
        int layer = 0;  // DoG layer index
        int x = 0;
        int y = 0;
    } grid;
};

// Per-octave Gaussian and DoG stacks. Within an octave, level i carries blur
// sigma0 * 2^(i / scales_per_octave); dog[j] = gauss[j] - gauss[j+1], so a
// bright blob yields a positive response at fine scales.
struct DogPyramid {
    struct Octave {
        std::vector<GrayImage> gauss;  // scales_per_octave + 3 levels
        std::vector<GrayImage> dog;    // scales_per_octave + 2 layers
    };
    std::vector<Octave> octaves;
    int octaves_requested = 0;  // octaves.size() may be lower on small images
    int scales_per_octave = 0;
    double sigma0 = 0.0;
};

// Requires min(width, height) >= 16. Octaves stop early once downsampling
// would drop below that, recorded via octaves_requested vs octaves.size().
DogPyramid build_dog_pyramid(const GrayImage& gray, const ScaleSpaceParams& params);

// Strict 26-neighborhood extrema of the DoG stacks, contrast- and
// edge-response-filtered, refined to sub-pixel by quadratic fit (at most 5
// interpolation steps), with orientation from a 36-bin gradient histogram
// over a radius of 3*scale.
std::vector<Keypoint> detect_keypoints(const GrayImage& gray,
                                       const ScaleSpaceParams& params);

}  // namespace avifind
