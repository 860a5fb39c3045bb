#pragma once

#include "avifind/edges.hpp"
#include "avifind/image.hpp"
#include "avifind/keypoints.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace avifind {

struct ShapeContextParams {
    int radial_bins = 5;    // R
    int angular_bins = 12;  // A
    // inner/outer radius as multiples of the normalized unit distance
    double r_min = 0.125;
    double r_max = 2.0;
    bool rotation_invariant = false;

    int bins() const { return radial_bins * angular_bins; }  // L

    // R+1 log-uniform edges between r_min and r_max.
    std::vector<double> radial_edges() const;
    void validate() const;
};

struct LogPolarCoord {
    double log_r = 0.0;
    double theta = 0.0;  // [0, 2*pi)
};

// Bin index returned for points at the reference or at/beyond r_max.
inline constexpr int kOutsideBin = -1;

// Log-polar bin of q relative to ref, radii normalized by alpha. With
// rotation_invariant set, angles are measured against ref_dir instead of the
// horizontal axis. Radii below the innermost edge land in radial bin 0;
// r >= r_max or r == 0 is outside.
int log_polar_bin(Point2 q, Point2 ref, double ref_dir, double alpha,
                  const ShapeContextParams& params);

// Log-polar coordinates of q relative to ref (theta already ref_dir-adjusted
// when rotation_invariant). Requires q != ref.
LogPolarCoord log_polar_coord(Point2 q, Point2 ref, double ref_dir, double alpha,
                              const ShapeContextParams& params);

struct ShapeContext {
    std::vector<int> counts;  // L entries
    Point2 ref_point;
    double alpha = 0.0;
    int outside_count = 0;  // r >= r_max (or unbinnable in degenerate cases)
    int at_ref_count = 0;   // q exactly at the reference point
    bool degenerate = false;

    long binned() const;
    // binned() + outside_count + at_ref_count always equals the contour size.
};

struct ColorMoments {
    double mean_r = 0.0, mean_g = 0.0, mean_b = 0.0;
    double var_r = 0.0, var_g = 0.0, var_b = 0.0;
};

// L1-normalized shape-context histogram followed by the weighted color block.
struct FusedDescriptor {
    std::vector<double> vector;  // L + 6 entries
    Keypoint keypoint;
};

struct DescriptorSet {
    std::string image_id;
    std::vector<FusedDescriptor> descriptors;
    // Set when the pipeline produced nothing for this image (no edges, no
    // keypoints, image too small); eval excludes such images from queries.
    bool flagged_empty = false;
    std::string flag_reason;
};

// Mean Euclidean distance over all n^2 ordered point pairs, zero self-pairs
// included.
double mean_pairwise_distance(const ContourSet& contour);

ShapeContext shape_context(Point2 ref, double ref_dir, const ContourSet& contour,
                           const ShapeContextParams& params);

struct TangentFit {
    double angle = 0.0;  // [0, pi): line directions are mod-pi
    bool degenerate = false;
};

// Direction of the total-least-squares line through the 5 contour points
// nearest the keypoint; stands in for the boundary tangent at a reference
// point that is not itself a contour point.
TangentFit keypoint_direction(const Keypoint& kp, const ContourSet& contour);

// Per-channel mean and population variance of [0,1]-scaled values over the
// 5x5 window centered at the rounded keypoint position, clamped at borders.
ColorMoments color_moments(const RasterImage& img, const Keypoint& kp);

FusedDescriptor fuse(const ShapeContext& sc, const ColorMoments& cm,
                     double color_weight);

// Full per-image pipeline: edges -> contour sample -> DoG keypoints -> fused
// descriptor per keypoint. Images that yield no contour or no keypoints come
// back as a flagged empty set rather than an error.
DescriptorSet describe_image(const RasterImage& img, const ShapeContextParams& scp,
                             const ScaleSpaceParams& ssp, int n, double color_weight,
                             std::uint64_t seed, std::string image_id = "",
                             const EdgeParams& edge_params = {});

}  // namespace avifind
