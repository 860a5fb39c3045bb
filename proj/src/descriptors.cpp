#include "avifind/descriptors.hpp"

#include "avifind/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace avifind {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

double wrap_two_pi(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    if (a >= kTwoPi) a -= kTwoPi;
    return a;
}

int bin_of(double dx, double dy, double ref_dir, double alpha,
           const ShapeContextParams& p, const std::vector<double>& edges) {
    const double r = std::sqrt(dx * dx + dy * dy) / alpha;
    if (r == 0.0 || r >= p.r_max) return kOutsideBin;

    int radial = 0;
    for (int j = 1; j < p.radial_bins; ++j)
        if (r >= edges[j]) radial = j;

    double theta = std::atan2(dy, dx);
    if (p.rotation_invariant) theta -= ref_dir;
    theta = wrap_two_pi(theta);
    int angular = static_cast<int>(theta * p.angular_bins / kTwoPi);
    if (angular >= p.angular_bins) angular = p.angular_bins - 1;

    return radial * p.angular_bins + angular;
}

}  // namespace

std::vector<double> ShapeContextParams::radial_edges() const {
    std::vector<double> edges(radial_bins + 1);
    const double ratio = r_max / r_min;
    for (int j = 0; j <= radial_bins; ++j)
        edges[j] = r_min * std::pow(ratio, static_cast<double>(j) / radial_bins);
    return edges;
}

void ShapeContextParams::validate() const {
    if (radial_bins < 1 || angular_bins < 1)
        throw std::invalid_argument("bin counts must be >= 1");
    if (!(0.0 < r_min && r_min < r_max))
        throw std::invalid_argument("need 0 < r_min < r_max");
}

long ShapeContext::binned() const {
    long s = 0;
    for (int c : counts) s += c;
    return s;
}

double mean_pairwise_distance(const ContourSet& contour) {
    const std::size_t n = contour.points.size();
    if (n < 2)
        throw std::invalid_argument("mean_pairwise_distance needs >= 2 points");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double dx = contour.points[i].x - contour.points[j].x;
            const double dy = contour.points[i].y - contour.points[j].y;
            sum += std::sqrt(dx * dx + dy * dy);
        }
    }
    return sum / (static_cast<double>(n) * static_cast<double>(n));
}

int log_polar_bin(Point2 q, Point2 ref, double ref_dir, double alpha,
                  const ShapeContextParams& params) {
    params.validate();
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    return bin_of(q.x - ref.x, q.y - ref.y, ref_dir, alpha, params,
                  params.radial_edges());
}

LogPolarCoord log_polar_coord(Point2 q, Point2 ref, double ref_dir, double alpha,
                              const ShapeContextParams& params) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    const double dx = q.x - ref.x, dy = q.y - ref.y;
    const double r = std::sqrt(dx * dx + dy * dy) / alpha;
    if (r == 0.0)
        throw std::invalid_argument("log_polar_coord undefined at the reference");
    double theta = std::atan2(dy, dx);
    if (params.rotation_invariant) theta -= ref_dir;
    return {std::log(r), wrap_two_pi(theta)};
}

ShapeContext shape_context(Point2 ref, double ref_dir, const ContourSet& contour,
                           const ShapeContextParams& params) {
    params.validate();
    if (contour.points.size() < 2)
        throw std::invalid_argument("shape_context needs a contour with >= 2 points");

    ShapeContext sc;
    sc.counts.assign(params.bins(), 0);
    sc.ref_point = ref;
    sc.alpha = mean_pairwise_distance(contour);

    const std::vector<double> edges = params.radial_edges();
    for (const Point2& q : contour.points) {
        if (q.x == ref.x && q.y == ref.y) {
            ++sc.at_ref_count;
            continue;
        }
        if (!(sc.alpha > 0.0)) {
            ++sc.outside_count;
            continue;
        }
        const int bin = bin_of(q.x - ref.x, q.y - ref.y, ref_dir, sc.alpha,
                               params, edges);
        if (bin == kOutsideBin)
            ++sc.outside_count;
        else
            ++sc.counts[bin];
    }
    sc.degenerate = sc.binned() == 0 && sc.outside_count == 0;
    return sc;
}

TangentFit keypoint_direction(const Keypoint& kp, const ContourSet& contour) {
    if (contour.points.empty())
        throw std::invalid_argument("keypoint_direction needs a non-empty contour");

    // Indices of the (up to) 5 nearest points, ties by contour order.
    std::vector<std::size_t> order(contour.points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t take = std::min<std::size_t>(5, order.size());
    std::partial_sort(order.begin(), order.begin() + take, order.end(),
                      [&](std::size_t a, std::size_t b) {
                          const Point2& pa = contour.points[a];
                          const Point2& pb = contour.points[b];
                          const double da = (pa.x - kp.x) * (pa.x - kp.x) +
                                            (pa.y - kp.y) * (pa.y - kp.y);
                          const double db = (pb.x - kp.x) * (pb.x - kp.x) +
                                            (pb.y - kp.y) * (pb.y - kp.y);
                          return da != db ? da < db : a < b;
                      });

    std::vector<Point2> nb;
    for (std::size_t i = 0; i < take; ++i) nb.push_back(contour.points[order[i]]);
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < nb.size(); ++i) {
        bool dup = false;
        for (std::size_t j = 0; j < i; ++j)
            if (nb[i] == nb[j]) dup = true;
        if (!dup) ++distinct;
    }
    if (distinct < 2) return {0.0, true};

    double mx = 0.0, my = 0.0;
    for (const Point2& p : nb) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(nb.size());
    my /= static_cast<double>(nb.size());

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const Point2& p : nb) {
        sxx += (p.x - mx) * (p.x - mx);
        syy += (p.y - my) * (p.y - my);
        sxy += (p.x - mx) * (p.y - my);
    }
    if (sxx == syy && sxy == 0.0) return {0.0, true};

    // Principal axis of the scatter matrix; fold to [0, pi).
    double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    if (angle < 0.0) angle += 3.14159265358979323846;
    if (angle >= 3.14159265358979323846) angle -= 3.14159265358979323846;
    return {angle, false};
}

ColorMoments color_moments(const RasterImage& img, const Keypoint& kp) {
    const int cx = static_cast<int>(std::lround(kp.x));
    const int cy = static_cast<int>(std::lround(kp.y));
    if (cx < 0 || cx >= img.width() || cy < 0 || cy >= img.height())
        throw std::invalid_argument("keypoint outside image");

    const int x0 = std::max(0, cx - 2), x1 = std::min(img.width() - 1, cx + 2);
    const int y0 = std::max(0, cy - 2), y1 = std::min(img.height() - 1, cy + 2);
    const double count = static_cast<double>((x1 - x0 + 1) * (y1 - y0 + 1));

    double sum[3] = {}, sumsq[3] = {};
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const Rgb& px = img.at(x, y);
            const double v[3] = {px.r / 255.0, px.g / 255.0, px.b / 255.0};
            for (int c = 0; c < 3; ++c) {
                sum[c] += v[c];
                sumsq[c] += v[c] * v[c];
            }
        }
    }

    ColorMoments cm;
    double* means[3] = {&cm.mean_r, &cm.mean_g, &cm.mean_b};
    double* vars[3] = {&cm.var_r, &cm.var_g, &cm.var_b};
    for (int c = 0; c < 3; ++c) {
        const double mean = sum[c] / count;
        *means[c] = mean;
        *vars[c] = std::max(0.0, sumsq[c] / count - mean * mean);
    }
    return cm;
}

FusedDescriptor fuse(const ShapeContext& sc, const ColorMoments& cm,
                     double color_weight) {
    if (color_weight < 0.0)
        throw std::invalid_argument("color_weight must be non-negative");
    FusedDescriptor d;
    d.vector.reserve(sc.counts.size() + 6);
    const double total = static_cast<double>(sc.binned());
    for (int c : sc.counts)
        d.vector.push_back(total > 0.0 ? c / total : 0.0);
    d.vector.push_back(color_weight * cm.mean_r);
    d.vector.push_back(color_weight * cm.mean_g);
    d.vector.push_back(color_weight * cm.mean_b);
    d.vector.push_back(color_weight * cm.var_r);
    d.vector.push_back(color_weight * cm.var_g);
    d.vector.push_back(color_weight * cm.var_b);
    return d;
}

DescriptorSet describe_image(const RasterImage& img, const ShapeContextParams& scp,
                             const ScaleSpaceParams& ssp, int n, double color_weight,
                             std::uint64_t seed, std::string image_id,
                             const EdgeParams& edge_params) {
    scp.validate();
    ssp.validate();
    if (n < 2) throw std::invalid_argument("contour sample count must be >= 2");
    if (color_weight < 0.0)
        throw std::invalid_argument("color_weight must be non-negative");

    DescriptorSet out;
    out.image_id = std::move(image_id);

    const GrayImage gray = to_grayscale(img);
    ContourSet contour;
    try {
        const EdgeMap edges =
            detect_edges(gray, edge_params.low, edge_params.high, edge_params.sigma);
        contour = sample_contour(edges, n, seed, out.image_id);
    } catch (const TooSmallError& e) {
        out.flagged_empty = true;
        out.flag_reason = e.what();
        return out;
    } catch (const NoContourError& e) {
        out.flagged_empty = true;
        out.flag_reason = e.what();
        return out;
    }

    std::vector<Keypoint> keypoints;
    try {
        keypoints = detect_keypoints(gray, ssp);
    } catch (const TooSmallError& e) {
        out.flagged_empty = true;
        out.flag_reason = e.what();
        return out;
    }
    if (keypoints.empty()) {
        out.flagged_empty = true;
        out.flag_reason = "no keypoints detected";
        return out;
    }

    out.descriptors.reserve(keypoints.size());
    for (const Keypoint& kp : keypoints) {
        const double ref_dir =
            scp.rotation_invariant ? keypoint_direction(kp, contour).angle : 0.0;
        const ShapeContext sc = shape_context({kp.x, kp.y}, ref_dir, contour, scp);
        const ColorMoments cm = color_moments(img, kp);
        FusedDescriptor d = fuse(sc, cm, color_weight);
        d.keypoint = kp;
        out.descriptors.push_back(std::move(d));
    }
    return out;
}

}  // namespace avifind
