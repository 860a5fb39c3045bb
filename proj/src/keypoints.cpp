#include "avifind/keypoints.hpp"

#include "avifind/edges.hpp"
#include "avifind/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace avifind {

namespace {

constexpr int kMinOctaveDim = 16;
constexpr int kBorder = 5;
constexpr int kMaxInterpSteps = 5;
constexpr int kOrientationBins = 36;
constexpr double kPi = 3.14159265358979323846;

GrayImage downsample_half(const GrayImage& src) {
    const int w = std::max(1, src.width() / 2);
    const int h = std::max(1, src.height() / 2);
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = src.at(2 * x, 2 * y);
    return out;
}

struct Offset3 {
    double x = 0.0, y = 0.0, s = 0.0;
    bool ok = false;
};

// Quadratic fit around a discrete extremum: solves H * delta = -grad for the
// 3-D offset, finite differences on the DoG stack.
Offset3 solve_offset(const std::vector<GrayImage>& dog, int layer, int x, int y) {
    const GrayImage& c = dog[layer];
    const GrayImage& lo = dog[layer - 1];
    const GrayImage& hi = dog[layer + 1];

    const double dx = (c.at(x + 1, y) - c.at(x - 1, y)) * 0.5;
    const double dy = (c.at(x, y + 1) - c.at(x, y - 1)) * 0.5;
    const double ds = (hi.at(x, y) - lo.at(x, y)) * 0.5;

    const double v = c.at(x, y);
    const double dxx = c.at(x + 1, y) + c.at(x - 1, y) - 2.0 * v;
    const double dyy = c.at(x, y + 1) + c.at(x, y - 1) - 2.0 * v;
    const double dss = hi.at(x, y) + lo.at(x, y) - 2.0 * v;
    const double dxy = (c.at(x + 1, y + 1) - c.at(x + 1, y - 1) -
                        c.at(x - 1, y + 1) + c.at(x - 1, y - 1)) * 0.25;
    const double dxs = (hi.at(x + 1, y) - hi.at(x - 1, y) -
                        lo.at(x + 1, y) + lo.at(x - 1, y)) * 0.25;
    const double dys = (hi.at(x, y + 1) - hi.at(x, y - 1) -
                        lo.at(x, y + 1) + lo.at(x, y - 1)) * 0.25;

    // Cramer's rule on the symmetric 3x3 Hessian.
    const double det = dxx * (dyy * dss - dys * dys) -
                       dxy * (dxy * dss - dys * dxs) +
                       dxs * (dxy * dys - dyy * dxs);
    Offset3 o;
    if (std::abs(det) < 1e-30) return o;
    const double rx = -dx, ry = -dy, rs = -ds;
    o.x = (rx * (dyy * dss - dys * dys) - dxy * (ry * dss - dys * rs) +
           dxs * (ry * dys - dyy * rs)) / det;
    o.y = (dxx * (ry * dss - dys * rs) - rx * (dxy * dss - dys * dxs) +
           dxs * (dxy * rs - ry * dxs)) / det;
    o.s = (dxx * (dyy * rs - ry * dys) - dxy * (dxy * rs - ry * dxs) +
           rx * (dxy * dys - dyy * dxs)) / det;
    o.ok = true;
    return o;
}

bool is_strict_extremum(const std::vector<GrayImage>& dog, int layer, int x, int y) {
    const float v = dog[layer].at(x, y);
    bool is_max = true, is_min = true;
    for (int ds = -1; ds <= 1; ++ds)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (ds == 0 && dy == 0 && dx == 0) continue;
                const float nb = dog[layer + ds].at(x + dx, y + dy);
                if (v <= nb) is_max = false;
                if (v >= nb) is_min = false;
                if (!is_max && !is_min) return false;
            }
    return is_max || is_min;
}

double wrap_two_pi(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    if (a >= 2.0 * kPi) a -= 2.0 * kPi;
    return a;
}

// Peak of the 36-bin gradient-orientation histogram around (cx, cy) in the
// given Gaussian level, radius 3*scale, Gaussian-weighted with 1.5*scale.
double dominant_orientation(const GrayImage& img, int cx, int cy, double scale_oct) {
    const int radius = std::max(1, static_cast<int>(std::lround(3.0 * scale_oct)));
    const double sigma_w = 1.5 * scale_oct;
    const double denom = 2.0 * sigma_w * sigma_w;
    double hist[kOrientationBins] = {};

    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const int x = cx + dx, y = cy + dy;
            if (x < 1 || x >= img.width() - 1 || y < 1 || y >= img.height() - 1)
                continue;
            const double gx = (img.at(x + 1, y) - img.at(x - 1, y)) * 0.5;
            const double gy = (img.at(x, y + 1) - img.at(x, y - 1)) * 0.5;
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            const double ang = wrap_two_pi(std::atan2(gy, gx));
            int bin = static_cast<int>(ang * kOrientationBins / (2.0 * kPi));
            if (bin >= kOrientationBins) bin = kOrientationBins - 1;
            hist[bin] += mag * std::exp(-(dx * dx + dy * dy) / denom);
        }
    }

    // Two circular box-smooth passes stabilize the peak.
    for (int pass = 0; pass < 2; ++pass) {
        double sm[kOrientationBins];
        for (int i = 0; i < kOrientationBins; ++i)
            sm[i] = (hist[(i + kOrientationBins - 1) % kOrientationBins] + hist[i] +
                     hist[(i + 1) % kOrientationBins]) / 3.0;
        std::copy(sm, sm + kOrientationBins, hist);
    }

    int peak = 0;
    for (int i = 1; i < kOrientationBins; ++i)
        if (hist[i] > hist[peak]) peak = i;
    if (hist[peak] == 0.0) return 0.0;

    const double l = hist[(peak + kOrientationBins - 1) % kOrientationBins];
    const double r = hist[(peak + 1) % kOrientationBins];
    const double dd = l - 2.0 * hist[peak] + r;
    const double off = std::abs(dd) > 1e-18 ? 0.5 * (l - r) / dd : 0.0;
    return wrap_two_pi((peak + 0.5 + off) * (2.0 * kPi / kOrientationBins));
}

}  // namespace

void ScaleSpaceParams::validate() const {
    if (octaves < 1) throw std::invalid_argument("octaves must be >= 1");
    if (scales_per_octave < 3)
        throw std::invalid_argument("scales_per_octave must be >= 3");
    if (!(sigma0 > 0.0)) throw std::invalid_argument("sigma0 must be positive");
    if (!(contrast_thresh > 0.0) || !(edge_thresh > 0.0))
        throw std::invalid_argument("thresholds must be positive");
}

DogPyramid build_dog_pyramid(const GrayImage& gray, const ScaleSpaceParams& params) {
    params.validate();
    if (std::min(gray.width(), gray.height()) < kMinOctaveDim)
        throw TooSmallError("image min dimension below " +
                            std::to_string(kMinOctaveDim) + " px");

    const int S = params.scales_per_octave;
    DogPyramid pyr;
    pyr.octaves_requested = params.octaves;
    pyr.scales_per_octave = S;
    pyr.sigma0 = params.sigma0;

    // Absolute blur of level i within an octave; the input counts as sigma 0.
    std::vector<double> sigmas(S + 3);
    for (int i = 0; i < S + 3; ++i)
        sigmas[i] = params.sigma0 * std::pow(2.0, static_cast<double>(i) / S);

    GrayImage base = gray;
    for (int o = 0; o < params.octaves; ++o) {
        if (std::min(base.width(), base.height()) < kMinOctaveDim) break;
        DogPyramid::Octave oct;
        oct.gauss.reserve(S + 3);
        oct.gauss.push_back(gaussian_blur(base, sigmas[0]));
        for (int i = 1; i < S + 3; ++i) {
            const double inc = std::sqrt(sigmas[i] * sigmas[i] - sigmas[i - 1] * sigmas[i - 1]);
            oct.gauss.push_back(gaussian_blur(oct.gauss[i - 1], inc));
        }
        oct.dog.reserve(S + 2);
        for (int j = 0; j < S + 2; ++j) {
            const GrayImage& a = oct.gauss[j];
            const GrayImage& b = oct.gauss[j + 1];
            GrayImage d(a.width(), a.height());
            for (std::size_t i = 0; i < d.values().size(); ++i)
                d.values()[i] = a.values()[i] - b.values()[i];
            oct.dog.push_back(std::move(d));
        }
        // Level S carries blur 2*sigma0; halving the grid resets it to sigma0.
        base = downsample_half(oct.gauss[S]);
        pyr.octaves.push_back(std::move(oct));
    }
    return pyr;
}

std::vector<Keypoint> detect_keypoints(const GrayImage& gray,
                                       const ScaleSpaceParams& params) {
    const DogPyramid pyr = build_dog_pyramid(gray, params);
    const int S = pyr.scales_per_octave;
    std::vector<Keypoint> out;

    for (int o = 0; o < static_cast<int>(pyr.octaves.size()); ++o) {
        const auto& dog = pyr.octaves[o].dog;
        const int w = dog[0].width(), h = dog[0].height();
        if (w <= 2 * kBorder || h <= 2 * kBorder) continue;

        for (int layer = 1; layer <= S; ++layer) {
            for (int y = kBorder; y < h - kBorder; ++y) {
                for (int x = kBorder; x < w - kBorder; ++x) {
                    const float v = dog[layer].at(x, y);
                    if (std::abs(v) < 0.5 * params.contrast_thresh) continue;
                    if (!is_strict_extremum(dog, layer, x, y)) continue;

                    // Sub-pixel refinement, hopping to the neighbor sample
                    // while the fitted offset exceeds half a pixel.
                    int cl = layer, cx = x, cy = y;
                    Offset3 off;
                    bool converged = false;
                    for (int step = 0; step < kMaxInterpSteps; ++step) {
                        off = solve_offset(dog, cl, cx, cy);
                        if (!off.ok) break;
                        if (std::abs(off.x) <= 0.5 && std::abs(off.y) <= 0.5 &&
                            std::abs(off.s) <= 0.5) {
                            converged = true;
                            break;
                        }
                        cx += off.x > 0.5 ? 1 : (off.x < -0.5 ? -1 : 0);
                        cy += off.y > 0.5 ? 1 : (off.y < -0.5 ? -1 : 0);
                        cl += off.s > 0.5 ? 1 : (off.s < -0.5 ? -1 : 0);
                        if (cl < 1 || cl > S || cx < kBorder || cx >= w - kBorder ||
                            cy < kBorder || cy >= h - kBorder) {
                            off.ok = false;
                            break;
                        }
                    }
                    if (!converged || !off.ok) continue;

                    const GrayImage& d = dog[cl];
                    const double dx = (d.at(cx + 1, cy) - d.at(cx - 1, cy)) * 0.5;
                    const double dy = (d.at(cx, cy + 1) - d.at(cx, cy - 1)) * 0.5;
                    const double ds = (dog[cl + 1].at(cx, cy) - dog[cl - 1].at(cx, cy)) * 0.5;
                    const double refined =
                        d.at(cx, cy) + 0.5 * (dx * off.x + dy * off.y + ds * off.s);
                    if (std::abs(refined) < params.contrast_thresh) continue;

                    // Edge-response test on the 2x2 spatial Hessian.
                    const double vv = d.at(cx, cy);
                    const double dxx = d.at(cx + 1, cy) + d.at(cx - 1, cy) - 2.0 * vv;
                    const double dyy = d.at(cx, cy + 1) + d.at(cx, cy - 1) - 2.0 * vv;
                    const double dxy = (d.at(cx + 1, cy + 1) - d.at(cx + 1, cy - 1) -
                                        d.at(cx - 1, cy + 1) + d.at(cx - 1, cy - 1)) * 0.25;
                    const double tr = dxx + dyy;
                    const double det = dxx * dyy - dxy * dxy;
                    const double r = params.edge_thresh;
                    if (det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det) continue;

                    const double cell = std::pow(2.0, o);
                    Keypoint kp;
                    kp.x = (cx + off.x) * cell;
                    kp.y = (cy + off.y) * cell;
                    if (kp.x < 0.0 || kp.x > gray.width() - 1 || kp.y < 0.0 ||
                        kp.y > gray.height() - 1)
                        continue;
                    const double scale_oct =
                        pyr.sigma0 * std::pow(2.0, (cl + off.s) / S);
                    kp.scale = scale_oct * cell;
                    kp.response = std::abs(refined);
                    kp.grid = {o, cl, cx, cy};

                    const int level =
                        std::clamp(static_cast<int>(std::lround(cl + off.s)), 0, S + 2);
                    kp.orientation = dominant_orientation(
                        pyr.octaves[o].gauss[level], cx, cy, scale_oct);
                    out.push_back(kp);
                }
            }
        }
    }
    return out;
}

}  // namespace avifind
