#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "image.hpp"

namespace smoothkit {

// ============================================================================
// Bilateral filtering.
//
// out(p) = sum_q w(p,q) I(q) / sum_q w(p,q)
// w(p,q) = exp(-|p-q|^2 / 2 sigma_s^2) * exp(-|G(p)-G(q)|^2 / 2 sigma_r^2)
//
// The window has radius ceil(3 sigma_s); neighbor coordinates are
// replicate-clamped, matching the padding convention of the linear filters
// (so a degenerate range kernel reproduces gaussian_filter).  The range
// distance uses the full color vector of the guide; channels of the filtered
// image share one weight field per pixel.
// ============================================================================

// Joint form: range weights come from `guide`, values from `img`.
inline Image joint_bilateral(const Image& img, const Image& guide, double sigma_s,
                             double sigma_r) {
    if (!(sigma_s > 0.0) || !(sigma_r > 0.0))
        throw std::invalid_argument("bilateral: sigmas must be positive");
    if (!img.same_shape(guide))
        throw std::invalid_argument("bilateral: guide shape must match image");

    const int r = static_cast<int>(std::ceil(3.0 * sigma_s));
    const double inv2ss = 1.0 / (2.0 * sigma_s * sigma_s);
    const double inv2sr = 1.0 / (2.0 * sigma_r * sigma_r);

    std::vector<double> spatial((2 * r + 1) * (2 * r + 1));
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            spatial[(dy + r) * (2 * r + 1) + (dx + r)] =
                std::exp(-(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy) *
                         inv2ss);

    Image out(img.width, img.height, img.channels);
    std::vector<double> acc(img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            std::fill(acc.begin(), acc.end(), 0.0);
            double wsum = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int qx = clamp_index(x + dx, img.width);
                    const int qy = clamp_index(y + dy, img.height);
                    double d2 = 0.0;
                    for (int c = 0; c < img.channels; ++c) {
                        const double d = static_cast<double>(guide.at(x, y, c)) -
                                         guide.at(qx, qy, c);
                        d2 += d * d;
                    }
                    const double w = spatial[(dy + r) * (2 * r + 1) + (dx + r)] *
                                     std::exp(-d2 * inv2sr);
                    wsum += w;
                    for (int c = 0; c < img.channels; ++c)
                        acc[c] += w * img.at(qx, qy, c);
                }
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = static_cast<float>(acc[c] / wsum);
        }
    return out;
}

inline Image bilateral(const Image& img, double sigma_s, double sigma_r) {
    return joint_bilateral(img, img, sigma_s, sigma_r);
}

} // namespace smoothkit
