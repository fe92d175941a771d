#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "image.hpp"

namespace smoothkit {

namespace detail {

// Double-precision plane used for all filter internals.  Filters accumulate
// here and round to float once on output.
struct DPlane {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    DPlane() = default;
    DPlane(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    double at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

inline DPlane to_dplane(const Image& img, int c) {
    DPlane p(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            p.at(x, y) = img.at(x, y, c);
    return p;
}

inline void store_plane(Image& img, int c, const DPlane& p) {
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            img.at(x, y, c) = static_cast<float>(p.at(x, y));
}

// Separable convolution with an odd symmetric kernel, replicate padding.
inline DPlane convolve_separable(const DPlane& src, const std::vector<double>& kernel) {
    const int r = static_cast<int>(kernel.size()) / 2;
    DPlane tmp(src.width, src.height), out(src.width, src.height);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k)
                acc += kernel[k + r] * src.at(clamp_index(x + k, src.width), y);
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k)
                acc += kernel[k + r] * tmp.at(x, clamp_index(y + k, src.height));
            out.at(x, y) = acc;
        }
    return out;
}

inline std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("gaussian kernel: sigma must be positive");
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[i + r] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        sum += k[i + r];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Window mean over (2r+1)^2 with replicate padding, sliding-sum in each axis
// so the cost does not depend on the radius.
inline DPlane box_mean(const DPlane& src, int radius) {
    const int W = src.width, H = src.height, r = radius;
    DPlane tmp(W, H), out(W, H);
    const double inv = 1.0 / ((2.0 * r + 1) * (2.0 * r + 1));
    for (int y = 0; y < H; ++y) {
        double run = 0.0;
        for (int k = -r; k <= r; ++k) run += src.at(clamp_index(k, W), y);
        tmp.at(0, y) = run;
        for (int x = 1; x < W; ++x) {
            run += src.at(clamp_index(x + r, W), y) - src.at(clamp_index(x - 1 - r, W), y);
            tmp.at(x, y) = run;
        }
    }
    for (int x = 0; x < W; ++x) {
        double run = 0.0;
        for (int k = -r; k <= r; ++k) run += tmp.at(x, clamp_index(k, H));
        out.at(x, 0) = run * inv;
        for (int y = 1; y < H; ++y) {
            run += tmp.at(x, clamp_index(y + r, H)) - tmp.at(x, clamp_index(y - 1 - r, H));
            out.at(x, y) = run * inv;
        }
    }
    return out;
}

// Apply a per-plane DPlane transform to every channel of an Image.
template <typename Fn>
Image per_channel(const Image& img, Fn&& fn) {
    Image out(img.width, img.height, img.channels);
    for (int c = 0; c < img.channels; ++c)
        store_plane(out, c, fn(to_dplane(img, c)));
    return out;
}

} // namespace detail

// ============================================================================
// Core raster operations
// ============================================================================

// Luma projection 0.299 R + 0.587 G + 0.114 B.  Single-channel input is
// rejected so callers cannot silently double-convert.
inline Image to_grayscale(const Image& img) {
    if (img.channels != 3)
        throw std::invalid_argument("to_grayscale: expected a 3-channel image");
    Image out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y, 0) = static_cast<float>(0.299 * img.at(x, y, 0) +
                                                 0.587 * img.at(x, y, 1) +
                                                 0.114 * img.at(x, y, 2));
    return out;
}

inline double mean_intensity(const Image& img) {
    if (img.channels != 1)
        throw std::invalid_argument("mean_intensity: expected a single-channel image");
    double sum = 0.0;
    for (float v : img.data) sum += v;
    return sum / static_cast<double>(img.data.size());
}

// 3x3 Sobel magnitude threshold.  Kernels are the classic unnormalized
// [-1,0,1; -2,0,2; -1,0,1] pair, so a unit step produces magnitude 4 on the
// columns flanking it.
inline EdgeMap sobel_edges(const Image& img, double threshold) {
    if (img.channels != 1)
        throw std::invalid_argument("sobel_edges: expected a single-channel image");
    if (threshold < 0.0)
        throw std::invalid_argument("sobel_edges: threshold must be non-negative");
    EdgeMap mask(img.width, img.height);
    auto px = [&](int x, int y) {
        return static_cast<double>(
            img.at(clamp_index(x, img.width), clamp_index(y, img.height), 0));
    };
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double gx = -px(x - 1, y - 1) + px(x + 1, y - 1) - 2.0 * px(x - 1, y) +
                        2.0 * px(x + 1, y) - px(x - 1, y + 1) + px(x + 1, y + 1);
            double gy = -px(x - 1, y - 1) - 2.0 * px(x, y - 1) - px(x + 1, y - 1) +
                        px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1);
            mask.at(x, y) = std::sqrt(gx * gx + gy * gy) > threshold ? 1 : 0;
        }
    return mask;
}

// 5-point Laplacian [0,1,0; 1,-4,1; 0,1,0] with replicate padding.
inline ScalarField laplacian(const Image& img) {
    if (img.channels != 1)
        throw std::invalid_argument("laplacian: expected a single-channel image");
    ScalarField out(img.width, img.height);
    auto px = [&](int x, int y) {
        return static_cast<double>(
            img.at(clamp_index(x, img.width), clamp_index(y, img.height), 0));
    };
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = static_cast<float>(px(x - 1, y) + px(x + 1, y) +
                                              px(x, y - 1) + px(x, y + 1) -
                                              4.0 * px(x, y));
    return out;
}

// Separable Gaussian blur, kernel radius ceil(3 sigma), replicate padding.
inline Image gaussian_filter(const Image& img, double sigma) {
    auto kernel = detail::gaussian_kernel(sigma);
    return detail::per_channel(img, [&](const detail::DPlane& p) {
        return detail::convolve_separable(p, kernel);
    });
}

// Mean over the (2r+1)^2 replicate-padded window via sliding sums.
inline Image box_filter(const Image& img, int radius) {
    if (radius < 1)
        throw std::invalid_argument("box_filter: radius must be >= 1");
    return detail::per_channel(img, [&](const detail::DPlane& p) {
        return detail::box_mean(p, radius);
    });
}

// Non-overlapping n x n max pooling; trailing partial windows are kept, so
// the output is ceil(H/n) x ceil(W/n).
inline Image max_pool(const Image& img, int n) {
    if (n < 1) throw std::invalid_argument("max_pool: n must be >= 1");
    const int ow = (img.width + n - 1) / n;
    const int oh = (img.height + n - 1) / n;
    Image out(ow, oh, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                float m = -std::numeric_limits<float>::infinity();
                for (int y = oy * n; y < std::min((oy + 1) * n, img.height); ++y)
                    for (int x = ox * n; x < std::min((ox + 1) * n, img.width); ++x)
                        m = std::max(m, img.at(x, y, c));
                out.at(ox, oy, c) = m;
            }
    return out;
}

} // namespace smoothkit
