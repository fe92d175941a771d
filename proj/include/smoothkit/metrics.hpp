#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "image.hpp"
#include "ops.hpp"

namespace smoothkit {

// ============================================================================
// Quality and screening metrics
// ============================================================================

// Peak signal-to-noise ratio over all samples, intensities in [0,1].
// Identical inputs return +infinity.
inline double psnr(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("psnr: images must have identical shape");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

// Stabilization constants and exponents of the three-component structural
// similarity product l^alpha * c^beta * s^gamma.
struct SsimParams {
    double c1 = 1e-4;     // (0.01)^2
    double c2 = 9e-4;     // (0.03)^2
    double c3 = 4.5e-4;   // c2 / 2
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
};

namespace detail {

inline DPlane gray_dplane(const Image& img) {
    return img.channels == 1 ? to_dplane(img, 0) : to_dplane(to_grayscale(img), 0);
}

// x^e that keeps exactness for e = 1 and stays sign-aware for integral e.
inline double component_pow(double x, double e) {
    if (e == 1.0) return x;
    return std::pow(x, e);
}

} // namespace detail

// Structural similarity: mean over pixels of the windowed l*c*s product,
// windows being 11x11 Gaussian (sigma 1.5, replicate padding).  Color inputs
// are reduced to grayscale first.  Symmetric in its arguments bit-for-bit.
inline double ssim(const Image& a, const Image& b, const SsimParams& p = {}) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("ssim: images must have identical dimensions");
    using detail::DPlane;
    const DPlane x = detail::gray_dplane(a);
    const DPlane y = detail::gray_dplane(b);
    const std::size_t n = x.data.size();

    DPlane xx(x.width, x.height), yy(x.width, x.height), xy(x.width, x.height);
    for (std::size_t i = 0; i < n; ++i) {
        xx.data[i] = x.data[i] * x.data[i];
        yy.data[i] = y.data[i] * y.data[i];
        xy.data[i] = x.data[i] * y.data[i];
    }
    const auto kernel = detail::gaussian_kernel(1.5); // radius ceil(4.5) = 5
    const DPlane mx = detail::convolve_separable(x, kernel);
    const DPlane my = detail::convolve_separable(y, kernel);
    const DPlane mxx = detail::convolve_separable(xx, kernel);
    const DPlane myy = detail::convolve_separable(yy, kernel);
    const DPlane mxy = detail::convolve_separable(xy, kernel);

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ux = mx.data[i], uy = my.data[i];
        const double vx = std::max(0.0, mxx.data[i] - ux * ux);
        const double vy = std::max(0.0, myy.data[i] - uy * uy);
        const double cxy = mxy.data[i] - ux * uy;
        const double sx = std::sqrt(vx), sy = std::sqrt(vy);
        const double l = (2.0 * ux * uy + p.c1) / (ux * ux + uy * uy + p.c1);
        const double c = (2.0 * sx * sy + p.c2) / (vx + vy + p.c2);
        const double s = (cxy + p.c3) / (sx * sy + p.c3);
        const double v = detail::component_pow(l, p.alpha) *
                         detail::component_pow(c, p.beta) *
                         detail::component_pow(s, p.gamma);
        if (!std::isfinite(v))
            throw numeric_error("ssim: non-finite component product (exponents on "
                                "negative component?)");
        acc += v;
    }
    return acc / static_cast<double>(n);
}

// Sum of SSIM over a max-pooling pyramid: levels terms at pool sizes
// 1, 2, 4, ..., 2^(levels-1).
inline double multiscale_pooled_ssim(const Image& a, const Image& b, int levels,
                                     const SsimParams& p = {}) {
    if (levels < 1)
        throw std::invalid_argument("multiscale_pooled_ssim: levels must be >= 1");
    if ((1 << (levels - 1)) > std::min(a.width, a.height))
        throw std::invalid_argument(
            "multiscale_pooled_ssim: image smaller than the coarsest pool");
    double total = 0.0;
    for (int i = 0; i < levels; ++i) {
        const int nsz = 1 << i;
        total += nsz == 1 ? ssim(a, b, p) : ssim(max_pool(a, nsz), max_pool(b, nsz), p);
    }
    return total;
}

// ----------------------------------------------------------------------------
// Patch smoothness score: population standard deviation of the patch plus
// the mean absolute 5-point Laplacian over interior pixels.  Both addends
// are exposed so alternative weightings can be audited.
// ----------------------------------------------------------------------------
struct SmoothValueParts {
    double std_term = 0.0;
    double laplacian_term = 0.0;
    double total() const { return std_term + laplacian_term; }
};

inline SmoothValueParts smooth_value_parts(const Image& patch) {
    if (patch.channels != 1)
        throw std::invalid_argument("smooth_value: expected a single-channel patch");
    if (patch.width < 3 || patch.height < 3)
        throw std::invalid_argument("smooth_value: patch must be at least 3x3");

    double sum = 0.0, sum2 = 0.0;
    for (float v : patch.data) {
        sum += v;
        sum2 += static_cast<double>(v) * v;
    }
    const double inv_n = 1.0 / static_cast<double>(patch.data.size());
    const double mean = sum * inv_n;
    const double var = std::max(0.0, sum2 * inv_n - mean * mean);

    const ScalarField lap = laplacian(patch);
    double lap_sum = 0.0;
    for (int y = 1; y < patch.height - 1; ++y)
        for (int x = 1; x < patch.width - 1; ++x)
            lap_sum += std::abs(static_cast<double>(lap.at(x, y)));
    const double interior =
        static_cast<double>(patch.width - 2) * (patch.height - 2);

    return {std::sqrt(var), lap_sum / interior};
}

inline double smooth_value(const Image& patch) {
    return smooth_value_parts(patch).total();
}

// ----------------------------------------------------------------------------
// Sliding-window edge-free region search and the smooth test built on it.
// ----------------------------------------------------------------------------
struct WindowSpec {
    int size = 16;
    int stride = 8;
};

struct WindowOrigin {
    int x = 0;
    int y = 0;
};

inline void validate_window_spec(const WindowSpec& w, int width, int height) {
    if (w.stride < 1 || w.stride > w.size || w.size > std::min(width, height))
        throw std::invalid_argument(
            "window spec: need 1 <= stride <= size <= min(H, W)");
}

// All stride-grid windows containing zero edge pixels, row-major.
inline std::vector<WindowOrigin> find_textureless_windows(const Image& img,
                                                          const EdgeMap& edges,
                                                          const WindowSpec& w) {
    if (edges.width != img.width || edges.height != img.height)
        throw std::invalid_argument("find_textureless_windows: edge map dims "
                                    "must match image");
    validate_window_spec(w, img.width, img.height);
    std::vector<WindowOrigin> out;
    for (int oy = 0; oy + w.size <= img.height; oy += w.stride)
        for (int ox = 0; ox + w.size <= img.width; ox += w.stride) {
            bool clean = true;
            for (int y = oy; clean && y < oy + w.size; ++y)
                for (int x = ox; x < ox + w.size; ++x)
                    if (edges.at(x, y)) {
                        clean = false;
                        break;
                    }
            if (clean) out.push_back({ox, oy});
        }
    return out;
}

enum class SmoothTestStatus { pass, fail_score, no_evaluable_region };

inline const char* to_string(SmoothTestStatus s) {
    switch (s) {
        case SmoothTestStatus::pass: return "pass";
        case SmoothTestStatus::fail_score: return "score-above-threshold";
        case SmoothTestStatus::no_evaluable_region: return "no-evaluable-region";
    }
    return "?";
}

struct SmoothTestResult {
    bool pass = false;
    SmoothTestStatus status = SmoothTestStatus::no_evaluable_region;
    double score = 0.0;          // mean smooth value over edge-free windows
    double std_term = 0.0;       // mean of the per-window std addend
    double laplacian_term = 0.0; // mean of the per-window Laplacian addend
    int windows_evaluated = 0;
};

// Mean smoothness over the edge-free windows of the candidate's grayscale;
// passes when that mean stays below `threshold`.  No evaluable window is a
// failure with its own status, not an error.
inline SmoothTestResult smooth_test(const Image& candidate, const EdgeMap& edges,
                                    const WindowSpec& w, double threshold = 0.05) {
    if (!(threshold > 0.0))
        throw std::invalid_argument("smooth_test: threshold must be positive");
    const Image gray = candidate.channels == 3 ? to_grayscale(candidate) : candidate;
    const auto windows = find_textureless_windows(gray, edges, w);

    SmoothTestResult result;
    result.windows_evaluated = static_cast<int>(windows.size());
    if (windows.empty()) {
        result.pass = false;
        result.status = SmoothTestStatus::no_evaluable_region;
        return result;
    }
    double score = 0.0, std_sum = 0.0, lap_sum = 0.0;
    for (const auto& origin : windows) {
        Image patch(w.size, w.size, 1);
        for (int y = 0; y < w.size; ++y)
            for (int x = 0; x < w.size; ++x)
                patch.at(x, y, 0) = gray.at(origin.x + x, origin.y + y, 0);
        const SmoothValueParts parts = smooth_value_parts(patch);
        score += parts.total();
        std_sum += parts.std_term;
        lap_sum += parts.laplacian_term;
    }
    const double inv = 1.0 / static_cast<double>(windows.size());
    result.score = score * inv;
    result.std_term = std_sum * inv;
    result.laplacian_term = lap_sum * inv;
    result.pass = result.score < threshold;
    result.status =
        result.pass ? SmoothTestStatus::pass : SmoothTestStatus::fail_score;
    return result;
}

} // namespace smoothkit
