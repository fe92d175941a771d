#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace smoothkit {

// ============================================================================
// Image: planar float32 raster, values nominally in [0,1].
//
// Layout is channel-major: data[(c*height + y)*width + x].  All operators in
// this library read and write through at(x,y,c); accumulation happens in
// double and results are rounded once to float on store.
// ============================================================================
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;

    Image(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c), data(checked_size(w, h, c), fill) {}

    float& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }

private:
    static std::size_t checked_size(int w, int h, int c) {
        if (w <= 0 || h <= 0 || c <= 0)
            throw std::invalid_argument("Image: dimensions must be positive");
        return static_cast<std::size_t>(w) * h * c;
    }
};

// Single-plane field of unbounded reals (gradients, Laplacians, responses).
struct ScalarField {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    ScalarField() = default;
    ScalarField(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    float at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

// Boolean pixel mask (edge maps, screening masks).  Same row-major layout.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Mask() = default;
    Mask(int w, int h, bool fill = false)
        : width(w), height(h),
          data(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

    std::uint8_t& at(int x, int y) {
        return data[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : data) n += (v != 0);
        return n;
    }
};

// An edge map is a mask whose set bits form E+ and clear bits form E-.
using EdgeMap = Mask;

// ============================================================================
// Small shared helpers
// ============================================================================

inline int clamp_index(int i, int n) {
    return std::clamp(i, 0, n - 1);
}

// Telemetry for range clamping: how many samples fell outside [0,1] and by
// how much at worst.  Operators that clamp report this instead of hiding it.
struct ClampStats {
    double clipped_fraction = 0.0;
    double max_excess = 0.0;
};

// Clamp every sample to [0,1], optionally reporting what was clipped.
inline Image clamp_unit(const Image& img, ClampStats* stats = nullptr) {
    Image out = img;
    std::size_t clipped = 0;
    double excess = 0.0;
    for (auto& v : out.data) {
        if (v < 0.0f || v > 1.0f) {
            ++clipped;
            double e = v < 0.0f ? -static_cast<double>(v)
                                : static_cast<double>(v) - 1.0;
            excess = std::max(excess, e);
        }
        v = std::clamp(v, 0.0f, 1.0f);
    }
    if (stats) {
        stats->clipped_fraction =
            out.data.empty() ? 0.0 : static_cast<double>(clipped) / out.data.size();
        stats->max_excess = excess;
    }
    return out;
}

inline Image flip_horizontal(const Image& img) {
    Image out(img.width, img.height, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    return out;
}

inline Image flip_vertical(const Image& img) {
    Image out(img.width, img.height, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(x, y, c) = img.at(x, img.height - 1 - y, c);
    return out;
}

// Quarter-turn counterclockwise: output (x,y) <- input (W-1-y -> ...).
// Defined so that rotate90(img) has width = img.height, height = img.width.
inline Image rotate90(const Image& img) {
    Image out(img.height, img.width, img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(y, img.width - 1 - x, c) = img.at(x, y, c);
    return out;
}

inline double max_abs_diff(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
    return m;
}

} // namespace smoothkit
