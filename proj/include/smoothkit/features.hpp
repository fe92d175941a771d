#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "image.hpp"
#include "metrics.hpp"
#include "ops.hpp"

namespace smoothkit {

// ============================================================================
// Feature tensors and channel-correlation machinery
// ============================================================================

struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data; // channel-major, row-major within a channel

    FeatureMap() = default;
    FeatureMap(int c, int h, int w)
        : channels(c), height(h), width(w), data(checked_size(c, h, w), 0.0f) {}

    float& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    std::size_t plane_size() const {
        return static_cast<std::size_t>(height) * width;
    }

  private:
    static std::size_t checked_size(int c, int h, int w) {
        if (c <= 0 || h <= 0 || w <= 0)
            throw std::invalid_argument("FeatureMap: dimensions must be positive");
        return static_cast<std::size_t>(c) * h * w;
    }
};

// ----------------------------------------------------------------------------
// Deterministic multi-scale Gaussian-derivative filter bank.
//
// Stands in for a pretrained CNN backbone: for each scale sigma the bank
// emits the Gaussian-smoothed plane, its central-difference x/y derivatives,
// and its 5-point Laplacian, optionally preceded by the raw grayscale plane.
// Default: scales {1,2,4}, all kernels, raw included -> C = 13.  Entirely
// deterministic, so contrastive results are reproducible without any model
// weights; externally computed tensors can be substituted via load_features.
// ----------------------------------------------------------------------------
struct FilterBankConfig {
    std::vector<double> scales = {1.0, 2.0, 4.0};
    bool include_raw = true;
    bool gaussian = true;
    bool derivative_x = true;
    bool derivative_y = true;
    bool laplacian_of_gaussian = true;

    int channel_count() const {
        const int per_scale = (gaussian ? 1 : 0) + (derivative_x ? 1 : 0) +
                              (derivative_y ? 1 : 0) + (laplacian_of_gaussian ? 1 : 0);
        return (include_raw ? 1 : 0) + per_scale * static_cast<int>(scales.size());
    }
};

inline FeatureMap extract_features(const Image& img,
                                   const FilterBankConfig& bank = {}) {
    if (bank.channel_count() < 1)
        throw std::invalid_argument("extract_features: bank selects no channels");
    const Image gray = img.channels == 3 ? to_grayscale(img) : img;
    FeatureMap f(bank.channel_count(), gray.height, gray.width);

    int ci = 0;
    auto put = [&](auto&& value_at) {
        for (int y = 0; y < gray.height; ++y)
            for (int x = 0; x < gray.width; ++x)
                f.at(ci, y, x) = static_cast<float>(value_at(x, y));
        ++ci;
    };

    if (bank.include_raw)
        put([&](int x, int y) { return gray.at(x, y, 0); });

    for (double sigma : bank.scales) {
        const Image g = gaussian_filter(gray, sigma);
        auto gv = [&](int x, int y) {
            return static_cast<double>(
                g.at(clamp_index(x, g.width), clamp_index(y, g.height), 0));
        };
        if (bank.gaussian)
            put([&](int x, int y) { return gv(x, y); });
        if (bank.derivative_x)
            put([&](int x, int y) { return 0.5 * (gv(x + 1, y) - gv(x - 1, y)); });
        if (bank.derivative_y)
            put([&](int x, int y) { return 0.5 * (gv(x, y + 1) - gv(x, y - 1)); });
        if (bank.laplacian_of_gaussian)
            put([&](int x, int y) {
                return gv(x - 1, y) + gv(x + 1, y) + gv(x, y - 1) + gv(x, y + 1) -
                       4.0 * gv(x, y);
            });
    }
    return f;
}

// ----------------------------------------------------------------------------
// FMAP binary tensor format: magic "FMAP", u32 version (= 1), u32 C, H, W,
// all little-endian, followed by C*H*W little-endian 32-bit floats in
// channel-major row-major order.  Lets externally computed feature tensors
// (e.g. exported network activations) flow into the Gram/contrastive tools;
// no layer semantics are attached to the payload.
// ----------------------------------------------------------------------------
namespace detail {

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

} // namespace detail

inline void save_features(const FeatureMap& f, const std::string& path) {
    std::vector<std::uint8_t> buf;
    buf.reserve(20 + f.data.size() * 4);
    buf.insert(buf.end(), {'F', 'M', 'A', 'P'});
    detail::put_u32le(buf, 1u);
    detail::put_u32le(buf, static_cast<std::uint32_t>(f.channels));
    detail::put_u32le(buf, static_cast<std::uint32_t>(f.height));
    detail::put_u32le(buf, static_cast<std::uint32_t>(f.width));
    for (float v : f.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        detail::put_u32le(buf, bits);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "'");
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw io_error("fmap: write failure on '" + path + "'");
}

inline FeatureMap load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::uint8_t header[20];
    if (!in.read(reinterpret_cast<char*>(header), 20))
        throw io_error("fmap: truncated header in '" + path + "'");
    if (std::memcmp(header, "FMAP", 4) != 0)
        throw io_error("fmap: bad magic at offset 0 in '" + path + "'");
    const std::uint32_t version = detail::get_u32le(header + 4);
    if (version != 1)
        throw io_error("fmap: unsupported version " + std::to_string(version) +
                       " in '" + path + "'");
    const std::uint32_t c = detail::get_u32le(header + 8);
    const std::uint32_t h = detail::get_u32le(header + 12);
    const std::uint32_t w = detail::get_u32le(header + 16);
    if (c == 0 || h == 0 || w == 0 || c > (1u << 20) || h > (1u << 20) ||
        w > (1u << 20) ||
        static_cast<std::uint64_t>(c) * h * w > (1ull << 31))
        throw io_error("fmap: implausible tensor dimensions in '" + path + "'");

    FeatureMap f(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
    std::vector<std::uint8_t> raw(f.data.size() * 4);
    if (!in.read(reinterpret_cast<char*>(raw.data()),
                 static_cast<std::streamsize>(raw.size())))
        throw io_error("fmap: payload shorter than declared size in '" + path + "'");
    for (std::size_t i = 0; i < f.data.size(); ++i) {
        const std::uint32_t bits = detail::get_u32le(raw.data() + 4 * i);
        std::memcpy(&f.data[i], &bits, 4);
        if (!std::isfinite(f.data[i]))
            throw io_error("fmap: non-finite entry in '" + path + "'");
    }
    return f;
}

// ----------------------------------------------------------------------------
// Gram matrices and distances
// ----------------------------------------------------------------------------

// C x C channel-correlation matrix G = F F^T / (C H W), F being the C x (H W)
// unrolled tensor.  The normalization keeps distances comparable across
// spatial resolutions.
struct GramMatrix {
    int size = 0;
    std::vector<double> data; // row-major C x C

    GramMatrix() = default;
    explicit GramMatrix(int c)
        : size(c), data(static_cast<std::size_t>(c) * c, 0.0) {}

    double& at(int i, int j) {
        return data[static_cast<std::size_t>(i) * size + j];
    }
    double at(int i, int j) const {
        return data[static_cast<std::size_t>(i) * size + j];
    }
};

inline GramMatrix gram(const FeatureMap& f) {
    GramMatrix g(f.channels);
    const std::size_t plane = f.plane_size();
    const double norm = 1.0 / (static_cast<double>(f.channels) * plane);
    for (int i = 0; i < f.channels; ++i) {
        const float* fi = f.data.data() + static_cast<std::size_t>(i) * plane;
        for (int j = i; j < f.channels; ++j) {
            const float* fj = f.data.data() + static_cast<std::size_t>(j) * plane;
            double acc = 0.0;
            for (std::size_t k = 0; k < plane; ++k)
                acc += static_cast<double>(fi[k]) * fj[k];
            g.at(i, j) = acc * norm;
            g.at(j, i) = g.at(i, j);
        }
    }
    return g;
}

// Frobenius distance between Gram matrices.
inline double gram_distance(const GramMatrix& a, const GramMatrix& b) {
    if (a.size != b.size)
        throw std::invalid_argument("gram_distance: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// Euclidean distance between the per-channel spatial means of two tensors.
inline double expectation_distance(const FeatureMap& a, const FeatureMap& b) {
    if (a.channels != b.channels)
        throw std::invalid_argument("expectation_distance: channel count mismatch");
    double acc = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        double ma = 0.0, mb = 0.0;
        const std::size_t pa = a.plane_size(), pb = b.plane_size();
        const float* da = a.data.data() + static_cast<std::size_t>(c) * pa;
        const float* db = b.data.data() + static_cast<std::size_t>(c) * pb;
        for (std::size_t k = 0; k < pa; ++k) ma += da[k];
        for (std::size_t k = 0; k < pb; ++k) mb += db[k];
        const double d = ma / static_cast<double>(pa) - mb / static_cast<double>(pb);
        acc += d * d;
    }
    return std::sqrt(acc);
}

// ----------------------------------------------------------------------------
// Triplet hinge over Gram and expectation distances
// ----------------------------------------------------------------------------
enum class NegativeMode { mean, min };

struct ContrastiveConfig {
    double alpha = 0.3; // margin on the Gram term
    double beta = 0.3;  // margin on the expectation term
    NegativeMode negative_mode = NegativeMode::mean;
};

struct ContrastiveTerms {
    double d_gram_neg = 0.0; // d_G(anchor, negative)
    double d_exp_neg = 0.0;  // d_E(anchor, negative)
    double gram_term = 0.0;  // max(d_G(a,p) - d_G(a,n) + alpha, 0)
    double exp_term = 0.0;   // max(d_E(a,p) - d_E(a,n) + beta, 0)
};

struct ContrastiveBreakdown {
    double loss = 0.0;
    double d_gram_pos = 0.0;
    double d_exp_pos = 0.0;
    std::vector<ContrastiveTerms> per_negative;
};

// loss = aggregate over negatives (mean or min) of gram_term + exp_term.
inline ContrastiveBreakdown contrastive_loss(const FeatureMap& anchor,
                                             const FeatureMap& positive,
                                             const std::vector<FeatureMap>& negatives,
                                             const ContrastiveConfig& cfg = {}) {
    if (negatives.empty())
        throw std::invalid_argument("contrastive_loss: need at least one negative");
    if (cfg.alpha < 0.0 || cfg.beta < 0.0)
        throw std::invalid_argument("contrastive_loss: margins must be >= 0");

    const GramMatrix ga = gram(anchor);
    ContrastiveBreakdown out;
    out.d_gram_pos = gram_distance(ga, gram(positive));
    out.d_exp_pos = expectation_distance(anchor, positive);

    double agg = 0.0;
    bool first = true;
    for (const FeatureMap& neg : negatives) {
        ContrastiveTerms t;
        t.d_gram_neg = gram_distance(ga, gram(neg));
        t.d_exp_neg = expectation_distance(anchor, neg);
        t.gram_term = std::max(out.d_gram_pos - t.d_gram_neg + cfg.alpha, 0.0);
        t.exp_term = std::max(out.d_exp_pos - t.d_exp_neg + cfg.beta, 0.0);
        const double term = t.gram_term + t.exp_term;
        if (cfg.negative_mode == NegativeMode::mean) {
            agg += term;
        } else {
            agg = first ? term : std::min(agg, term);
        }
        first = false;
        out.per_negative.push_back(t);
    }
    out.loss = cfg.negative_mode == NegativeMode::mean
                   ? agg / static_cast<double>(negatives.size())
                   : agg;
    return out;
}

} // namespace smoothkit
