#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "image.hpp"
#include "metrics.hpp"

namespace smoothkit {

// ============================================================================
// Supervision terms as standalone audit evaluators (no gradients).
// ============================================================================

namespace detail {

inline double clamp_prob(double p) {
    return std::clamp(p, 1e-7, 1.0 - 1e-7);
}

} // namespace detail

// Class-balanced binary cross entropy on an edge probability map:
//   alpha = |E-| / |E|
//   loss  = -alpha * sum_{E+} log p  -  (1 - alpha) * sum_{E-} log(1 - p)
// Sums, not means; probabilities are clamped to [1e-7, 1 - 1e-7].
inline double edge_loss(const ScalarField& pred, const EdgeMap& gt) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw std::invalid_argument("edge_loss: dimension mismatch");
    if (pred.data.empty())
        throw std::invalid_argument("edge_loss: empty input");
    std::size_t pos = 0;
    for (auto v : gt.data) pos += (v != 0);
    const double total = static_cast<double>(gt.data.size());
    const double alpha = (total - static_cast<double>(pos)) / total;

    double pos_sum = 0.0, neg_sum = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double p = pred.data[i];
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("edge_loss: probabilities must be in [0,1]");
        if (gt.data[i])
            pos_sum += std::log(detail::clamp_prob(p));
        else
            neg_sum += std::log(1.0 - detail::clamp_prob(p));
    }
    return -alpha * pos_sum - (1.0 - alpha) * neg_sum;
}

// Mean absolute error plus the per-level structural dissimilarity sum
//   sum_{i=0}^{levels-1} (1 - ssim(P_{2^i} s, P_{2^i} s_gt))
// over the max-pooling pyramid.  The similarity enters as 1 - SSIM so the
// loss vanishes at equality.
inline double reconstruction_loss(const Image& s, const Image& s_gt, int levels = 4,
                                  const SsimParams& p = {}) {
    if (!s.same_shape(s_gt))
        throw std::invalid_argument("reconstruction_loss: dimension mismatch");
    double l1 = 0.0;
    for (std::size_t i = 0; i < s.data.size(); ++i)
        l1 += std::abs(static_cast<double>(s.data[i]) - s_gt.data[i]);
    l1 /= static_cast<double>(s.data.size());

    double dissim = 0.0;
    for (int i = 0; i < levels; ++i) {
        const int n = 1 << i;
        dissim += 1.0 - (n == 1 ? ssim(s, s_gt, p)
                                : ssim(max_pool(s, n), max_pool(s_gt, n), p));
    }
    return l1 + dissim;
}

// Edge-aware consistency-plus-smoothness:
//   mean over E+ of |s - s_gt|  (structure consistency on edges)
// + mean over E- of the total variation of s, where a forward difference
//   contributes only when both endpoints of the pixel pair lie in E-
//   (smoothness strictly inside the non-edge domain; normalized by |E-|).
// An empty E+ or E- contributes zero for its term.  Color images sum the
// per-channel magnitudes at each pixel.
inline double dtv_loss(const Image& s, const Image& s_gt, const EdgeMap& edges) {
    if (!s.same_shape(s_gt))
        throw std::invalid_argument("dtv_loss: prediction/target dimension mismatch");
    if (edges.width != s.width || edges.height != s.height)
        throw std::invalid_argument("dtv_loss: edge map dimension mismatch");

    std::size_t pos = 0;
    for (auto v : edges.data) pos += (v != 0);
    const std::size_t neg = edges.data.size() - pos;

    double l1 = 0.0;
    if (pos > 0) {
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x)
                if (edges.at(x, y))
                    for (int c = 0; c < s.channels; ++c)
                        l1 += std::abs(static_cast<double>(s.at(x, y, c)) -
                                       s_gt.at(x, y, c));
        l1 /= static_cast<double>(pos);
    }

    double tv = 0.0;
    if (neg > 0) {
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x) {
                if (edges.at(x, y)) continue;
                if (x + 1 < s.width && !edges.at(x + 1, y))
                    for (int c = 0; c < s.channels; ++c)
                        tv += std::abs(static_cast<double>(s.at(x + 1, y, c)) -
                                       s.at(x, y, c));
                if (y + 1 < s.height && !edges.at(x, y + 1))
                    for (int c = 0; c < s.channels; ++c)
                        tv += std::abs(static_cast<double>(s.at(x, y + 1, c)) -
                                       s.at(x, y, c));
            }
        tv /= static_cast<double>(neg);
    }
    return l1 + tv;
}

// ----------------------------------------------------------------------------
// Semantic cross entropy
// ----------------------------------------------------------------------------

// H x W x K per-pixel class probabilities (planar, class-major).
struct ClassProbMap {
    int width = 0;
    int height = 0;
    int num_classes = 0;
    std::vector<float> data;

    ClassProbMap() = default;
    ClassProbMap(int w, int h, int k)
        : width(w), height(h), num_classes(k),
          data(static_cast<std::size_t>(w) * h * k, 0.0f) {}

    float& at(int x, int y, int k) {
        return data[(static_cast<std::size_t>(k) * height + y) * width + x];
    }
    float at(int x, int y, int k) const {
        return data[(static_cast<std::size_t>(k) * height + y) * width + x];
    }
};

// H x W integer labels; ignore_label pixels are excluded from reductions.
struct LabelMap {
    static constexpr int ignore_label = -1;
    int width = 0;
    int height = 0;
    std::vector<int> data;

    LabelMap() = default;
    LabelMap(int w, int h, int fill = ignore_label)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    int& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    int at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

// Mean over non-ignored pixels of -log p(label), with the usual clamping.
// Per-pixel probabilities must sum to 1 within 1e-5.
inline double seg_cross_entropy(const ClassProbMap& probs, const LabelMap& labels) {
    if (probs.width != labels.width || probs.height != labels.height)
        throw std::invalid_argument("seg_cross_entropy: dimension mismatch");
    if (probs.num_classes < 2)
        throw std::invalid_argument("seg_cross_entropy: need at least 2 classes");

    double acc = 0.0;
    std::size_t counted = 0;
    for (int y = 0; y < probs.height; ++y)
        for (int x = 0; x < probs.width; ++x) {
            double sum = 0.0;
            for (int k = 0; k < probs.num_classes; ++k) sum += probs.at(x, y, k);
            if (std::abs(sum - 1.0) > 1e-5)
                throw std::invalid_argument(
                    "seg_cross_entropy: per-pixel probabilities must sum to 1 (got " +
                    std::to_string(sum) + ")");
            const int label = labels.at(x, y);
            if (label == LabelMap::ignore_label) continue;
            if (label < 0 || label >= probs.num_classes)
                throw std::invalid_argument("seg_cross_entropy: label " +
                                            std::to_string(label) + " out of range");
            acc += -std::log(detail::clamp_prob(probs.at(x, y, label)));
            ++counted;
        }
    if (counted == 0)
        throw numeric_error("seg_cross_entropy: every pixel is ignored");
    return acc / static_cast<double>(counted);
}

// ----------------------------------------------------------------------------
// Weighted total
// ----------------------------------------------------------------------------
struct LossWeights {
    double lambda_e = 0.001;
    double lambda_c = 1.0;
    double lambda_seg = 1.0;
};

struct LossParts {
    double edge = 0.0;
    double re_s0 = 0.0;
    double re_s1 = 0.0;
    double dtv_s0 = 0.0;
    double dtv_s1 = 0.0;
    double contrastive = 0.0;
    double seg = 0.0;
};

struct TotalLossBreakdown {
    double total = 0.0;
    double edge_weighted = 0.0;
    double re_s0 = 0.0;
    double re_s1 = 0.0;
    double dtv_s0 = 0.0;
    double dtv_s1 = 0.0;
    double contrastive_weighted = 0.0;
    double seg_weighted = 0.0;
};

// total = lambda_e * edge + re_s0 + re_s1 + dtv_s0 + dtv_s1
//       + lambda_c * contrastive + lambda_seg * seg
inline TotalLossBreakdown total_loss(const LossParts& parts,
                                     const LossWeights& w = {}) {
    const double all[] = {parts.edge,   parts.re_s0,       parts.re_s1,
                          parts.dtv_s0, parts.dtv_s1,      parts.contrastive,
                          parts.seg,    w.lambda_e,        w.lambda_c,
                          w.lambda_seg};
    for (double v : all)
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument(
                "total_loss: parts and weights must be finite and >= 0");
    TotalLossBreakdown b;
    b.edge_weighted = w.lambda_e * parts.edge;
    b.re_s0 = parts.re_s0;
    b.re_s1 = parts.re_s1;
    b.dtv_s0 = parts.dtv_s0;
    b.dtv_s1 = parts.dtv_s1;
    b.contrastive_weighted = w.lambda_c * parts.contrastive;
    b.seg_weighted = w.lambda_seg * parts.seg;
    b.total = b.edge_weighted + b.re_s0 + b.re_s1 + b.dtv_s0 + b.dtv_s1 +
              b.contrastive_weighted + b.seg_weighted;
    return b;
}

} // namespace smoothkit
