#pragma once

#include <stdexcept>

#include "image.hpp"
#include "ops.hpp"

namespace smoothkit {

// ============================================================================
// Guided filter (grayscale guide).
//
// Per window k:  a_k = cov(guide, img) / (var(guide) + eps)
//                b_k = mean(img) - a_k * mean(guide)
// out(p) = mean over windows covering p of (a_k * guide(p) + b_k)
//        = box(a)(p) * guide(p) + box(b)(p)
//
// Every mean is the replicate-padded window mean of box_filter.  Internals
// run in double planes so the variance/covariance identities hold to well
// under the float quantum.
// ============================================================================
inline Image guided(const Image& img, const Image& guide, int radius, double eps) {
    if (!(eps > 0.0))
        throw std::invalid_argument("guided: eps must be positive");
    if (radius < 1)
        throw std::invalid_argument("guided: radius must be >= 1");
    if (guide.channels != 1)
        throw std::invalid_argument("guided: guide must be single-channel");
    if (guide.width != img.width || guide.height != img.height)
        throw std::invalid_argument("guided: guide dimensions must match image");

    using detail::DPlane;
    const DPlane g = detail::to_dplane(guide, 0);
    DPlane gg(g.width, g.height);
    for (std::size_t i = 0; i < g.data.size(); ++i) gg.data[i] = g.data[i] * g.data[i];
    const DPlane mean_g = detail::box_mean(g, radius);
    const DPlane mean_gg = detail::box_mean(gg, radius);

    Image out(img.width, img.height, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        const DPlane p = detail::to_dplane(img, c);
        DPlane gp(g.width, g.height);
        for (std::size_t i = 0; i < g.data.size(); ++i)
            gp.data[i] = g.data[i] * p.data[i];
        const DPlane mean_p = detail::box_mean(p, radius);
        const DPlane mean_gp = detail::box_mean(gp, radius);

        DPlane a(g.width, g.height), b(g.width, g.height);
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            const double var_g = mean_gg.data[i] - mean_g.data[i] * mean_g.data[i];
            const double cov_gp = mean_gp.data[i] - mean_g.data[i] * mean_p.data[i];
            a.data[i] = cov_gp / (var_g + eps);
            b.data[i] = mean_p.data[i] - a.data[i] * mean_g.data[i];
        }
        const DPlane mean_a = detail::box_mean(a, radius);
        const DPlane mean_b = detail::box_mean(b, radius);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(x, y, c) =
                    static_cast<float>(mean_a.at(x, y) * g.at(x, y) + mean_b.at(x, y));
    }
    return out;
}

} // namespace smoothkit
