#pragma once

#include <stdexcept>

#include "bilateral.hpp"
#include "image.hpp"
#include "ops.hpp"

namespace smoothkit {

// ============================================================================
// Rolling guidance filtering: small structures are removed by the Gaussian
// initialization and large structures are recovered by iterating a joint
// bilateral filter whose guide is the previous iterate.
//
//   J_1     = gaussian_filter(img, sigma_s)
//   J_{t+1} = joint_bilateral(img, guide = J_t, sigma_s, sigma_r)
//
// `iters` counts the joint-bilateral refinement steps; iters = 0 returns the
// Gaussian initialization J_1 itself (same code path, bit-identical to
// gaussian_filter).
// ============================================================================
inline Image rolling_guidance(const Image& img, double sigma_s, double sigma_r,
                              int iters) {
    if (iters < 0)
        throw std::invalid_argument("rolling_guidance: iters must be >= 0");
    if (!(sigma_s > 0.0) || !(sigma_r > 0.0))
        throw std::invalid_argument("rolling_guidance: sigmas must be positive");
    Image j = gaussian_filter(img, sigma_s);
    for (int t = 0; t < iters; ++t)
        j = joint_bilateral(img, j, sigma_s, sigma_r);
    return j;
}

} // namespace smoothkit
