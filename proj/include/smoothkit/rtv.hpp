#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "image.hpp"
#include "ops.hpp"

namespace smoothkit {

namespace detail {

// Weighted 5-point graph Laplacian: horizontal edge (x,y)-(x+1,y) carries
// wx(x,y), vertical edge (x,y)-(x,y+1) carries wy(x,y).  The last column of
// wx and last row of wy are zero (no edges leave the grid).
struct EdgeWeights {
    int width = 0, height = 0;
    std::vector<double> wx, wy;
};

// y = (Id + lambda * L_w) x
inline void apply_screened_laplacian(const EdgeWeights& w, double lambda,
                                     const std::vector<double>& x,
                                     std::vector<double>& y) {
    const int W = w.width, H = w.height;
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * W + c;
            double acc = x[i];
            if (c + 1 < W) acc += lambda * w.wx[i] * (x[i] - x[i + 1]);
            if (c > 0) acc += lambda * w.wx[i - 1] * (x[i] - x[i - 1]);
            if (r + 1 < H) acc += lambda * w.wy[i] * (x[i] - x[i + W]);
            if (r > 0) acc += lambda * w.wy[i - W] * (x[i] - x[i - W]);
            y[i] = acc;
        }
}

// Jacobi-preconditioned conjugate gradient for the SPD system above, warm
// started from x0 (the previous iterate / input image, already close to the
// solution).  Converges to relative residual `tol`; throws past `max_iter`
// iterations.
inline std::vector<double> solve_screened_laplacian(const EdgeWeights& w,
                                                    double lambda,
                                                    const std::vector<double>& b,
                                                    const std::vector<double>& x0,
                                                    double tol, long max_iter) {
    const int W = w.width, H = w.height;
    const std::size_t n = b.size();
    std::vector<double> diag(n);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * W + c;
            double d = 1.0;
            if (c + 1 < W) d += lambda * w.wx[i];
            if (c > 0) d += lambda * w.wx[i - 1];
            if (r + 1 < H) d += lambda * w.wy[i];
            if (r > 0) d += lambda * w.wy[i - W];
            diag[i] = d;
        }

    std::vector<double> x = x0, rres(n), z(n), p(n), ap(n);
    apply_screened_laplacian(w, lambda, x, rres);
    for (std::size_t i = 0; i < n; ++i) rres[i] = b[i] - rres[i];
    double bnorm = 0.0;
    for (double v : b) bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    if (bnorm == 0.0) return std::vector<double>(n, 0.0);

    for (std::size_t i = 0; i < n; ++i) z[i] = rres[i] / diag[i];
    p = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) rz += rres[i] * z[i];

    double rnorm = bnorm;
    for (long it = 0; it < max_iter; ++it) {
        rnorm = 0.0;
        for (double v : rres) rnorm += v * v;
        rnorm = std::sqrt(rnorm);
        if (rnorm / bnorm <= tol) return x;

        apply_screened_laplacian(w, lambda, p, ap);
        double pap = 0.0;
        for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            rres[i] -= alpha * ap[i];
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = rres[i] / diag[i];
        double rz_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) rz_new += rres[i] * z[i];
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw numeric_error("rtv: conjugate gradient failed to reach tolerance " +
                        std::to_string(tol) + " within " + std::to_string(max_iter) +
                        " iterations (relative residual " +
                        std::to_string(rnorm / bnorm) + ")");
}

} // namespace detail

// ============================================================================
// Texture smoothing by relative total variation, as iteratively reweighted
// least squares.  Each outer iteration:
//
//   dx, dy : forward differences of the current iterate (zero at the far edge)
//   Lx(q)  = mean over channels of |G_sigma * dx|(q)     (inherent variation)
//   ux(q)  = [G_sigma * (1 / (Lx + eps_s))](q)           (windowed TV factor)
//   wx(q)  = ux(q) / (mean_c |dx(q)| + 1e-3)
//
// (and the y-direction analogues), then solves the screened weighted
// Laplacian system (Id + lambda L_w) S = I per channel with Jacobi-PCG to
// relative residual 1e-6 (hard cap 10 H W iterations).  sigma is held fixed
// across iterations; weights are shared by all channels.
//
// If clamp_stats is non-null it receives telemetry about output samples
// outside [0,1] before the final clamp.
// ============================================================================
inline Image rtv(const Image& img, double lambda, double sigma, double eps_s,
                 int iters, ClampStats* clamp_stats = nullptr) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("rtv: lambda must be positive");
    if (!(sigma > 0.0))
        throw std::invalid_argument("rtv: sigma must be positive");
    if (!(eps_s > 0.0))
        throw std::invalid_argument("rtv: eps_s must be positive");
    if (iters < 1)
        throw std::invalid_argument("rtv: iters must be >= 1");

    using detail::DPlane;
    const int W = img.width, H = img.height, C = img.channels;
    const std::size_t n = static_cast<std::size_t>(W) * H;
    const auto kernel = detail::gaussian_kernel(sigma);

    std::vector<std::vector<double>> s(C), orig(C);
    for (int c = 0; c < C; ++c) {
        orig[c] = detail::to_dplane(img, c).data;
        s[c] = orig[c];
    }

    auto fwd_diff = [&](const std::vector<double>& p, bool horizontal) {
        DPlane d(W, H, 0.0);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * W + x;
                if (horizontal && x + 1 < W) d.data[i] = p[i + 1] - p[i];
                if (!horizontal && y + 1 < H) d.data[i] = p[i + W] - p[i];
            }
        return d;
    };

    detail::EdgeWeights w;
    w.width = W;
    w.height = H;
    w.wx.resize(n);
    w.wy.resize(n);

    for (int it = 0; it < iters; ++it) {
        // Channel-mean |d| and |G*d| fields for both axes.
        std::vector<double> adx(n, 0.0), ady(n, 0.0), lx(n, 0.0), ly(n, 0.0);
        for (int c = 0; c < C; ++c) {
            const DPlane dx = fwd_diff(s[c], true);
            const DPlane dy = fwd_diff(s[c], false);
            const DPlane bx = detail::convolve_separable(dx, kernel);
            const DPlane by = detail::convolve_separable(dy, kernel);
            for (std::size_t i = 0; i < n; ++i) {
                adx[i] += std::abs(dx.data[i]);
                ady[i] += std::abs(dy.data[i]);
                lx[i] += std::abs(bx.data[i]);
                ly[i] += std::abs(by.data[i]);
            }
        }
        DPlane invlx(W, H), invly(W, H);
        for (std::size_t i = 0; i < n; ++i) {
            invlx.data[i] = 1.0 / (lx[i] / C + eps_s);
            invly.data[i] = 1.0 / (ly[i] / C + eps_s);
        }
        const DPlane ux = detail::convolve_separable(invlx, kernel);
        const DPlane uy = detail::convolve_separable(invly, kernel);
        for (std::size_t i = 0; i < n; ++i) {
            w.wx[i] = ux.data[i] / (adx[i] / C + 1e-3);
            w.wy[i] = uy.data[i] / (ady[i] / C + 1e-3);
        }
        for (int y = 0; y < H; ++y) w.wx[static_cast<std::size_t>(y) * W + (W - 1)] = 0.0;
        for (int x = 0; x < W; ++x) w.wy[static_cast<std::size_t>(H - 1) * W + x] = 0.0;

        for (int c = 0; c < C; ++c)
            s[c] = detail::solve_screened_laplacian(w, lambda, orig[c], s[c], 1e-6,
                                                    10L * H * W);
    }

    Image out(W, H, C);
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                out.at(x, y, c) =
                    static_cast<float>(s[c][static_cast<std::size_t>(y) * W + x]);
    return clamp_unit(out, clamp_stats);
}

} // namespace smoothkit
