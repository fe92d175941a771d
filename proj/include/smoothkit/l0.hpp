#pragma once

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "image.hpp"
#include "ops.hpp"

namespace smoothkit {

namespace detail {

// FFTW plan creation/destruction is not thread-safe; executions are.
inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

// Real 2D FFT pair on a fixed H x W geometry, buffers owned by the object.
// Plans use FFTW_ESTIMATE so the transform is deterministic across runs.
class Fft2D {
public:
    Fft2D(int height, int width) : h_(height), w_(width), wc_(width / 2 + 1) {
        real_ = fftw_alloc_real(static_cast<std::size_t>(h_) * w_);
        cplx_ = fftw_alloc_complex(static_cast<std::size_t>(h_) * wc_);
        if (!real_ || !cplx_) throw std::bad_alloc();
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fwd_ = fftw_plan_dft_r2c_2d(h_, w_, real_, cplx_, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r_2d(h_, w_, cplx_, real_, FFTW_ESTIMATE);
        if (!fwd_ || !inv_) throw std::runtime_error("fft: plan creation failed");
    }
    ~Fft2D() {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(real_);
        fftw_free(cplx_);
    }
    Fft2D(const Fft2D&) = delete;
    Fft2D& operator=(const Fft2D&) = delete;

    double* real() { return real_; }
    fftw_complex* cplx() { return cplx_; }
    int complex_width() const { return wc_; }

    void forward() { fftw_execute(fwd_); }   // real_ -> cplx_
    void inverse() { fftw_execute(inv_); }   // cplx_ -> real_ (unnormalized)

private:
    int h_, w_, wc_;
    double* real_ = nullptr;
    fftw_complex* cplx_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

} // namespace detail

// ============================================================================
// L0 gradient minimization via half-quadratic splitting.
//
// Alternates between
//   (h,v) <- grad S, zeroed jointly over channels where sum_c (h^2+v^2) < lambda/beta
//   S     <- argmin |S-I|^2 + beta (|dx S - h|^2 + |dy S - v|^2)
// The S-update is a screened Poisson solve carried out with discrete Fourier
// transforms.  Those assume periodic boundaries, so the image is mirrored to
// a 2H x 2W even extension first and cropped back afterwards; beta starts at
// 2 lambda, is multiplied by kappa per iteration, and the loop stops once
// beta exceeds 1e5.
//
// lambda = 0 disables every threshold, making each iteration the identity;
// it returns the input directly instead of looping on a fixed point.
// If clamp_stats is non-null it receives telemetry about output samples
// that fell outside [0,1] before the final clamp.
// ============================================================================
inline Image l0_smooth(const Image& img, double lambda, double kappa = 2.0,
                       ClampStats* clamp_stats = nullptr) {
    if (lambda < 0.0)
        throw std::invalid_argument("l0_smooth: lambda must be non-negative");
    if (!(kappa > 1.0))
        throw std::invalid_argument("l0_smooth: kappa must exceed 1");
    if (lambda == 0.0) return clamp_unit(img, clamp_stats);

    const int W = img.width, H = img.height, C = img.channels;
    const int EW = 2 * W, EH = 2 * H;
    const std::size_t n = static_cast<std::size_t>(EW) * EH;

    // Even (mirror) extension of each channel.
    auto mirror = [](int i, int orig) { return i < orig ? i : 2 * orig - 1 - i; };
    std::vector<std::vector<double>> ext(C, std::vector<double>(n));
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < EH; ++y)
            for (int x = 0; x < EW; ++x)
                ext[c][static_cast<std::size_t>(y) * EW + x] =
                    img.at(mirror(x, W), mirror(y, H), c);
    std::vector<std::vector<double>> s = ext;

    // |OTF(dx)|^2 + |OTF(dy)|^2 on the half-spectrum grid.
    detail::Fft2D fft(EH, EW);
    const int WC = fft.complex_width();
    std::vector<double> grad_otf2(static_cast<std::size_t>(EH) * WC);
    for (int v = 0; v < EH; ++v)
        for (int u = 0; u < WC; ++u)
            grad_otf2[static_cast<std::size_t>(v) * WC + u] =
                (2.0 - 2.0 * std::cos(2.0 * M_PI * u / EW)) +
                (2.0 - 2.0 * std::cos(2.0 * M_PI * v / EH));

    std::vector<std::vector<double>> h(C, std::vector<double>(n));
    std::vector<std::vector<double>> vg(C, std::vector<double>(n));

    for (double beta = 2.0 * lambda; beta <= 1e5; beta *= kappa) {
        // Subproblem 1: thresholded gradients (periodic forward differences).
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < EH; ++y)
                for (int x = 0; x < EW; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * EW + x;
                    const std::size_t ix =
                        static_cast<std::size_t>(y) * EW + (x + 1) % EW;
                    const std::size_t iy =
                        (static_cast<std::size_t>((y + 1) % EH)) * EW + x;
                    h[c][i] = s[c][ix] - s[c][i];
                    vg[c][i] = s[c][iy] - s[c][i];
                }
        const double thresh = lambda / beta;
        for (std::size_t i = 0; i < n; ++i) {
            double m = 0.0;
            for (int c = 0; c < C; ++c) m += h[c][i] * h[c][i] + vg[c][i] * vg[c][i];
            if (m < thresh)
                for (int c = 0; c < C; ++c) h[c][i] = vg[c][i] = 0.0;
        }
        // Subproblem 2: (Id + beta grad^T grad) S = I + beta grad^T (h,v).
        for (int c = 0; c < C; ++c) {
            double* in = fft.real();
            for (int y = 0; y < EH; ++y)
                for (int x = 0; x < EW; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * EW + x;
                    const std::size_t px =
                        static_cast<std::size_t>(y) * EW + (x + EW - 1) % EW;
                    const std::size_t py =
                        (static_cast<std::size_t>((y + EH - 1) % EH)) * EW + x;
                    const double div = h[c][px] - h[c][i] + vg[c][py] - vg[c][i];
                    in[i] = ext[c][i] + beta * div;
                }
            fft.forward();
            fftw_complex* spec = fft.cplx();
            for (std::size_t i = 0; i < static_cast<std::size_t>(EH) * WC; ++i) {
                const double denom = 1.0 + beta * grad_otf2[i];
                spec[i][0] /= denom;
                spec[i][1] /= denom;
            }
            fft.inverse();
            const double norm = 1.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) s[c][i] = fft.real()[i] * norm;
        }
    }

    Image out(W, H, C);
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                out.at(x, y, c) =
                    static_cast<float>(s[c][static_cast<std::size_t>(y) * EW + x]);
    return clamp_unit(out, clamp_stats);
}

} // namespace smoothkit
