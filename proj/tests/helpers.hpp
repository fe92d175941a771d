#pragma once

// Shared test utilities: seeded image generators, brute-force reference
// implementations, a tiny dense eigensolver, and temp-dir plumbing.  The
// reference code here is written straight from the definitions and must not
// call the library routines it checks.

#include <smoothkit/image.hpp>
#include <smoothkit/rng.hpp>

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace testkit {

using smoothkit::Image;

// ---------------------------------------------------------------------------
// deterministic generators
// ---------------------------------------------------------------------------

inline Image random_image(int w, int h, int c, std::uint64_t seed,
                          float lo = 0.0f, float hi = 1.0f) {
  Image img(w, h, c);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    double u = smoothkit::uniform01(seed, static_cast<std::uint64_t>(i));
    img.data[i] = static_cast<float>(lo + (hi - lo) * u);
  }
  return img;
}

inline Image constant_image(int w, int h, int c, float value) {
  return Image(w, h, c, value);
}

// Piecewise-smooth color image: a soft gradient plus a few flat shapes.
inline Image piecewise_smooth_image(int w, int h, std::uint64_t seed) {
  Image img(w, h, 3);
  std::uint64_t k = 0;
  auto draw = [&] { return smoothkit::uniform01(seed, k++); };
  double base[3] = {0.25 + 0.5 * draw(), 0.25 + 0.5 * draw(),
                    0.25 + 0.5 * draw()};
  double gx[3], gy[3];
  for (int c = 0; c < 3; ++c) {
    gx[c] = 0.3 * (draw() - 0.5);
    gy[c] = 0.3 * (draw() - 0.5);
  }
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double v = base[c] + gx[c] * (double(x) / w) + gy[c] * (double(y) / h);
        img.at(x, y, c) = static_cast<float>(std::clamp(v, 0.05, 0.95));
      }
  int shapes = 2 + static_cast<int>(smoothkit::uniform_int(seed, k++, 2));
  for (int s = 0; s < shapes; ++s) {
    int cx = static_cast<int>(smoothkit::uniform_int(seed, k++, w));
    int cy = static_cast<int>(smoothkit::uniform_int(seed, k++, h));
    int r = 3 + static_cast<int>(smoothkit::uniform_int(seed, k++, w / 3));
    float col[3];
    for (int c = 0; c < 3; ++c)
      col[c] = static_cast<float>(0.1 + 0.8 * draw());
    bool disc = smoothkit::uniform_int(seed, k++, 2) == 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        bool inside = disc ? (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r
                           : std::abs(x - cx) <= r && std::abs(y - cy) <= r;
        if (inside)
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
      }
  }
  return img;
}

// Gray zero-ish-mean texture patterns used as blend layers.
inline Image procedural_texture(int w, int h, int kind, std::uint64_t seed,
                                float amplitude = 0.15f) {
  Image img(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      switch (kind % 5) {
        case 0:  // checker
          v = ((x / 2 + y / 2) % 2 == 0) ? 1.0 : -1.0;
          break;
        case 1:  // diagonal stripes
          v = std::sin(2.0 * 3.14159265358979323846 * (x + y) / 6.0);
          break;
        case 2:  // noise
          v = 2.0 * smoothkit::uniform01(seed, std::uint64_t(y) * w + x) - 1.0;
          break;
        case 3:  // dots
          v = (x % 4 < 2 && y % 4 < 2) ? 1.0 : -0.4;
          break;
        default:  // crossed waves
          v = 0.5 * (std::sin(2.0 * 3.14159265358979323846 * x / 5.0) +
                     std::sin(2.0 * 3.14159265358979323846 * y / 7.0));
          break;
      }
      img.at(x, y, 0) = static_cast<float>(0.5 + amplitude * v);
    }
  return img;
}

// ---------------------------------------------------------------------------
// brute-force references (straight from the definitions)
// ---------------------------------------------------------------------------

inline int clampi(int i, int n) { return std::min(std::max(i, 0), n - 1); }

inline double gray_ref(const Image& img, int x, int y) {
  if (img.channels == 1) return img.at(x, y, 0);
  return 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
         0.114 * img.at(x, y, 2);
}

inline Image box_ref(const Image& img, int radius) {
  Image out(img.width, img.height, img.channels);
  double inv = 1.0 / ((2.0 * radius + 1.0) * (2.0 * radius + 1.0));
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double acc = 0.0;
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx)
            acc += img.at(clampi(x + dx, img.width), clampi(y + dy, img.height),
                          c);
        out.at(x, y, c) = static_cast<float>(acc * inv);
      }
  return out;
}

inline std::vector<double> gaussian_kernel_ref(double sigma) {
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

inline Image gaussian_ref(const Image& img, double sigma) {
  auto k = gaussian_kernel_ref(sigma);
  int radius = static_cast<int>(k.size()) / 2;
  Image out(img.width, img.height, img.channels);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double acc = 0.0;
        for (int dy = -radius; dy <= radius; ++dy) {
          double row = 0.0;
          for (int dx = -radius; dx <= radius; ++dx)
            row += k[dx + radius] * img.at(clampi(x + dx, img.width),
                                           clampi(y + dy, img.height), c);
          acc += k[dy + radius] * row;
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
  return out;
}

// Direct-loop joint bilateral with replicate-clamped sampling: boundary
// samples repeat, matching the documented convention.
inline Image joint_bilateral_ref(const Image& img, const Image& guide,
                                 double sigma_s, double sigma_r) {
  int radius = static_cast<int>(std::ceil(3.0 * sigma_s));
  Image out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double wsum = 0.0;
      std::vector<double> acc(img.channels, 0.0);
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          int nx = clampi(x + dx, img.width);
          int ny = clampi(y + dy, img.height);
          double dist2 = 0.0;
          for (int c = 0; c < guide.channels; ++c) {
            double d = double(guide.at(nx, ny, c)) - double(guide.at(x, y, c));
            dist2 += d * d;
          }
          double w =
              std::exp(-0.5 * (double(dx) * dx + double(dy) * dy) /
                       (sigma_s * sigma_s)) *
              std::exp(-0.5 * dist2 / (sigma_r * sigma_r));
          wsum += w;
          for (int c = 0; c < img.channels; ++c)
            acc[c] += w * img.at(nx, ny, c);
        }
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = static_cast<float>(acc[c] / wsum);
    }
  return out;
}

// Per-window linear regression reference for the guided filter, including the
// replicate-clamped window statistics and the final coefficient averaging.
inline Image guided_ref(const Image& img, const Image& guide, int radius,
                        double eps) {
  int w = img.width, h = img.height;
  int n = (2 * radius + 1) * (2 * radius + 1);
  Image out(w, h, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    std::vector<double> a(std::size_t(w) * h), b(std::size_t(w) * h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double sg = 0.0, sp = 0.0, sgg = 0.0, sgp = 0.0;
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx) {
            double g = guide.at(clampi(x + dx, w), clampi(y + dy, h), 0);
            double p = img.at(clampi(x + dx, w), clampi(y + dy, h), c);
            sg += g;
            sp += p;
            sgg += g * g;
            sgp += g * p;
          }
        double mg = sg / n, mp = sp / n;
        double var = sgg / n - mg * mg;
        double cov = sgp / n - mg * mp;
        a[std::size_t(y) * w + x] = cov / (var + eps);
        b[std::size_t(y) * w + x] = mp - a[std::size_t(y) * w + x] * mg;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double sa = 0.0, sb = 0.0;
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx) {
            std::size_t idx =
                std::size_t(clampi(y + dy, h)) * w + clampi(x + dx, w);
            sa += a[idx];
            sb += b[idx];
          }
        out.at(x, y, c) =
            static_cast<float>((sa / n) * guide.at(x, y, 0) + sb / n);
      }
  }
  return out;
}

// From-scratch structural similarity: direct 2-D weighted window sums with an
// 11x11 Gaussian (sigma 1.5) and replicate clamping.  Color inputs reduce to
// grayscale with the weights rounded through float storage, matching the
// documented conversion contract.
inline double ssim_ref(const Image& a, const Image& b, double c1 = 1e-4,
                       double c2 = 9e-4, double c3 = 4.5e-4) {
  const int W = a.width, H = a.height;
  auto gray_at = [](const Image& img, int x, int y) {
    if (img.channels == 1) return static_cast<double>(img.at(x, y, 0));
    return static_cast<double>(static_cast<float>(
        0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
        0.114 * img.at(x, y, 2)));
  };
  const auto k = gaussian_kernel_ref(1.5);
  const int radius = int(k.size()) / 2;
  double acc = 0.0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          const double w = k[dy + radius] * k[dx + radius];
          const double u = gray_at(a, clampi(x + dx, W), clampi(y + dy, H));
          const double v = gray_at(b, clampi(x + dx, W), clampi(y + dy, H));
          sx += w * u;
          sy += w * v;
          sxx += w * u * u;
          syy += w * v * v;
          sxy += w * u * v;
        }
      const double vx = std::max(0.0, sxx - sx * sx);
      const double vy = std::max(0.0, syy - sy * sy);
      const double cov = sxy - sx * sy;
      const double sdx = std::sqrt(vx), sdy = std::sqrt(vy);
      acc += ((2.0 * sx * sy + c1) / (sx * sx + sy * sy + c1)) *
             ((2.0 * sdx * sdy + c2) / (vx + vy + c2)) *
             ((cov + c3) / (sdx * sdy + c3));
    }
  return acc / (double(W) * H);
}

// ---------------------------------------------------------------------------
// small dense symmetric eigensolver (cyclic Jacobi) for PSD checks
// ---------------------------------------------------------------------------

inline double min_eigenvalue(std::vector<double> m, int n) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += m[i * n + j] * m[i * n + j];
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        double apq = m[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        double theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double cos_r = 1.0 / std::sqrt(t * t + 1.0);
        double sin_r = t * cos_r;
        for (int k = 0; k < n; ++k) {
          double akp = m[k * n + p], akq = m[k * n + q];
          m[k * n + p] = cos_r * akp - sin_r * akq;
          m[k * n + q] = sin_r * akp + cos_r * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = m[p * n + k], aqk = m[q * n + k];
          m[p * n + k] = cos_r * apk - sin_r * aqk;
          m[q * n + k] = sin_r * apk + cos_r * aqk;
        }
      }
  }
  double lo = m[0];
  for (int i = 1; i < n; ++i) lo = std::min(lo, m[i * n + i]);
  return lo;
}

// ---------------------------------------------------------------------------
// filesystem helpers
// ---------------------------------------------------------------------------

class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    static std::atomic<unsigned> counter{0};
    for (int attempt = 0; attempt < 100; ++attempt) {
      auto candidate =
          base / ("smoothkit-test-" + std::to_string(::getpid()) + "-" +
                  std::to_string(counter.fetch_add(1)));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create temp directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testkit
