#include "prnu/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace prnu {

void DenoiserConfig::validate() const {
  if (levels < 1) throw Error(fmt::format("denoiser levels must be >= 1, got {}", levels));
  if (!(noise_variance > 0.0)) throw Error("denoiser noise variance must be positive");
  if (window_sizes.empty()) throw Error("denoiser needs at least one window size");
  for (int w : window_sizes) {
    if (w < 3 || w % 2 == 0) throw Error(fmt::format("window size {} must be odd and >= 3", w));
  }
}

namespace wavelet {

const std::vector<double>& daubechies8() {
  static const std::vector<double> h{
      0.2303778133088964,  0.7148465705529154, 0.6308807679298587,  -0.0279837694168599,
      -0.1870348117190931, 0.0308413818355607, 0.0328830116668852, -0.0105974017850690};
  return h;
}

namespace {
// Quadrature mirror high-pass: g[k] = (-1)^k h[L-1-k].
const std::vector<double>& highpass() {
  static const std::vector<double> g = [] {
    const auto& h = daubechies8();
    std::vector<double> out(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
      out[k] = (k % 2 ? -1.0 : 1.0) * h[h.size() - 1 - k];
    }
    return out;
  }();
  return g;
}
}  // namespace

void analyze_1d(const double* in, double* out, int n, int stride_in, int stride_out) {
  const auto& h = daubechies8();
  const auto& g = highpass();
  const int len = 2 * n;
  for (int i = 0; i < n; ++i) {
    double a = 0, d = 0;
    for (std::size_t k = 0; k < h.size(); ++k) {
      const double x = in[static_cast<std::ptrdiff_t>((2 * i + static_cast<int>(k)) % len) * stride_in];
      a += h[k] * x;
      d += g[k] * x;
    }
    out[static_cast<std::ptrdiff_t>(i) * stride_out] = a;
    out[static_cast<std::ptrdiff_t>(i + n) * stride_out] = d;
  }
}

void synthesize_1d(const double* in, double* out, int n, int stride_in, int stride_out) {
  const auto& h = daubechies8();
  const auto& g = highpass();
  const int len = 2 * n;
  for (int j = 0; j < len; ++j) out[static_cast<std::ptrdiff_t>(j) * stride_out] = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = in[static_cast<std::ptrdiff_t>(i) * stride_in];
    const double d = in[static_cast<std::ptrdiff_t>(i + n) * stride_in];
    for (std::size_t k = 0; k < h.size(); ++k) {
      out[static_cast<std::ptrdiff_t>((2 * i + static_cast<int>(k)) % len) * stride_out] += h[k] * a + g[k] * d;
    }
  }
}

}  // namespace wavelet

namespace {

int reflect(int i, int n) {
  // Half-sample symmetric extension: ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

struct Buffer {
  int rows, cols;
  std::vector<double> v;
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
};

void forward_level(Buffer& b, int h, int w, std::vector<double>& tmp) {
  tmp.resize(std::max(h, w));
  for (int r = 0; r < h; ++r) {
    wavelet::analyze_1d(&b.at(r, 0), tmp.data(), w / 2, 1, 1);
    std::copy(tmp.begin(), tmp.begin() + w, &b.at(r, 0));
  }
  for (int c = 0; c < w; ++c) {
    wavelet::analyze_1d(&b.at(0, c), tmp.data(), h / 2, b.cols, 1);
    for (int r = 0; r < h; ++r) b.at(r, c) = tmp[r];
  }
}

void inverse_level(Buffer& b, int h, int w, std::vector<double>& tmp) {
  tmp.resize(std::max(h, w));
  for (int c = 0; c < w; ++c) {
    wavelet::synthesize_1d(&b.at(0, c), tmp.data(), h / 2, b.cols, 1);
    for (int r = 0; r < h; ++r) b.at(r, c) = tmp[r];
  }
  for (int r = 0; r < h; ++r) {
    wavelet::synthesize_1d(&b.at(r, 0), tmp.data(), w / 2, 1, 1);
    std::copy(tmp.begin(), tmp.begin() + w, &b.at(r, 0));
  }
}

// Shrinks one detail subband in place using the minimum local variance rule.
void shrink_subband(Buffer& b, int r0, int c0, int h, int w, const DenoiserConfig& cfg) {
  // Integral image of squared coefficients.
  std::vector<double> integ(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
  auto I = [&](int r, int c) -> double& { return integ[static_cast<std::size_t>(r) * (w + 1) + c]; };
  for (int r = 0; r < h; ++r) {
    double row = 0;
    for (int c = 0; c < w; ++c) {
      const double x = b.at(r0 + r, c0 + c);
      row += x * x;
      I(r + 1, c + 1) = I(r, c + 1) + row;
    }
  }
  const double sigma0 = cfg.noise_variance;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double est = std::numeric_limits<double>::infinity();
      for (int win : cfg.window_sizes) {
        const int half = win / 2;
        const int ra = std::max(0, r - half), rb = std::min(h, r + half + 1);
        const int ca = std::max(0, c - half), cb = std::min(w, c + half + 1);
        const double sum = I(rb, cb) - I(ra, cb) - I(rb, ca) + I(ra, ca);
        const double local = sum / double((rb - ra) * (cb - ca));
        est = std::min(est, std::max(0.0, local - sigma0));
      }
      b.at(r0 + r, c0 + c) *= est / (est + sigma0);
    }
  }
}

bool is_constant(const Plane& p) {
  auto v = p.values();
  return std::all_of(v.begin(), v.end(), [&](float x) { return x == v.front(); });
}

}  // namespace

Plane denoise(const Plane& image, const DenoiserConfig& cfg) {
  cfg.validate();
  if (image.empty()) throw Error("cannot denoise an empty plane");
  if (is_constant(image)) return image;

  const int block = 1 << cfg.levels;
  const int m = image.rows(), n = image.cols();
  Buffer b{(m + block - 1) / block * block, (n + block - 1) / block * block, {}};
  b.v.resize(static_cast<std::size_t>(b.rows) * b.cols);
  for (int r = 0; r < b.rows; ++r) {
    const int sr = reflect(r, m);
    for (int c = 0; c < b.cols; ++c) b.at(r, c) = image(sr, reflect(c, n));
  }

  std::vector<double> tmp;
  int h = b.rows, w = b.cols;
  for (int l = 0; l < cfg.levels; ++l) {
    forward_level(b, h, w, tmp);
    const int hh = h / 2, hw = w / 2;
    shrink_subband(b, 0, hw, hh, hw, cfg);
    shrink_subband(b, hh, 0, hh, hw, cfg);
    shrink_subband(b, hh, hw, hh, hw, cfg);
    h = hh;
    w = hw;
  }
  for (int l = cfg.levels - 1; l >= 0; --l) {
    h *= 2;
    w *= 2;
    inverse_level(b, h, w, tmp);
  }

  Plane out(m, n);
  out.set_origin(image.origin().row, image.origin().col);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) out(r, c) = static_cast<float>(b.at(r, c));
  return out;
}

Plane residual(const Plane& image, const DenoiserConfig& cfg) {
  Plane smooth = denoise(image, cfg);
  Plane out(image.rows(), image.cols());
  out.set_origin(image.origin().row, image.origin().col);
  auto in = image.values();
  auto s = smooth.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = static_cast<float>(double(in[i]) - double(s[i]));
  return out;
}

}  // namespace prnu
