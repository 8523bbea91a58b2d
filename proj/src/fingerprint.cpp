#include "prnu/fingerprint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "prnu/fft.hpp"

namespace prnu {

double mean_square(const Plane& p) {
  const auto n = p.domain_size();
  return n ? energy(p) / double(n) : 0.0;
}

Fingerprint::Fingerprint(Plane plane, FingerprintMeta meta)
    : plane_(std::move(plane)), sigma2_(mean_square(plane_)), meta_(std::move(meta)) {}

Fingerprint::Fingerprint(Plane plane, double sigma2, FingerprintMeta meta)
    : plane_(std::move(plane)), sigma2_(sigma2), meta_(std::move(meta)) {
  if (!(sigma2_ >= 0.0)) throw Error("fingerprint sigma2 must be non-negative");
}

Plane zero_mean_rows_cols(const Plane& k) {
  const int m = k.rows(), n = k.cols();
  std::vector<double> v(k.values().begin(), k.values().end());
  for (int c = 0; c < n; ++c) {
    double s = 0;
    for (int r = 0; r < m; ++r) s += v[static_cast<std::size_t>(r) * n + c];
    s /= m;
    for (int r = 0; r < m; ++r) v[static_cast<std::size_t>(r) * n + c] -= s;
  }
  for (int r = 0; r < m; ++r) {
    double* row = &v[static_cast<std::size_t>(r) * n];
    double s = 0;
    for (int c = 0; c < n; ++c) s += row[c];
    s /= n;
    for (int c = 0; c < n; ++c) row[c] -= s;
  }
  Plane out(m, n);
  out.set_origin(k.origin().row, k.origin().col);
  std::transform(v.begin(), v.end(), out.values().begin(), [](double x) { return static_cast<float>(x); });
  return out;
}

Plane wiener_dft(const Plane& k) {
  const int m = k.rows(), n = k.cols();
  Fft2d fft(m, n);
  std::vector<double> real(k.values().begin(), k.values().end());
  auto half = fft.forward(real);

  // Expand the Hermitian half-spectrum to full magnitudes.
  const int hc = fft.spectrum_cols();
  const double norm = 1.0 / std::sqrt(double(m) * n);
  std::vector<double> mag(static_cast<std::size_t>(m) * n);
  for (int u = 0; u < m; ++u) {
    for (int v = 0; v < n; ++v) {
      std::complex<double> z;
      if (v < hc) {
        z = half[static_cast<std::size_t>(u) * hc + v];
      } else {
        z = std::conj(half[static_cast<std::size_t>((m - u) % m) * hc + (n - v)]);
      }
      mag[static_cast<std::size_t>(u) * n + v] = std::abs(z) * norm;
    }
  }

  // Local energy over a cyclic 3x3 window.
  std::vector<double> local(mag.size());
  for (int u = 0; u < m; ++u) {
    for (int v = 0; v < n; ++v) {
      double s = 0;
      for (int du = -1; du <= 1; ++du)
        for (int dv = -1; dv <= 1; ++dv) {
          const double x = mag[static_cast<std::size_t>((u + du + m) % m) * n + (v + dv + n) % n];
          s += x * x;
        }
      local[static_cast<std::size_t>(u) * n + v] = s / 9.0;
    }
  }
  std::vector<double> sorted = local;
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double noise = *mid;
  if (!(noise > 0.0)) return k;

  for (int u = 0; u < m; ++u) {
    for (int v = 0; v < hc; ++v) {
      const double s = std::max(0.0, local[static_cast<std::size_t>(u) * n + v] - noise);
      half[static_cast<std::size_t>(u) * hc + v] *= noise / (s + noise);
    }
  }
  auto back = fft.inverse(half);
  Plane out(m, n);
  out.set_origin(k.origin().row, k.origin().col);
  const double scale = 1.0 / (double(m) * n);
  std::transform(back.begin(), back.end(), out.values().begin(),
                 [scale](double x) { return static_cast<float>(x * scale); });
  return out;
}

Fingerprint estimate_fingerprint_from_residuals(const std::vector<Plane>& images,
                                                const std::vector<Plane>& residuals, std::string label) {
  if (images.empty()) throw Error("fingerprint estimation needs at least one image");
  if (images.size() != residuals.size()) throw Error("one residual per image is required");
  const int m = images.front().rows(), n = images.front().cols();
  const std::size_t count = static_cast<std::size_t>(m) * n;
  std::vector<double> num(count, 0.0), den(count, 0.0);
  for (std::size_t l = 0; l < images.size(); ++l) {
    if (images[l].rows() != m || images[l].cols() != n || !images[l].same_shape(residuals[l])) {
      throw Error(fmt::format("image {} is {}x{}, expected {}x{}", l, images[l].rows(), images[l].cols(), m, n));
    }
    auto iv = images[l].values();
    auto wv = residuals[l].values();
    for (std::size_t i = 0; i < count; ++i) {
      num[i] += double(iv[i]) * wv[i];
      den[i] += double(iv[i]) * iv[i];
    }
  }
  FingerprintMeta meta;
  meta.source_label = std::move(label);
  meta.images_used = static_cast<int>(images.size());
  Plane k(m, n);
  auto kv = k.values();
  for (std::size_t i = 0; i < count; ++i) {
    if (den[i] == 0.0) {
      kv[i] = 0.0f;
      ++meta.zero_denominator_pixels;
    } else {
      kv[i] = static_cast<float>(num[i] / den[i]);
    }
  }
  k = zero_mean_rows_cols(k);
  meta.rows_cols_zero_meaned = true;
  k = wiener_dft(k);
  meta.wiener_filtered = true;
  return Fingerprint(std::move(k), std::move(meta));
}

Fingerprint estimate_fingerprint(const std::vector<Plane>& images, const DenoiserConfig& cfg, std::string label) {
  std::vector<Plane> residuals;
  residuals.reserve(images.size());
  for (const auto& img : images) {
    if (!img.same_shape(images.front())) throw Error("fingerprint images must share dimensions");
    residuals.push_back(residual(img, cfg));
  }
  return estimate_fingerprint_from_residuals(images, residuals, std::move(label));
}

namespace {

constexpr std::array<char, 8> kMagic{'P', 'R', 'N', 'U', 'F', 'P', '0', '1'};

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= U(p[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_fingerprint(const Fingerprint& fp, const std::filesystem::path& path) {
  const auto& p = fp.plane();
  std::vector<unsigned char> buf;
  buf.reserve(24 + p.size() * 4);
  buf.insert(buf.end(), kMagic.begin(), kMagic.end());
  put_le(buf, static_cast<std::uint32_t>(p.cols()));
  put_le(buf, static_cast<std::uint32_t>(p.rows()));
  put_le(buf, fp.sigma2());
  for (float v : p.values()) put_le(buf, v);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(fmt::format("short write to '{}'", path.string()));
}

Fingerprint read_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open fingerprint '{}'", path.string()));
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), buf.begin())) {
    throw Error(fmt::format("'{}' is not a PRNUFP01 fingerprint", path.string()));
  }
  if (buf.size() < 24) throw Error(fmt::format("'{}': truncated fingerprint header", path.string()));
  const auto width = get_le<std::uint32_t>(&buf[8]);
  const auto height = get_le<std::uint32_t>(&buf[12]);
  const auto sigma2 = get_le<double>(&buf[16]);
  const std::uint64_t count = std::uint64_t(width) * height;
  if (width == 0 || height == 0 || buf.size() != 24 + count * 4) {
    throw Error(fmt::format("'{}': fingerprint payload size mismatch", path.string()));
  }
  std::vector<float> values(count);
  for (std::uint64_t i = 0; i < count; ++i) values[i] = get_le<float>(&buf[24 + 4 * i]);
  FingerprintMeta meta;
  meta.source_label = path.filename().string();
  return Fingerprint(Plane(static_cast<int>(height), static_cast<int>(width), std::move(values)), sigma2, meta);
}

}  // namespace prnu
