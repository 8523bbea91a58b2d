#include "prnu/pce.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "prnu/fft.hpp"

namespace prnu {
namespace {

// Zero-mean over the domain, zero outside it, as a dense double buffer.
std::vector<double> centered(const Plane& x) {
  const double mu = mean(x);
  std::vector<double> out(x.size(), 0.0);
  auto v = x.values();
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < x.cols(); ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * x.cols() + c;
      if (x.in_domain_local(r, c)) out[i] = double(v[i]) - mu;
    }
  }
  return out;
}

std::vector<double> correlate(const std::vector<double>& k, const std::vector<double>& w, int rows, int cols) {
  Fft2d fft(rows, cols);
  auto fk = fft.forward(k);
  auto fw = fft.forward(w);
  for (std::size_t i = 0; i < fk.size(); ++i) fk[i] = std::conj(fk[i]) * fw[i];
  auto c = fft.inverse(fk);
  const double scale = 1.0 / (double(rows) * cols);
  for (auto& x : c) x *= scale;
  return c;
}

}  // namespace

std::vector<double> cross_correlation(const Plane& k, const Plane& w) {
  if (!k.same_shape(w)) throw Error("cross_correlation needs equally sized planes");
  std::vector<double> kv(k.values().begin(), k.values().end());
  std::vector<double> wv(w.values().begin(), w.values().end());
  return correlate(kv, wv, k.rows(), k.cols());
}

double pce(const Plane& k_in, const Plane& w_in, const ExclusionSpec& excl, const std::optional<Rect>& domain) {
  if (excl.half_width < 0) throw Error("exclusion half width must be >= 0");
  const int rows = std::min(k_in.rows(), w_in.rows());
  const int cols = std::min(k_in.cols(), w_in.cols());
  Plane k = k_in.rows() == rows && k_in.cols() == cols ? k_in : center_crop(k_in, rows, cols);
  Plane w = w_in.rows() == rows && w_in.cols() == cols ? w_in : center_crop(w_in, rows, cols);
  if (domain) {
    k = crop(k, *domain);
    w = crop(w, *domain);
  }
  const int m = k.rows(), n = k.cols();
  if (m < 1 || n < 1) throw Error("pce on an empty domain");

  auto c = correlate(centered(k), centered(w), m, n);

  const int h = excl.half_width;
  auto excluded = [&](int s, int size) {
    // Cyclic distance to zero.
    const int d = std::min(s, size - s);
    return d <= h;
  };
  double sum = 0.0;
  std::size_t count = 0;
  for (int s1 = 0; s1 < m; ++s1) {
    const bool ex1 = excluded(s1, m);
    for (int s2 = 0; s2 < n; ++s2) {
      if (ex1 && excluded(s2, n)) continue;
      const double x = c[static_cast<std::size_t>(s1) * n + s2];
      sum += x * x;
      ++count;
    }
  }
  if (count == 0 || !(sum > 0.0)) {
    throw UndefinedCorrelation(fmt::format("pce denominator vanishes on a {}x{} domain", m, n));
  }
  return ssq(c[0]) / (sum / double(count));
}

}  // namespace prnu
