#include "prnu/plane.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace prnu {

Rect intersect(const Rect& a, const Rect& b) {
  const int r0 = std::max(a.row0, b.row0);
  const int c0 = std::max(a.col0, b.col0);
  const int r1 = std::min(a.row0 + a.rows, b.row0 + b.rows);
  const int c1 = std::min(a.col0 + a.cols, b.col0 + b.cols);
  return {r0, c0, std::max(0, r1 - r0), std::max(0, c1 - c0)};
}

Plane::Plane(int rows, int cols, float fill) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) {
    throw Error(fmt::format("plane dimensions must be positive, got {}x{}", rows, cols));
  }
  values_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

Plane::Plane(int rows, int cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows < 1 || cols < 1) {
    throw Error(fmt::format("plane dimensions must be positive, got {}x{}", rows, cols));
  }
  if (values_.size() != static_cast<std::size_t>(rows) * cols) {
    throw Error("plane value count does not match dimensions");
  }
}

void Plane::set_mask(std::vector<std::uint8_t> mask) {
  if (mask.size() != values_.size()) throw Error("mask size does not match plane");
  mask_ = std::move(mask);
}

std::size_t Plane::domain_size() const {
  if (mask_.empty()) return values_.size();
  return static_cast<std::size_t>(std::count_if(mask_.begin(), mask_.end(), [](auto m) { return m != 0; }));
}

Plane to_grayscale(const Plane& red, const Plane& green, const Plane& blue) {
  if (!red.same_shape(green) || !red.same_shape(blue)) {
    throw Error("color channels have mismatched sizes");
  }
  Plane out(red.rows(), red.cols());
  auto r = red.values();
  auto g = green.values();
  auto b = blue.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = static_cast<float>(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i]);
  }
  return out;
}

namespace {

// Visits every lattice point in dom(x) ∩ dom(y) as (local index in x, local index in y).
template <typename F>
std::size_t for_each_common(const Plane& x, const Plane& y, F&& f) {
  const Rect common = intersect(x.bounds(), y.bounds());
  std::size_t n = 0;
  for (int r = common.row0; r < common.row0 + common.rows; ++r) {
    const int xr = r - x.origin().row;
    const int yr = r - y.origin().row;
    for (int c = common.col0; c < common.col0 + common.cols; ++c) {
      const int xc = c - x.origin().col;
      const int yc = c - y.origin().col;
      if (!x.in_domain_local(xr, xc) || !y.in_domain_local(yr, yc)) continue;
      f(x(xr, xc), y(yr, yc));
      ++n;
    }
  }
  return n;
}

}  // namespace

double inner_product(const Plane& x, const Plane& y) {
  double acc = 0.0;
  const auto n = for_each_common(x, y, [&](float a, float b) { acc += double(a) * double(b); });
  if (n == 0) throw Error("inner product over an empty domain intersection");
  return acc;
}

double ncc(const Plane& x, const Plane& y) {
  double sx = 0, sy = 0;
  const auto n = for_each_common(x, y, [&](float a, float b) {
    sx += a;
    sy += b;
  });
  if (n == 0) throw Error("ncc over an empty domain intersection");
  const double mx = sx / double(n);
  const double my = sy / double(n);
  double sxy = 0, sxx = 0, syy = 0;
  for_each_common(x, y, [&](float a, float b) {
    const double da = a - mx;
    const double db = b - my;
    sxy += da * db;
    sxx += da * da;
    syy += db * db;
  });
  if (sxx <= 0.0 || syy <= 0.0) throw UndefinedCorrelation("ncc of a constant signal is undefined");
  return sxy / std::sqrt(sxx * syy);
}

Plane cyclic_shift(const Plane& x, ShiftVector s) {
  if (x.has_mask()) throw Error("cyclic shift requires a full rectangular domain");
  const int m = x.rows();
  const int n = x.cols();
  const int s1 = ((s.s1 % m) + m) % m;
  const int s2 = ((s.s2 % n) + n) % n;
  Plane out(m, n);
  out.set_origin(x.origin().row, x.origin().col);
  for (int i = 0; i < m; ++i) {
    const int si = (i + s1) % m;
    for (int j = 0; j < n; ++j) out(i, j) = x(si, (j + s2) % n);
  }
  return out;
}

double mean(const Plane& x) {
  double acc = 0;
  std::size_t n = 0;
  for (int r = 0; r < x.rows(); ++r)
    for (int c = 0; c < x.cols(); ++c)
      if (x.in_domain_local(r, c)) {
        acc += x(r, c);
        ++n;
      }
  return n ? acc / double(n) : 0.0;
}

double energy(const Plane& x) {
  double acc = 0;
  for (int r = 0; r < x.rows(); ++r)
    for (int c = 0; c < x.cols(); ++c)
      if (x.in_domain_local(r, c)) acc += double(x(r, c)) * x(r, c);
  return acc;
}

Plane zero_mean(const Plane& x) {
  Plane out = x;
  const double m = mean(x);
  double sum = 0.0;
  float* smallest = nullptr;
  for (int r = 0; r < x.rows(); ++r)
    for (int c = 0; c < x.cols(); ++c)
      if (x.in_domain_local(r, c)) {
        float& v = out(r, c);
        v = static_cast<float>(x(r, c) - m);
        sum += v;
        if (!smallest || std::abs(v) < std::abs(*smallest)) smallest = &v;
      }
  // Float rounding leaves a residual sum; the smallest entry absorbs it.
  if (smallest) *smallest = static_cast<float>(double(*smallest) - sum);
  return out;
}

Plane crop(const Plane& x, const Rect& rect) {
  if (rect.empty() || rect.row0 < 0 || rect.col0 < 0 || rect.row0 + rect.rows > x.rows() ||
      rect.col0 + rect.cols > x.cols()) {
    throw Error("crop rectangle outside plane");
  }
  Plane out(rect.rows, rect.cols);
  for (int r = 0; r < rect.rows; ++r) {
    const float* src = x.values().data() + static_cast<std::size_t>(rect.row0 + r) * x.cols() + rect.col0;
    std::copy(src, src + rect.cols, &out(r, 0));
  }
  if (x.has_mask()) {
    std::vector<std::uint8_t> m(out.size());
    for (int r = 0; r < rect.rows; ++r)
      for (int c = 0; c < rect.cols; ++c)
        m[static_cast<std::size_t>(r) * rect.cols + c] = x.in_domain_local(rect.row0 + r, rect.col0 + c);
    out.set_mask(std::move(m));
  }
  return out;
}

Plane center_crop(const Plane& x, int rows, int cols) {
  if (rows > x.rows() || cols > x.cols()) throw Error("center crop larger than plane");
  if (rows == x.rows() && cols == x.cols()) return x;
  return crop(x, {(x.rows() - rows) / 2, (x.cols() - cols) / 2, rows, cols});
}

}  // namespace prnu
