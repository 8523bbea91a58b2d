#include "prnu/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace prnu {

std::string_view to_string(Model m) { return m == Model::cubic ? "cubic" : "linear"; }

Model parse_model(std::string_view s) {
  if (s == "cubic" || s == "cub") return Model::cubic;
  if (s == "linear" || s == "lin") return Model::linear;
  throw Error(fmt::format("unknown distortion model '{}'", s));
}

void RadialMap::validate() const {
  if (!std::isfinite(alpha)) throw Error("radial map alpha must be finite");
  if (model == Model::linear && direction != Direction::forward && alpha == -1.0) {
    throw Error("linear inverse map is undefined for alpha = -1");
  }
}

double RadialMap::scale(double r2) const {
  if (model == Model::cubic) {
    if (direction == Direction::forward) return 1.0 + alpha * r2;
    const double series = 1.0 - alpha * r2 + 3.0 * alpha * alpha * r2 * r2;
    if (direction == Direction::inverse) return series;
    // Newton on t + a r^2 t^3 = 1, where t is the scale.
    const double c = alpha * r2;
    double t = std::clamp(series, 0.5, 1.5);
    for (int it = 0; it < 50; ++it) {
      const double d = 1.0 + 3.0 * c * t * t;
      if (d <= 0.0) return std::numeric_limits<double>::quiet_NaN();
      const double step = (t + c * t * t * t - 1.0) / d;
      t -= step;
      if (std::abs(step) < 1e-15) break;
    }
    if (1.0 + 3.0 * c * t * t <= 0.0 || std::abs(t + c * t * t * t - 1.0) > 1e-12) {
      return std::numeric_limits<double>::quiet_NaN();
    }
    return t;
  }
  return direction == Direction::forward ? 1.0 + alpha : 1.0 / (1.0 + alpha);
}

double map_radius(const RadialMap& m, double r) {
  if (r < 0) throw Error("map_radius needs r >= 0");
  m.validate();
  return r * m.scale(r * r);
}

Frame Frame::of(int rows, int cols) {
  if (rows < 1 || cols < 1) throw Error(fmt::format("invalid frame {}x{}", rows, cols));
  Frame f;
  f.rows = rows;
  f.cols = cols;
  f.center_row = (rows - 1) / 2.0;
  f.center_col = (cols - 1) / 2.0;
  f.d2 = std::hypot(double(rows), double(cols)) / 2.0;
  return f;
}

double Frame::radius(int r, int c) const { return std::hypot(r - center_row, c - center_col) / d2; }

int AnnulusPartition::index_of(double dist_px) const {
  if (dist_px < r1_px) return 0;
  const double k = 1.0 + std::floor((dist_px - r1_px) / delta_px);
  return static_cast<int>(std::min<double>(k, count() - 1));
}

AnnulusPartition partition(int width, int height, double r1_px, double delta_px) {
  if (!(delta_px > 0.0)) throw Error("annulus width must be positive");
  if (r1_px < delta_px) throw Error(fmt::format("inner disk radius {} is below annulus width {}", r1_px, delta_px));
  AnnulusPartition p;
  p.frame = Frame::of(height, width);
  p.r1_px = r1_px;
  p.delta_px = delta_px;
  const double d2 = p.frame.d2;
  p.inner_radii.push_back(0.0);
  p.widths.push_back(r1_px / d2);
  for (double inner = r1_px; inner < d2; inner += delta_px) {
    p.inner_radii.push_back(inner / d2);
    p.widths.push_back(delta_px / d2);
  }
  return p;
}

namespace {

void push_point(AnnulusLattice& l, const Frame& f, int r, int c) {
  const double dy = r - f.center_row, dx = c - f.center_col;
  l.points.push_back({r, c});
  l.dy.push_back(dy);
  l.dx.push_back(dx);
  l.r2.push_back((dy * dy + dx * dx) / (f.d2 * f.d2));
}

}  // namespace

AnnulusLattice lattice_points(const AnnulusPartition& p, int k) {
  if (k < 0 || k >= p.count()) throw Error(fmt::format("annulus index {} outside [0, {})", k, p.count()));
  AnnulusLattice l;
  l.k = k;
  const Frame& f = p.frame;
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      if (p.index_of(std::hypot(r - f.center_row, c - f.center_col)) == k) push_point(l, f, r, c);
    }
  }
  return l;
}

std::vector<AnnulusLattice> all_lattices(const AnnulusPartition& p) {
  std::vector<AnnulusLattice> out(p.count());
  for (int k = 0; k < p.count(); ++k) out[k].k = k;
  const Frame& f = p.frame;
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      push_point(out[p.index_of(std::hypot(r - f.center_row, c - f.center_col))], f, r, c);
    }
  }
  return out;
}

namespace {

inline bool sample(const Plane& src, double y, double x, double& out) {
  const int m = src.rows(), n = src.cols();
  if (!(y >= 0.0 && y <= m - 1 && x >= 0.0 && x <= n - 1)) return false;
  int i0 = static_cast<int>(y), j0 = static_cast<int>(x);
  if (i0 > m - 2) i0 = std::max(m - 2, 0);
  if (j0 > n - 2) j0 = std::max(n - 2, 0);
  const double fy = m > 1 ? y - i0 : 0.0;
  const double fx = n > 1 ? x - j0 : 0.0;
  const int i1 = m > 1 ? i0 + 1 : i0;
  const int j1 = n > 1 ? j0 + 1 : j0;
  const double a = src(i0, j0), b = src(i0, j1), c = src(i1, j0), d = src(i1, j1);
  out = (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d);
  return true;
}

}  // namespace

bool bilinear(const Plane& src, double y, double x, double& out) { return sample(src, y, x, out); }

WarpedAnnulus warp_annulus(const Plane& src, const AnnulusPartition& p, const AnnulusLattice& l, const RadialMap& m) {
  m.validate();
  if (src.rows() != p.frame.rows || src.cols() != p.frame.cols) throw Error("warp source does not match the partition frame");
  WarpedAnnulus w;
  w.k = l.k;
  w.lattice_size = l.size();
  const double cr = p.frame.center_row, cc = p.frame.center_col;
  for (std::size_t i = 0; i < l.size(); ++i) {
    const double s = m.scale(l.r2[i]);
    double v;
    if (sample(src, cr + l.dy[i] * s, cc + l.dx[i] * s, v)) {
      w.points.push_back(l.points[i]);
      w.values.push_back(v);
    }
  }
  return w;
}

WarpedAnnulus warp_annulus(const Plane& src, const AnnulusPartition& p, int k, const RadialMap& m) {
  return warp_annulus(src, p, lattice_points(p, k), m);
}

AnnulusMoments warp_moments(const Plane& reference, const Plane& moving, const AnnulusPartition& p,
                            const AnnulusLattice& l, const RadialMap& m) {
  m.validate();
  if (!reference.same_shape(moving) || moving.rows() != p.frame.rows || moving.cols() != p.frame.cols) {
    throw Error("warp_moments inputs do not match the partition frame");
  }
  AnnulusMoments out;
  const double cr = p.frame.center_row, cc = p.frame.center_col;
  for (std::size_t i = 0; i < l.size(); ++i) {
    const double s = m.scale(l.r2[i]);
    double v;
    if (sample(moving, cr + l.dy[i] * s, cc + l.dx[i] * s, v)) {
      out.phi += double(reference(l.points[i].row, l.points[i].col)) * v;
      out.energy += v * v;
      ++out.q_count;
    }
  }
  return out;
}

Plane warp_image(const Plane& src, const Frame& f, const RadialMap& m, std::vector<std::uint8_t>* valid) {
  m.validate();
  if (src.rows() != f.rows || src.cols() != f.cols) throw Error("warp source does not match the frame");
  Plane out(f.rows, f.cols);
  if (valid) valid->assign(static_cast<std::size_t>(f.rows) * f.cols, 0);
  const double inv_d2sq = 1.0 / (f.d2 * f.d2);
  for (int r = 0; r < f.rows; ++r) {
    const double dy = r - f.center_row;
    for (int c = 0; c < f.cols; ++c) {
      const double dx = c - f.center_col;
      const double s = m.scale((dy * dy + dx * dx) * inv_d2sq);
      double v;
      if (sample(src, f.center_row + dy * s, f.center_col + dx * s, v)) {
        out(r, c) = static_cast<float>(v);
        if (valid) (*valid)[static_cast<std::size_t>(r) * f.cols + c] = 1;
      }
    }
  }
  return out;
}

Rect largest_centered_rect(const std::vector<std::uint8_t>& valid, int rows, int cols) {
  if (valid.size() != static_cast<std::size_t>(rows) * cols) throw Error("validity mask size mismatch");
  constexpr int kNone = std::numeric_limits<int>::max();
  // Smallest symmetric column margin per row such that the span is valid.
  std::vector<int> margin(rows, kNone);
  const int lo0 = (cols - 1) / 2, hi0 = cols / 2;
  for (int r = 0; r < rows; ++r) {
    const auto* row = &valid[static_cast<std::size_t>(r) * cols];
    int lo = lo0, hi = hi0;
    if (!row[lo] || !row[hi]) continue;
    while (lo > 0 && row[lo - 1] && row[hi + 1]) {
      --lo;
      ++hi;
    }
    margin[r] = lo;
  }
  Rect best;
  long long best_area = 0;
  int need = 0;
  for (int top = (rows - 1) / 2; top >= 0; --top) {
    const int bottom = rows - 1 - top;
    need = std::max({need, margin[top], margin[bottom]});
    if (need == kNone) break;
    const long long area = static_cast<long long>(bottom - top + 1) * (cols - 2 * need);
    if (area > best_area) {
      best_area = area;
      best = {top, need, bottom - top + 1, cols - 2 * need};
    }
  }
  return best;
}

}  // namespace prnu
