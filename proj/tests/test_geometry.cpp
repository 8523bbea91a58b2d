#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "prnu/geometry.hpp"
#include "support.hpp"

using namespace prnu;
using testsupport::Gen;

namespace {

double fwd_inv(double a, double r) {
  const double rp = map_radius({Model::cubic, a, Direction::forward}, r);
  return map_radius({Model::cubic, a, Direction::inverse}, rp);
}

// Plane whose value is an affine function of the pixel position.
Plane ramp(int rows, int cols, double a, double b, double c) {
  Plane p(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int col = 0; col < cols; ++col) p(r, col) = float(a + b * r + c * col);
  return p;
}

}  // namespace

TEST_CASE("map_radius examples") {
  for (auto model : {Model::cubic, Model::linear})
    for (auto dir : {Direction::forward, Direction::inverse})
      for (double r : {0.0, 0.3, 1.0, 1.4}) CHECK(map_radius({model, 0.0, dir}, r) == doctest::Approx(r));
  CHECK(map_radius({Model::cubic, 0.1, Direction::forward}, 1.0) == doctest::Approx(1.1));
  CHECK(map_radius({Model::linear, 0.25, Direction::forward}, 2.0) == doctest::Approx(2.5));
  CHECK(map_radius({Model::linear, 0.25, Direction::inverse}, 2.5) == doctest::Approx(2.0));
  CHECK(map_radius({Model::cubic, 0.1, Direction::inverse}, 0.5) ==
        doctest::Approx(0.5 * (1 - 0.1 * 0.25 + 3 * 0.01 * 0.0625)));
  CHECK_THROWS_AS(map_radius({Model::linear, -1.0, Direction::inverse}, 0.5), Error);
  CHECK_NOTHROW(map_radius({Model::linear, -1.0, Direction::forward}, 0.5));
}

TEST_CASE("model names") {
  CHECK(parse_model("cubic") == Model::cubic);
  CHECK(parse_model("lin") == Model::linear);
  CHECK(to_string(Model::linear) == "linear");
  CHECK_THROWS_AS(parse_model("quartic"), Error);
}

TEST_CASE("cubic inverse error follows the series remainder") {
  // r = r'(1 - a r'^2 + 3 a^2 r'^4) - 12 a^3 r'^7 + O(a^4)
  Gen g(1);
  for (int t = 0; t < 200; ++t) {
    const double a = g.uniform(-0.05, 0.05), r = g.uniform(0, 1);
    const double rp = r * (1 + a * r * r);
    const double predicted = 12 * a * a * a * std::pow(rp, 7);
    CHECK(std::abs((fwd_inv(a, r) - r) - predicted) <= 80 * std::pow(std::abs(a), 4) + 1e-15);
  }
}

TEST_CASE("property: exact inverse undoes the forward map") {
  Gen g(31);
  for (int t = 0; t < 2000; ++t) {
    const double a = g.uniform(-0.3, 0.5), r = g.uniform(0.0, 1.0);
    const double rp = map_radius({Model::cubic, a, Direction::forward}, r);
    if (a < 0 && 1 + 3 * a * r * r <= 0) continue;
    CHECK(std::abs(map_radius({Model::cubic, a, Direction::exact_inverse}, rp) - r) <= 1e-12);
    const double lin = map_radius({Model::linear, a, Direction::forward}, r);
    CHECK(std::abs(map_radius({Model::linear, a, Direction::exact_inverse}, lin) - r) <= 1e-12);
  }
  // Strong barrel has no preimage beyond its fold radius.
  CHECK(std::isnan(map_radius({Model::cubic, -0.5, Direction::exact_inverse}, 0.9)));
}

TEST_CASE("partition of a 1000 x 1000 image") {
  const auto p = partition(1000, 1000, 250, 64);
  CHECK(p.d2() == doctest::Approx(707.1068).epsilon(1e-6));
  CHECK(p.count() == 9);
  CHECK(p.frame.center_row == 499.5);
  CHECK(p.frame.center_col == 499.5);
}

TEST_CASE("partition of a 3456 x 5184 image") {
  const auto p = partition(5184, 3456, 250, 64);
  CHECK(p.d2() == doctest::Approx(std::hypot(5184.0, 3456.0) / 2).epsilon(1e-12));
  CHECK(p.count() == int(std::ceil((p.d2() - 250) / 64)) + 1);
  CHECK(p.count() == 46);
}

TEST_CASE("partition edge cases") {
  CHECK(partition(100, 100, 250, 64).count() == 1);
  CHECK_THROWS_AS(partition(100, 100, 30, 64), Error);
  CHECK_THROWS_AS(partition(100, 100, 30, 0), Error);
}

TEST_CASE("property: partition invariants") {
  Gen g(2);
  for (int t = 0; t < 100; ++t) {
    const int w = g.integer(16, 6000), h = g.integer(16, 6000);
    const double delta = g.uniform(1, 100), r1 = delta + g.uniform(0, 300);
    const auto p = partition(w, h, r1, delta);
    REQUIRE(p.count() >= 1);
    CHECK(p.inner_radii[0] == 0.0);
    for (int k = 0; k + 1 < p.count(); ++k)
      CHECK(p.inner_radii[k + 1] == doctest::Approx(p.inner_radii[k] + p.widths[k]).epsilon(1e-12));
    CHECK(p.inner_radii.back() < 1.0);
    CHECK(p.inner_radii.back() + p.widths.back() > 1.0);
  }
}

TEST_CASE("lattices cover the image exactly once") {
  const auto p = partition(97, 131, 20, 9);
  const auto all = all_lattices(p);
  std::set<std::pair<int, int>> seen;
  std::size_t total = 0;
  for (int k = 0; k < p.count(); ++k) {
    const auto single = lattice_points(p, k);
    CHECK(single.points == all[k].points);
    for (const auto& q : all[k].points) {
      const double r = p.frame.radius(q.row, q.col);
      CHECK(r >= p.inner_radii[k] - 1e-12);
      CHECK(r < p.inner_radii[k] + p.widths[k] + 1e-12);
      CHECK(r <= 1.0);
      seen.insert({q.row, q.col});
      ++total;
    }
  }
  CHECK(total == 97u * 131u);
  CHECK(seen.size() == total);
}

TEST_CASE("inner disk point count matches its area") {
  const auto p = partition(1000, 1000, 250, 64);
  const auto l = lattice_points(p, 0);
  const double area = std::numbers::pi * 250 * 250;
  CHECK(std::abs(double(l.size()) - area) <= 0.01 * area);
}

TEST_CASE("identity warp keeps every point") {
  Gen g(3);
  const auto p = partition(120, 90, 20, 10);
  const Plane src = g.plane(90, 120);
  for (int k = 0; k < p.count(); ++k) {
    const auto w = warp_annulus(src, p, k, {Model::cubic, 0.0, Direction::forward});
    const auto l = lattice_points(p, k);
    REQUIRE(w.points == l.points);
    CHECK(w.lattice_size == l.size());
    for (std::size_t i = 0; i < w.points.size(); ++i) CHECK(w.values[i] == src(w.points[i].row, w.points[i].col));
  }
}

TEST_CASE("outer annulus loses points under a strong warp") {
  const auto p = partition(200, 150, 40, 16);
  const Plane src(150, 200, 1.0f);
  const int k = p.count() - 1;
  const RadialMap m{Model::cubic, 0.2, Direction::forward};
  const auto w = warp_annulus(src, p, k, m);
  const auto l = lattice_points(p, k);
  CHECK(w.points.size() < l.size());
  std::size_t inside = 0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    const double s = 1 + 0.2 * l.r2[i];
    const double y = p.frame.center_row + l.dy[i] * s, x = p.frame.center_col + l.dx[i] * s;
    inside += y >= 0 && y <= 149 && x >= 0 && x <= 199;
  }
  CHECK(w.points.size() == inside);
}

TEST_CASE("bilinear reproduces affine ramps") {
  const Plane src = ramp(64, 80, 0.1, 0.003, 0.0021);
  const auto p = partition(80, 64, 12, 6);
  for (auto model : {Model::cubic, Model::linear})
    for (auto dir : {Direction::forward, Direction::inverse})
      for (int k = 0; k < p.count(); ++k) {
        const RadialMap m{model, 0.07, dir};
        const auto w = warp_annulus(src, p, k, m);
        const auto l = lattice_points(p, k);
        std::size_t j = 0;
        for (std::size_t i = 0; i < l.size() && j < w.points.size(); ++i) {
          if (!(l.points[i] == w.points[j])) continue;
          const double s = m.scale(l.r2[i]);
          const double y = p.frame.center_row + l.dy[i] * s, x = p.frame.center_col + l.dx[i] * s;
          CHECK(w.values[j] == doctest::Approx(0.1 + 0.003 * y + 0.0021 * x).epsilon(1e-6).scale(1e-6));
          ++j;
        }
        CHECK(j == w.points.size());
      }
  double out;
  CHECK_FALSE(bilinear(src, -0.01, 3, out));
  CHECK_FALSE(bilinear(src, 3, 79.001, out));
  CHECK(bilinear(src, 63, 79, out));
  CHECK(out == doctest::Approx(0.1 + 0.003 * 63 + 0.0021 * 79).epsilon(1e-6));
}

TEST_CASE("property: warped points stay inside their annulus lattice") {
  Gen g(4);
  const auto p = partition(160, 120, 30, 12);
  const Plane src(120, 160, 1.0f);
  for (int t = 0; t < 40; ++t) {
    const int k = g.integer(0, p.count() - 1);
    const RadialMap m{g.integer(0, 1) ? Model::cubic : Model::linear, g.uniform(-0.22, 0.22),
                      g.integer(0, 1) ? Direction::forward : Direction::inverse};
    const auto w = warp_annulus(src, p, k, m);
    const auto l = lattice_points(p, k);
    const std::set<std::pair<int, int>> lat = [&] {
      std::set<std::pair<int, int>> s;
      for (const auto& q : l.points) s.insert({q.row, q.col});
      return s;
    }();
    for (const auto& q : w.points) CHECK(lat.count({q.row, q.col}) == 1);
  }
}

TEST_CASE("property: radial maps are order preserving in the working range") {
  Gen g(5);
  for (int t = 0; t < 2000; ++t) {
    const RadialMap m{g.integer(0, 1) ? Model::cubic : Model::linear, g.uniform(-0.22, 0.22),
                      g.integer(0, 1) ? Direction::forward : Direction::inverse};
    double a = g.uniform(0, 1.2), b = g.uniform(0, 1.2);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    CHECK(map_radius(m, a) < map_radius(m, b));
  }
}

TEST_CASE("property: warps preserve phase") {
  // Ramps encode the source coordinates, so each warped point can be checked
  // for collinearity with the center.
  Gen g(6);
  const int rows = 128, cols = 160;
  const Plane ry = ramp(rows, cols, 0, 1, 0), rx = ramp(rows, cols, 0, 0, 1);
  const Frame f = Frame::of(rows, cols);
  for (int t = 0; t < 10; ++t) {
    const RadialMap m{g.integer(0, 1) ? Model::cubic : Model::linear, g.uniform(-0.2, 0.2),
                      g.integer(0, 1) ? Direction::forward : Direction::inverse};
    std::vector<std::uint8_t> valid;
    const Plane wy = warp_image(ry, f, m, &valid), wx = warp_image(rx, f, m);
    for (int r = 0; r < rows; r += 3)
      for (int c = 0; c < cols; c += 3) {
        if (!valid[static_cast<std::size_t>(r) * cols + c]) continue;
        const double py = r - f.center_row, px = c - f.center_col;
        const double sy = wy(r, c) - f.center_row, sx = wx(r, c) - f.center_col;
        const double norm = std::hypot(py, px) * std::hypot(sy, sx);
        if (norm < 1e-6) continue;
        CHECK(std::abs(py * sx - px * sy) <= 1e-5 * norm);
        CHECK(py * sy + px * sx > 0);
      }
  }
}

TEST_CASE("warped white noise variance is flat away from zero") {
  Gen g(7);
  const Plane w = g.plane(512, 512);
  const auto p = partition(512, 512, 100, 32);
  const int k = p.count() / 2;
  const auto l = lattice_points(p, k);
  auto var_at = [&](double a) {
    const auto wa = warp_annulus(w, p, l, {Model::cubic, a, Direction::forward});
    double s = 0, s2 = 0;
    for (double v : wa.values) {
      s += v;
      s2 += v * v;
    }
    const double n = double(wa.values.size());
    return s2 / n - (s / n) * (s / n);
  };
  std::vector<double> vs;
  for (int i = 0; i < 10; ++i) vs.push_back(var_at(0.02 + 0.02 * i));
  double m = 0, m2 = 0;
  for (double v : vs) m += v;
  m /= double(vs.size());
  for (double v : vs) m2 += (v - m) * (v - m);
  const double cv = std::sqrt(m2 / double(vs.size())) / m;
  CHECK(cv <= 0.05);
  const double v0 = var_at(0.0);
  for (double v : vs) CHECK(v0 > v);
}

TEST_CASE("largest centered rectangle") {
  const int rows = 9, cols = 11;
  std::vector<std::uint8_t> valid(rows * cols, 1);
  CHECK(largest_centered_rect(valid, rows, cols) == Rect{0, 0, rows, cols});
  // Knock out a corner: the best centered rectangle must avoid it.
  valid[0] = 0;
  const Rect r = largest_centered_rect(valid, rows, cols);
  CHECK_FALSE(r.contains(0, 0));
  for (int i = r.row0; i < r.row0 + r.rows; ++i)
    for (int j = r.col0; j < r.col0 + r.cols; ++j) CHECK(valid[i * cols + j] == 1);
  CHECK(r.rows * r.cols >= 7 * 11);
  std::vector<std::uint8_t> none(rows * cols, 0);
  CHECK(largest_centered_rect(none, rows, cols).empty());
}
