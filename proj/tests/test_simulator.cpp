#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "prnu/adaptive.hpp"
#include "prnu/geometry.hpp"
#include "prnu/simulator.hpp"
#include "support.hpp"

using namespace prnu;
using testsupport::Gen;

namespace {

double lag1(const Plane& p, bool vertical) {
  const double m = testsupport::plane_mean(p);
  double num = 0, den = 0;
  for (int r = 0; r < p.rows(); ++r)
    for (int c = 0; c < p.cols(); ++c) {
      const double a = p(r, c) - m;
      den += a * a;
      const int r2 = vertical ? r + 1 : r, c2 = vertical ? c : c + 1;
      if (r2 < p.rows() && c2 < p.cols()) num += a * (p(r2, c2) - m);
    }
  return num / den;
}

double psnr(const Plane& a, const Plane& b, int border) {
  double se = 0;
  std::size_t n = 0;
  for (int r = border; r < a.rows() - border; ++r)
    for (int c = border; c < a.cols() - border; ++c) {
      const double d = double(a(r, c)) - b(r, c);
      se += d * d;
      ++n;
    }
  return 10 * std::log10(255.0 * 255.0 / (se / double(n)));
}

}  // namespace

TEST_CASE("synthetic PRNU statistics") {
  const Plane k = synth_prnu(512, 512, 0.02, 1);
  CHECK(k.rows() == 512);
  CHECK(std::abs(std::sqrt(testsupport::plane_var(k)) - 0.02) <= 0.05 * 0.02);
  CHECK(std::abs(testsupport::plane_mean(k)) < 1e-6);
  CHECK(std::abs(lag1(k, false)) < 0.05);
  CHECK(std::abs(lag1(k, true)) < 0.05);
  const Plane again = synth_prnu(512, 512, 0.02, 1);
  for (std::size_t i = 0; i < k.size(); ++i) CHECK(again.values()[i] == k.values()[i]);
  const Plane other = synth_prnu(512, 512, 0.02, 2);
  CHECK(std::abs(testsupport::corr(k, other)) < 0.01);
  CHECK_THROWS_AS(synth_prnu(8, 8, 0.0, 1), Error);
  const Plane wide = synth_prnu(30, 20, 0.02, 3);
  CHECK(wide.rows() == 20);
  CHECK(wide.cols() == 30);
}

TEST_CASE("synthetic image model") {
  const Plane flat(256, 256, 128.0f);
  const Plane clean = synth_image({flat, Plane(256, 256), 0.0, 5});
  for (std::size_t i = 0; i < clean.size(); ++i) CHECK(clean.values()[i] == 128.0f);

  const Plane K = synth_prnu(512, 512, 0.02, 6);
  const Plane I = synth_image({Plane(512, 512, 128.0f), K, 2.0, 7});
  const double expected = std::sqrt(std::pow(128 * 0.02, 2) + 4.0);
  CHECK(std::sqrt(testsupport::plane_var(I)) == doctest::Approx(expected).epsilon(0.05));
  float lo = 255, hi = 0;
  for (float v : I.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo > 0.0f);
  CHECK(hi < 255.0f);

  const Plane bright = synth_image({Plane(64, 64, 254.0f), synth_prnu(64, 64, 0.02, 8), 2.0, 9});
  int clipped = 0;
  for (float v : bright.values()) {
    CHECK(v <= 255.0f);
    clipped += v == 255.0f;
  }
  CHECK(clipped > 0);
  const Plane dark = synth_image({Plane(64, 64, 0.5f), Plane(64, 64), 2.0, 10});
  for (float v : dark.values()) CHECK(v >= 0.0f);

  CHECK_THROWS_AS(synth_image({Plane(4, 4), Plane(4, 5), 0.0, 1}), Error);
  const Plane same = synth_image({Plane(512, 512, 128.0f), K, 2.0, 7});
  for (std::size_t i = 0; i < I.size(); ++i) CHECK(same.values()[i] == I.values()[i]);
}

TEST_CASE("scene generators") {
  const Plane f = synth_scene(SceneKind::flat, 40, 30, 90, 1);
  CHECK(f.rows() == 30);
  for (float v : f.values()) CHECK(v == 90.0f);
  for (auto kind : {SceneKind::gradient, SceneKind::texture}) {
    const Plane s = synth_scene(kind, 64, 48, 128, 2);
    for (float v : s.values()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 255.0f);
    }
    CHECK(testsupport::plane_var(s) > 1.0);
  }
  const Plane t1 = synth_scene(SceneKind::texture, 64, 48, 128, 2), t2 = synth_scene(SceneKind::texture, 64, 48, 128, 2);
  for (std::size_t i = 0; i < t1.size(); ++i) CHECK(t1.values()[i] == t2.values()[i]);
}

TEST_CASE("profiles evaluate, parse and serialize") {
  const auto c = DistortionProfile::constant(0.03);
  CHECK(c(0.0) == 0.03);
  CHECK(c(0.9) == 0.03);
  const auto a = DistortionProfile::affine(0.05, 0.1);
  CHECK(a(0.5) == doctest::Approx(0.1));
  CHECK(a.map(1.0) == doctest::Approx(1.15));
  const auto p = DistortionProfile::piecewise({0.2, 0.6}, {0.0, 0.04});
  CHECK(p(0.0) == 0.0);
  CHECK(p(0.4) == doctest::Approx(0.02));
  CHECK(p(1.0) == 0.04);

  const auto parsed = DistortionProfile::parse("affine:0.05,0.1");
  CHECK(parsed.kind() == DistortionProfile::Kind::affine);
  const auto j = nlohmann::json::parse(parsed.to_json());
  CHECK(j["kind"] == "affine");
  CHECK(j["a0"].get<double>() == 0.05);
  CHECK(j["a1"].get<double>() == 0.1);
  const auto pj = nlohmann::json::parse(DistortionProfile::parse("piecewise:0=0.01,0.5=-0.02,1=0.03").to_json());
  CHECK(pj["radii"].size() == 3);
  CHECK(pj["alphas"][1].get<double>() == -0.02);
  CHECK(nlohmann::json::parse(DistortionProfile::parse("constant:-0.04").to_json())["alpha"].get<double>() == -0.04);

  for (const char* bad : {"bogus", "affine:1", "constant:x", "piecewise:0=0,0=1", "piecewise:0.5", "constant:1e"})
    CHECK_THROWS_AS(DistortionProfile::parse(bad), Error);
}

TEST_CASE("zero profile is the identity") {
  Gen g(11);
  const Plane x = g.uniform_plane(50, 70, 0, 255);
  const Plane y = apply_profile(x, DistortionProfile::constant(0.0));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y.values()[i] - x.values()[i]) <= 1e-4);
}

TEST_CASE("constant profile agrees with the radial map") {
  // Coordinate ramps are reproduced exactly by bilinear sampling, so the
  // warped values give back each output pixel's source location.
  const int rows = 90, cols = 120;
  Plane ry(rows, cols), rx(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      ry(r, c) = float(r);
      rx(r, c) = float(c);
    }
  const Frame f = Frame::of(rows, cols);
  for (double alpha : {-0.1, 0.04, 0.2}) {
    const auto prof = DistortionProfile::constant(alpha);
    const Plane sy = apply_profile(ry, prof), sx = apply_profile(rx, prof);
    int checked = 0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double y = sy(r, c), x = sx(r, c);
        if (y <= 0 || y >= rows - 1 || x <= 0 || x >= cols - 1) continue;
        const double src = std::hypot(y - f.center_row, x - f.center_col) / f.d2;
        CHECK(std::abs(map_radius({Model::cubic, alpha, Direction::forward}, src) - f.radius(r, c)) <= 1e-6);
        ++checked;
      }
    CHECK(checked > rows * cols / 2);
  }
}

TEST_CASE("invalid profiles are rejected") {
  const Plane x(32, 32, 1.0f);
  CHECK_THROWS_AS(apply_profile(x, DistortionProfile::constant(0.6)), Error);
  CHECK_THROWS_AS(apply_profile(x, DistortionProfile::constant(-0.45)), Error);
  CHECK_THROWS_AS(apply_profile(x, DistortionProfile::piecewise({0.0, 0.5, 1.0}, {0.0, 0.55, 0.0})), Error);
  CHECK_THROWS_AS(invert_profile(DistortionProfile::constant(0.0), 0.0), Error);
}

TEST_CASE("affine profile matches its midpoint under brute-force fitting") {
  // Inner disk excluded: its best fit is set by its rim, where the
  // displacement lives. Corner annuli are excluded too: most of their
  // warped lattice falls outside the frame.
  const int n = 1024;
  Gen g(12);
  const Plane K = g.plane(n, n);
  const auto prof = DistortionProfile::affine(0.05, 0.1);
  const Plane W = apply_profile(K, prof);
  const auto part = partition(n, n, 250, 64);
  const AnnulusProblem prob(K, W, part, Approach::inv, Model::cubic);
  int checked = 0;
  const double inscribed = (n / 2.0) / Frame::of(n, n).d2;
  for (int k = 1; k < part.count(); ++k) {
    const double outer = part.inner_radii[k] + part.widths[k];
    if (prof.map(outer) > inscribed) continue;
    const double mid = prof(part.mid_radius(k));
    std::vector<double> grid;
    for (int i = -40; i <= 40; ++i) grid.push_back(std::round(mid * 1000) / 1000 + 0.0005 * i);
    const auto t = refine(prob, k, grid, SearchDefaults{}.min_coverage);
    CHECK_FALSE(t.skipped);
    CHECK(std::abs(t.alpha_star - mid) <= 0.005);
    ++checked;
  }
  CHECK(checked >= 3);
}

TEST_CASE("round trip through the inverted profile") {
  const Plane I = synth_scene(SceneKind::texture, 256, 256, 128, 13);
  for (const auto& prof : {DistortionProfile::affine(0.05, 0.1), DistortionProfile::constant(-0.08),
                           DistortionProfile::piecewise({0.0, 0.5, 1.0}, {0.02, -0.03, 0.06})}) {
    const Plane back = apply_profile(apply_profile(I, prof), invert_profile(prof, 1.0));
    CHECK(psnr(I, back, 5) > 40.0);
  }
}
