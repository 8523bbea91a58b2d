#include "prnu/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace prnu {

void BaselineConfig::validate() const {
  if (!(A > 0.0)) throw Error("baseline search half-range must be positive");
  if (k_max < 1 || k_max > 20) throw Error(fmt::format("k_max = {} outside [1, 20]", k_max));
  denoiser.validate();
}

std::vector<double> grid_points(int k, double A) {
  if (k < 0) throw Error("grid level must be >= 0");
  const long n = 1L << k;
  std::vector<double> out;
  out.reserve(n + 1);
  for (long i = 0; i <= n; ++i) out.push_back(-A + 2.0 * A * double(i) / double(n));
  return out;
}

std::vector<double> new_grid_points(int k, double A) {
  if (k <= 1) return grid_points(std::max(k, 0), A);
  const long n = 1L << k;
  std::vector<double> out;
  for (long i = 1; i < n; i += 2) out.push_back(-A + 2.0 * A * double(i) / double(n));
  return out;
}

double golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol,
                          int* evaluations) {
  if (!(hi >= lo)) throw Error("golden section needs lo <= hi");
  if (!(tol > 0.0)) throw Error("golden section tolerance must be positive");
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  int evals = 0;
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = f(c), fd = f(d);
  evals += 2;
  while (hi - lo > tol) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = f(d);
    }
    ++evals;
  }
  if (evaluations) *evaluations += evals;
  return 0.5 * (lo + hi);
}

namespace {

double pce_on_valid(const Plane& a, const Plane& b, const std::vector<std::uint8_t>& valid, const ExclusionSpec& excl) {
  const Rect r = largest_centered_rect(valid, a.rows(), a.cols());
  if (r.empty()) return 0.0;
  try {
    return pce(a, b, excl, r);
  } catch (const UndefinedCorrelation&) {
    return 0.0;
  }
}

}  // namespace

double pce_max(const Plane& k, const Plane& w, Model model, double alpha, const ExclusionSpec& excl) {
  if (!k.same_shape(w)) throw Error("pce_max needs equally sized planes");
  const Frame f = Frame::of(k.rows(), k.cols());
  std::vector<std::uint8_t> valid;
  // Inverse: residual brought back onto the fingerprint grid.
  const Plane w_back = warp_image(w, f, {model, alpha, Direction::forward}, &valid);
  const double p_inv = pce_on_valid(k, w_back, valid, excl);
  if (model == Model::linear && alpha == -1.0) return p_inv;
  // Direct: fingerprint carried onto the residual grid.
  const Plane k_fwd = warp_image(k, f, {model, alpha, Direction::exact_inverse}, &valid);
  const double p_dir = pce_on_valid(k_fwd, w, valid, excl);
  return std::max(p_inv, p_dir);
}

Plane downsample2(const Plane& x) {
  const int m = x.rows() / 2, n = x.cols() / 2;
  if (m < 1 || n < 1) throw Error("plane too small to downsample");
  Plane out(m, n);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c)
      out(r, c) = 0.25f * (x(2 * r, 2 * c) + x(2 * r + 1, 2 * c) + x(2 * r, 2 * c + 1) + x(2 * r + 1, 2 * c + 1));
  return out;
}

BaselineResult baseline_single_alpha_residual(const Fingerprint& fp, const Plane& residual_in, const BaselineConfig& cfg) {
  cfg.validate();
  const int rows = std::min(fp.rows(), residual_in.rows());
  const int cols = std::min(fp.cols(), residual_in.cols());
  Plane K = center_crop(fp.plane(), rows, cols);
  Plane W = zero_mean(center_crop(residual_in, rows, cols));
  if (cfg.downsample) {
    K = downsample2(K);
    W = zero_mean(downsample2(W));
  }
  K.set_origin(0, 0);
  W.set_origin(0, 0);
  const double d2 = Frame::of(K.rows(), K.cols()).d2;

  BaselineResult res;
  auto f = [&](double a) {
    ++res.evaluations;
    return pce_max(K, W, cfg.model, a, cfg.exclusion);
  };

  double best_a = 0.0, best_p = -std::numeric_limits<double>::infinity();
  bool exit_stage1 = false;
  int k = 1;
  for (; k <= cfg.k_max && !exit_stage1; ++k) {
    auto pts = new_grid_points(k, cfg.A);
    std::stable_sort(pts.begin(), pts.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    for (double a : pts) {
      const double p = f(a);
      if (p > best_p || (p == best_p && std::abs(a) < std::abs(best_a))) {
        best_p = p;
        best_a = a;
      }
      if (k > 4 && p > cfg.tau2) {
        best_a = a;
        best_p = p;
        exit_stage1 = true;
        break;
      }
    }
    if (!exit_stage1 && best_p > cfg.tau1) exit_stage1 = true;
    if (exit_stage1) res.k_exit = k;
  }
  if (!exit_stage1) {
    res.k_exit = cfg.k_max;
    res.alpha_star = best_a;
    res.pce_star = best_p;
    res.h1 = false;
    return res;
  }

  const double h = 2.0 * cfg.A / double(1L << res.k_exit);
  const double lo = std::max(-cfg.A, best_a - h), hi = std::min(cfg.A, best_a + h);
  res.alpha_star = golden_section_max(f, lo, hi, 1.0 / (8.0 * d2));
  res.pce_star = f(res.alpha_star);
  res.refined = true;
  res.h1 = res.pce_star > cfg.tau3;
  return res;
}

BaselineResult baseline_single_alpha(const Fingerprint& fp, const Plane& image, const BaselineConfig& cfg) {
  cfg.validate();
  return baseline_single_alpha_residual(fp, residual(image, cfg.denoiser), cfg);
}

}  // namespace prnu
