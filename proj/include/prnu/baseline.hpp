#pragma once

#include <functional>
#include <vector>

#include "prnu/denoiser.hpp"
#include "prnu/fingerprint.hpp"
#include "prnu/geometry.hpp"
#include "prnu/pce.hpp"

namespace prnu {

/// Single-alpha two-stage search: progressive grid, then golden section.
struct BaselineConfig {
  Model model = Model::cubic;
  double A = 0.22;
  int k_max = 7;
  double tau1 = 15.0;
  double tau2 = 75.0;
  double tau3 = 75.0;
  bool downsample = false;  ///< 2x2 block averaging before the search
  DenoiserConfig denoiser;
  ExclusionSpec exclusion;

  void validate() const;
};

struct BaselineResult {
  double pce_star = 0.0;
  double alpha_star = 0.0;
  bool h1 = false;
  int k_exit = 0;        ///< grid iteration that ended stage 1
  bool refined = false;  ///< stage 2 ran
  int evaluations = 0;   ///< PCE_max evaluations
};

/// Grid of 2^k + 1 points over [-A, A].
std::vector<double> grid_points(int k, double A);
/// Points of grid k absent from grid k-1 (all of them for k = 1).
std::vector<double> new_grid_points(int k, double A);

/// Golden-section maximization of f on [lo, hi] until the bracket is no
/// wider than `tol`. Returns the final midpoint.
double golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol,
                          int* evaluations = nullptr);

/// max(PCE_dir, PCE_inv) of a whole-image single-alpha warp, each computed
/// over the largest centered rectangle where interpolation is defined.
/// `k` is the fingerprint, `w` the zero-meaned residual.
double pce_max(const Plane& k, const Plane& w, Model model, double alpha, const ExclusionSpec& excl = {});

/// 2x2 block average (odd trailing row/column dropped).
Plane downsample2(const Plane& x);

BaselineResult baseline_single_alpha(const Fingerprint& fp, const Plane& image, const BaselineConfig& cfg = {});
BaselineResult baseline_single_alpha_residual(const Fingerprint& fp, const Plane& residual, const BaselineConfig& cfg = {});

}  // namespace prnu
