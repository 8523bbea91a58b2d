#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "prnu/plane.hpp"

namespace prnu {

enum class Model { cubic, linear };
enum class Direction { forward, inverse, exact_inverse };

std::string_view to_string(Model m);
Model parse_model(std::string_view s);

/// Radially symmetric map on normalized radii.
///
/// cubic forward r(1 + a r^2); cubic inverse r(1 - a r^2 + 3 a^2 r^4) (series
/// inverse); linear forward r(1 + a); linear inverse r / (1 + a).
/// exact_inverse solves the forward map numerically (NaN where it has no
/// monotone preimage).
struct RadialMap {
  Model model = Model::cubic;
  double alpha = 0.0;
  Direction direction = Direction::forward;

  /// Throws for linear-inverse with alpha = -1.
  void validate() const;
  /// Ratio map(r)/r, as a function of r^2 (equals 1 at r = 0 when alpha = 0).
  [[nodiscard]] double scale(double r2) const;
};

double map_radius(const RadialMap& m, double r);

/// Pixel frame of an image: size, optical center and half-diagonal.
struct Frame {
  int rows = 0;
  int cols = 0;
  double center_row = 0.0;
  double center_col = 0.0;
  double d2 = 0.0;

  static Frame of(int rows, int cols);
  /// Normalized radius of lattice point (r, c).
  [[nodiscard]] double radius(int r, int c) const;
};

/// Concentric annuli covering the image. Index k is 0-based; annulus 0 is
/// the inner disk.
struct AnnulusPartition {
  Frame frame;
  double r1_px = 0.0;
  double delta_px = 0.0;
  std::vector<double> inner_radii;  ///< normalized
  std::vector<double> widths;       ///< normalized

  [[nodiscard]] int count() const { return static_cast<int>(inner_radii.size()); }
  [[nodiscard]] double d2() const { return frame.d2; }
  /// Annulus containing pixel distance `dist_px` from the center.
  [[nodiscard]] int index_of(double dist_px) const;
  /// Normalized radius at the middle of annulus k.
  [[nodiscard]] double mid_radius(int k) const { return inner_radii[k] + widths[k] / 2; }
};

/// Inner disk of radius r1_px, then annuli of width delta_px until the
/// corner is covered. Throws when r1_px < delta_px or delta_px <= 0.
AnnulusPartition partition(int width, int height, double r1_px, double delta_px);

/// Lattice points of one annulus with cached offsets from the center.
struct AnnulusLattice {
  int k = 0;
  std::vector<Pixel> points;
  std::vector<double> dy;  ///< row offset from the center, pixels
  std::vector<double> dx;  ///< col offset from the center, pixels
  std::vector<double> r2;  ///< squared normalized radius

  [[nodiscard]] std::size_t size() const { return points.size(); }
};

AnnulusLattice lattice_points(const AnnulusPartition& p, int k);
/// All lattices in one pass over the image.
std::vector<AnnulusLattice> all_lattices(const AnnulusPartition& p);

/// Bilinear sample at fractional (y, x). Returns false when the location
/// leaves the bounding box [0, rows-1] x [0, cols-1].
bool bilinear(const Plane& src, double y, double x, double& out);

/// Output of warp_annulus: surviving points Q_k and their warped values.
struct WarpedAnnulus {
  int k = 0;
  std::vector<Pixel> points;
  std::vector<double> values;
  std::size_t lattice_size = 0;  ///< |P_k|
};

/// Samples `src` at map(p) for every p in P_k. Points whose source leaves
/// the bounding box are dropped.
WarpedAnnulus warp_annulus(const Plane& src, const AnnulusPartition& p, const AnnulusLattice& lattice,
                           const RadialMap& m);
WarpedAnnulus warp_annulus(const Plane& src, const AnnulusPartition& p, int k, const RadialMap& m);

/// Sums over Q_k without materializing the warp.
struct AnnulusMoments {
  double phi = 0.0;     ///< Σ reference(p) * warped(p)
  double energy = 0.0;  ///< Σ warped(p)^2
  std::size_t q_count = 0;
};

AnnulusMoments warp_moments(const Plane& reference, const Plane& moving, const AnnulusPartition& p,
                            const AnnulusLattice& lattice, const RadialMap& m);

/// Whole-image warp: out(p) = src(map(p)); `valid` receives 1 where the
/// source stayed inside the bounding box (out is 0 elsewhere).
Plane warp_image(const Plane& src, const Frame& f, const RadialMap& m, std::vector<std::uint8_t>* valid = nullptr);

/// Largest-area rectangle centered on the image center that contains only
/// valid points. Empty when the center itself is invalid.
Rect largest_centered_rect(const std::vector<std::uint8_t>& valid, int rows, int cols);

}  // namespace prnu
