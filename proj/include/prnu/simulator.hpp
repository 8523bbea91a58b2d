#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prnu/plane.hpp"

namespace prnu {

/// Radially varying distortion parameter α(r) on normalized radii.
class DistortionProfile {
 public:
  enum class Kind { constant, affine, piecewise };

  static DistortionProfile constant(double alpha);
  /// α(r) = a0 + a1 r.
  static DistortionProfile affine(double a0, double a1);
  /// Linear interpolation between (r, α) samples, constant beyond the ends.
  static DistortionProfile piecewise(std::vector<double> radii, std::vector<double> alphas);

  [[nodiscard]] double operator()(double r) const;
  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] const std::vector<double>& params() const { return params_; }
  [[nodiscard]] const std::vector<double>& radii() const { return radii_; }
  [[nodiscard]] const std::vector<double>& alphas() const { return alphas_; }
  /// Forward radial map r(1 + α(r) r²).
  [[nodiscard]] double map(double r) const { return r * (1.0 + (*this)(r) * r * r); }

  /// JSON description, e.g. {"kind":"affine","a0":0.05,"a1":0.1}.
  [[nodiscard]] std::string to_json() const;
  /// Parses "constant:a", "affine:a0,a1" or "piecewise:r0=a0,r1=a1,...".
  static DistortionProfile parse(const std::string& text);

 private:
  Kind kind_ = Kind::constant;
  std::vector<double> params_;
  std::vector<double> radii_;
  std::vector<double> alphas_;
};

/// White Gaussian PRNU with the given standard deviation, zero-meaned.
Plane synth_prnu(int width, int height, double strength, std::uint64_t seed);

enum class SceneKind { flat, gradient, texture };

/// Noise-free scene content in [0, 255].
Plane synth_scene(SceneKind kind, int width, int height, double level, std::uint64_t seed);

struct SyntheticScene {
  Plane I0;
  Plane K;
  double theta_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// I0 + I0∘K + N(0, σΘ²), clipped to [0, 255].
Plane synth_image(const SyntheticScene& scene);

/// Warps so that content at normalized radius r moves to r(1 + α(r) r²).
/// Each output pixel's source radius is found by bisection; sources outside
/// the image take the nearest edge value. Throws when the radial map is not
/// increasing over the needed range.
Plane apply_profile(const Plane& image, const DistortionProfile& prof);

/// Piecewise profile whose warp undoes `prof` (sampled on `samples` radii).
DistortionProfile invert_profile(const DistortionProfile& prof, double r_max = 1.0, int samples = 2048);

}  // namespace prnu
