#pragma once

#include <vector>

#include "prnu/plane.hpp"

namespace prnu {

/// Parameters of the wavelet-domain local Wiener denoiser.
struct DenoiserConfig {
  int levels = 4;                          ///< decomposition depth
  double noise_variance = 9.0;             ///< assumed noise variance, 8-bit units squared
  std::vector<int> window_sizes{3, 5, 7, 9};

  /// Throws prnu::Error when the invariants do not hold.
  void validate() const;
};

/// Smooth scene estimate F(I).
///
/// Daubechies 8-tap orthonormal wavelet, periodic transform on an image that
/// is first extended symmetrically to a multiple of 2^levels. Each detail
/// coefficient c is shrunk by s/(s + noise_variance), where s is the smallest
/// local signal-variance estimate over the configured square windows.
Plane denoise(const Plane& image, const DenoiserConfig& cfg = {});

/// Noise residual W = I - F(I).
Plane residual(const Plane& image, const DenoiserConfig& cfg = {});

namespace wavelet {

/// Daubechies 8-tap low-pass analysis filter (sums to sqrt 2).
const std::vector<double>& daubechies8();

/// One level of the periodic orthonormal DWT on a length-2n signal:
/// output is [approximation(n) | detail(n)].
void analyze_1d(const double* in, double* out, int n, int stride_in, int stride_out);
/// Inverse of analyze_1d.
void synthesize_1d(const double* in, double* out, int n, int stride_in, int stride_out);

}  // namespace wavelet
}  // namespace prnu
