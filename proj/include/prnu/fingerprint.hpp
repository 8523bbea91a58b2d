#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "prnu/denoiser.hpp"
#include "prnu/plane.hpp"

namespace prnu {

struct FingerprintMeta {
  std::string source_label;
  int images_used = 0;
  bool rows_cols_zero_meaned = false;
  bool wiener_filtered = false;
  /// Pixels whose accumulated I∘I was zero; mapped to 0.
  std::size_t zero_denominator_pixels = 0;
  std::optional<int> jpeg_quality;  ///< recorded only, never enforced
};

/// Reference PRNU estimate with its frozen mean-square value.
class Fingerprint {
 public:
  Fingerprint() = default;
  explicit Fingerprint(Plane plane, FingerprintMeta meta = {});
  /// Uses a stored sigma2 verbatim (file loading).
  Fingerprint(Plane plane, double sigma2, FingerprintMeta meta);

  [[nodiscard]] const Plane& plane() const { return plane_; }
  [[nodiscard]] double sigma2() const { return sigma2_; }
  [[nodiscard]] const FingerprintMeta& meta() const { return meta_; }
  [[nodiscard]] int rows() const { return plane_.rows(); }
  [[nodiscard]] int cols() const { return plane_.cols(); }

 private:
  Plane plane_;
  double sigma2_ = 0.0;
  FingerprintMeta meta_;
};

/// Mean square of a plane over its domain.
double mean_square(const Plane& p);

/// Removes column means, then row means.
Plane zero_mean_rows_cols(const Plane& k);

/// Attenuates periodic artifacts: every DFT magnitude is scaled by the
/// local Wiener gain n/(s + n), where s = max(0, m - n), m is the 3x3 local
/// mean spectral energy and n the median of m over the spectrum. Phase is kept.
Plane wiener_dft(const Plane& k);

/// Σ I∘W / Σ I∘I, followed by zero_mean_rows_cols and wiener_dft.
Fingerprint estimate_fingerprint(const std::vector<Plane>& images, const DenoiserConfig& cfg = {},
                                 std::string label = {});

/// Same estimator with precomputed residuals (one per image).
Fingerprint estimate_fingerprint_from_residuals(const std::vector<Plane>& images,
                                                const std::vector<Plane>& residuals,
                                                std::string label = {});

/// Binary file: "PRNUFP01" | u32 width | u32 height | f64 sigma2 | f32 values,
/// all little-endian, values row-major.
void write_fingerprint(const Fingerprint& fp, const std::filesystem::path& path);
Fingerprint read_fingerprint(const std::filesystem::path& path);

}  // namespace prnu
