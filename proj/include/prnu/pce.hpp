#pragma once

#include <optional>

#include "prnu/fingerprint.hpp"
#include "prnu/plane.hpp"

namespace prnu {

/// Cyclic neighborhood of the zero shift excluded from the PCE denominator.
struct ExclusionSpec {
  int half_width = 5;  ///< (2h+1) x (2h+1) window, 11x11 by default
};

/// Sign-preserving square.
inline double ssq(double x) { return x < 0 ? -x * x : x * x; }

/// Cross-correlation surface c(s) = Σ_p k(p) w(p + s) for every cyclic shift,
/// row-major, computed via FFT. Inputs are used as given (no centering).
std::vector<double> cross_correlation(const Plane& k, const Plane& w);

/// Peak-to-correlation energy of two planes.
///
/// Both inputs are zero-meaned over their domain (points outside a mask are
/// set to zero). Larger inputs are central-cropped to the common size. When
/// `domain` is given, both planes are first cropped to that rectangle.
/// Throws UndefinedCorrelation when the off-peak energy vanishes.
double pce(const Plane& k, const Plane& w, const ExclusionSpec& excl = {},
           const std::optional<Rect>& domain = std::nullopt);

inline double pce(const Fingerprint& fp, const Plane& w, const ExclusionSpec& excl = {},
                  const std::optional<Rect>& domain = std::nullopt) {
  return pce(fp.plane(), w, excl, domain);
}

}  // namespace prnu
