#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace prnu {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NCC or PCE requested on inputs whose centered energy vanishes.
class UndefinedCorrelation : public Error {
 public:
  using Error::Error;
};

/// Integer lattice location (0-based row, col).
struct Pixel {
  int row = 0;
  int col = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Cyclic shift vector, interpreted modulo the plane size.
struct ShiftVector {
  int s1 = 0;  ///< rows
  int s2 = 0;  ///< cols
};

/// Axis-aligned rectangle of lattice points, half-open on the far side.
struct Rect {
  int row0 = 0;
  int col0 = 0;
  int rows = 0;
  int cols = 0;

  [[nodiscard]] bool empty() const { return rows <= 0 || cols <= 0; }
  [[nodiscard]] bool contains(int r, int c) const {
    return r >= row0 && r < row0 + rows && c >= col0 && c < col0 + cols;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

Rect intersect(const Rect& a, const Rect& b);

/// A 2-D real-valued signal on a lattice domain.
///
/// The domain is the bounding rectangle placed at `origin()`, optionally
/// restricted by a membership mask to an arbitrary point subset. Values are
/// stored row-major in 32-bit floats; reductions accumulate in double.
class Plane {
 public:
  Plane() = default;
  Plane(int rows, int cols, float fill = 0.0f);
  Plane(int rows, int cols, std::vector<float> values);

  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return cols_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] bool empty() const { return values_.empty(); }

  /// Bounding box in lattice coordinates.
  [[nodiscard]] Rect bounds() const { return {row0_, col0_, rows_, cols_}; }
  [[nodiscard]] Pixel origin() const { return {row0_, col0_}; }
  void set_origin(int row0, int col0) {
    row0_ = row0;
    col0_ = col0;
  }

  [[nodiscard]] bool has_mask() const { return !mask_.empty(); }
  /// Restricts the domain; mask is row-major over the bounding box.
  void set_mask(std::vector<std::uint8_t> mask);
  void clear_mask() { mask_.clear(); }
  /// Membership test in local (0-based, bounding-box relative) indices.
  [[nodiscard]] bool in_domain_local(int r, int c) const {
    return mask_.empty() || mask_[static_cast<std::size_t>(r) * cols_ + c] != 0;
  }
  /// Membership test in lattice coordinates.
  [[nodiscard]] bool in_domain(int r, int c) const {
    return bounds().contains(r, c) && in_domain_local(r - row0_, c - col0_);
  }
  [[nodiscard]] std::size_t domain_size() const;

  float& operator()(int r, int c) { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
  float operator()(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }

  [[nodiscard]] std::span<float> values() { return values_; }
  [[nodiscard]] std::span<const float> values() const { return values_; }
  [[nodiscard]] const std::vector<std::uint8_t>& mask() const { return mask_; }

  [[nodiscard]] bool same_shape(const Plane& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  int row0_ = 0;
  int col0_ = 0;
  std::vector<float> values_;
  std::vector<std::uint8_t> mask_;
};

/// ITU-R BT.601 luminance of three equally sized channels.
Plane to_grayscale(const Plane& red, const Plane& green, const Plane& blue);

/// Sum of elementwise products over the intersection of both domains.
double inner_product(const Plane& x, const Plane& y);

/// Normalized cross-correlation over the intersection of both domains.
double ncc(const Plane& x, const Plane& y);

/// Toroidal shift: out(i, j) = x((i + s1) mod M, (j + s2) mod N).
Plane cyclic_shift(const Plane& x, ShiftVector s);

/// Subtracts the sample mean over the domain.
Plane zero_mean(const Plane& x);

double mean(const Plane& x);
/// Sum of squares over the domain.
double energy(const Plane& x);

/// Copies the rectangle `r` (local indices) into a new plane at origin 0.
Plane crop(const Plane& x, const Rect& r);
/// Central crop to rows x cols.
Plane center_crop(const Plane& x, int rows, int cols);

}  // namespace prnu
