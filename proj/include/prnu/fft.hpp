#pragma once

#include <complex>
#include <vector>

namespace prnu {

/// Real-to-complex 2-D DFT pair of a fixed size, backed by FFTW.
/// The spectrum holds rows x (cols/2 + 1) bins; `inverse` is unnormalized.
class Fft2d {
 public:
  Fft2d(int rows, int cols);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return cols_; }
  [[nodiscard]] int spectrum_cols() const { return cols_ / 2 + 1; }

  std::vector<std::complex<double>> forward(const std::vector<double>& real);
  std::vector<double> inverse(const std::vector<std::complex<double>>& spectrum);

 private:
  int rows_;
  int cols_;
  double* real_buf_ = nullptr;
  void* spec_buf_ = nullptr;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
};

}  // namespace prnu
