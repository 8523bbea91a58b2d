#include "prnu/fft.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>

#include <fftw3.h>

#include "prnu/plane.hpp"

namespace prnu {
namespace {
// FFTW's planner is not reentrant.
std::mutex planner_mutex;
}  // namespace

Fft2d::Fft2d(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw Error("fft size must be positive");
  const std::size_t nreal = static_cast<std::size_t>(rows) * cols;
  const std::size_t nspec = static_cast<std::size_t>(rows) * (cols / 2 + 1);
  std::lock_guard lock(planner_mutex);
  real_buf_ = fftw_alloc_real(nreal);
  auto* spec = fftw_alloc_complex(nspec);
  spec_buf_ = spec;
  plan_fwd_ = fftw_plan_dft_r2c_2d(rows, cols, real_buf_, spec, FFTW_ESTIMATE);
  plan_inv_ = fftw_plan_dft_c2r_2d(rows, cols, spec, real_buf_, FFTW_ESTIMATE);
}

Fft2d::~Fft2d() {
  std::lock_guard lock(planner_mutex);
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
  fftw_free(real_buf_);
  fftw_free(spec_buf_);
}

std::vector<std::complex<double>> Fft2d::forward(const std::vector<double>& real) {
  const std::size_t nreal = static_cast<std::size_t>(rows_) * cols_;
  if (real.size() != nreal) throw Error("fft input size mismatch");
  std::copy(real.begin(), real.end(), real_buf_);
  fftw_execute(static_cast<fftw_plan>(plan_fwd_));
  const std::size_t nspec = static_cast<std::size_t>(rows_) * spectrum_cols();
  std::vector<std::complex<double>> out(nspec);
  std::memcpy(out.data(), spec_buf_, nspec * sizeof(fftw_complex));
  return out;
}

std::vector<double> Fft2d::inverse(const std::vector<std::complex<double>>& spectrum) {
  const std::size_t nspec = static_cast<std::size_t>(rows_) * spectrum_cols();
  if (spectrum.size() != nspec) throw Error("fft spectrum size mismatch");
  // c2r destroys its input, so always work on the owned buffer.
  std::memcpy(spec_buf_, spectrum.data(), nspec * sizeof(fftw_complex));
  fftw_execute(static_cast<fftw_plan>(plan_inv_));
  return {real_buf_, real_buf_ + static_cast<std::size_t>(rows_) * cols_};
}

}  // namespace prnu
