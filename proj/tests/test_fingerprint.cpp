#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "prnu/fingerprint.hpp"
#include "prnu/simulator.hpp"
#include "support.hpp"

using namespace prnu;
using testsupport::Gen;
namespace fs = std::filesystem;

namespace {

// Direct DFT bin, the oracle for spectral checks.
std::complex<double> dft_bin(const Plane& x, int k1, int k2) {
  std::complex<double> acc = 0;
  for (int r = 0; r < x.rows(); ++r)
    for (int c = 0; c < x.cols(); ++c) {
      const double ph = -2 * std::numbers::pi * (double(k1) * r / x.rows() + double(k2) * c / x.cols());
      acc += double(x(r, c)) * std::complex<double>(std::cos(ph), std::sin(ph));
    }
  return acc;
}

double rms(const Plane& p) { return std::sqrt(mean_square(p)); }

void check_row_col_means(const Plane& k) {
  const double tol = 1e-6 * std::max(rms(k), 1e-30);
  for (int r = 0; r < k.rows(); ++r) {
    double s = 0;
    for (int c = 0; c < k.cols(); ++c) s += k(r, c);
    CHECK(std::abs(s / k.cols()) <= tol);
  }
  for (int c = 0; c < k.cols(); ++c) {
    double s = 0;
    for (int r = 0; r < k.rows(); ++r) s += k(r, c);
    CHECK(std::abs(s / k.rows()) <= tol);
  }
}

std::vector<Plane> flats(const Plane& K, int count, std::uint64_t seed) {
  std::vector<Plane> out;
  for (int i = 0; i < count; ++i) {
    SyntheticScene s{Plane(K.rows(), K.cols(), 128.0f), K, 2.0, seed + static_cast<std::uint64_t>(i)};
    out.push_back(synth_image(s));
  }
  return out;
}

}  // namespace

TEST_CASE("zero_mean_rows_cols examples") {
  Plane offsets(5, 7);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 7; ++c) offsets(r, c) = float(3 * r - 2);
  const Plane zo = zero_mean_rows_cols(offsets);
  for (float v : zo.values()) CHECK(std::abs(v) < 1e-6);

  Gen g(1);
  const Plane z = zero_mean_rows_cols(g.plane(16, 24));
  const Plane again = zero_mean_rows_cols(z);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(again.values()[i] - z.values()[i]) < 1e-6);
  check_row_col_means(z);
}

TEST_CASE("wiener_dft keeps white noise energy and adds no peaks") {
  Gen g(2);
  const Plane x = g.plane(64, 64);
  const Plane y = wiener_dft(x);
  const double ratio = mean_square(y) / mean_square(x);
  CHECK(ratio >= 0.5);
  CHECK(ratio <= 1.0);
  double peak_in = 0, peak_out = 0;
  for (int k1 = 0; k1 < 64; k1 += 3)
    for (int k2 = 0; k2 < 64; k2 += 3) {
      peak_in = std::max(peak_in, std::abs(dft_bin(x, k1, k2)));
      peak_out = std::max(peak_out, std::abs(dft_bin(y, k1, k2)));
    }
  CHECK(peak_out <= peak_in);
}

TEST_CASE("wiener_dft attenuates a periodic line by at least 10 dB") {
  Gen g(3);
  Plane x = g.plane(64, 64);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) x(r, c) += float(4.0 * std::cos(2 * std::numbers::pi * (8.0 * r + 12.0 * c) / 64.0));
  const Plane y = wiener_dft(x);
  const double before = std::norm(dft_bin(x, 8, 12));
  const double after = std::norm(dft_bin(y, 8, 12));
  CHECK(10 * std::log10(before / after) >= 10.0);
}

TEST_CASE("wiener_dft of zero is zero") {
  const Plane z = wiener_dft(Plane(8, 8));
  for (float v : z.values()) CHECK(v == 0.0f);
}

TEST_CASE("single image with an ideal denoiser recovers the planted pattern") {
  const Plane K = synth_prnu(64, 64, 0.02, 5);
  const double c = 120.0;
  Plane I(64, 64), W(64, 64), ratio(64, 64);
  for (std::size_t i = 0; i < I.size(); ++i) {
    I.values()[i] = float(c * (1 + K.values()[i]));
    W.values()[i] = I.values()[i] - float(c);
    ratio.values()[i] = float(double(W.values()[i]) / I.values()[i]);
  }
  const Fingerprint fp = estimate_fingerprint_from_residuals({I}, {W});
  const Plane expected = wiener_dft(zero_mean_rows_cols(ratio));
  for (std::size_t i = 0; i < I.size(); ++i) CHECK(fp.plane().values()[i] == doctest::Approx(expected.values()[i]).epsilon(1e-4).scale(1e-3));
  CHECK(testsupport::corr(fp.plane(), K) > 0.95);
  CHECK(fp.meta().images_used == 1);
  CHECK(fp.meta().rows_cols_zero_meaned);
  CHECK(fp.meta().wiener_filtered);
}

TEST_CASE("twenty flats give a fingerprint correlated with the planted PRNU") {
  const Plane K = synth_prnu(256, 256, 0.02, 7);
  const Fingerprint fp = estimate_fingerprint(flats(K, 20, 100), {}, "cam");
  CHECK(testsupport::corr(fp.plane(), K) > 0.8);
  CHECK(fp.meta().source_label == "cam");
  CHECK(fp.sigma2() == doctest::Approx(mean_square(fp.plane())).epsilon(1e-12));
  check_row_col_means(fp.plane());
}

TEST_CASE("all-black images give a zero fingerprint") {
  std::vector<Plane> imgs(3, Plane(8, 10, 0.0f));
  const Fingerprint fp = estimate_fingerprint(imgs);
  for (float v : fp.plane().values()) CHECK(v == 0.0f);
  CHECK(fp.meta().zero_denominator_pixels == 80);
  CHECK(fp.sigma2() == 0.0);
}

TEST_CASE("estimate_fingerprint input checks") {
  CHECK_THROWS_AS(estimate_fingerprint({}), Error);
  CHECK_THROWS_AS(estimate_fingerprint({Plane(8, 8, 1.0f), Plane(8, 9, 1.0f)}), Error);
  CHECK_THROWS_AS(estimate_fingerprint_from_residuals({Plane(8, 8, 1.0f)}, {}), Error);
}

TEST_CASE("property: estimate is permutation invariant and doubly zero-meaned") {
  Gen g(9);
  for (int trial = 0; trial < 4; ++trial) {
    const int m = g.integer(24, 64), n = g.integer(24, 64);
    const Plane K = synth_prnu(n, m, 0.02, 50 + trial);
    auto imgs = flats(K, g.integer(2, 5), 200 + 10 * trial);
    const Fingerprint a = estimate_fingerprint(imgs);
    std::reverse(imgs.begin(), imgs.end());
    std::swap(imgs.front(), imgs.back());
    const Fingerprint b = estimate_fingerprint(imgs);
    for (std::size_t i = 0; i < a.plane().size(); ++i)
      CHECK(std::abs(a.plane().values()[i] - b.plane().values()[i]) <= 1e-6 * rms(a.plane()));
    check_row_col_means(a.plane());
    CHECK(a.sigma2() >= 0);
    CHECK(a.sigma2() == doctest::Approx(mean_square(a.plane())).epsilon(1e-12));
  }
}

TEST_CASE("fingerprint file layout and round trip") {
  Gen g(10);
  const Fingerprint fp(g.plane(3, 5, 0.01));
  const fs::path p = fs::temp_directory_path() / "prnu_fp_roundtrip.fp";
  write_fingerprint(fp, p);
  std::ifstream in(p, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 24 + 15 * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "PRNUFP01");
  CHECK((bytes[8] | bytes[9] << 8) == 5);
  CHECK((bytes[12] | bytes[13] << 8) == 3);
  double s2;
  std::memcpy(&s2, &bytes[16], 8);
  CHECK(s2 == fp.sigma2());
  float v0;
  std::memcpy(&v0, &bytes[24], 4);
  CHECK(v0 == fp.plane()(0, 0));

  const Fingerprint back = read_fingerprint(p);
  CHECK(back.rows() == 3);
  CHECK(back.cols() == 5);
  CHECK(back.sigma2() == fp.sigma2());
  for (std::size_t i = 0; i < 15; ++i) CHECK(back.plane().values()[i] == fp.plane().values()[i]);

  // Stored sigma2 is used verbatim.
  bytes[16] ^= 1;
  {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK(read_fingerprint(p).sigma2() != fp.sigma2());

  {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), 40);
  }
  CHECK_THROWS_AS(read_fingerprint(p), Error);
  bytes[0] = 'X';
  {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(read_fingerprint(p), Error);
  fs::remove(p);
  CHECK_THROWS_AS(read_fingerprint(p), Error);
}
