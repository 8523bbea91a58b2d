#include "prnu/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "prnu/geometry.hpp"

namespace prnu {

DistortionProfile DistortionProfile::constant(double alpha) {
  DistortionProfile p;
  p.kind_ = Kind::constant;
  p.params_ = {alpha};
  return p;
}

DistortionProfile DistortionProfile::affine(double a0, double a1) {
  DistortionProfile p;
  p.kind_ = Kind::affine;
  p.params_ = {a0, a1};
  return p;
}

DistortionProfile DistortionProfile::piecewise(std::vector<double> radii, std::vector<double> alphas) {
  if (radii.empty() || radii.size() != alphas.size()) throw Error("piecewise profile needs matching non-empty samples");
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!(radii[i] > radii[i - 1])) throw Error("piecewise profile radii must increase");
  }
  DistortionProfile p;
  p.kind_ = Kind::piecewise;
  p.radii_ = std::move(radii);
  p.alphas_ = std::move(alphas);
  return p;
}

double DistortionProfile::operator()(double r) const {
  switch (kind_) {
    case Kind::constant:
      return params_[0];
    case Kind::affine:
      return params_[0] + params_[1] * r;
    case Kind::piecewise: {
      if (r <= radii_.front()) return alphas_.front();
      if (r >= radii_.back()) return alphas_.back();
      const auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
      const std::size_t i = static_cast<std::size_t>(it - radii_.begin());
      const double t = (r - radii_[i - 1]) / (radii_[i] - radii_[i - 1]);
      return alphas_[i - 1] + t * (alphas_[i] - alphas_[i - 1]);
    }
  }
  return 0.0;
}

std::string DistortionProfile::to_json() const {
  switch (kind_) {
    case Kind::constant:
      return fmt::format(R"({{"kind":"constant","alpha":{:.17g}}})", params_[0]);
    case Kind::affine:
      return fmt::format(R"({{"kind":"affine","a0":{:.17g},"a1":{:.17g}}})", params_[0], params_[1]);
    case Kind::piecewise: {
      std::string r, a;
      for (std::size_t i = 0; i < radii_.size(); ++i) {
        r += fmt::format("{}{:.17g}", i ? "," : "", radii_[i]);
        a += fmt::format("{}{:.17g}", i ? "," : "", alphas_[i]);
      }
      return fmt::format(R"({{"kind":"piecewise","radii":[{}],"alphas":[{}]}})", r, a);
    }
  }
  return "{}";
}

DistortionProfile DistortionProfile::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw Error(fmt::format("profile '{}' lacks a kind prefix", text));
  const std::string kind = text.substr(0, colon);
  std::vector<std::string> items;
  std::stringstream ss(text.substr(colon + 1));
  for (std::string item; std::getline(ss, item, ',');) items.push_back(item);
  auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(fmt::format("bad number '{}' in profile '{}'", s, text));
    }
  };
  if (kind == "constant" && items.size() == 1) return constant(num(items[0]));
  if (kind == "affine" && items.size() == 2) return affine(num(items[0]), num(items[1]));
  if (kind == "piecewise" && !items.empty()) {
    std::vector<double> r, a;
    for (const auto& it : items) {
      const auto eq = it.find('=');
      if (eq == std::string::npos) throw Error(fmt::format("piecewise sample '{}' must be r=alpha", it));
      r.push_back(num(it.substr(0, eq)));
      a.push_back(num(it.substr(eq + 1)));
    }
    return piecewise(std::move(r), std::move(a));
  }
  throw Error(fmt::format("cannot parse profile '{}'", text));
}

Plane synth_prnu(int width, int height, double strength, std::uint64_t seed) {
  if (!(strength > 0.0)) throw Error("PRNU strength must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, strength);
  Plane k(height, width);
  for (auto& v : k.values()) v = static_cast<float>(g(rng));
  return zero_mean(k);
}

Plane synth_scene(SceneKind kind, int width, int height, double level, std::uint64_t seed) {
  Plane out(height, width, static_cast<float>(level));
  if (kind == SceneKind::flat) return out;
  if (kind == SceneKind::gradient) {
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const double t = 0.5 * c / std::max(1, width - 1) + 0.5 * r / std::max(1, height - 1);
        out(r, c) = static_cast<float>(std::clamp(level * (0.6 + 0.8 * t), 0.0, 255.0));
      }
    }
    return out;
  }
  // Smooth texture: a handful of random low-frequency plane waves.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Wave {
    double fy, fx, phase, amp;
  };
  std::vector<Wave> waves(12);
  for (auto& w : waves) {
    const double f = 2.0 + 14.0 * u(rng);
    const double theta = 2.0 * std::numbers::pi * u(rng);
    w = {f * std::sin(theta) / height, f * std::cos(theta) / width, 2.0 * std::numbers::pi * u(rng),
         (0.3 / 12.0) * (0.5 + u(rng))};
  }
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double s = 1.0;
      for (const auto& w : waves) s += w.amp * std::sin(2.0 * std::numbers::pi * (w.fy * r + w.fx * c) + w.phase);
      out(r, c) = static_cast<float>(std::clamp(level * s, 0.0, 255.0));
    }
  }
  return out;
}

Plane synth_image(const SyntheticScene& scene) {
  if (!scene.I0.same_shape(scene.K)) throw Error("scene content and PRNU sizes differ");
  std::mt19937_64 rng(scene.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Plane out(scene.I0.rows(), scene.I0.cols());
  auto i0 = scene.I0.values();
  auto k = scene.K.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    double v = double(i0[i]) * (1.0 + double(k[i]));
    if (scene.theta_sigma > 0.0) v += scene.theta_sigma * g(rng);
    o[i] = static_cast<float>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

namespace {

double solve_source(const DistortionProfile& prof, double target, double hi) {
  double lo = 0.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (prof.map(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Upper bracket for the source radius, after checking the map is increasing.
double checked_bracket(const DistortionProfile& prof, double r_target) {
  double hi = std::max(r_target, 1e-6);
  for (int i = 0; prof.map(hi) < r_target; ++i) {
    if (i > 64) throw Error("distortion profile never reaches the image radius");
    hi *= 1.25;
  }
  constexpr int kChecks = 8192;
  double prev = 0.0;
  for (int i = 1; i <= kChecks; ++i) {
    const double r = hi * i / kChecks;
    if (std::abs(prof(r)) > 0.5) throw Error(fmt::format("|alpha({})| = {} exceeds 0.5", r, std::abs(prof(r))));
    const double g = prof.map(r);
    if (!(g > prev)) throw Error(fmt::format("distortion profile is not invertible near r = {}", r));
    prev = g;
  }
  return hi;
}

}  // namespace

Plane apply_profile(const Plane& image, const DistortionProfile& prof) {
  const Frame f = Frame::of(image.rows(), image.cols());
  double r_max = 0.0;
  for (int r : {0, f.rows - 1})
    for (int c : {0, f.cols - 1}) r_max = std::max(r_max, f.radius(r, c));
  const double hi = checked_bracket(prof, r_max);

  Plane out(f.rows, f.cols);
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      const double rp = f.radius(r, c);
      double y = r, x = c;
      if (rp > 0.0) {
        const double s = solve_source(prof, rp, hi) / rp;
        y = f.center_row + (r - f.center_row) * s;
        x = f.center_col + (c - f.center_col) * s;
      }
      y = std::clamp(y, 0.0, double(f.rows - 1));
      x = std::clamp(x, 0.0, double(f.cols - 1));
      double v = 0.0;
      bilinear(image, y, x, v);
      out(r, c) = static_cast<float>(v);
    }
  }
  return out;
}

DistortionProfile invert_profile(const DistortionProfile& prof, double r_max, int samples) {
  if (samples < 2 || !(r_max > 0.0)) throw Error("invert_profile needs r_max > 0 and >= 2 samples");
  const double hi = checked_bracket(prof, r_max);
  std::vector<double> radii, alphas;
  radii.push_back(0.0);
  alphas.push_back(-prof(0.0));
  for (int i = 1; i < samples; ++i) {
    const double s = r_max * i / (samples - 1);
    const double src = solve_source(prof, s, hi);
    // (src/s - 1)/s^2 rewritten without cancellation at small s.
    const double a = prof(src);
    const double q = 1.0 / (1.0 + a * src * src);
    radii.push_back(s);
    alphas.push_back(-a * q * q * q);
  }
  return DistortionProfile::piecewise(std::move(radii), std::move(alphas));
}

}  // namespace prnu
