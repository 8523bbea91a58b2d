#include "prnu/decision.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "prnu/pce.hpp"

namespace prnu {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::inv:
      return "Inv";
    case Variant::dir:
      return "Dir";
    case Variant::two_way:
      return "2W";
    case Variant::id:
      return "ID";
    case Variant::di:
      return "DI";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  std::string low(s);
  std::transform(low.begin(), low.end(), low.begin(), [](unsigned char c) { return std::tolower(c); });
  if (low == "inv") return Variant::inv;
  if (low == "dir") return Variant::dir;
  if (low == "2w") return Variant::two_way;
  if (low == "id") return Variant::id;
  if (low == "di") return Variant::di;
  throw Error(fmt::format("unknown variant '{}' (expected Inv, Dir, 2W, ID or DI)", s));
}

ThresholdPair default_thresholds(Variant v, Model m) {
  const bool cub = m == Model::cubic;
  switch (v) {
    case Variant::id:
      return cub ? ThresholdPair{73.48, 90.28} : ThresholdPair{98.86, 112.71};
    case Variant::di:
      return cub ? ThresholdPair{71.13, 84.75} : ThresholdPair{90.01, 105.63};
    case Variant::inv:
      return cub ? ThresholdPair{73.48, 90.29} : ThresholdPair{97.66, 111.72};
    case Variant::dir:
      return cub ? ThresholdPair{71.13, 84.57} : ThresholdPair{90.01, 105.63};
    case Variant::two_way:
      return cub ? ThresholdPair{71.12, 84.34} : ThresholdPair{97.66, 111.72};
  }
  return {};
}

std::vector<double> energy_floor(const AnnulusProblem& problem, double alpha_f) {
  if (alpha_f == 0.0 || !std::isfinite(alpha_f)) throw Error("energy floor alpha must be finite and nonzero");
  std::vector<double> out(problem.partition().count());
  for (int k = 0; k < problem.partition().count(); ++k) out[k] = problem.evaluate(k, alpha_f).energy;
  return out;
}

CpceState::CpceState(std::vector<double> floors, double sigma2, std::vector<int> order, CpceNumerator mode)
    : floors_(std::move(floors)), sigma2_(sigma2), order_(std::move(order)), mode_(mode) {
  if (!(sigma2_ > 0.0)) throw Error("CPCE needs a positive reference variance");
  if (order_.size() != floors_.size()) throw Error("visit order and floors disagree in length");
  for (double f : floors_) energy_terms_ += f;
}

double CpceState::numerator() const { return mode_ == CpceNumerator::coherent ? ssq(phi_sum_) : ssq_sum_; }

double CpceState::denominator() const { return sigma2_ * energy_terms_; }

double cpce_update(CpceState& s, const AnnulusTrace& t) {
  if (s.n_ >= static_cast<int>(s.order_.size())) throw Error("CPCE already covers every annulus");
  if (t.k != s.order_[s.n_]) {
    throw Error(fmt::format("trace for annulus {} arrived, expected {}", t.k, s.order_[s.n_]));
  }
  ++s.n_;
  s.energy_terms_ -= s.floors_[t.k];
  if (!t.skipped) {
    s.phi_sum_ += t.phi;
    s.ssq_sum_ += ssq(t.phi);
    s.energy_terms_ += t.energy;
  }
  const double den = s.denominator();
  if (!(den > 0.0)) throw Error(fmt::format("CPCE denominator {} is not positive", den));
  return s.numerator() / den;
}

void write_trace_csv(std::ostream& out, const std::vector<AnnulusTrace>& traces, const std::vector<double>& floors,
                     double sigma2) {
  out << "k,alpha_star,phi,energy,q_count,lambda,A_k,energy_floor,sigma2,visited\n";
  std::vector<bool> seen(floors.size(), false);
  for (const auto& t : traces) {
    seen.at(t.k) = true;
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{},{:.17g},{},{:.17g},{:.17g},1\n", t.k, t.alpha_star, t.phi,
                       t.energy, t.q_count, t.lambda, t.A, floors[t.k], sigma2);
  }
  for (std::size_t k = 0; k < floors.size(); ++k) {
    if (!seen[k]) out << fmt::format("{},,,,,,,{:.17g},{:.17g},0\n", k, floors[k], sigma2);
  }
}

std::vector<double> replay_cpce_csv(std::istream& in, CpceNumerator mode) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty trace dump");
  struct Row {
    AnnulusTrace t;
    double floor;
    bool visited;
  };
  std::vector<Row> rows;
  double sigma2 = 0.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() == 9) f.emplace_back();
    if (f.size() != 10) throw Error(fmt::format("malformed trace row '{}'", line));
    Row r{};
    r.t.k = std::stoi(f[0]);
    r.floor = std::stod(f[7]);
    sigma2 = std::stod(f[8]);
    r.visited = f[9] == "1";
    if (r.visited) {
      r.t.alpha_star = std::stod(f[1]);
      r.t.phi = std::stod(f[2]);
      r.t.energy = std::stod(f[3]);
      r.t.q_count = std::stoull(f[4]);
      r.t.skipped = r.t.q_count == 0 || r.t.energy == 0.0;
    }
    rows.push_back(r);
  }
  std::vector<double> floors(rows.size(), 0.0);
  std::vector<int> order;
  for (const auto& r : rows) {
    if (r.t.k < 0 || r.t.k >= static_cast<int>(rows.size())) throw Error("trace row index out of range");
    floors[r.t.k] = r.floor;
    order.push_back(r.t.k);
  }
  CpceState state(floors, sigma2, order, mode);
  std::vector<double> out;
  for (const auto& r : rows) {
    if (!r.visited) break;
    out.push_back(cpce_update(state, r.t));
  }
  return out;
}

double AttributeConfig::effective_threshold() const {
  return threshold ? *threshold : default_thresholds(variant, model).fpr05;
}

void AttributeConfig::validate() const {
  search.validate();
  denoiser.validate();
  if (alpha_f == 0.0) throw Error("alpha_f must be nonzero");
  if (!(delta_px > 0.0) || r1_px < delta_px) throw Error("annulus geometry requires r1_px >= delta_px > 0");
}

double Verdict::cpce_max() const {
  if (cpce_trajectory.empty()) return 0.0;
  return *std::max_element(cpce_trajectory.begin(), cpce_trajectory.end());
}

std::string Verdict::to_json(bool with_timing) const {
  nlohmann::ordered_json j;
  j["variant"] = std::string(to_string(variant));
  j["model"] = std::string(to_string(model));
  j["decision"] = h1 ? "H1" : "H0";
  j["cpce_max"] = cpce_max();
  j["stop_index"] = stop_index ? nlohmann::ordered_json(*stop_index) : nlohmann::ordered_json(nullptr);
  j["threshold"] = threshold;
  j["annuli"] = annuli;
  j["annuli_processed"] = annuli_processed;
  auto profile = nlohmann::ordered_json::array();
  for (const auto& a : alpha_profile) profile.push_back(a ? nlohmann::ordered_json(*a) : nlohmann::ordered_json(nullptr));
  j["alpha_profile"] = profile;
  j["cpce_trajectory"] = cpce_trajectory;
  if (!runs.empty()) j["k0"] = runs.front().k0;
  if (with_timing) j["elapsed_ms"] = elapsed_ms;
  return j.dump();
}

namespace {

struct Runner {
  std::unique_ptr<AnnulusProblem> problem;
  std::unique_ptr<AdaptiveSearch> search;  // null when inherited
  std::unique_ptr<CpceState> cpce;
  ApproachRun run;
  std::size_t eval_base = 0;
};

AnnulusTrace inherited_trace(const AnnulusProblem& problem, const AnnulusTrace& src) {
  AnnulusTrace t;
  t.k = src.k;
  t.alpha_star = src.alpha_star;
  t.candidates = {src.alpha_star};
  t.lambda = src.lambda;
  t.A = 1;
  if (src.skipped) {
    t.skipped = true;
    return t;
  }
  const auto v = problem.evaluate(src.k, src.alpha_star);
  t.phi = v.phi;
  t.energy = v.energy;
  t.q_count = v.q_count;
  t.skipped = !v.defined();
  return t;
}

}  // namespace

Verdict attribute_residual(const Fingerprint& fp, const Plane& residual_in, const AttributeConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const int rows = std::min(fp.rows(), residual_in.rows());
  const int cols = std::min(fp.cols(), residual_in.cols());
  const bool crop_fp = fp.rows() != rows || fp.cols() != cols;
  Plane K = crop_fp ? center_crop(fp.plane(), rows, cols) : fp.plane();
  K.set_origin(0, 0);
  const double sigma2_k = crop_fp ? mean_square(K) : fp.sigma2();
  Plane W = residual_in.rows() == rows && residual_in.cols() == cols ? residual_in
                                                                      : center_crop(residual_in, rows, cols);
  W.set_origin(0, 0);
  W = zero_mean(W);

  const AnnulusPartition part = partition(cols, rows, cfg.r1_px, cfg.delta_px);
  const int L = part.count();

  const bool want_inv = cfg.variant != Variant::dir;
  const bool want_dir = cfg.variant != Variant::inv;
  std::vector<Runner> runners;
  auto add = [&](Approach a, bool inherited) {
    Runner r;
    r.problem = std::make_unique<AnnulusProblem>(K, W, part, a, cfg.model);
    if (a == Approach::inv) r.problem->set_reference_sigma2(sigma2_k);
    r.run.approach = a;
    r.run.inherited = inherited;
    r.run.sigma2 = r.problem->reference_sigma2();
    r.run.floors = energy_floor(*r.problem, cfg.alpha_f);
    r.eval_base = r.problem->evaluations();
    runners.push_back(std::move(r));
  };
  // The first runner is the primary (searched) approach.
  switch (cfg.variant) {
    case Variant::inv:
    case Variant::id:
      add(Approach::inv, false);
      if (want_dir) add(Approach::dir, true);
      break;
    case Variant::dir:
    case Variant::di:
      add(Approach::dir, false);
      if (want_inv) add(Approach::inv, true);
      break;
    case Variant::two_way:
      add(Approach::inv, false);
      add(Approach::dir, false);
      break;
  }
  for (auto& r : runners) {
    if (!r.run.inherited) {
      r.search = std::make_unique<AdaptiveSearch>(*r.problem, cfg.search);
      r.run.k0 = r.search->k0();
      r.run.order = r.search->order();
    } else {
      r.run.k0 = runners.front().run.k0;
      r.run.order = runners.front().run.order;
    }
    r.cpce = std::make_unique<CpceState>(r.run.floors, r.run.sigma2, r.run.order, cfg.numerator);
  }

  Verdict v;
  v.variant = cfg.variant;
  v.model = cfg.model;
  v.threshold = cfg.effective_threshold();
  v.annuli = L;
  for (int n = 0; n < L; ++n) {
    double best = -std::numeric_limits<double>::infinity();
    for (auto& r : runners) {
      AnnulusTrace t = r.search ? r.search->step() : inherited_trace(*r.problem, runners.front().run.traces.back());
      r.run.cpce.push_back(cpce_update(*r.cpce, t));
      r.run.traces.push_back(std::move(t));
      best = std::max(best, r.run.cpce.back());
    }
    v.cpce_trajectory.push_back(best);
    v.annuli_processed = n + 1;
    if (best > v.threshold && !v.stop_index) {
      v.stop_index = n + 1;
      v.h1 = true;
      if (cfg.early_stop) break;
    }
  }

  v.alpha_profile.assign(L, std::nullopt);
  for (const auto& t : runners.front().run.traces) v.alpha_profile[t.k] = t.alpha_star;
  for (auto& r : runners) {
    r.run.evaluations = r.problem->evaluations() - r.eval_base;
    v.runs.push_back(std::move(r.run));
  }
  v.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return v;
}

Verdict attribute(const Fingerprint& fp, const Plane& image, const AttributeConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Verdict v = attribute_residual(fp, residual(image, cfg.denoiser), cfg);
  v.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return v;
}

double pce_warped(const AnnulusProblem& problem, const std::vector<double>& alpha_by_k) {
  const auto& part = problem.partition();
  if (static_cast<int>(alpha_by_k.size()) != part.count()) throw Error("one alpha per annulus is required");
  const Plane& moving = problem.moving();
  Plane warped(moving.rows(), moving.cols());
  std::vector<std::uint8_t> mask(warped.size(), 0);
  for (int k = 0; k < part.count(); ++k) {
    const auto w = warp_annulus(moving, part, problem.lattices()[k], problem.map(alpha_by_k[k]));
    for (std::size_t i = 0; i < w.points.size(); ++i) {
      warped(w.points[i].row, w.points[i].col) = static_cast<float>(w.values[i]);
      mask[static_cast<std::size_t>(w.points[i].row) * warped.cols() + w.points[i].col] = 1;
    }
  }
  Plane ref = problem.reference();
  ref.set_origin(0, 0);
  ref.set_mask(mask);
  warped.set_mask(std::move(mask));
  return pce(ref, warped);
}

}  // namespace prnu
