#include "prnu/adaptive.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace prnu {

std::string_view to_string(Approach a) { return a == Approach::inv ? "inv" : "dir"; }

void SearchDefaults::validate() const {
  if (U < 1) throw Error("predictor order U must be >= 1");
  if (!(mu >= 0.0)) throw Error("LMS step size must be >= 0");
  if (A_min < 3 || A_min % 2 == 0) throw Error(fmt::format("A_min = {} must be odd and >= 3", A_min));
  if (first_A < A_min || first_A % 2 == 0) throw Error(fmt::format("first A = {} must be odd and >= A_min", first_A));
  if (!(init_step > 0.0) || !(init_max >= init_min)) throw Error("invalid initial search grid");
  if (!(first_lambda > 0.0)) throw Error("first resolution must be positive");
  if (!(gap_lambda > 0.0)) throw Error("gap resolution must be positive");
  if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) throw Error("minimum coverage must lie in [0, 1]");
}

ObjectiveValue objective(const Plane& reference, const WarpedAnnulus& warped) {
  ObjectiveValue v;
  for (std::size_t i = 0; i < warped.points.size(); ++i) {
    const auto& p = warped.points[i];
    v.phi += double(reference(p.row, p.col)) * warped.values[i];
    v.energy += warped.values[i] * warped.values[i];
  }
  v.q_count = warped.points.size();
  return v;
}

AnnulusProblem::AnnulusProblem(const Plane& fingerprint, const Plane& residual, const AnnulusPartition& part,
                               Approach approach, Model model)
    : part_(&part), lattices_(all_lattices(part)), approach_(approach), model_(model) {
  if (!fingerprint.same_shape(residual)) throw Error("fingerprint and residual sizes differ");
  if (fingerprint.rows() != part.frame.rows || fingerprint.cols() != part.frame.cols) {
    throw Error("partition frame does not match the inputs");
  }
  reference_ = approach == Approach::inv ? &fingerprint : &residual;
  moving_ = approach == Approach::inv ? &residual : &fingerprint;
  reference_sigma2_ = mean_square(*reference_);
}

RadialMap AnnulusProblem::map(double alpha) const {
  return {model_, alpha, approach_ == Approach::inv ? Direction::forward : Direction::inverse};
}

ObjectiveValue AnnulusProblem::evaluate(int k, double alpha) const {
  ++evaluations_;
  const RadialMap m = map(alpha);
  if (m.model == Model::linear && m.direction == Direction::inverse && alpha == -1.0) return {};
  const auto mo = warp_moments(*reference_, *moving_, *part_, lattices_.at(k), m);
  return {mo.phi, mo.energy, mo.q_count};
}

int select_initial_annulus(const AnnulusProblem& problem) {
  int best = -1;
  double best_val = 0.0;
  for (int k = 0; k < problem.partition().count(); ++k) {
    const auto v = problem.evaluate(k, 0.0);
    if (!v.defined()) continue;
    if (best < 0 || v.varphi() > best_val) {
      best = k;
      best_val = v.varphi();
    }
  }
  if (best < 0) throw Error("no annulus has a defined objective at alpha = 0");
  return best;
}

std::vector<double> build_search_set(double alpha_hat, double lambda, int A) {
  if (A < 1 || A % 2 == 0) throw Error(fmt::format("search set size {} must be odd", A));
  const int h = (A - 1) / 2;
  std::vector<double> out;
  out.reserve(A);
  for (int n = -h; n <= h; ++n) out.push_back(alpha_hat + lambda * n);
  return out;
}

namespace {

// True when a should replace the incumbent b at equal objective.
bool preferred(double a, double b) {
  if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
  return a < b;
}

}  // namespace

AnnulusTrace refine(const AnnulusProblem& problem, int k, const std::vector<double>& candidates,
                    double min_coverage) {
  if (candidates.empty()) throw Error("refine needs a non-empty candidate set");
  const double min_q = min_coverage * double(problem.lattices().at(k).size());
  AnnulusTrace t;
  t.k = k;
  t.candidates = candidates;
  bool found = false;
  double best = 0.0;
  for (double a : candidates) {
    const auto v = problem.evaluate(k, a);
    if (!v.defined() || double(v.q_count) < min_q) continue;
    const double f = v.varphi();
    if (!found || f > best || (f == best && preferred(a, t.alpha_star))) {
      found = true;
      best = f;
      t.alpha_star = a;
      t.phi = v.phi;
      t.energy = v.energy;
      t.q_count = v.q_count;
    }
  }
  t.skipped = !found;
  return t;
}

SearchState SearchState::forward(double alpha_k0, const SearchDefaults& d) {
  SearchState s;
  s.u.assign(d.U, 0.0);
  s.u.back() = 1.0;
  s.beta.assign(d.U, 0.0);
  s.beta.back() = alpha_k0;
  s.mu = d.mu;
  s.lambda = d.first_lambda;
  s.A = d.first_A;
  s.A_min = d.A_min;
  s.direction = Direction::forward;
  return s;
}

SearchState SearchState::backward(const std::vector<double>& following, const SearchDefaults& d) {
  SearchState s;
  s.u.assign(d.U, 0.0);
  s.u.front() = 1.0;
  s.beta.assign(d.U, 0.0);
  for (int i = 0; i < d.U && i < static_cast<int>(following.size()); ++i) s.beta[i] = following[i];
  s.mu = d.mu;
  s.lambda = d.first_lambda;
  s.A = d.first_A;
  s.A_min = d.A_min;
  s.direction = Direction::inverse;
  return s;
}

double SearchState::predict() const {
  double p = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) p += u[i] * beta[i];
  return p;
}

double lms_step(SearchState& s, double alpha_star) {
  const double e = alpha_star - s.predict();
  for (std::size_t i = 0; i < s.u.size(); ++i) s.u[i] += s.mu * e * s.beta[i];
  if (s.direction == Direction::forward) {
    std::rotate(s.beta.begin(), s.beta.begin() + 1, s.beta.end());
    s.beta.back() = alpha_star;
  } else {
    std::rotate(s.beta.rbegin(), s.beta.rbegin() + 1, s.beta.rend());
    s.beta.front() = alpha_star;
  }
  return s.predict();
}

double adapt_resolution(double prev_alpha, double cur_alpha, double gap_lambda) {
  const double d = std::abs(cur_alpha - prev_alpha);
  if (d > 0.1) return 0.1;
  if (d > 0.01) return 0.01;
  if (d > 0.001) return gap_lambda;
  return 0.001;
}

int adapt_set_size(bool maximizer_at_extreme, int A, int A_min) {
  if (maximizer_at_extreme) return A + 2;
  if (A <= A_min) return A_min;
  return A - 2;
}

std::vector<int> visit_order(int k0, int count) {
  if (k0 < 0 || k0 >= count) throw Error(fmt::format("k0 = {} outside [0, {})", k0, count));
  std::vector<int> order;
  order.reserve(count);
  for (int k = k0; k < count; ++k) order.push_back(k);
  for (int k = k0 - 1; k >= 0; --k) order.push_back(k);
  return order;
}

AdaptiveSearch::AdaptiveSearch(const AnnulusProblem& problem, SearchDefaults defaults)
    : AdaptiveSearch(problem, select_initial_annulus(problem), defaults) {}

AdaptiveSearch::AdaptiveSearch(const AnnulusProblem& problem, int k0, SearchDefaults defaults)
    : problem_(&problem), d_(defaults), k0_(k0) {
  d_.validate();
  order_ = visit_order(k0, problem.partition().count());
  alpha_by_k_.assign(problem.partition().count(), std::nullopt);
}

double AdaptiveSearch::optimum(int k) const { return alpha_by_k_[k].value_or(0.0); }

void AdaptiveSearch::start_backward() {
  std::vector<double> following;
  for (int k = k0_; k < static_cast<int>(alpha_by_k_.size()) && static_cast<int>(following.size()) < d_.U; ++k) {
    following.push_back(optimum(k));
  }
  state_ = SearchState::backward(following, d_);
  next_hat_ = state_.predict();
  prev_alpha_ = optimum(k0_);
}

const AnnulusTrace& AdaptiveSearch::step() {
  if (done()) throw Error("adaptive search already visited every annulus");
  const int k = order_[pos_];
  AnnulusTrace t;
  if (pos_ == 0) {
    std::vector<double> grid;
    const auto lo = static_cast<long>(std::ceil(d_.init_min / d_.init_step - 1e-9));
    const auto hi = static_cast<long>(std::floor(d_.init_max / d_.init_step + 1e-9));
    for (long i = lo; i <= hi; ++i) grid.push_back(double(i) * d_.init_step);
    t = refine(*problem_, k, grid, d_.min_coverage);
    t.lambda = d_.init_step;
    t.A = static_cast<int>(grid.size());
    if (t.skipped) t.alpha_star = 0.0;
    alpha_by_k_[k] = t.alpha_star;
    state_ = SearchState::forward(t.alpha_star, d_);
    next_hat_ = state_.predict();
    prev_alpha_ = t.alpha_star;
  } else {
    if (k == k0_ - 1) start_backward();
    const auto set = build_search_set(next_hat_, state_.lambda, state_.A);
    t = refine(*problem_, k, set, d_.min_coverage);
    t.lambda = state_.lambda;
    t.A = state_.A;
    if (t.skipped) {
      t.alpha_star = prev_alpha_.value_or(0.0);
    } else {
      const bool extreme = t.alpha_star == set.front() || t.alpha_star == set.back();
      state_.lambda = adapt_resolution(*prev_alpha_, t.alpha_star, d_.gap_lambda);
      state_.A = adapt_set_size(extreme, state_.A, state_.A_min);
      next_hat_ = lms_step(state_, t.alpha_star);
      prev_alpha_ = t.alpha_star;
    }
    alpha_by_k_[k] = t.alpha_star;
  }
  ++pos_;
  traces_.push_back(std::move(t));
  return traces_.back();
}

std::vector<AnnulusTrace> optimize_alphas(const AnnulusProblem& problem, const SearchDefaults& defaults,
                                          const std::function<bool(const AnnulusTrace&)>& on_trace) {
  AdaptiveSearch search(problem, defaults);
  while (!search.done()) {
    const auto& t = search.step();
    if (on_trace && on_trace(t)) break;
  }
  return search.traces();
}

double snr_loss_ratio(double beta) {
  if (!(beta > 0.0)) throw Error(fmt::format("snr_loss_ratio needs beta > 0, got {}", beta));
  return 1.0 + (1.0 - beta) * (1.0 - beta) / (4.0 * beta);
}

}  // namespace prnu
