#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "prnu/fingerprint.hpp"
#include "prnu/geometry.hpp"
#include "prnu/plane.hpp"

namespace prnu {

/// Inverse: the residual is warped onto the fingerprint grid.
/// Direct: the fingerprint is warped onto the residual grid.
enum class Approach { inv, dir };

std::string_view to_string(Approach a);

/// Search parameters; defaults are the published ones.
struct SearchDefaults {
  int U = 6;
  double mu = 1.0;
  int A_min = 7;
  double init_min = -0.22;
  double init_max = 0.22;
  double init_step = 0.01;
  double first_lambda = 0.001;
  int first_A = 9;
  /// Resolution used when the last change falls in (0.001, 0.01].
  double gap_lambda = 0.01;
  /// Candidates keeping fewer than this fraction of the annulus lattice
  /// inside the image are not evaluated as maxima.
  double min_coverage = 0.1;

  void validate() const;
};

/// Value of the per-annulus objective at one alpha.
struct ObjectiveValue {
  double phi = 0.0;     ///< Φ_k
  double energy = 0.0;  ///< E_k
  std::size_t q_count = 0;
  [[nodiscard]] bool defined() const { return q_count > 0 && energy > 0.0; }
  /// φ = Φ/E; only meaningful when defined().
  [[nodiscard]] double varphi() const { return phi / energy; }
};

/// Φ, E and φ from an already warped annulus and the reference plane.
ObjectiveValue objective(const Plane& reference, const WarpedAnnulus& warped);

/// Per-annulus optimization record.
struct AnnulusTrace {
  int k = 0;
  double alpha_star = 0.0;
  double phi = 0.0;
  double energy = 0.0;
  std::size_t q_count = 0;
  std::vector<double> candidates;
  double lambda = 0.0;
  int A = 0;
  bool skipped = false;  ///< no candidate produced a defined objective
};

/// One approach's matching problem: reference plane, moving plane, and the
/// partition. Counts objective evaluations.
class AnnulusProblem {
 public:
  /// inv: reference = fingerprint, moving = residual, forward map.
  /// dir: reference = residual, moving = fingerprint, inverse map.
  AnnulusProblem(const Plane& fingerprint, const Plane& residual, const AnnulusPartition& part, Approach approach,
                 Model model);

  [[nodiscard]] ObjectiveValue evaluate(int k, double alpha) const;
  [[nodiscard]] const AnnulusPartition& partition() const { return *part_; }
  [[nodiscard]] const std::vector<AnnulusLattice>& lattices() const { return lattices_; }
  [[nodiscard]] Approach approach() const { return approach_; }
  [[nodiscard]] Model model() const { return model_; }
  [[nodiscard]] const Plane& reference() const { return *reference_; }
  [[nodiscard]] const Plane& moving() const { return *moving_; }
  [[nodiscard]] RadialMap map(double alpha) const;
  /// Mean square of the reference over the full image (σ² of the statistic).
  [[nodiscard]] double reference_sigma2() const { return reference_sigma2_; }
  void set_reference_sigma2(double s) { reference_sigma2_ = s; }

  [[nodiscard]] std::size_t evaluations() const { return evaluations_; }

 private:
  const Plane* reference_;
  const Plane* moving_;
  const AnnulusPartition* part_;
  std::vector<AnnulusLattice> lattices_;
  Approach approach_;
  Model model_;
  double reference_sigma2_ = 0.0;
  mutable std::size_t evaluations_ = 0;
};

/// argmax_k φ_k(0); ties go to the smaller k. Throws when every annulus is
/// undefined at alpha = 0.
int select_initial_annulus(const AnnulusProblem& problem);

/// Arithmetic grid of A points centered at alpha_hat with step lambda.
std::vector<double> build_search_set(double alpha_hat, double lambda, int A);

/// Exhaustive argmax of φ over the candidate set. Ties go to the smallest
/// |alpha|, then the smaller alpha. Returns a skipped trace when no
/// candidate is defined or covers at least `min_coverage` of the lattice.
AnnulusTrace refine(const AnnulusProblem& problem, int k, const std::vector<double>& candidates,
                    double min_coverage = 0.0);

/// LMS linear predictor over the sequence of optimal alphas.
struct SearchState {
  std::vector<double> u;
  std::vector<double> beta;
  double mu = 1.0;
  double lambda = 0.001;
  int A = 9;
  int A_min = 7;
  Direction direction = Direction::forward;

  /// Forward start: u = [0,...,0,1], beta = [0,...,0,alpha_k0].
  static SearchState forward(double alpha_k0, const SearchDefaults& d);
  /// Backward start: u = [1,0,...,0], beta = [alpha_k0, alpha_k0+1, ...]
  /// taken from `following` (missing entries are 0).
  static SearchState backward(const std::vector<double>& following, const SearchDefaults& d);

  [[nodiscard]] double predict() const;
};

/// Feeds the optimum found for the predicted annulus: e = alpha_star - uᵀβ,
/// u += mu e β, then β takes alpha_star. Returns the next prediction.
double lms_step(SearchState& state, double alpha_star);

/// Next resolution from the change between consecutive optima: 0.1 above
/// 0.1, 0.01 in (0.01, 0.1], 0.001 up to 0.001, and `gap_lambda` between.
double adapt_resolution(double prev_alpha, double cur_alpha, double gap_lambda = 0.01);

/// Next candidate-set size.
int adapt_set_size(bool maximizer_at_extreme, int A, int A_min);

/// Stepwise driver visiting k0, k0+1, ..., L-1, then k0-1, ..., 0.
class AdaptiveSearch {
 public:
  AdaptiveSearch(const AnnulusProblem& problem, SearchDefaults defaults = {});
  /// Starts at a given k0 instead of the objective's argmax.
  AdaptiveSearch(const AnnulusProblem& problem, int k0, SearchDefaults defaults = {});

  [[nodiscard]] bool done() const { return pos_ >= order_.size(); }
  [[nodiscard]] int k0() const { return k0_; }
  /// Visit order ξ.
  [[nodiscard]] const std::vector<int>& order() const { return order_; }
  /// Optimizes the next annulus in ξ order.
  const AnnulusTrace& step();
  [[nodiscard]] const std::vector<AnnulusTrace>& traces() const { return traces_; }

 private:
  void start_backward();
  double optimum(int k) const;

  const AnnulusProblem* problem_;
  SearchDefaults d_;
  int k0_ = 0;
  std::vector<int> order_;
  std::size_t pos_ = 0;
  std::vector<AnnulusTrace> traces_;
  std::vector<std::optional<double>> alpha_by_k_;
  SearchState state_;
  double next_hat_ = 0.0;
  std::optional<double> prev_alpha_;  ///< last optimum in the current direction
};

/// Runs the whole search; `on_trace` returning true stops it early.
std::vector<AnnulusTrace> optimize_alphas(const AnnulusProblem& problem, const SearchDefaults& defaults = {},
                                          const std::function<bool(const AnnulusTrace&)>& on_trace = {});

/// Visit order k0, k0+1, ..., L-1, k0-1, ..., 0.
std::vector<int> visit_order(int k0, int count);

/// SNR loss factor (1+β)²/(4β) of the unweighted estimator.
double snr_loss_ratio(double beta);

}  // namespace prnu
