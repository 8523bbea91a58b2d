#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prnu/adaptive.hpp"
#include "prnu/denoiser.hpp"
#include "prnu/fingerprint.hpp"

namespace prnu {

/// inv / dir: one approach only. two_way: both, optimized independently.
/// id: direct statistic reuses the inverse optima; di: the reverse.
enum class Variant { inv, dir, two_way, id, di };

std::string_view to_string(Variant v);
/// Accepts Inv, Dir, 2W, ID, DI (case-insensitive).
Variant parse_variant(std::string_view s);

struct ThresholdPair {
  double fpr05 = 0.0;
  double fpr01 = 0.0;
};

/// Published thresholds per variant and model. Linear two-way has none
/// published and falls back to the linear inverse pair.
ThresholdPair default_thresholds(Variant v, Model m);

/// How per-annulus correlations are combined in the CPCE numerator.
/// coherent: ssq(Σ Φ_k). per_annulus: Σ ssq(Φ_k).
enum class CpceNumerator { coherent, per_annulus };

/// E_k(alpha_f) for every annulus. Throws for alpha_f = 0.
std::vector<double> energy_floor(const AnnulusProblem& problem, double alpha_f);

/// Running cumulative PCE over the visit order.
class CpceState {
 public:
  CpceState(std::vector<double> floors, double sigma2, std::vector<int> order,
            CpceNumerator mode = CpceNumerator::per_annulus);

  /// Numerator and denominator after `visited()` annuli.
  [[nodiscard]] double numerator() const;
  [[nodiscard]] double denominator() const;
  [[nodiscard]] double value() const { return numerator() / denominator(); }
  [[nodiscard]] int visited() const { return n_; }
  [[nodiscard]] const std::vector<double>& floors() const { return floors_; }
  [[nodiscard]] double sigma2() const { return sigma2_; }
  [[nodiscard]] const std::vector<int>& order() const { return order_; }

 private:
  friend double cpce_update(CpceState& state, const AnnulusTrace& trace);
  std::vector<double> floors_;
  double sigma2_;
  std::vector<int> order_;
  CpceNumerator mode_;
  int n_ = 0;
  double phi_sum_ = 0.0;
  double ssq_sum_ = 0.0;
  double energy_terms_ = 0.0;
};

/// Adds the next annulus in visit order and returns CPCE_n. The annulus's
/// floor term is replaced by its optimized energy; skipped annuli drop out.
double cpce_update(CpceState& state, const AnnulusTrace& trace);

/// Trace dump: one row per annulus. Visited annuli come first in visit
/// order; the rest carry only k, energy_floor and sigma2.
void write_trace_csv(std::ostream& out, const std::vector<AnnulusTrace>& traces, const std::vector<double>& floors,
                     double sigma2);

/// Recomputes the CPCE trajectory from a trace dump.
std::vector<double> replay_cpce_csv(std::istream& in, CpceNumerator mode = CpceNumerator::per_annulus);

struct AttributeConfig {
  Variant variant = Variant::inv;
  Model model = Model::cubic;
  std::optional<double> threshold;  ///< defaults to the FPR 0.05 table entry
  double r1_px = 250.0;
  double delta_px = 64.0;
  SearchDefaults search;
  double alpha_f = 0.05;
  CpceNumerator numerator = CpceNumerator::per_annulus;
  DenoiserConfig denoiser;
  bool early_stop = true;

  [[nodiscard]] double effective_threshold() const;
  void validate() const;
};

/// Everything recorded for one approach during an attribution run.
struct ApproachRun {
  Approach approach = Approach::inv;
  bool inherited = false;  ///< alphas came from the other approach
  int k0 = 0;
  std::vector<int> order;
  std::vector<AnnulusTrace> traces;
  std::vector<double> floors;
  double sigma2 = 0.0;
  std::vector<double> cpce;
  std::size_t evaluations = 0;  ///< objective evaluations, floors excluded
};

struct Verdict {
  Variant variant = Variant::inv;
  Model model = Model::cubic;
  bool h1 = false;
  double threshold = 0.0;
  std::vector<double> cpce_trajectory;  ///< max over checked statistics per n
  std::optional<int> stop_index;        ///< n (1-based) of the first crossing
  int annuli = 0;                       ///< L
  int annuli_processed = 0;
  std::vector<std::optional<double>> alpha_profile;  ///< per k, primary approach
  double elapsed_ms = 0.0;
  std::vector<ApproachRun> runs;

  [[nodiscard]] double cpce_max() const;
  /// JSON report; timing is omitted when `with_timing` is false.
  [[nodiscard]] std::string to_json(bool with_timing = true) const;
};

/// Full pipeline from an image: residual extraction, then attribute_residual.
Verdict attribute(const Fingerprint& fp, const Plane& image, const AttributeConfig& cfg = {});

/// Attribution from a precomputed noise residual (zero-meaned here). Inputs
/// of different size are central-cropped to the common size.
Verdict attribute_residual(const Fingerprint& fp, const Plane& residual, const AttributeConfig& cfg = {});

/// Whole-image PCE of one approach with per-annulus alphas: the moving plane
/// is warped annulus by annulus and compared with the reference over the
/// union of the surviving sets.
double pce_warped(const AnnulusProblem& problem, const std::vector<double>& alpha_by_k);

}  // namespace prnu
