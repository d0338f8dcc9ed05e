#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "blrm/model.hpp"
#include "blrm/sampler.hpp"

namespace blrm {

/// Toxicity interval layout plus the overdose-control cap.
/// The category edges follow the usual convention: a DLT probability below
/// under_max is an underdose, anything from under_max up to (but excluding)
/// over_min is in the target band, and over_min or above is an overdose.
struct IntervalSpec {
  double under_max = 0.16;
  double over_min = 0.33;
  double ewoc_max = 0.25;

  void validate() const;

  bool operator==(const IntervalSpec&) const = default;
};

enum class ToxCategory { Under, Target, Over };

/// Boundary convention: pi == under_max is Target, pi == over_min is Over.
ToxCategory classify_pi(double pi, const IntervalSpec& intervals);

/// Escalation with overdose control: a dose is admissible when the posterior
/// probability of an overdose is at most ewoc_max (inclusive).
bool ewoc_satisfied(double p_over, const IntervalSpec& intervals);

/// Posterior summary of one dose combination.
struct SurfaceRow {
  DoseCombination doses;
  double p_under = 0.0;
  double p_target = 0.0;
  double p_over = 0.0;
  double mean_pi = 0.0;
  double q025 = 0.0;   // quantiles by linear interpolation of order stats
  double q50 = 0.0;
  double q975 = 0.0;
  bool ewoc_ok = false;
};

/// Thrown when posterior draws that failed the convergence gate are used for
/// dose decisions without an explicit override.
class NotConvergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The standard per-drug dose ladder used when a run does not supply one.
const std::vector<double>& default_dose_ladder();

/// All combinations of the per-drug ladders. The last drug varies fastest,
/// so rows come out in lexicographic order of the dose tuple.
std::vector<DoseCombination> cartesian_grid(
    const std::vector<std::vector<double>>& ladders);

/// Summarizes pi(doses) over all posterior draws.
SurfaceRow summarize_point(const PosteriorDraws& draws, const ModelSpec& spec,
                           const DoseCombination& doses,
                           const IntervalSpec& intervals);

/// Row per grid point, in grid order. Draws that failed the convergence gate
/// are refused with NotConvergedError unless force_unconverged is set.
std::vector<SurfaceRow> evaluate_grid(const PosteriorDraws& draws,
                                      const ModelSpec& spec,
                                      const std::vector<DoseCombination>& grid,
                                      const IntervalSpec& intervals,
                                      bool force_unconverged = false);

/// Single-agent view: drug `drug_index` walks the ladder while every other
/// drug is held at dose zero.
std::vector<SurfaceRow> marginal_summary(const PosteriorDraws& draws,
                                         const ModelSpec& spec, int drug_index,
                                         const std::vector<double>& ladder,
                                         const IntervalSpec& intervals,
                                         bool force_unconverged = false);

}  // namespace blrm
