#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blrm/model.hpp"

namespace blrm {

/// The six structural properties checked for every interaction model.
enum class PropertyId {
  ZeroDoseReduction,       // dropping a drug at dose 0 gives the smaller model
  IndependenceReduction,   // neutral interaction parameters give independence
  AsymptoticToxicity,      // pi -> 1 as any dose grows without bound
  SynergyOrdering,         // parameters exist with pi above independence
  AntagonismOrdering,      // parameters exist with pi below independence
  NonMonotonicity,         // parameters exist with a locally decreasing pi
};

/// Model columns, in the order the summary table prints them.
enum class VariantId { NoInteraction, Thall2, Linear, Saturating };

const std::vector<PropertyId>& all_properties();
const std::vector<VariantId>& all_variants();
std::string property_name(PropertyId id);
std::string variant_name(VariantId id);

/// The canonical two-drug model (both reference doses 200 mg) each check
/// instantiates for a variant.
ModelSpec variant_model(VariantId id);

/// Concrete evidence attached to a report: the flat parameter vector and the
/// dose point(s) that exhibit the behaviour, or a note when the finding is
/// structural (e.g. the model has no interaction parameter to search over).
struct PropertyWitness {
  std::vector<double> params;  // flat parameters of the two-drug model
  DoseCombination doses;       // evaluation point
  DoseCombination doses2;      // second point: final rung / shifted dose
  double pi1 = 0.0;
  double pi2 = 0.0;
  std::string note;

  bool empty() const { return params.empty() && note.empty(); }
};

struct PropertyReport {
  PropertyId property;
  VariantId variant;
  bool passed = false;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  PropertyWitness witness;  // filled when the check failed, or when a
                            // non-monotonic pair was found
};

/// Doubling-dose escalation used by the asymptotic check: the listed drugs
/// double `n_steps` times from the base point while the rest stay fixed at
/// their (positive) base dose.
struct AsymptoticLadder {
  DoseCombination base_doses = {200.0, 200.0};
  std::vector<int> escalate = {0};
  int n_steps = 40;

  void validate(const ModelSpec& spec) const;
};

/// Sets each drug's dose to zero in turn on randomized parameters/doses and
/// compares against the one-drug model that remains. Passes iff the largest
/// absolute probability difference over all trials is at most tol.
PropertyReport check_zero_dose_reduction(VariantId variant, int n_random_trials,
                                         double tol, std::uint64_t seed);

/// Compares the model at its neutral interaction setting (eta = 0, or the
/// product/unit identity for the Thall model) against the independence
/// probability on randomized parameters/doses.
PropertyReport check_independence_reduction(VariantId variant,
                                            int n_random_trials, double tol,
                                            std::uint64_t seed);

/// Escalates along the ladder for each sampled parameter set (the sampler
/// forces strongly negative interaction settings in addition to random ones)
/// and passes iff pi reaches 1 - 1e-3 by the final rung every time.
PropertyReport check_asymptotic_toxicity(VariantId variant,
                                         const AsymptoticLadder& ladder,
                                         int n_param_sets, std::uint64_t seed);

enum class OrderingSign { Synergy, Antagonism };

/// Draws random parameters with one active interaction of the requested sign
/// and checks the strict ordering against independence at random positive
/// dose pairs. The no-interaction model fails structurally.
PropertyReport check_ordering(VariantId variant, OrderingSign sign,
                              int n_random_trials, std::uint64_t seed);

/// Deterministic grid search for a local decrease: slopes (log_beta), base
/// dose pairs, dose increments and antagonistic interaction strengths are
/// enumerated and the first pair with pi(d + eps) < pi(d) - 1e-9 is the
/// witness. Passing means such a pair exists for the variant.
PropertyReport check_nonmonotonicity(VariantId variant, std::uint64_t seed);

/// All six checks for all four variants with per-check seeds derived from
/// `seed`. Order: property-major, variant-minor (table reading order).
std::vector<PropertyReport> run_property_matrix(std::uint64_t seed);

/// The published reference matrix the full run must reproduce.
bool expected_property_result(PropertyId property, VariantId variant);

/// True iff every report agrees with expected_property_result and all 24
/// property/variant cells are present exactly once.
bool matrix_matches_reference(const std::vector<PropertyReport>& reports);

/// Fixed-width text table (rows properties, columns variants).
std::string render_property_matrix(const std::vector<PropertyReport>& reports);

}  // namespace blrm
