#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "blrm/decision.hpp"
#include "blrm/model.hpp"
#include "blrm/properties.hpp"
#include "blrm/sampler.hpp"

namespace blrm {

/// One model column of the study: a variant plus its interaction-prior
/// width. Additive variants use sigma_inter; the Thall variant uses the
/// (sigma_alpha3, sigma_beta3) pair; the no-interaction variant has neither.
struct VariantConfig {
  std::string tag;
  VariantId id = VariantId::NoInteraction;
  double sigma_inter = 0.0;
  double sigma_alpha3 = 0.0;
  double sigma_beta3 = 0.0;
};

/// The seven fitted model configurations, in fixed output order.
const std::vector<VariantConfig>& scenario_variants();

/// Two drugs A and B, both with reference dose 200 mg.
ModelSpec variant_spec(const VariantConfig& vc);

/// Standard priors: log alpha ~ N(logit(0.10), 2^2) per drug, log beta ~
/// N(0, 1) per drug, eta ~ N(0, sigma_inter^2); Thall: log alpha3 ~
/// N(2 logit(0.10), sigma_alpha3^2), log beta3 ~ N(0, sigma_beta3^2).
PriorSpec variant_priors(const VariantConfig& vc);

struct ScenarioDef {
  std::string id;
  bool use_historical = false;
  std::optional<DoseCombination> combo_dose;  // (drug A mg, drug B mg)
  std::optional<int> combo_n;
  std::optional<int> combo_dlt;

  /// Filesystem-safe form of the id ("5/5@200" -> "5of5at200").
  std::string slug() const;
  void validate() const;
};

/// The single-agent history: drug A at (50,100,200,300,400,600) mg with
/// n=10 per cohort and DLT counts (0,1,1,2,3,6); drug B at the same doses
/// with n=5 and (0,0,1,1,1,3). The absent drug's dose is 0 in each record.
std::vector<CohortRecord> builtin_historical_data();

/// The five study scenarios: prior-only, historical-only, and the three
/// combination-cohort outcomes (0/5 at 200/200, 5/5 at 200/200, 5/5 at
/// 100/100), every one fitted with all seven variant configurations.
const std::vector<ScenarioDef>& builtin_scenarios();

/// Lookup by id; throws std::invalid_argument for unknown ids.
const ScenarioDef& find_scenario(const std::string& id);

/// The cohorts a scenario fits: historical data (if used) plus the
/// scenario's combination cohort (if any).
std::vector<CohortRecord> scenario_data(const ScenarioDef& def);

struct ScenarioVariantResult {
  VariantConfig variant;
  PosteriorDraws draws;
  std::vector<SurfaceRow> surface;     // default ladder x default ladder
  std::vector<SurfaceRow> marginal_a;  // drug A alone on the default ladder
  std::vector<SurfaceRow> marginal_b;
  // EWOC status at the scenario's combination dose; absent when the
  // scenario has no combination cohort.
  std::optional<bool> ewoc_at_combo;
  // True when the largest |mean pi| shift of either single-drug marginal
  // against the historical-only fit of the same variant stays within 0.02.
  // Judged over the historical dose ladder {50..600}, the doses the
  // reference fit has data for.
  bool marginal_preserved = false;
  double max_marginal_shift = 0.0;
};

struct ScenarioResult {
  ScenarioDef def;
  std::uint64_t master_seed = 0;
  std::vector<ScenarioVariantResult> variants;
};

/// Fits every variant configuration on the scenario's pooled data and
/// evaluates the default grid, both marginals and the qualitative flags.
/// base.seed acts as the master seed: each fit derives its own stream from
/// labeled_seed(master, "<scenario>/<variant>"), so results are
/// deterministic and independent of execution order. A variant whose fit
/// fails the convergence gate aborts the scenario with NotConvergedError
/// naming the variant, unless force_unconverged is set.
ScenarioResult run_scenario(const ScenarioDef& def, const SamplerConfig& base,
                            bool force_unconverged = false);

}  // namespace blrm
