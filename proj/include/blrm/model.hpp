#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace blrm {

/// One drug in a combination trial. ref_dose is the scaling dose d* at which
/// the drug's log-odds intercept is interpreted.
struct DrugSpec {
  std::string name;
  double ref_dose = 0.0;

  bool operator==(const DrugSpec&) const = default;
};

/// Dose per drug, aligned with ModelSpec::drugs. A zero entry means the drug
/// is absent from the combination.
using DoseCombination = std::vector<double>;

/// Aggregated outcome for one cohort: n_dlt of n_patients had a
/// dose-limiting toxicity at the given combination.
struct CohortRecord {
  DoseCombination doses;
  int n_patients = 0;
  int n_dlt = 0;
  std::string label;

  bool operator==(const CohortRecord&) const = default;
};

/// A drug subset carrying one interaction coefficient. Members are 0-based
/// drug indices, strictly increasing, at least two of them.
struct InteractionTerm {
  std::vector<int> members;

  bool operator==(const InteractionTerm&) const = default;
};

enum class GammaKind { Linear, Saturating };

enum class VariantKind { NoInteraction, LogitAdditive, Thall2 };

struct ModelVariant {
  VariantKind kind = VariantKind::NoInteraction;
  // Shape of the dose-dependent interaction multiplier; only meaningful for
  // LogitAdditive.
  GammaKind gamma = GammaKind::Saturating;

  static ModelVariant no_interaction();
  static ModelVariant logit_additive(GammaKind g);
  static ModelVariant thall2();

  bool operator==(const ModelVariant&) const = default;
};

/// Full structural description of a combination model: the drugs, the
/// interaction family, and which drug subsets interact.
struct ModelSpec {
  std::vector<DrugSpec> drugs;
  ModelVariant variant;
  // Empty for NoInteraction; the implied pair {0,1} for Thall2; an explicit
  // canonical list (ordered by size, then lexicographically) otherwise.
  std::vector<InteractionTerm> terms;

  int n_drugs() const { return static_cast<int>(drugs.size()); }
  int param_dim() const;
  std::vector<std::string> param_names() const;
  void validate() const;

  /// Builds a validated spec. Interaction terms are brought into canonical
  /// order; duplicates are an error. For Thall2 the pair term is implied and
  /// `terms` must be empty or exactly that pair.
  static ModelSpec make(std::vector<DrugSpec> drugs, ModelVariant variant,
                        std::vector<InteractionTerm> terms = {});

  bool operator==(const ModelSpec&) const = default;
};

/// Model parameters on the sampling scale. log_alpha[i] is the log-odds of
/// toxicity for drug i alone at its reference dose; exp(log_beta[i]) is that
/// drug's log-dose slope. For logit-additive variants eta holds one
/// coefficient per interaction term; for Thall2 the interaction is carried by
/// (log_alpha3, log_beta3) instead.
struct ParameterVector {
  std::vector<double> log_alpha;
  std::vector<double> log_beta;
  std::vector<double> eta;
  double log_alpha3 = 0.0;
  double log_beta3 = 0.0;

  bool operator==(const ParameterVector&) const = default;
};

/// Canonical flat layout: all log_alpha, then all log_beta, then the
/// interaction block (eta per term, or log_alpha3 followed by log_beta3).
std::vector<double> pack_parameters(const ModelSpec& spec,
                                    const ParameterVector& params);
ParameterVector unpack_parameters(const ModelSpec& spec,
                                  std::span<const double> flat);

/// P(DLT) for one drug given alone: expit(log_alpha + exp(log_beta) *
/// log(dose/ref_dose)). Returns exactly 0 at dose 0 (the model's limit).
double single_drug_prob(double dose, double log_alpha, double log_beta,
                        double ref_dose);

/// Same on the log-odds scale; -inf at dose 0.
double single_drug_logit(double dose, double log_alpha, double log_beta,
                         double ref_dose);

/// No-interaction combination probability: 1 - prod_i (1 - pi_i), i.e. the
/// probability that at least one drug causes a DLT independently.
double prob_independent(const DoseCombination& doses,
                        const ParameterVector& params,
                        const std::vector<DrugSpec>& drugs);

/// Every drug subset of size >= 2, ordered by size then lexicographically.
std::vector<InteractionTerm> enumerate_interactions(int n_drugs);

/// prod_i dose_i/ref_i. Zero if any dose is zero; 1 when every drug sits at
/// its reference dose. Unbounded above.
double gamma_linear(std::span<const double> doses,
                    std::span<const double> ref_doses);

/// 2p/(1+p) with p = prod_i dose_i/ref_i. Zero if any dose is zero, 1 at the
/// reference combination, strictly below 2 always.
double gamma_saturating(std::span<const double> doses,
                        std::span<const double> ref_doses);

/// Combination probability for NoInteraction/LogitAdditive specs:
/// expit(logit(pi_independent) + sum_s eta_s * gamma_s(doses)).
double combined_prob(const ModelSpec& spec, const ParameterVector& params,
                     const DoseCombination& doses);

/// Two-drug Thall model: pi = T/(1+T) with
/// T = alpha1*x1^beta1 + alpha2*x2^beta2 + alpha3*(x1^beta1 * x2^beta2)^beta3
/// where x_i = dose_i/ref_i. log_alpha3 == -inf is allowed and gives the
/// alpha3 = 0 sub-model.
double thall_prob(double dose1, double dose2, const ParameterVector& params,
                  const std::array<double, 2>& ref_doses);

/// Dispatch on spec.variant: combined_prob or thall_prob.
double model_prob(const ModelSpec& spec, const ParameterVector& params,
                  const DoseCombination& doses);

/// As model_prob but on the log-odds scale (-inf when every dose is zero).
double model_logit(const ModelSpec& spec, const ParameterVector& params,
                   const DoseCombination& doses);

namespace detail {

/// Reusable buffers for the flat-parameter evaluation paths, so the sampler
/// and grid loops do not allocate per call.
struct Scratch {
  std::vector<double> lin;     // per-drug logit, -inf when dose == 0
  std::vector<double> log_pi;  // per-drug log probability
  std::vector<double> gamma;   // per-term multiplier
};

/// Combination log-odds from flat parameters (canonical layout). Works for
/// every variant; -inf when all doses are zero.
double model_logit_flat(const ModelSpec& spec, std::span<const double> flat,
                        std::span<const double> doses, Scratch& scratch);

}  // namespace detail

}  // namespace blrm
