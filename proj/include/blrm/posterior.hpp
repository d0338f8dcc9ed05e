#pragma once

#include <span>
#include <utility>
#include <vector>

#include "blrm/model.hpp"

namespace blrm {

struct GaussianPrior {
  double mean = 0.0;
  double sd = 1.0;

  bool operator==(const GaussianPrior&) const = default;
};

/// Independent normal priors, one per parameter, aligned with the model's
/// canonical layout. eta applies per interaction term; log_alpha3/log_beta3
/// apply to the Thall2 variant only.
struct PriorSpec {
  std::vector<GaussianPrior> log_alpha;
  std::vector<GaussianPrior> log_beta;
  std::vector<GaussianPrior> eta;
  GaussianPrior log_alpha3;
  GaussianPrior log_beta3;

  bool operator==(const PriorSpec&) const = default;
};

/// Binomial log likelihood of the cohort data under the model. Empty data
/// gives 0. Returns -inf when a cohort with observed DLTs sits at probability
/// zero (e.g. all doses zero).
double log_likelihood(const std::vector<CohortRecord>& data,
                      const ModelSpec& spec, const ParameterVector& params);

/// Sum of normal log densities (constants included).
double log_prior(const ParameterVector& params, const PriorSpec& priors,
                 const ModelSpec& spec);

/// Log posterior kernel and its gradient in the canonical flat layout.
std::pair<double, std::vector<double>> log_posterior_and_gradient(
    const std::vector<CohortRecord>& data, const ModelSpec& spec,
    const PriorSpec& priors, const ParameterVector& params);

/// Flat-parameter posterior evaluator. Validates the model, priors and data
/// once at construction; evaluation itself never throws and reports
/// unusable points (zero likelihood, non-finite intermediates) as -inf so a
/// sampler can treat them as rejections. Stateless after construction; pass
/// a Workspace per calling thread.
class LogPosterior {
 public:
  struct Workspace {
    detail::Scratch scratch;
    std::vector<double> cohort_grad;
  };

  LogPosterior(std::vector<CohortRecord> data, ModelSpec spec,
               PriorSpec priors);

  int dim() const { return static_cast<int>(prior_mean_.size()); }
  const ModelSpec& spec() const { return spec_; }
  std::span<const double> prior_mean() const { return prior_mean_; }
  std::span<const double> prior_sd() const { return prior_sd_; }

  double log_likelihood(std::span<const double> theta, Workspace& ws) const;
  double value(std::span<const double> theta, Workspace& ws) const;
  /// Returns the log posterior; fills grad (size dim). When the result is
  /// -inf the gradient content is meaningless and set to zero.
  double value_and_gradient(std::span<const double> theta,
                            std::span<double> grad, Workspace& ws) const;

 private:
  struct CohortCache {
    std::vector<double> doses;
    std::vector<double> log_x;  // log(dose/ref) where dose > 0
    std::vector<double> gamma;  // per-term multiplier (0 when inactive)
    int n = 0;
    int r = 0;
    bool all_zero = false;
  };

  ModelSpec spec_;
  std::vector<CohortCache> cohorts_;
  std::vector<double> prior_mean_;
  std::vector<double> prior_sd_;
};

/// Checks sizes against the model and sd positivity; returns the priors in
/// canonical flat layout (means, sds).
std::pair<std::vector<double>, std::vector<double>> flatten_priors(
    const ModelSpec& spec, const PriorSpec& priors);

/// Validates one cohort record against the model (dose vector length,
/// non-negative finite doses, 0 <= n_dlt <= n_patients).
void validate_cohort(const ModelSpec& spec, const CohortRecord& cohort);

}  // namespace blrm
