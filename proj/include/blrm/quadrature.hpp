#pragma once

#include <vector>

#include "blrm/posterior.hpp"

namespace blrm {

struct QuadratureSpec {
  int nodes_per_axis = 401;
  double sd_span = 6.0;               // integrate mean +/- span * sd per axis
  std::vector<double> eval_doses;     // doses at which pi summaries are wanted

  void validate() const;
};

struct QuadratureSummary {
  double mean_log_alpha = 0.0;
  double sd_log_alpha = 0.0;
  double mean_log_beta = 0.0;
  double sd_log_beta = 0.0;
  std::vector<double> pi_mean;  // one per eval dose
  std::vector<double> pi_sd;
  double log_norm_const = 0.0;  // up to the constant subtracted for stability
};

/// Dense tensor-grid trapezoid integration of the single-drug posterior.
/// Deliberately reimplements the likelihood and prior directly so it can
/// serve as an oracle for the sampling path. Models with more than one drug
/// (more than 2 parameters) are rejected.
QuadratureSummary quadrature_posterior(const std::vector<CohortRecord>& data,
                                       const ModelSpec& spec,
                                       const PriorSpec& priors,
                                       const QuadratureSpec& grid);

}  // namespace blrm
