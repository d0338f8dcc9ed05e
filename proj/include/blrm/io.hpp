#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blrm/decision.hpp"
#include "blrm/posterior.hpp"
#include "blrm/sampler.hpp"

namespace blrm {

/// Raised by the config parser and data readers. The message names the
/// offending field (dotted path) or data row, and the source line when it
/// can be located.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything one run needs: the model, its priors, the decision intervals,
/// the sampler settings and the evaluation grid. grid is one dose ladder per
/// drug; absent means the default ladder for every drug.
struct RunConfig {
  ModelSpec model;
  PriorSpec priors;
  IntervalSpec intervals;
  SamplerConfig sampler;
  std::optional<std::vector<std::vector<double>>> grid;

  /// The grid with defaults resolved: one ascending dose ladder per drug.
  std::vector<std::vector<double>> grid_axes() const;

  bool operator==(const RunConfig&) const = default;
};

/// Parses and fully validates a JSON run configuration.
///
/// Layout (defaults in parentheses; a missing "priors" block uses all of
/// them, but interaction prior widths are always required):
///
///   model.drugs        [{name, ref_dose}, ...]          required
///   model.variant      "no-interaction" | "thall2003" | "linear"
///                      | "saturating"                   required
///   model.interactions [["A","B"], ...]                 (all subsets of
///                      size >= 2; thall2003 implies the pair)
///   priors.log_alpha   {mean, sd} or one per drug       (logit(0.10), 2)
///   priors.log_beta    {mean, sd} or one per drug       (0, 1)
///   priors.eta         {mean, sd} or one per term;      sd required for
///                      linear/saturating, mean (0)
///   priors.log_alpha3  thall2003 only;                  sd required,
///                      mean (2 logit(0.10))
///   priors.log_beta3   thall2003 only;                  sd required,
///                      mean (0)
///   intervals          {under_max, over_min, ewoc_max}  (0.16, 0.33, 0.25)
///   sampler            {chains, warmup_iters, sampling_iters, seed,
///                      target_acceptance, max_leapfrog_depth}
///                                                       (4, 1000, 1000, 1,
///                                                       0.8, 10)
///   grid               "default" or {drugname: [doses]} ("default")
///
/// Unknown keys are rejected everywhere.
RunConfig parse_config(const std::string& text);

/// parse_config on a file's contents.
RunConfig load_config(const std::string& path);

/// Serializes a RunConfig to JSON text. parse_config(serialize_config(c))
/// reproduces c exactly.
std::string serialize_config(const RunConfig& config);

/// Reads cohort records from delimited text. Header names one dose column
/// per drug ("dose_<drugname>", matched by name in any order) plus
/// "n_patients", "n_dlt" and optionally "label". Errors carry the 1-based
/// data row number.
std::vector<CohortRecord> read_cohorts(std::istream& in,
                                       const ModelSpec& spec);

/// read_cohorts on a file.
std::vector<CohortRecord> load_cohorts(const std::string& path,
                                       const ModelSpec& spec);

/// Writes a surface table: one dose column per drug, then p_under, p_target,
/// p_over, mean_pi, q025, q50, q975, ewoc_ok. Probabilities carry six
/// decimal digits; ewoc_ok is a true/false literal. Output is byte-stable
/// for identical rows.
void write_surface(const std::vector<SurfaceRow>& rows,
                   const std::vector<std::string>& drug_names,
                   std::ostream& out);

/// write_surface to a file; throws on an unwritable destination.
void write_surface_file(const std::vector<SurfaceRow>& rows,
                        const std::vector<std::string>& drug_names,
                        const std::string& path);

/// Reads a table produced by write_surface.
std::vector<SurfaceRow> read_surface(std::istream& in, int n_drugs);

/// Per-parameter posterior summary: name, mean, sd, q025, q50, q975, rhat,
/// ess as delimited text.
void write_draws_summary(const PosteriorDraws& draws, std::ostream& out);

/// Sampler diagnostics as JSON: convergence flag, divergence count, chain
/// geometry, seed and the per-parameter split-Rhat / effective sample sizes.
void write_diagnostics(const PosteriorDraws& draws, const SamplerConfig& config,
                       std::ostream& out);

}  // namespace blrm
