// Python bindings: model construction, posterior sampling, dose-grid
// decisions, the property matrix and the built-in scenario suite. The
// heavy entry points (run_mcmc, run_scenario) release the GIL while the
// sampler runs.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <stdexcept>
#include <utility>

#include "blrm/decision.hpp"
#include "blrm/io.hpp"
#include "blrm/math.hpp"
#include "blrm/model.hpp"
#include "blrm/posterior.hpp"
#include "blrm/properties.hpp"
#include "blrm/sampler.hpp"
#include "blrm/scenarios.hpp"

namespace py = pybind11;
using namespace blrm;

namespace {

std::string variant_string(const ModelVariant& v) {
  switch (v.kind) {
    case VariantKind::NoInteraction:
      return "no-interaction";
    case VariantKind::Thall2:
      return "thall2003";
    case VariantKind::LogitAdditive:
      return v.gamma == GammaKind::Linear ? "linear" : "saturating";
  }
  return "?";
}

ModelVariant variant_from_string(const std::string& s) {
  if (s == "no-interaction") return ModelVariant::no_interaction();
  if (s == "thall2003") return ModelVariant::thall2();
  if (s == "linear") return ModelVariant::logit_additive(GammaKind::Linear);
  if (s == "saturating") {
    return ModelVariant::logit_additive(GammaKind::Saturating);
  }
  throw std::invalid_argument(
      "unknown variant '" + s +
      "' (expected no-interaction, thall2003, linear or saturating)");
}

ModelSpec make_model(const std::vector<std::pair<std::string, double>>& drugs,
                     const std::string& variant,
                     const std::optional<std::vector<std::vector<int>>>&
                         interactions) {
  std::vector<DrugSpec> ds;
  ds.reserve(drugs.size());
  for (const auto& [name, ref] : drugs) ds.push_back({name, ref});
  ModelVariant v = variant_from_string(variant);

  std::vector<InteractionTerm> terms;
  if (interactions.has_value()) {
    for (const auto& members : *interactions) terms.push_back({members});
  } else if (v.kind == VariantKind::LogitAdditive) {
    terms = enumerate_interactions(static_cast<int>(ds.size()));
  }
  return ModelSpec::make(std::move(ds), v, std::move(terms));
}

PriorSpec standard_priors(const ModelSpec& spec,
                          std::optional<double> sigma_inter,
                          std::optional<double> sigma_alpha3,
                          std::optional<double> sigma_beta3) {
  PriorSpec p;
  p.log_alpha.assign(spec.drugs.size(), {logit(0.10), 2.0});
  p.log_beta.assign(spec.drugs.size(), {0.0, 1.0});
  if (spec.variant.kind == VariantKind::LogitAdditive && !spec.terms.empty()) {
    if (!sigma_inter.has_value()) {
      throw std::invalid_argument(
          "sigma_inter is required for a model with eta coefficients");
    }
    p.eta.assign(spec.terms.size(), {0.0, *sigma_inter});
  }
  if (spec.variant.kind == VariantKind::Thall2) {
    if (!sigma_alpha3.has_value() || !sigma_beta3.has_value()) {
      throw std::invalid_argument(
          "sigma_alpha3 and sigma_beta3 are required for the thall2003 "
          "variant");
    }
    p.log_alpha3 = {2.0 * logit(0.10), *sigma_alpha3};
    p.log_beta3 = {0.0, *sigma_beta3};
  }
  return p;
}

py::array_t<double> draws_array(const PosteriorDraws& d) {
  py::array_t<double> out({d.n_rows(), d.dim});
  auto buf = out.mutable_unchecked<2>();
  for (int r = 0; r < d.n_rows(); ++r) {
    for (int c = 0; c < d.dim; ++c) buf(r, c) = d.at(r, c);
  }
  return out;
}

std::string category_string(ToxCategory c) {
  switch (c) {
    case ToxCategory::Under:
      return "under";
    case ToxCategory::Target:
      return "target";
    case ToxCategory::Over:
      return "over";
  }
  return "?";
}

std::string surface_csv(const std::vector<SurfaceRow>& rows,
                        const std::vector<std::string>& drug_names) {
  std::ostringstream out;
  write_surface(rows, drug_names, out);
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Bayesian logistic regression for combination dose escalation: "
      "saturating, linear, Thall and no-interaction drug-interaction "
      "models with NUTS posterior sampling and overdose-controlled dose "
      "classification.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NotConvergedError>(m, "NotConvergedError",
                                            PyExc_RuntimeError);

  py::class_<DrugSpec>(m, "DrugSpec")
      .def(py::init<const std::string&, double>(), py::arg("name"),
           py::arg("ref_dose"))
      .def_readwrite("name", &DrugSpec::name)
      .def_readwrite("ref_dose", &DrugSpec::ref_dose)
      .def("__repr__", [](const DrugSpec& d) {
        return "DrugSpec(name='" + d.name +
               "', ref_dose=" + std::to_string(d.ref_dose) + ")";
      });

  py::class_<InteractionTerm>(m, "InteractionTerm")
      .def(py::init([](std::vector<int> members) {
             return InteractionTerm{std::move(members)};
           }),
           py::arg("members"))
      .def_readonly("members", &InteractionTerm::members)
      .def("__eq__", [](const InteractionTerm& a, const InteractionTerm& b) {
        return a == b;
      });

  py::class_<ModelSpec>(m, "ModelSpec")
      .def_readonly("drugs", &ModelSpec::drugs)
      .def_readonly("terms", &ModelSpec::terms)
      .def_property_readonly(
          "variant",
          [](const ModelSpec& s) { return variant_string(s.variant); })
      .def_property_readonly("n_drugs", &ModelSpec::n_drugs)
      .def_property_readonly("param_dim", &ModelSpec::param_dim)
      .def("param_names", &ModelSpec::param_names);

  m.def("make_model", &make_model, py::arg("drugs"), py::arg("variant"),
        py::arg("interactions") = std::nullopt,
        "Build a validated model. drugs is a list of (name, ref_dose) "
        "pairs; variant is one of 'no-interaction', 'thall2003', 'linear', "
        "'saturating'; interactions lists drug-index subsets (default: "
        "every subset of size >= 2 for the additive variants).");

  m.def("interaction_subsets", &enumerate_interactions, py::arg("n_drugs"),
        "Every drug subset of size >= 2, ordered by size then "
        "lexicographically.");

  py::class_<ParameterVector>(m, "ParameterVector")
      .def(py::init<>())
      .def_readwrite("log_alpha", &ParameterVector::log_alpha)
      .def_readwrite("log_beta", &ParameterVector::log_beta)
      .def_readwrite("eta", &ParameterVector::eta)
      .def_readwrite("log_alpha3", &ParameterVector::log_alpha3)
      .def_readwrite("log_beta3", &ParameterVector::log_beta3);

  m.def("model_prob", &model_prob, py::arg("spec"), py::arg("params"),
        py::arg("doses"),
        "P(DLT) of the combination under the given parameters.");
  m.def("model_logit", &model_logit, py::arg("spec"), py::arg("params"),
        py::arg("doses"),
        "Log-odds of a DLT; -inf when every dose is zero.");

  py::class_<GaussianPrior>(m, "GaussianPrior")
      .def(py::init<double, double>(), py::arg("mean"), py::arg("sd"))
      .def_readwrite("mean", &GaussianPrior::mean)
      .def_readwrite("sd", &GaussianPrior::sd);

  py::class_<PriorSpec>(m, "PriorSpec")
      .def(py::init<>())
      .def_readwrite("log_alpha", &PriorSpec::log_alpha)
      .def_readwrite("log_beta", &PriorSpec::log_beta)
      .def_readwrite("eta", &PriorSpec::eta)
      .def_readwrite("log_alpha3", &PriorSpec::log_alpha3)
      .def_readwrite("log_beta3", &PriorSpec::log_beta3);

  m.def("standard_priors", &standard_priors, py::arg("spec"),
        py::arg("sigma_inter") = std::nullopt,
        py::arg("sigma_alpha3") = std::nullopt,
        py::arg("sigma_beta3") = std::nullopt,
        "Default priors: log_alpha ~ N(logit(0.10), 2^2) per drug, "
        "log_beta ~ N(0, 1); eta ~ N(0, sigma_inter^2) per interaction "
        "term; the thall2003 variant takes log_alpha3 ~ N(2 logit(0.10), "
        "sigma_alpha3^2) and log_beta3 ~ N(0, sigma_beta3^2).");

  py::class_<CohortRecord>(m, "CohortRecord")
      .def(py::init([](DoseCombination doses, int n_patients, int n_dlt,
                       std::string label) {
             return CohortRecord{std::move(doses), n_patients, n_dlt,
                                 std::move(label)};
           }),
           py::arg("doses"), py::arg("n_patients"), py::arg("n_dlt"),
           py::arg("label") = "")
      .def_readwrite("doses", &CohortRecord::doses)
      .def_readwrite("n_patients", &CohortRecord::n_patients)
      .def_readwrite("n_dlt", &CohortRecord::n_dlt)
      .def_readwrite("label", &CohortRecord::label)
      .def("__eq__", [](const CohortRecord& a, const CohortRecord& b) {
        return a == b;
      });

  py::class_<SamplerConfig>(m, "SamplerConfig")
      .def(py::init<>())
      .def_readwrite("chains", &SamplerConfig::chains)
      .def_readwrite("warmup_iters", &SamplerConfig::warmup_iters)
      .def_readwrite("sampling_iters", &SamplerConfig::sampling_iters)
      .def_readwrite("seed", &SamplerConfig::seed)
      .def_readwrite("target_acceptance", &SamplerConfig::target_acceptance)
      .def_readwrite("max_leapfrog_depth", &SamplerConfig::max_leapfrog_depth);

  py::class_<PosteriorDraws>(m, "PosteriorDraws")
      .def_readonly("n_chains", &PosteriorDraws::n_chains)
      .def_readonly("n_iters", &PosteriorDraws::n_iters)
      .def_readonly("dim", &PosteriorDraws::dim)
      .def_readonly("param_names", &PosteriorDraws::param_names)
      .def_readonly("rhat", &PosteriorDraws::rhat)
      .def_readonly("ess", &PosteriorDraws::ess)
      .def_readonly("divergence_count", &PosteriorDraws::divergence_count)
      .def_readonly("converged", &PosteriorDraws::converged)
      .def_property_readonly("n_rows", &PosteriorDraws::n_rows)
      .def("array", &draws_array,
           "Post-warmup draws as an (n_rows, dim) array, chains "
           "concatenated in order.");

  m.def("run_mcmc", &run_mcmc, py::arg("data"), py::arg("spec"),
        py::arg("priors"), py::arg("config") = SamplerConfig{},
        py::call_guard<py::gil_scoped_release>(),
        "Sample the posterior with the dynamic Hamiltonian sampler. "
        "Deterministic given config.seed.");

  py::class_<IntervalSpec>(m, "IntervalSpec")
      .def(py::init([](double under_max, double over_min, double ewoc_max) {
             IntervalSpec s{under_max, over_min, ewoc_max};
             s.validate();
             return s;
           }),
           py::arg("under_max") = 0.16, py::arg("over_min") = 0.33,
           py::arg("ewoc_max") = 0.25)
      .def_readwrite("under_max", &IntervalSpec::under_max)
      .def_readwrite("over_min", &IntervalSpec::over_min)
      .def_readwrite("ewoc_max", &IntervalSpec::ewoc_max);

  m.def(
      "classify_pi",
      [](double pi, const IntervalSpec& intervals) {
        return category_string(classify_pi(pi, intervals));
      },
      py::arg("pi"), py::arg("intervals") = IntervalSpec{},
      "Interval category of a toxicity probability: 'under', 'target' or "
      "'over'.");
  m.def("ewoc_satisfied", &ewoc_satisfied, py::arg("p_over"),
        py::arg("intervals") = IntervalSpec{},
        "True when the overdose probability is at most ewoc_max.");

  py::class_<SurfaceRow>(m, "SurfaceRow")
      .def_readonly("doses", &SurfaceRow::doses)
      .def_readonly("p_under", &SurfaceRow::p_under)
      .def_readonly("p_target", &SurfaceRow::p_target)
      .def_readonly("p_over", &SurfaceRow::p_over)
      .def_readonly("mean_pi", &SurfaceRow::mean_pi)
      .def_readonly("q025", &SurfaceRow::q025)
      .def_readonly("q50", &SurfaceRow::q50)
      .def_readonly("q975", &SurfaceRow::q975)
      .def_readonly("ewoc_ok", &SurfaceRow::ewoc_ok);

  m.def("default_dose_ladder", &default_dose_ladder,
        py::return_value_policy::copy,
        "The per-drug dose ladder used when a run does not supply one.");
  m.def("cartesian_grid", &cartesian_grid, py::arg("ladders"),
        "All combinations of the per-drug ladders, last drug fastest.");
  m.def("summarize_point", &summarize_point, py::arg("draws"), py::arg("spec"),
        py::arg("doses"), py::arg("intervals") = IntervalSpec{},
        "Posterior summary of one dose combination.");
  m.def("evaluate_grid", &evaluate_grid, py::arg("draws"), py::arg("spec"),
        py::arg("grid"), py::arg("intervals") = IntervalSpec{},
        py::arg("force_unconverged") = false,
        "Posterior summary per grid point; refuses unconverged draws "
        "unless force_unconverged is set.");
  m.def("marginal_summary", &marginal_summary, py::arg("draws"),
        py::arg("spec"), py::arg("drug_index"), py::arg("ladder"),
        py::arg("intervals") = IntervalSpec{},
        py::arg("force_unconverged") = false,
        "Single-agent view: one drug walks the ladder, the others stay at "
        "dose zero.");

  m.def(
      "property_matrix",
      [](std::uint64_t seed) {
        return render_property_matrix(run_property_matrix(seed));
      },
      py::arg("seed") = 1,
      "The structural property checks for every variant, rendered as a "
      "fixed-width table.");
  m.def(
      "property_matrix_ok",
      [](std::uint64_t seed) {
        return matrix_matches_reference(run_property_matrix(seed));
      },
      py::arg("seed") = 1,
      "True when the full property run reproduces the reference pattern.");

  py::class_<VariantConfig>(m, "VariantConfig")
      .def_readonly("tag", &VariantConfig::tag)
      .def_readonly("sigma_inter", &VariantConfig::sigma_inter)
      .def_readonly("sigma_alpha3", &VariantConfig::sigma_alpha3)
      .def_readonly("sigma_beta3", &VariantConfig::sigma_beta3);

  py::class_<ScenarioVariantResult>(m, "ScenarioVariantResult")
      .def_readonly("variant", &ScenarioVariantResult::variant)
      .def_readonly("draws", &ScenarioVariantResult::draws)
      .def_readonly("surface", &ScenarioVariantResult::surface)
      .def_readonly("marginal_a", &ScenarioVariantResult::marginal_a)
      .def_readonly("marginal_b", &ScenarioVariantResult::marginal_b)
      .def_readonly("ewoc_at_combo", &ScenarioVariantResult::ewoc_at_combo)
      .def_readonly("marginal_preserved",
                    &ScenarioVariantResult::marginal_preserved)
      .def_readonly("max_marginal_shift",
                    &ScenarioVariantResult::max_marginal_shift);

  py::class_<ScenarioResult>(m, "ScenarioResult")
      .def_property_readonly(
          "scenario", [](const ScenarioResult& r) { return r.def.id; })
      .def_readonly("master_seed", &ScenarioResult::master_seed)
      .def_readonly("variants", &ScenarioResult::variants);

  m.def("scenario_ids", [] {
    std::vector<std::string> ids;
    for (const auto& def : builtin_scenarios()) ids.push_back(def.id);
    return ids;
  });
  m.def("historical_data", &builtin_historical_data,
        "The built-in single-agent history for drugs A and B.");
  m.def(
      "run_scenario",
      [](const std::string& id, std::uint64_t seed, bool force_unconverged) {
        const ScenarioDef& def = find_scenario(id);
        SamplerConfig base;
        base.seed = seed;
        py::gil_scoped_release release;
        return run_scenario(def, base, force_unconverged);
      },
      py::arg("scenario"), py::arg("seed") = 1,
      py::arg("force_unconverged") = false,
      "Fit every variant configuration on one built-in scenario and "
      "evaluate the dose grid, the marginals and the qualitative flags.");

  py::class_<RunConfig>(m, "RunConfig")
      .def_readonly("model", &RunConfig::model)
      .def_readonly("priors", &RunConfig::priors)
      .def_readonly("intervals", &RunConfig::intervals)
      .def_readonly("sampler", &RunConfig::sampler)
      .def("grid_axes", &RunConfig::grid_axes,
           "The evaluation grid with defaults resolved: one ascending "
           "dose ladder per drug.");

  m.def("parse_config", &parse_config, py::arg("text"),
        "Parse and validate a JSON run configuration.");
  m.def("load_config", &load_config, py::arg("path"),
        "parse_config on a file's contents.");
  m.def("serialize_config", &serialize_config, py::arg("config"));
  m.def("load_cohorts", &load_cohorts, py::arg("path"), py::arg("spec"),
        "Read cohort records from a delimited text file with one "
        "dose_<drug> column per drug plus n_patients, n_dlt and an "
        "optional label.");
  m.def("surface_csv", &surface_csv, py::arg("rows"), py::arg("drug_names"),
        "Render surface rows to delimited text (the same format the CLI "
        "writes).");
}
