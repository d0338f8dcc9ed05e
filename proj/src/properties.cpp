#include "blrm/properties.hpp"

#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "blrm/math.hpp"
#include "blrm/sampler.hpp"

namespace blrm {

namespace {

constexpr double kAsymptoticGap = 1e-3;   // pi must reach 1 - this
constexpr double kNonMonoMargin = 1e-9;   // required strict local decrease
constexpr double kReductionTol = 1e-12;

// Shared generator ranges for the randomized checks. Slopes cover shallow to
// steep curves, intercepts keep the reference-dose probability between
// roughly 2% and 50%, interaction strengths span both signs.
constexpr double kLogAlphaLo = -4.0, kLogAlphaHi = 0.0;
const double kLogBetaLo = std::log(2.0 / 3.0), kLogBetaHi = std::log(3.0);
constexpr double kEtaLo = -2.0, kEtaHi = 2.0;

ParameterVector sample_params(VariantId id, Rng& rng) {
  ParameterVector pv;
  for (int i = 0; i < 2; ++i) {
    pv.log_alpha.push_back(rng.uniform(kLogAlphaLo, kLogAlphaHi));
    pv.log_beta.push_back(rng.uniform(kLogBetaLo, kLogBetaHi));
  }
  switch (id) {
    case VariantId::NoInteraction:
      break;
    case VariantId::Linear:
    case VariantId::Saturating:
      pv.eta.push_back(rng.uniform(kEtaLo, kEtaHi));
      break;
    case VariantId::Thall2:
      pv.log_alpha3 =
          pv.log_alpha[0] + pv.log_alpha[1] + rng.uniform(kEtaLo, kEtaHi);
      pv.log_beta3 = rng.uniform(std::log(0.5), std::log(2.0));
      break;
  }
  return pv;
}

// Moves the variant's interaction setting by `shift` from its neutral point
// (additive models: eta = shift; Thall: log alpha3 = log alpha1 + log alpha2
// + shift with unit outer slope).
void set_interaction_shift(VariantId id, ParameterVector& pv, double shift) {
  switch (id) {
    case VariantId::NoInteraction:
      break;
    case VariantId::Linear:
    case VariantId::Saturating:
      pv.eta.assign(1, shift);
      break;
    case VariantId::Thall2:
      pv.log_alpha3 = pv.log_alpha[0] + pv.log_alpha[1] + shift;
      pv.log_beta3 = 0.0;
      break;
  }
}

PropertyWitness make_witness(const ModelSpec& spec, const ParameterVector& pv,
                             DoseCombination doses, DoseCombination doses2,
                             double pi1, double pi2, std::string note = {}) {
  PropertyWitness w;
  w.params = pack_parameters(spec, pv);
  w.doses = std::move(doses);
  w.doses2 = std::move(doses2);
  w.pi1 = pi1;
  w.pi2 = pi2;
  w.note = std::move(note);
  return w;
}

}  // namespace

const std::vector<PropertyId>& all_properties() {
  static const std::vector<PropertyId> ids = {
      PropertyId::ZeroDoseReduction,  PropertyId::IndependenceReduction,
      PropertyId::AsymptoticToxicity, PropertyId::SynergyOrdering,
      PropertyId::AntagonismOrdering, PropertyId::NonMonotonicity,
  };
  return ids;
}

const std::vector<VariantId>& all_variants() {
  static const std::vector<VariantId> ids = {
      VariantId::NoInteraction,
      VariantId::Thall2,
      VariantId::Linear,
      VariantId::Saturating,
  };
  return ids;
}

std::string property_name(PropertyId id) {
  switch (id) {
    case PropertyId::ZeroDoseReduction: return "zero-dose-reduction";
    case PropertyId::IndependenceReduction: return "independence-reduction";
    case PropertyId::AsymptoticToxicity: return "asymptotic-toxicity";
    case PropertyId::SynergyOrdering: return "synergy";
    case PropertyId::AntagonismOrdering: return "antagonism";
    case PropertyId::NonMonotonicity: return "non-monotonicity";
  }
  throw std::invalid_argument("unknown property id");
}

std::string variant_name(VariantId id) {
  switch (id) {
    case VariantId::NoInteraction: return "no-interaction";
    case VariantId::Thall2: return "thall2003";
    case VariantId::Linear: return "linear";
    case VariantId::Saturating: return "saturating";
  }
  throw std::invalid_argument("unknown variant id");
}

ModelSpec variant_model(VariantId id) {
  std::vector<DrugSpec> drugs = {{"A", 200.0}, {"B", 200.0}};
  switch (id) {
    case VariantId::NoInteraction:
      return ModelSpec::make(drugs, ModelVariant::no_interaction(), {});
    case VariantId::Thall2:
      return ModelSpec::make(drugs, ModelVariant::thall2(), {});
    case VariantId::Linear:
      return ModelSpec::make(drugs,
                             ModelVariant::logit_additive(GammaKind::Linear),
                             {InteractionTerm{{0, 1}}});
    case VariantId::Saturating:
      return ModelSpec::make(
          drugs, ModelVariant::logit_additive(GammaKind::Saturating),
          {InteractionTerm{{0, 1}}});
  }
  throw std::invalid_argument("unknown variant id");
}

void AsymptoticLadder::validate(const ModelSpec& spec) const {
  if (static_cast<int>(base_doses.size()) != spec.n_drugs()) {
    throw std::invalid_argument("ladder base must cover every drug");
  }
  for (double d : base_doses) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument("ladder base doses must be positive");
    }
  }
  if (escalate.empty()) {
    throw std::invalid_argument("ladder must escalate at least one drug");
  }
  for (int i : escalate) {
    if (i < 0 || i >= spec.n_drugs()) {
      throw std::invalid_argument("escalated drug index out of range");
    }
  }
  if (n_steps < 40) {
    throw std::invalid_argument(
        "asymptotic ladder needs at least 40 doublings");
  }
}

PropertyReport check_zero_dose_reduction(VariantId variant,
                                         int n_random_trials, double tol,
                                         std::uint64_t seed) {
  if (n_random_trials < 1) {
    throw std::invalid_argument("need at least one trial");
  }
  auto spec = variant_model(variant);
  Rng rng(seed);
  PropertyReport report{PropertyId::ZeroDoseReduction, variant, true, tol,
                        seed, {}};
  for (int trial = 0; trial < n_random_trials && report.passed; ++trial) {
    auto pv = sample_params(variant, rng);
    DoseCombination doses = {rng.uniform(10.0, 800.0),
                             rng.uniform(10.0, 800.0)};
    for (int drop = 0; drop < 2 && report.passed; ++drop) {
      DoseCombination z = doses;
      z[static_cast<std::size_t>(drop)] = 0.0;
      const int keep = 1 - drop;
      const double full = model_prob(spec, pv, z);
      const double reduced = single_drug_prob(
          z[static_cast<std::size_t>(keep)], pv.log_alpha[keep],
          pv.log_beta[keep], spec.drugs[static_cast<std::size_t>(keep)].ref_dose);
      if (!(std::abs(full - reduced) <= tol)) {
        report.passed = false;
        report.witness = make_witness(spec, pv, z, {}, full, reduced,
                                      "zero-dose value differs from the "
                                      "one-drug model");
      }
    }
  }
  return report;
}

PropertyReport check_independence_reduction(VariantId variant,
                                            int n_random_trials, double tol,
                                            std::uint64_t seed) {
  if (n_random_trials < 1) {
    throw std::invalid_argument("need at least one trial");
  }
  auto spec = variant_model(variant);
  Rng rng(seed);
  PropertyReport report{PropertyId::IndependenceReduction, variant, true, tol,
                        seed, {}};
  for (int trial = 0; trial < n_random_trials && report.passed; ++trial) {
    auto pv = sample_params(variant, rng);
    set_interaction_shift(variant, pv, 0.0);
    DoseCombination doses = {rng.uniform(10.0, 800.0),
                             rng.uniform(10.0, 800.0)};
    if (trial % 5 == 0) doses[trial % 2] = 0.0;  // exercise the boundary too
    const double model = model_prob(spec, pv, doses);
    const double indep = prob_independent(doses, pv, spec.drugs);
    if (!(std::abs(model - indep) <= tol)) {
      report.passed = false;
      report.witness = make_witness(spec, pv, doses, {}, model, indep,
                                    "neutral interaction setting differs "
                                    "from independence");
    }
  }
  return report;
}

PropertyReport check_asymptotic_toxicity(VariantId variant,
                                         const AsymptoticLadder& ladder,
                                         int n_param_sets, std::uint64_t seed) {
  if (n_param_sets < 1) {
    throw std::invalid_argument("need at least one parameter set");
  }
  auto spec = variant_model(variant);
  ladder.validate(spec);
  Rng rng(seed);

  std::vector<ParameterVector> sets;
  for (int i = 0; i < n_param_sets; ++i) {
    sets.push_back(sample_params(variant, rng));
  }
  // Strongly antagonistic settings are the interesting corner: force them in
  // addition to whatever the random draws produced.
  for (double shift : {-1.0, -2.0}) {
    auto pv = sample_params(variant, rng);
    set_interaction_shift(variant, pv, shift);
    sets.push_back(pv);
  }

  PropertyReport report{PropertyId::AsymptoticToxicity, variant, true,
                        kAsymptoticGap, seed, {}};
  DoseCombination top = ladder.base_doses;
  for (int i : ladder.escalate) {
    top[static_cast<std::size_t>(i)] =
        std::ldexp(ladder.base_doses[static_cast<std::size_t>(i)],
                   ladder.n_steps);
  }
  for (const auto& pv : sets) {
    const double pi = model_prob(spec, pv, top);
    if (!(pi >= 1.0 - kAsymptoticGap)) {
      report.passed = false;
      std::ostringstream note;
      note << "pi = " << pi << " after " << ladder.n_steps
           << " doublings (needs >= " << 1.0 - kAsymptoticGap << ")";
      report.witness =
          make_witness(spec, pv, ladder.base_doses, top, pi, pi, note.str());
      break;
    }
  }
  return report;
}

PropertyReport check_ordering(VariantId variant, OrderingSign sign,
                              int n_random_trials, std::uint64_t seed) {
  if (n_random_trials < 1) {
    throw std::invalid_argument("need at least one trial");
  }
  const PropertyId pid = sign == OrderingSign::Synergy
                             ? PropertyId::SynergyOrdering
                             : PropertyId::AntagonismOrdering;
  PropertyReport report{pid, variant, true, 0.0, seed, {}};
  if (variant == VariantId::NoInteraction) {
    report.passed = false;
    report.witness.note = "no interaction parameter";
    return report;
  }

  auto spec = variant_model(variant);
  Rng rng(seed);
  const double dir = sign == OrderingSign::Synergy ? 1.0 : -1.0;
  for (int trial = 0; trial < n_random_trials && report.passed; ++trial) {
    auto pv = sample_params(variant, rng);
    set_interaction_shift(variant, pv, dir * rng.uniform(0.1, 3.0));
    DoseCombination doses = {rng.uniform(50.0, 600.0),
                             rng.uniform(50.0, 600.0)};
    const double model = model_prob(spec, pv, doses);
    const double indep = prob_independent(doses, pv, spec.drugs);
    const bool ok = dir > 0 ? model > indep : model < indep;
    if (!ok) {
      report.passed = false;
      report.witness = make_witness(spec, pv, doses, {}, model, indep,
                                    "strict ordering against independence "
                                    "violated");
    }
  }
  return report;
}

PropertyReport check_nonmonotonicity(VariantId variant, std::uint64_t seed) {
  auto spec = variant_model(variant);
  PropertyReport report{PropertyId::NonMonotonicity, variant, false,
                        kNonMonoMargin, seed, {}};

  // Documented search grid: shallow-to-unit slopes, antagonistic strengths,
  // dose pairs around the reference, small increments on either drug.
  const double log_betas[] = {std::log(0.25), std::log(0.5), 0.0};
  const double strengths[] = {-0.5, -1.0, -2.0, -4.0};
  const DoseCombination bases[] = {
      {200.0, 200.0}, {100.0, 100.0}, {300.0, 300.0}, {200.0, 100.0}};
  const double epsilons[] = {1.0, 5.0, 10.0, 25.0};
  const double a0 = logit(0.10);

  const bool has_interaction = variant != VariantId::NoInteraction;
  const std::size_t n_strengths =
      has_interaction ? std::size(strengths) : std::size_t{1};

  for (double lb : log_betas) {
    for (std::size_t si = 0; si < n_strengths; ++si) {
      ParameterVector pv;
      pv.log_alpha = {a0, a0};
      pv.log_beta = {lb, lb};
      if (has_interaction) set_interaction_shift(variant, pv, strengths[si]);
      if (variant == VariantId::Thall2) pv.log_beta3 = lb;  // search slope too
      for (const auto& base : bases) {
        const double pi0 = model_prob(spec, pv, base);
        for (double eps : epsilons) {
          for (std::size_t drug = 0; drug < 2; ++drug) {
            DoseCombination shifted = base;
            shifted[drug] += eps;
            const double pi1 = model_prob(spec, pv, shifted);
            if (pi1 < pi0 - kNonMonoMargin) {
              report.passed = true;
              report.witness =
                  make_witness(spec, pv, base, shifted, pi0, pi1);
              return report;
            }
          }
        }
      }
    }
  }
  report.witness.note =
      "no local decrease found over the documented search grid";
  return report;
}

std::vector<PropertyReport> run_property_matrix(std::uint64_t seed) {
  std::vector<PropertyReport> reports;
  AsymptoticLadder ladder;  // one drug doubling 40 times from (200, 200)
  for (PropertyId pid : all_properties()) {
    for (VariantId vid : all_variants()) {
      const std::uint64_t s =
          labeled_seed(seed, property_name(pid) + "/" + variant_name(vid));
      switch (pid) {
        case PropertyId::ZeroDoseReduction:
          reports.push_back(
              check_zero_dose_reduction(vid, 200, kReductionTol, s));
          break;
        case PropertyId::IndependenceReduction:
          reports.push_back(
              check_independence_reduction(vid, 200, kReductionTol, s));
          break;
        case PropertyId::AsymptoticToxicity:
          reports.push_back(check_asymptotic_toxicity(vid, ladder, 50, s));
          break;
        case PropertyId::SynergyOrdering:
          reports.push_back(
              check_ordering(vid, OrderingSign::Synergy, 200, s));
          break;
        case PropertyId::AntagonismOrdering:
          reports.push_back(
              check_ordering(vid, OrderingSign::Antagonism, 200, s));
          break;
        case PropertyId::NonMonotonicity:
          reports.push_back(check_nonmonotonicity(vid, s));
          break;
      }
    }
  }
  return reports;
}

bool expected_property_result(PropertyId property, VariantId variant) {
  const bool interacts = variant != VariantId::NoInteraction;
  switch (property) {
    case PropertyId::ZeroDoseReduction: return true;
    case PropertyId::IndependenceReduction: return true;
    case PropertyId::AsymptoticToxicity: return variant != VariantId::Linear;
    case PropertyId::SynergyOrdering: return interacts;
    case PropertyId::AntagonismOrdering: return interacts;
    case PropertyId::NonMonotonicity:
      return variant == VariantId::Linear || variant == VariantId::Saturating;
  }
  throw std::invalid_argument("unknown property id");
}

bool matrix_matches_reference(const std::vector<PropertyReport>& reports) {
  std::map<std::pair<int, int>, int> seen;
  for (const auto& r : reports) {
    const auto key = std::make_pair(static_cast<int>(r.property),
                                    static_cast<int>(r.variant));
    if (++seen[key] > 1) return false;
    if (r.passed != expected_property_result(r.property, r.variant)) {
      return false;
    }
  }
  return seen.size() == all_properties().size() * all_variants().size();
}

std::string render_property_matrix(const std::vector<PropertyReport>& reports) {
  std::map<std::pair<int, int>, bool> cell;
  for (const auto& r : reports) {
    cell[{static_cast<int>(r.property), static_cast<int>(r.variant)}] =
        r.passed;
  }
  static const char* row_labels[] = {
      "Reduces to lower-order model at dose 0",
      "Compatible with the no-interaction model",
      "P(DLT) approaches 1 as any dose grows",
      "Can model synergistic interactions",
      "Can model antagonistic interactions",
      "Can model non-monotonic dose-toxicity",
  };
  std::ostringstream out;
  const int label_w = 42;
  out << std::string(static_cast<std::size_t>(label_w), ' ');
  for (VariantId vid : all_variants()) {
    std::string name = variant_name(vid);
    out << name << std::string(name.size() < 16 ? 16 - name.size() : 1, ' ');
  }
  out << '\n';
  for (PropertyId pid : all_properties()) {
    std::string label = row_labels[static_cast<int>(pid)];
    label.resize(static_cast<std::size_t>(label_w), ' ');
    out << label;
    for (VariantId vid : all_variants()) {
      auto it = cell.find({static_cast<int>(pid), static_cast<int>(vid)});
      const char* mark = it == cell.end() ? "?" : (it->second ? "yes" : "no");
      out << mark << std::string(16 - std::string(mark).size(), ' ');
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace blrm
