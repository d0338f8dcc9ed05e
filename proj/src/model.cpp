#include "blrm/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

#include "blrm/math.hpp"

namespace blrm {

namespace {

constexpr int kMaxDrugs = 16;  // 2^16 interaction terms is already absurd

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) {
    return false;
  }
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) {
      return false;
    }
  }
  return true;
}

void require_finite_param(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument(std::string("non-finite ") + what);
  }
}

void require_dose(double dose, const char* what) {
  if (!(dose >= 0.0) || !std::isfinite(dose)) {
    throw std::invalid_argument(std::string(what) +
                                " must be finite and non-negative");
  }
}

void require_ref(double ref, const char* what) {
  if (!(ref > 0.0) || !std::isfinite(ref)) {
    throw std::invalid_argument(std::string(what) +
                                " must be finite and positive");
  }
}

// size first, then lexicographic on members
bool term_less(const InteractionTerm& a, const InteractionTerm& b) {
  if (a.members.size() != b.members.size()) {
    return a.members.size() < b.members.size();
  }
  return a.members < b.members;
}

std::string term_name(const ModelSpec& spec, const InteractionTerm& term) {
  std::string out = "eta[";
  for (std::size_t i = 0; i < term.members.size(); ++i) {
    if (i > 0) out += ',';
    out += spec.drugs[static_cast<std::size_t>(term.members[i])].name;
  }
  out += ']';
  return out;
}

// gamma for one term given the plain dose/ref ratio product
double gamma_from_product(GammaKind kind, double p) {
  if (kind == GammaKind::Linear) return p;
  // 2p/(1+p), arranged so huge p cannot overflow. The true value is strictly
  // below 2; keep the computed one strictly below 2 as well.
  double g = p > 1.0 ? 2.0 / (1.0 + 1.0 / p) : 2.0 * p / (1.0 + p);
  if (g >= 2.0) g = std::nextafter(2.0, 0.0);
  return g;
}

double dose_ratio_product(std::span<const double> doses,
                          std::span<const double> refs) {
  double p = 1.0;
  for (std::size_t i = 0; i < doses.size(); ++i) {
    if (doses[i] == 0.0) return 0.0;
    p *= doses[i] / refs[i];
  }
  return p;
}

}  // namespace

ModelVariant ModelVariant::no_interaction() {
  return {VariantKind::NoInteraction, GammaKind::Saturating};
}

ModelVariant ModelVariant::logit_additive(GammaKind g) {
  return {VariantKind::LogitAdditive, g};
}

ModelVariant ModelVariant::thall2() {
  return {VariantKind::Thall2, GammaKind::Saturating};
}

int ModelSpec::param_dim() const {
  const int n = n_drugs();
  switch (variant.kind) {
    case VariantKind::NoInteraction:
      return 2 * n;
    case VariantKind::LogitAdditive:
      return 2 * n + static_cast<int>(terms.size());
    case VariantKind::Thall2:
      return 6;
  }
  throw std::logic_error("unreachable model variant");
}

std::vector<std::string> ModelSpec::param_names() const {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(param_dim()));
  for (const auto& d : drugs) names.push_back("log_alpha[" + d.name + "]");
  for (const auto& d : drugs) names.push_back("log_beta[" + d.name + "]");
  if (variant.kind == VariantKind::LogitAdditive) {
    for (const auto& t : terms) names.push_back(term_name(*this, t));
  } else if (variant.kind == VariantKind::Thall2) {
    names.emplace_back("log_alpha3");
    names.emplace_back("log_beta3");
  }
  return names;
}

void ModelSpec::validate() const {
  const int n = n_drugs();
  if (n < 1) throw std::invalid_argument("model needs at least one drug");
  if (n > kMaxDrugs) {
    throw std::invalid_argument("model supports at most 16 drugs");
  }
  for (const auto& d : drugs) {
    if (!is_identifier(d.name)) {
      throw std::invalid_argument("drug name '" + d.name +
                                  "' is not an identifier");
    }
    require_ref(d.ref_dose, ("ref_dose of drug '" + d.name + "'").c_str());
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (drugs[static_cast<std::size_t>(i)].name ==
          drugs[static_cast<std::size_t>(j)].name) {
        throw std::invalid_argument("duplicate drug name '" +
                                    drugs[static_cast<std::size_t>(i)].name +
                                    "'");
      }
    }
  }

  if (variant.kind == VariantKind::Thall2) {
    if (n != 2) {
      throw std::invalid_argument("thall2 variant requires exactly two drugs");
    }
    if (!(terms.size() == 1 && terms[0].members == std::vector<int>{0, 1})) {
      throw std::invalid_argument("thall2 variant implies the single pair term");
    }
    return;
  }
  if (variant.kind == VariantKind::NoInteraction) {
    if (!terms.empty()) {
      throw std::invalid_argument(
          "no_interaction variant must not carry interaction terms");
    }
    return;
  }

  // LogitAdditive: members strictly increasing within [0, n), size >= 2,
  // terms distinct and in canonical order.
  for (const auto& t : terms) {
    if (t.members.size() < 2) {
      throw std::invalid_argument("interaction term needs at least two drugs");
    }
    for (std::size_t i = 0; i < t.members.size(); ++i) {
      if (t.members[i] < 0 || t.members[i] >= n) {
        throw std::invalid_argument("interaction term member out of range");
      }
      if (i > 0 && t.members[i] <= t.members[i - 1]) {
        throw std::invalid_argument(
            "interaction term members must be strictly increasing");
      }
    }
  }
  for (std::size_t i = 1; i < terms.size(); ++i) {
    if (terms[i] == terms[i - 1]) {
      throw std::invalid_argument("duplicate interaction term");
    }
    if (term_less(terms[i], terms[i - 1])) {
      throw std::invalid_argument(
          "interaction terms must be in canonical order (size, then "
          "lexicographic)");
    }
  }
}

ModelSpec ModelSpec::make(std::vector<DrugSpec> drugs, ModelVariant variant,
                          std::vector<InteractionTerm> terms) {
  ModelSpec spec;
  spec.drugs = std::move(drugs);
  spec.variant = variant;
  if (variant.kind == VariantKind::Thall2) {
    if (!terms.empty() && !(terms.size() == 1 &&
                            terms[0].members == std::vector<int>{0, 1})) {
      throw std::invalid_argument("thall2 variant implies the single pair term");
    }
    spec.terms = {InteractionTerm{{0, 1}}};
  } else {
    for (auto& t : terms) std::sort(t.members.begin(), t.members.end());
    std::sort(terms.begin(), terms.end(), term_less);
    spec.terms = std::move(terms);
  }
  spec.validate();
  return spec;
}

std::vector<double> pack_parameters(const ModelSpec& spec,
                                    const ParameterVector& params) {
  spec.validate();
  const auto n = static_cast<std::size_t>(spec.n_drugs());
  if (params.log_alpha.size() != n || params.log_beta.size() != n) {
    throw std::invalid_argument(
        "parameter vector does not match the model's drug count");
  }
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(spec.param_dim()));
  flat.insert(flat.end(), params.log_alpha.begin(), params.log_alpha.end());
  flat.insert(flat.end(), params.log_beta.begin(), params.log_beta.end());
  if (spec.variant.kind == VariantKind::LogitAdditive) {
    if (params.eta.size() != spec.terms.size()) {
      throw std::invalid_argument(
          "eta length does not match the model's interaction terms");
    }
    flat.insert(flat.end(), params.eta.begin(), params.eta.end());
  } else if (spec.variant.kind == VariantKind::Thall2) {
    flat.push_back(params.log_alpha3);
    flat.push_back(params.log_beta3);
  }
  return flat;
}

ParameterVector unpack_parameters(const ModelSpec& spec,
                                  std::span<const double> flat) {
  spec.validate();
  if (flat.size() != static_cast<std::size_t>(spec.param_dim())) {
    throw std::invalid_argument("flat parameter vector has wrong length");
  }
  const auto n = static_cast<std::size_t>(spec.n_drugs());
  ParameterVector p;
  p.log_alpha.assign(flat.begin(), flat.begin() + n);
  p.log_beta.assign(flat.begin() + n, flat.begin() + 2 * n);
  if (spec.variant.kind == VariantKind::LogitAdditive) {
    p.eta.assign(flat.begin() + 2 * n, flat.end());
  } else if (spec.variant.kind == VariantKind::Thall2) {
    p.log_alpha3 = flat[4];
    p.log_beta3 = flat[5];
  }
  return p;
}

double single_drug_logit(double dose, double log_alpha, double log_beta,
                         double ref_dose) {
  require_dose(dose, "dose");
  require_ref(ref_dose, "ref_dose");
  require_finite_param(log_alpha, "log_alpha");
  require_finite_param(log_beta, "log_beta");
  if (dose == 0.0) return kNegInf;
  return log_alpha + std::exp(log_beta) * std::log(dose / ref_dose);
}

double single_drug_prob(double dose, double log_alpha, double log_beta,
                        double ref_dose) {
  return expit(single_drug_logit(dose, log_alpha, log_beta, ref_dose));
}

std::vector<InteractionTerm> enumerate_interactions(int n_drugs) {
  if (n_drugs < 1) {
    throw std::invalid_argument("enumerate_interactions: need at least one drug");
  }
  if (n_drugs > kMaxDrugs) {
    throw std::invalid_argument("enumerate_interactions: at most 16 drugs");
  }
  std::vector<InteractionTerm> out;
  for (int size = 2; size <= n_drugs; ++size) {
    // lexicographic combinations of `size` indices out of n_drugs
    std::vector<int> comb(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) comb[static_cast<std::size_t>(i)] = i;
    while (true) {
      out.push_back(InteractionTerm{comb});
      int i = size - 1;
      while (i >= 0 &&
             comb[static_cast<std::size_t>(i)] == n_drugs - size + i) {
        --i;
      }
      if (i < 0) break;
      ++comb[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < size; ++j) {
        comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
  return out;
}

double gamma_linear(std::span<const double> doses,
                    std::span<const double> ref_doses) {
  if (doses.size() != ref_doses.size() || doses.size() < 2) {
    throw std::invalid_argument("gamma_linear: need matching dose/ref vectors "
                                "with at least two drugs");
  }
  for (std::size_t i = 0; i < doses.size(); ++i) {
    require_dose(doses[i], "dose");
    require_ref(ref_doses[i], "ref_dose");
  }
  return dose_ratio_product(doses, ref_doses);
}

double gamma_saturating(std::span<const double> doses,
                        std::span<const double> ref_doses) {
  if (doses.size() != ref_doses.size() || doses.size() < 2) {
    throw std::invalid_argument("gamma_saturating: need matching dose/ref "
                                "vectors with at least two drugs");
  }
  for (std::size_t i = 0; i < doses.size(); ++i) {
    require_dose(doses[i], "dose");
    require_ref(ref_doses[i], "ref_dose");
  }
  return gamma_from_product(GammaKind::Saturating,
                            dose_ratio_product(doses, ref_doses));
}

namespace detail {

namespace {

// Log-odds of "at least one drug alone causes a DLT" plus per-drug pieces.
// Probabilities are kept in log space throughout: the union is accumulated as
//   log U_k = LSE(log U_{k-1}, log pi_k + sum_{j<k} log(1 - pi_j))
// which survives pi values down to the smallest subnormal.
double independent_logit(int n_drugs, std::span<const double> flat,
                         std::span<const double> doses,
                         const std::vector<DrugSpec>& drugs, Scratch& s) {
  const auto n = static_cast<std::size_t>(n_drugs);
  s.lin.assign(n, kNegInf);
  s.log_pi.assign(n, kNegInf);
  double log_union = kNegInf;
  double log_none = 0.0;  // sum of log(1 - pi_i) so far
  for (std::size_t i = 0; i < n; ++i) {
    if (doses[i] == 0.0) continue;
    const double lin = flat[i] + std::exp(flat[n + i]) *
                                     std::log(doses[i] / drugs[i].ref_dose);
    s.lin[i] = lin;
    s.log_pi[i] = -log1pexp(-lin);
    log_union = log_sum_exp(log_union, s.log_pi[i] + log_none);
    log_none -= log1pexp(lin);
  }
  if (log_union == kNegInf) return kNegInf;  // every dose is zero
  return log_union - log_none;
}

}  // namespace

double model_logit_flat(const ModelSpec& spec, std::span<const double> flat,
                        std::span<const double> doses, Scratch& s) {
  const int n = spec.n_drugs();
  if (spec.variant.kind == VariantKind::Thall2) {
    const double u1 = doses[0] > 0.0
                          ? std::exp(flat[2]) *
                                std::log(doses[0] / spec.drugs[0].ref_dose)
                          : 0.0;
    const double u2 = doses[1] > 0.0
                          ? std::exp(flat[3]) *
                                std::log(doses[1] / spec.drugs[1].ref_dose)
                          : 0.0;
    const double t1 = doses[0] > 0.0 ? flat[0] + u1 : kNegInf;
    const double t2 = doses[1] > 0.0 ? flat[1] + u2 : kNegInf;
    const double t3 = (doses[0] > 0.0 && doses[1] > 0.0)
                          ? flat[4] + std::exp(flat[5]) * (u1 + u2)
                          : kNegInf;
    return log_sum_exp(log_sum_exp(t1, t2), t3);
  }

  double lo = independent_logit(n, flat, doses, spec.drugs, s);
  if (spec.variant.kind == VariantKind::LogitAdditive && lo != kNegInf) {
    s.gamma.assign(spec.terms.size(), 0.0);
    for (std::size_t k = 0; k < spec.terms.size(); ++k) {
      double p = 1.0;
      bool active = true;
      for (int m : spec.terms[k].members) {
        const auto mi = static_cast<std::size_t>(m);
        if (doses[mi] == 0.0) {
          active = false;
          break;
        }
        p *= doses[mi] / spec.drugs[mi].ref_dose;
      }
      if (!active) continue;
      s.gamma[k] = gamma_from_product(spec.variant.gamma, p);
      lo += flat[2 * static_cast<std::size_t>(n) + k] * s.gamma[k];
    }
  }
  return lo;
}

}  // namespace detail

namespace {

void validate_doses(const ModelSpec& spec, const DoseCombination& doses) {
  if (doses.size() != static_cast<std::size_t>(spec.n_drugs())) {
    throw std::invalid_argument("dose combination length does not match model");
  }
  for (double d : doses) require_dose(d, "dose");
}

void validate_flat(std::span<const double> flat) {
  for (double v : flat) require_finite_param(v, "model parameter");
}

}  // namespace

double prob_independent(const DoseCombination& doses,
                        const ParameterVector& params,
                        const std::vector<DrugSpec>& drugs) {
  auto spec = ModelSpec::make(drugs, ModelVariant::no_interaction());
  return model_prob(spec, params, doses);
}

double combined_prob(const ModelSpec& spec, const ParameterVector& params,
                     const DoseCombination& doses) {
  if (spec.variant.kind == VariantKind::Thall2) {
    throw std::invalid_argument("combined_prob does not cover the thall2 "
                                "variant; use thall_prob");
  }
  return model_prob(spec, params, doses);
}

namespace {

double thall_logit(double dose1, double dose2, const ParameterVector& params,
                   const std::array<double, 2>& ref_doses) {
  require_dose(dose1, "dose1");
  require_dose(dose2, "dose2");
  require_ref(ref_doses[0], "ref_dose1");
  require_ref(ref_doses[1], "ref_dose2");
  if (params.log_alpha.size() != 2 || params.log_beta.size() != 2) {
    throw std::invalid_argument("thall_prob needs two per-drug parameter pairs");
  }
  for (double v : params.log_beta) require_finite_param(v, "log_beta");
  for (double v : params.log_alpha) {
    // alpha = 0 (log_alpha = -inf) is a meaningful sub-model here
    if (std::isnan(v) || v == kInf) {
      throw std::invalid_argument("log_alpha must not be NaN or +inf");
    }
  }
  if (std::isnan(params.log_alpha3) || params.log_alpha3 == kInf) {
    throw std::invalid_argument("log_alpha3 must not be NaN or +inf");
  }
  require_finite_param(params.log_beta3, "log_beta3");

  const double u1 = dose1 > 0.0 ? std::exp(params.log_beta[0]) *
                                      std::log(dose1 / ref_doses[0])
                                : 0.0;
  const double u2 = dose2 > 0.0 ? std::exp(params.log_beta[1]) *
                                      std::log(dose2 / ref_doses[1])
                                : 0.0;
  const double t1 = dose1 > 0.0 ? params.log_alpha[0] + u1 : kNegInf;
  const double t2 = dose2 > 0.0 ? params.log_alpha[1] + u2 : kNegInf;
  const double t3 = (dose1 > 0.0 && dose2 > 0.0)
                        ? params.log_alpha3 +
                              std::exp(params.log_beta3) * (u1 + u2)
                        : kNegInf;
  return log_sum_exp(log_sum_exp(t1, t2), t3);
}

}  // namespace

double thall_prob(double dose1, double dose2, const ParameterVector& params,
                  const std::array<double, 2>& ref_doses) {
  return expit(thall_logit(dose1, dose2, params, ref_doses));
}

double model_logit(const ModelSpec& spec, const ParameterVector& params,
                   const DoseCombination& doses) {
  spec.validate();
  validate_doses(spec, doses);
  if (spec.variant.kind == VariantKind::Thall2) {
    // thall_logit validates on its own (log_alpha may be -inf there)
    return thall_logit(doses[0], doses[1], params,
                       {spec.drugs[0].ref_dose, spec.drugs[1].ref_dose});
  }
  const auto flat = pack_parameters(spec, params);
  validate_flat(flat);
  detail::Scratch scratch;
  return detail::model_logit_flat(spec, flat, doses, scratch);
}

double model_prob(const ModelSpec& spec, const ParameterVector& params,
                  const DoseCombination& doses) {
  if (spec.variant.kind == VariantKind::Thall2) {
    spec.validate();
    validate_doses(spec, doses);
    return thall_prob(doses[0], doses[1], params,
                      {spec.drugs[0].ref_dose, spec.drugs[1].ref_dose});
  }
  return expit(model_logit(spec, params, doses));
}

}  // namespace blrm
