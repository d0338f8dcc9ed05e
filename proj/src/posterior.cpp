#include "blrm/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "blrm/math.hpp"

namespace blrm {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // log(2*pi)/2

double gamma_product(const ModelSpec& spec, const InteractionTerm& term,
                     const std::vector<double>& doses) {
  double p = 1.0;
  for (int m : term.members) {
    const auto mi = static_cast<std::size_t>(m);
    if (doses[mi] == 0.0) return 0.0;
    p *= doses[mi] / spec.drugs[mi].ref_dose;
  }
  return p;
}

double saturate(double p) {
  double g = p > 1.0 ? 2.0 / (1.0 + 1.0 / p) : 2.0 * p / (1.0 + p);
  if (g >= 2.0) g = std::nextafter(2.0, 0.0);
  return g;
}

}  // namespace

void validate_cohort(const ModelSpec& spec, const CohortRecord& cohort) {
  if (cohort.doses.size() != static_cast<std::size_t>(spec.n_drugs())) {
    throw std::invalid_argument("cohort '" + cohort.label +
                                "': dose vector length does not match model");
  }
  for (double d : cohort.doses) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument("cohort '" + cohort.label +
                                  "': doses must be finite and non-negative");
    }
  }
  if (cohort.n_patients < 0) {
    throw std::invalid_argument("cohort '" + cohort.label +
                                "': negative patient count");
  }
  if (cohort.n_dlt < 0 || cohort.n_dlt > cohort.n_patients) {
    throw std::invalid_argument("cohort '" + cohort.label +
                                "': n_dlt outside [0, n_patients]");
  }
}

std::pair<std::vector<double>, std::vector<double>> flatten_priors(
    const ModelSpec& spec, const PriorSpec& priors) {
  spec.validate();
  const auto n = static_cast<std::size_t>(spec.n_drugs());
  if (priors.log_alpha.size() != n || priors.log_beta.size() != n) {
    throw std::invalid_argument(
        "prior spec does not provide one log_alpha/log_beta prior per drug");
  }
  std::vector<GaussianPrior> all;
  all.reserve(static_cast<std::size_t>(spec.param_dim()));
  all.insert(all.end(), priors.log_alpha.begin(), priors.log_alpha.end());
  all.insert(all.end(), priors.log_beta.begin(), priors.log_beta.end());
  if (spec.variant.kind == VariantKind::LogitAdditive) {
    if (priors.eta.size() != spec.terms.size()) {
      throw std::invalid_argument(
          "prior spec does not provide one eta prior per interaction term");
    }
    all.insert(all.end(), priors.eta.begin(), priors.eta.end());
  } else if (spec.variant.kind == VariantKind::Thall2) {
    all.push_back(priors.log_alpha3);
    all.push_back(priors.log_beta3);
  }

  std::vector<double> mean, sd;
  mean.reserve(all.size());
  sd.reserve(all.size());
  for (const auto& g : all) {
    if (!std::isfinite(g.mean)) {
      throw std::invalid_argument("prior mean must be finite");
    }
    if (!(g.sd > 0.0) || !std::isfinite(g.sd)) {
      throw std::invalid_argument("prior sd must be finite and positive");
    }
    mean.push_back(g.mean);
    sd.push_back(g.sd);
  }
  return {std::move(mean), std::move(sd)};
}

LogPosterior::LogPosterior(std::vector<CohortRecord> data, ModelSpec spec,
                           PriorSpec priors)
    : spec_(std::move(spec)) {
  auto [mean, sd] = flatten_priors(spec_, priors);
  prior_mean_ = std::move(mean);
  prior_sd_ = std::move(sd);

  cohorts_.reserve(data.size());
  for (const auto& c : data) {
    validate_cohort(spec_, c);
    if (c.n_patients == 0) continue;  // no information
    CohortCache cc;
    cc.doses = c.doses;
    cc.n = c.n_patients;
    cc.r = c.n_dlt;
    const auto n = static_cast<std::size_t>(spec_.n_drugs());
    cc.log_x.assign(n, 0.0);
    cc.all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (c.doses[i] > 0.0) {
        cc.log_x[i] = std::log(c.doses[i] / spec_.drugs[i].ref_dose);
        cc.all_zero = false;
      }
    }
    if (spec_.variant.kind == VariantKind::LogitAdditive) {
      cc.gamma.reserve(spec_.terms.size());
      for (const auto& t : spec_.terms) {
        const double p = gamma_product(spec_, t, c.doses);
        cc.gamma.push_back(p == 0.0 ? 0.0
                           : spec_.variant.gamma == GammaKind::Linear
                               ? p
                               : saturate(p));
      }
    }
    cohorts_.push_back(std::move(cc));
  }
}

double LogPosterior::log_likelihood(std::span<const double> theta,
                                    Workspace& /*ws*/) const {
  const auto n = static_cast<std::size_t>(spec_.n_drugs());
  const bool thall = spec_.variant.kind == VariantKind::Thall2;
  double ll = 0.0;
  for (const auto& c : cohorts_) {
    double lo;
    if (c.all_zero) {
      lo = kNegInf;
    } else if (thall) {
      const double u1 = c.doses[0] > 0.0 ? std::exp(theta[2]) * c.log_x[0] : 0.0;
      const double u2 = c.doses[1] > 0.0 ? std::exp(theta[3]) * c.log_x[1] : 0.0;
      const double t1 = c.doses[0] > 0.0 ? theta[0] + u1 : kNegInf;
      const double t2 = c.doses[1] > 0.0 ? theta[1] + u2 : kNegInf;
      const double t3 = (c.doses[0] > 0.0 && c.doses[1] > 0.0)
                            ? theta[4] + std::exp(theta[5]) * (u1 + u2)
                            : kNegInf;
      lo = log_sum_exp(log_sum_exp(t1, t2), t3);
    } else {
      double log_union = kNegInf;
      double log_none = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (c.doses[i] == 0.0) continue;
        const double lin = theta[i] + std::exp(theta[n + i]) * c.log_x[i];
        const double lpi = -log1pexp(-lin);
        log_union = log_sum_exp(log_union, lpi + log_none);
        log_none -= log1pexp(lin);
      }
      lo = log_union - log_none;
      for (std::size_t k = 0; k < c.gamma.size(); ++k) {
        if (c.gamma[k] != 0.0) lo += theta[2 * n + k] * c.gamma[k];
      }
    }

    if (lo == kNegInf) {
      if (c.r > 0) return kNegInf;  // observed DLT at probability zero
      continue;
    }
    ll += static_cast<double>(c.r) * (-log1pexp(-lo)) +
          static_cast<double>(c.n - c.r) * (-log1pexp(lo));
  }
  return std::isnan(ll) ? kNegInf : ll;
}

double LogPosterior::value(std::span<const double> theta, Workspace& ws) const {
  double lp = 0.0;
  for (std::size_t j = 0; j < prior_mean_.size(); ++j) {
    const double z = (theta[j] - prior_mean_[j]) / prior_sd_[j];
    lp += -0.5 * z * z - std::log(prior_sd_[j]) - kHalfLog2Pi;
  }
  const double ll = log_likelihood(theta, ws);
  if (ll == kNegInf) return kNegInf;
  lp += ll;
  return std::isfinite(lp) ? lp : kNegInf;
}

double LogPosterior::value_and_gradient(std::span<const double> theta,
                                        std::span<double> grad,
                                        Workspace& ws) const {
  const auto dim = static_cast<std::size_t>(this->dim());
  const auto n = static_cast<std::size_t>(spec_.n_drugs());
  const bool thall = spec_.variant.kind == VariantKind::Thall2;

  double lp = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double z = (theta[j] - prior_mean_[j]) / prior_sd_[j];
    lp += -0.5 * z * z - std::log(prior_sd_[j]) - kHalfLog2Pi;
    grad[j] = -z / prior_sd_[j];
  }

  auto& lin = ws.scratch.lin;
  auto& log_pi = ws.scratch.log_pi;
  auto& cg = ws.cohort_grad;
  cg.assign(dim, 0.0);

  for (const auto& c : cohorts_) {
    double lo;
    std::fill(cg.begin(), cg.end(), 0.0);
    if (c.all_zero) {
      lo = kNegInf;
    } else if (thall) {
      const double b1 = std::exp(theta[2]);
      const double b2 = std::exp(theta[3]);
      const double b3 = std::exp(theta[5]);
      const double u1 = c.doses[0] > 0.0 ? b1 * c.log_x[0] : 0.0;
      const double u2 = c.doses[1] > 0.0 ? b2 * c.log_x[1] : 0.0;
      const double t1 = c.doses[0] > 0.0 ? theta[0] + u1 : kNegInf;
      const double t2 = c.doses[1] > 0.0 ? theta[1] + u2 : kNegInf;
      const double t3 = (c.doses[0] > 0.0 && c.doses[1] > 0.0)
                            ? theta[4] + b3 * (u1 + u2)
                            : kNegInf;
      lo = log_sum_exp(log_sum_exp(t1, t2), t3);
      if (lo != kNegInf) {
        const double w1 = t1 == kNegInf ? 0.0 : std::exp(t1 - lo);
        const double w2 = t2 == kNegInf ? 0.0 : std::exp(t2 - lo);
        const double w3 = t3 == kNegInf ? 0.0 : std::exp(t3 - lo);
        cg[0] = w1;
        cg[1] = w2;
        cg[2] = (w1 + b3 * w3) * u1;
        cg[3] = (w2 + b3 * w3) * u2;
        cg[4] = w3;
        cg[5] = w3 * b3 * (u1 + u2);
      }
    } else {
      lin.assign(n, kNegInf);
      log_pi.assign(n, kNegInf);
      double log_union = kNegInf;
      double log_none = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (c.doses[i] == 0.0) continue;
        const double li = theta[i] + std::exp(theta[n + i]) * c.log_x[i];
        lin[i] = li;
        log_pi[i] = -log1pexp(-li);
        log_union = log_sum_exp(log_union, log_pi[i] + log_none);
        log_none -= log1pexp(li);
      }
      lo = log_union - log_none;
      for (std::size_t k = 0; k < c.gamma.size(); ++k) {
        if (c.gamma[k] != 0.0) lo += theta[2 * n + k] * c.gamma[k];
      }
      if (lo != kNegInf && log_union != kNegInf) {
        for (std::size_t i = 0; i < n; ++i) {
          if (c.doses[i] == 0.0) continue;
          // d logit_perp / d lin_i = pi_i / pi_union
          const double w = std::exp(log_pi[i] - log_union);
          cg[i] = w;
          cg[n + i] = w * std::exp(theta[n + i]) * c.log_x[i];
        }
        for (std::size_t k = 0; k < c.gamma.size(); ++k) {
          cg[2 * n + k] = c.gamma[k];
        }
      }
    }

    if (lo == kNegInf) {
      if (c.r > 0) {
        std::fill(grad.begin(), grad.end(), 0.0);
        return kNegInf;
      }
      continue;
    }
    lp += static_cast<double>(c.r) * (-log1pexp(-lo)) +
          static_cast<double>(c.n - c.r) * (-log1pexp(lo));
    // d loglik / d logit = r - n * pi
    const double resid =
        static_cast<double>(c.r) - static_cast<double>(c.n) * expit(lo);
    for (std::size_t j = 0; j < dim; ++j) grad[j] += resid * cg[j];
  }

  if (!std::isfinite(lp)) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return kNegInf;
  }
  return lp;
}

double log_likelihood(const std::vector<CohortRecord>& data,
                      const ModelSpec& spec, const ParameterVector& params) {
  spec.validate();
  PriorSpec unit;  // placeholder priors; only the likelihood part is used
  unit.log_alpha.assign(static_cast<std::size_t>(spec.n_drugs()), {});
  unit.log_beta.assign(static_cast<std::size_t>(spec.n_drugs()), {});
  unit.eta.assign(spec.terms.size(), {});
  if (spec.variant.kind == VariantKind::Thall2) unit.eta.clear();
  LogPosterior post(data, spec, unit);
  LogPosterior::Workspace ws;
  return post.log_likelihood(pack_parameters(spec, params), ws);
}

double log_prior(const ParameterVector& params, const PriorSpec& priors,
                 const ModelSpec& spec) {
  auto [mean, sd] = flatten_priors(spec, priors);
  const auto flat = pack_parameters(spec, params);
  double lp = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double z = (flat[j] - mean[j]) / sd[j];
    lp += -0.5 * z * z - std::log(sd[j]) - kHalfLog2Pi;
  }
  return lp;
}

std::pair<double, std::vector<double>> log_posterior_and_gradient(
    const std::vector<CohortRecord>& data, const ModelSpec& spec,
    const PriorSpec& priors, const ParameterVector& params) {
  LogPosterior post(data, spec, priors);
  LogPosterior::Workspace ws;
  std::vector<double> grad(static_cast<std::size_t>(post.dim()), 0.0);
  const double lp =
      post.value_and_gradient(pack_parameters(spec, params), grad, ws);
  return {lp, std::move(grad)};
}

}  // namespace blrm
