#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "blrm/diagnostics.hpp"
#include "blrm/math.hpp"
#include "blrm/sampler.hpp"
#include "doctest.h"
#include "test_util.hpp"

namespace {

blrm::ModelSpec two_drug_spec(blrm::GammaKind kind) {
  return blrm::ModelSpec::make({{"A", 200.0}, {"B", 200.0}},
                               blrm::ModelVariant::logit_additive(kind),
                               {blrm::InteractionTerm{{0, 1}}});
}

blrm::PriorSpec default_priors(std::size_t n_eta, double sigma_inter) {
  blrm::PriorSpec p;
  const double mu_alpha = blrm::logit(0.10);
  p.log_alpha = {{mu_alpha, 2.0}, {mu_alpha, 2.0}};
  p.log_beta = {{0.0, 1.0}, {0.0, 1.0}};
  p.eta.assign(n_eta, {0.0, sigma_inter});
  return p;
}

// Single drug "B" with the dose-DLT history used throughout the docs:
// n = 5 per cohort, DLT counts 0,0,1,1,1,3 at 50..600 mg.
std::vector<blrm::CohortRecord> drug_b_history() {
  const double doses[] = {50, 100, 200, 300, 400, 600};
  const int dlts[] = {0, 0, 1, 1, 1, 3};
  std::vector<blrm::CohortRecord> data;
  for (int i = 0; i < 6; ++i) {
    data.push_back({{doses[i]}, 5, dlts[i], "hist"});
  }
  return data;
}

blrm::ModelSpec single_drug_spec() {
  return blrm::ModelSpec::make({{"B", 200.0}},
                               blrm::ModelVariant::no_interaction(), {});
}

blrm::PriorSpec single_drug_priors() {
  blrm::PriorSpec p;
  p.log_alpha = {{blrm::logit(0.10), 2.0}};
  p.log_beta = {{0.0, 1.0}};
  return p;
}

}  // namespace

TEST_CASE("rng uniform01 lies in (0,1] and is deterministic") {
  blrm::Rng a(42), b(42);
  for (int i = 0; i < 10000; ++i) {
    double u = a.uniform01();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
    CHECK(u == b.uniform01());
  }
}

TEST_CASE("rng normal has the right first two moments") {
  blrm::Rng rng(7);
  std::vector<double> xs(40000);
  for (double& x : xs) x = rng.normal();
  CHECK(std::abs(blrm::mean_of(xs)) < 0.02);
  CHECK(std::abs(blrm::sd_of(xs) - 1.0) < 0.02);
}

TEST_CASE("rng coin is roughly fair and uniform(lo,hi) respects bounds") {
  blrm::Rng rng(11);
  int heads = 0;
  for (int i = 0; i < 10000; ++i) heads += rng.coin() ? 1 : 0;
  CHECK(heads > 4700);
  CHECK(heads < 5300);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform(-3.0, 5.0);
    CHECK(u > -3.0);
    CHECK(u <= 5.0);
  }
}

TEST_CASE("seed derivation separates chains and labels") {
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 64; ++i) seen.insert(blrm::chain_seed(1, i));
  CHECK(seen.size() == 64);

  // Different masters must not collide on small chain indices.
  for (int i = 0; i < 8; ++i) seen.insert(blrm::chain_seed(2, i));
  CHECK(seen.size() == 72);

  CHECK(blrm::labeled_seed(1, "prior/sat") != blrm::labeled_seed(1, "prior/lin"));
  CHECK(blrm::labeled_seed(1, "prior/sat") != blrm::labeled_seed(2, "prior/sat"));
  // Stable across calls.
  CHECK(blrm::labeled_seed(9, "x") == blrm::labeled_seed(9, "x"));
}

TEST_CASE("sampler config validation rejects nonsense") {
  blrm::SamplerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.chains = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.sampling_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.warmup_iters = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.target_acceptance = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.max_leapfrog_depth = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("prior sampling recovers prior moments") {
  // With no data the posterior is the prior, so every marginal mean must sit
  // within 4 Monte Carlo standard errors and every sd within 10%.
  auto spec = two_drug_spec(blrm::GammaKind::Saturating);
  auto priors = default_priors(1, 1.0);
  blrm::SamplerConfig cfg;
  cfg.seed = 20240817;
  auto draws = blrm::run_mcmc({}, spec, priors, cfg);

  REQUIRE(draws.dim == 5);
  REQUIRE(draws.n_rows() == 4000);
  CHECK(draws.converged);
  CHECK(draws.divergence_count == 0);

  auto [mu, sd] = blrm::flatten_priors(spec, priors);
  for (int j = 0; j < draws.dim; ++j) {
    std::vector<double> pooled(draws.n_rows());
    for (int r = 0; r < draws.n_rows(); ++r) pooled[r] = draws.at(r, j);
    const double m = blrm::mean_of(pooled);
    const double s = blrm::sd_of(pooled);
    REQUIRE(draws.ess[j] >= blrm::kMinEffectiveSamples);
    const double mcse = s / std::sqrt(draws.ess[j]);
    INFO("param ", draws.param_names[j]);
    CHECK(std::abs(m - mu[j]) < 4.0 * mcse);
    CHECK(std::abs(s - sd[j]) < 0.10 * sd[j]);
    CHECK(draws.rhat[j] <= blrm::kRhatThreshold);
  }
}

TEST_CASE("same seed and config reproduce draws bit for bit") {
  auto spec = single_drug_spec();
  auto priors = single_drug_priors();
  auto data = drug_b_history();
  blrm::SamplerConfig cfg;
  cfg.chains = 2;
  cfg.warmup_iters = 200;
  cfg.sampling_iters = 200;
  cfg.seed = 99;

  auto a = blrm::run_mcmc(data, spec, priors, cfg);
  auto b = blrm::run_mcmc(data, spec, priors, cfg);
  REQUIRE(a.draws.size() == b.draws.size());
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    REQUIRE(a.draws[i] == b.draws[i]);
  }
  CHECK(a.divergence_count == b.divergence_count);

  cfg.seed = 100;
  auto c = blrm::run_mcmc(data, spec, priors, cfg);
  bool any_differ = false;
  for (std::size_t i = 0; i < a.draws.size() && !any_differ; ++i) {
    any_differ = a.draws[i] != c.draws[i];
  }
  CHECK(any_differ);
}

TEST_CASE("chains_for exposes the per-chain layout used by diagnostics") {
  auto spec = single_drug_spec();
  auto priors = single_drug_priors();
  blrm::SamplerConfig cfg;
  cfg.chains = 3;
  cfg.warmup_iters = 50;
  cfg.sampling_iters = 20;
  cfg.seed = 5;
  auto draws = blrm::run_mcmc({}, spec, priors, cfg);

  auto per_chain = draws.chains_for(1);
  REQUIRE(per_chain.size() == 3);
  for (int c = 0; c < 3; ++c) {
    REQUIRE(per_chain[c].size() == 20);
    for (int t = 0; t < 20; ++t) {
      CHECK(per_chain[c][t] == draws.at(c * 20 + t, 1));
    }
  }
}

TEST_CASE("a starved sampling budget fails the convergence gate") {
  auto spec = single_drug_spec();
  auto priors = single_drug_priors();
  blrm::SamplerConfig cfg;
  cfg.chains = 2;
  cfg.warmup_iters = 0;
  cfg.sampling_iters = 8;
  cfg.seed = 3;
  auto draws = blrm::run_mcmc(drug_b_history(), spec, priors, cfg);
  // ESS is capped at 1.25x the 16 total draws, far below the floor.
  CHECK_FALSE(draws.converged);
}

TEST_CASE("posterior concentrates relative to the prior once data arrive") {
  auto spec = single_drug_spec();
  auto priors = single_drug_priors();
  blrm::SamplerConfig cfg;
  cfg.seed = 4;
  auto draws = blrm::run_mcmc(drug_b_history(), spec, priors, cfg);
  REQUIRE(draws.converged);

  std::vector<double> la(draws.n_rows());
  for (int r = 0; r < draws.n_rows(); ++r) la[r] = draws.at(r, 0);
  // 30 patients at/around the reference dose pin log(alpha) well below its
  // prior sd of 2.
  CHECK(blrm::sd_of(la) < 1.0);
  // The observed 1/5 DLT rate at 200 mg should put pi(200) near 0.2.
  std::vector<double> pis(draws.n_rows());
  blrm::ParameterVector pv;
  for (int r = 0; r < draws.n_rows(); ++r) {
    pis[r] = blrm::single_drug_prob(200.0, draws.at(r, 0), draws.at(r, 1),
                                    200.0);
  }
  const double pm = blrm::mean_of(pis);
  CHECK(pm > 0.10);
  CHECK(pm < 0.35);
}
