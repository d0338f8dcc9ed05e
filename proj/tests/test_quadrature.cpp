#include <cmath>
#include <stdexcept>
#include <vector>

#include "blrm/math.hpp"
#include "blrm/quadrature.hpp"
#include "blrm/sampler.hpp"
#include "doctest.h"

namespace {

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

std::vector<blrm::CohortRecord> drug_b_history() {
  const double doses[] = {50, 100, 200, 300, 400, 600};
  const int dlts[] = {0, 0, 1, 1, 1, 3};
  std::vector<blrm::CohortRecord> data;
  for (int i = 0; i < 6; ++i) {
    data.push_back({{doses[i]}, 5, dlts[i], "hist"});
  }
  return data;
}

}  // namespace

TEST_CASE("quadrature with no data reproduces the prior") {
  auto spec = single_drug_spec();
  auto priors = single_drug_priors();
  blrm::QuadratureSpec grid;
  grid.eval_doses = {0.0, 200.0};
  auto s = blrm::quadrature_posterior({}, spec, priors, grid);

  CHECK(std::abs(s.mean_log_alpha - blrm::logit(0.10)) < 1e-4);
  CHECK(std::abs(s.mean_log_beta - 0.0) < 1e-4);
  CHECK(std::abs(s.sd_log_alpha - 2.0) < 1e-3);
  CHECK(std::abs(s.sd_log_beta - 1.0) < 1e-3);
  REQUIRE(s.pi_mean.size() == 2);
  CHECK(s.pi_mean[0] == 0.0);
  CHECK(s.pi_sd[0] == 0.0);
  // At the reference dose pi = expit(log_alpha), so the prior median is 0.10
  // and the long right tail drags the mean above it.
  CHECK(s.pi_mean[1] > 0.10);
  CHECK(s.pi_mean[1] < 0.35);
}

TEST_CASE("doubling the grid resolution leaves the answer fixed") {
  auto spec = single_drug_spec();
  auto priors = single_drug_priors();
  auto data = drug_b_history();

  blrm::QuadratureSpec coarse;
  coarse.nodes_per_axis = 401;
  coarse.eval_doses = {200.0};
  blrm::QuadratureSpec fine;
  fine.nodes_per_axis = 801;
  fine.eval_doses = {200.0};

  auto a = blrm::quadrature_posterior(data, spec, priors, coarse);
  auto b = blrm::quadrature_posterior(data, spec, priors, fine);
  CHECK(std::abs(a.pi_mean[0] - b.pi_mean[0]) < 1e-6);
  CHECK(std::abs(a.pi_sd[0] - b.pi_sd[0]) < 1e-6);
  CHECK(std::abs(a.mean_log_alpha - b.mean_log_alpha) < 1e-6);
}

TEST_CASE("quadrature input validation") {
  auto spec = single_drug_spec();
  auto priors = single_drug_priors();
  blrm::QuadratureSpec grid;
  grid.eval_doses = {200.0};

  SUBCASE("too few nodes") {
    grid.nodes_per_axis = 100;
    CHECK_THROWS_AS(blrm::quadrature_posterior({}, spec, priors, grid),
                    std::invalid_argument);
  }
  SUBCASE("span too narrow") {
    grid.sd_span = 2.0;
    CHECK_THROWS_AS(blrm::quadrature_posterior({}, spec, priors, grid),
                    std::invalid_argument);
  }
  SUBCASE("multi-drug models are rejected") {
    auto two = blrm::ModelSpec::make(
        {{"A", 200.0}, {"B", 200.0}},
        blrm::ModelVariant::logit_additive(blrm::GammaKind::Saturating),
        {blrm::InteractionTerm{{0, 1}}});
    blrm::PriorSpec p2;
    p2.log_alpha = {{0.0, 1.0}, {0.0, 1.0}};
    p2.log_beta = {{0.0, 1.0}, {0.0, 1.0}};
    p2.eta = {{0.0, 1.0}};
    CHECK_THROWS_AS(blrm::quadrature_posterior({}, two, p2, grid),
                    std::invalid_argument);
  }
  SUBCASE("DLT at dose zero is impossible under the model") {
    std::vector<blrm::CohortRecord> bad = {{{0.0}, 3, 1, ""}};
    CHECK_THROWS_AS(blrm::quadrature_posterior(bad, spec, priors, grid),
                    std::invalid_argument);
  }
}

TEST_CASE("sampler agrees with the quadrature oracle on a single-drug fit") {
  auto spec = single_drug_spec();
  auto priors = single_drug_priors();
  auto data = drug_b_history();
  const std::vector<double> doses = {50, 100, 200, 300, 400, 600};

  blrm::QuadratureSpec grid;
  grid.eval_doses = doses;
  auto oracle = blrm::quadrature_posterior(data, spec, priors, grid);

  blrm::SamplerConfig cfg;
  cfg.seed = 1;
  auto draws = blrm::run_mcmc(data, spec, priors, cfg);
  REQUIRE(draws.converged);

  for (std::size_t k = 0; k < doses.size(); ++k) {
    std::vector<double> pis(draws.n_rows());
    for (int r = 0; r < draws.n_rows(); ++r) {
      pis[r] = blrm::single_drug_prob(doses[k], draws.at(r, 0),
                                      draws.at(r, 1), 200.0);
    }
    INFO("dose ", doses[k]);
    CHECK(std::abs(blrm::mean_of(pis) - oracle.pi_mean[k]) < 0.01);
    CHECK(std::abs(blrm::sd_of(pis) - oracle.pi_sd[k]) < 0.01);
  }
  // The marginal parameter moments must agree as well.
  std::vector<double> la(draws.n_rows()), lb(draws.n_rows());
  for (int r = 0; r < draws.n_rows(); ++r) {
    la[r] = draws.at(r, 0);
    lb[r] = draws.at(r, 1);
  }
  CHECK(std::abs(blrm::mean_of(la) - oracle.mean_log_alpha) < 0.05);
  CHECK(std::abs(blrm::mean_of(lb) - oracle.mean_log_beta) < 0.05);
}
