#include "blrm/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "blrm/math.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace blrm;

namespace {

const double kLogitP1 = logit(0.1);  // log(1/9)

std::vector<DrugSpec> two_drugs() { return {{"A", 200.0}, {"B", 200.0}}; }

ModelSpec saturating_pair() {
  return ModelSpec::make(two_drugs(),
                         ModelVariant::logit_additive(GammaKind::Saturating),
                         {InteractionTerm{{0, 1}}});
}

ModelSpec linear_pair() {
  return ModelSpec::make(two_drugs(),
                         ModelVariant::logit_additive(GammaKind::Linear),
                         {InteractionTerm{{0, 1}}});
}

}  // namespace

TEST_CASE("single_drug_prob at and above the reference dose") {
  CHECK(std::abs(single_drug_prob(200.0, kLogitP1, 0.0, 200.0) - 0.1) <= 1e-15);
  // doubling the dose with beta = 1 doubles the odds: 2/9 odds -> 2/11
  CHECK(std::abs(single_drug_prob(400.0, kLogitP1, 0.0, 200.0) - 2.0 / 11.0) <=
        1e-15);
  CHECK(single_drug_prob(0.0, kLogitP1, 0.0, 200.0) == 0.0);
  CHECK(single_drug_logit(0.0, kLogitP1, 0.0, 200.0) == kNegInf);
}

TEST_CASE("single_drug_prob input validation") {
  CHECK_THROWS_AS(single_drug_prob(-1.0, 0.0, 0.0, 200.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(single_drug_prob(100.0, 0.0, 0.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(single_drug_prob(100.0, kNegInf, 0.0, 200.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(single_drug_prob(100.0, 0.0, kInf, 200.0),
                  std::invalid_argument);
}

TEST_CASE("single_drug_prob is non-decreasing in dose") {
  TestRng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.uniform(-6.0, 2.0);
    const double b = rng.uniform(-2.0, 2.0);
    double prev = 0.0;
    for (double d = 0.0; d <= 1600.0; d += 25.0) {
      const double pi = single_drug_prob(d, a, b, 200.0);
      CHECK(pi >= prev);
      prev = pi;
    }
  }
}

TEST_CASE("odds-ratio law: scaling dose by g scales odds by g^beta") {
  TestRng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = rng.uniform(-5.0, 1.0);
    const double b = rng.uniform(-1.5, 1.5);
    const double d = rng.uniform(10.0, 500.0);
    const double g = rng.uniform(1.01, 8.0);
    const double lo1 = single_drug_logit(d, a, b, 200.0);
    const double lo2 = single_drug_logit(g * d, a, b, 200.0);
    const double observed = lo2 - lo1;  // log odds ratio
    const double expected = std::exp(b) * std::log(g);
    CHECK(std::abs(observed - expected) <=
          1e-10 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("prob_independent: closed-form values") {
  ParameterVector p;
  p.log_alpha = {logit(0.1), logit(0.2)};
  p.log_beta = {0.0, 0.0};
  const auto drugs = two_drugs();
  CHECK(std::abs(prob_independent({200.0, 200.0}, p, drugs) - 0.28) <= 1e-15);
  // zero-dose drug drops out
  CHECK(std::abs(prob_independent({200.0, 0.0}, p, drugs) - 0.1) <= 1e-15);
  CHECK(prob_independent({0.0, 0.0}, p, drugs) == 0.0);

  ParameterVector p3;
  p3.log_alpha = {logit(0.1), logit(0.1), logit(0.1)};
  p3.log_beta = {0.0, 0.0, 0.0};
  std::vector<DrugSpec> drugs3{{"A", 200.0}, {"B", 200.0}, {"C", 200.0}};
  CHECK(std::abs(prob_independent({200.0, 200.0, 200.0}, p3, drugs3) - 0.271) <=
        1e-15);
}

TEST_CASE("prob_independent survives extremely small per-drug probabilities") {
  ParameterVector p;
  p.log_alpha = {-600.0, -700.0};
  p.log_beta = {0.0, 0.0};
  const double pi = prob_independent({200.0, 200.0}, p, two_drugs());
  CHECK(pi > 0.0);
  CHECK(std::abs(pi - (std::exp(-600.0) + std::exp(-700.0))) <= 1e-320);
}

TEST_CASE("prob_independent length validation") {
  ParameterVector p;
  p.log_alpha = {0.0};
  p.log_beta = {0.0};
  CHECK_THROWS_AS(prob_independent({200.0, 200.0}, p, two_drugs()),
                  std::invalid_argument);
}

TEST_CASE("enumerate_interactions canonical order and count") {
  CHECK(enumerate_interactions(1).empty());
  const auto n2 = enumerate_interactions(2);
  REQUIRE(n2.size() == 1);
  CHECK(n2[0].members == std::vector<int>{0, 1});
  const auto n3 = enumerate_interactions(3);
  REQUIRE(n3.size() == 4);
  CHECK(n3[0].members == std::vector<int>{0, 1});
  CHECK(n3[1].members == std::vector<int>{0, 2});
  CHECK(n3[2].members == std::vector<int>{1, 2});
  CHECK(n3[3].members == std::vector<int>{0, 1, 2});
  for (int n = 1; n <= 8; ++n) {
    CHECK(enumerate_interactions(n).size() ==
          (1u << n) - static_cast<unsigned>(n) - 1u);
  }
  CHECK_THROWS_AS(enumerate_interactions(0), std::invalid_argument);
}

TEST_CASE("gamma_linear: products of normalized doses") {
  const std::array<double, 2> refs{200.0, 200.0};
  CHECK(gamma_linear(std::array{200.0, 200.0}, refs) == 1.0);
  CHECK(gamma_linear(std::array{400.0, 100.0}, refs) == 1.0);
  CHECK(gamma_linear(std::array{0.0, 300.0}, refs) == 0.0);
  CHECK_THROWS_AS(gamma_linear(std::array{200.0, 200.0}, std::array{200.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("gamma_saturating: bounded variant") {
  const std::array<double, 2> refs{200.0, 200.0};
  CHECK(gamma_saturating(std::array{200.0, 200.0}, refs) == 1.0);
  CHECK(gamma_saturating(std::array{400.0, 400.0}, refs) == 1.6);
  CHECK(gamma_saturating(std::array{0.0, 300.0}, refs) == 0.0);
  // approaches 2 along a doubling ladder but never reaches it
  double prev = 0.0;
  for (int k = 0; k <= 80; ++k) {
    const double d1 = 200.0 * std::pow(2.0, k);
    const double g = gamma_saturating(std::array{d1, 200.0}, refs);
    CHECK(g < 2.0);
    CHECK(g >= prev);
    prev = g;
  }
  CHECK(prev > 2.0 - 1e-9);
}

TEST_CASE("combined_prob: independence reduction and closed form") {
  const auto spec = saturating_pair();
  ParameterVector p;
  p.log_alpha = {logit(0.1), logit(0.2)};
  p.log_beta = {0.0, 0.0};
  p.eta = {0.0};

  TestRng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const DoseCombination d{rng.uniform(0.0, 600.0), rng.uniform(0.0, 600.0)};
    CHECK(std::abs(combined_prob(spec, p, d) -
                   prob_independent(d, p, spec.drugs)) <= 1e-12);
  }

  // pi_perp = 0.28 at the reference pair; one pair term with eta = 1, gamma = 1
  p.eta = {1.0};
  const double expected = 0.513881029955212084927912115247;
  CHECK(std::abs(combined_prob(spec, p, {200.0, 200.0}) - expected) <= 1e-14);

  // drug 2 absent: reduces to drug 1 alone regardless of eta
  CHECK(std::abs(combined_prob(spec, p, {200.0, 0.0}) -
                 single_drug_prob(200.0, logit(0.1), 0.0, 200.0)) <= 1e-15);
  CHECK(combined_prob(spec, p, {0.0, 0.0}) == 0.0);
}

TEST_CASE("combined_prob rejects the thall2 variant") {
  const auto spec = ModelSpec::make(two_drugs(), ModelVariant::thall2());
  ParameterVector p;
  p.log_alpha = {0.0, 0.0};
  p.log_beta = {0.0, 0.0};
  CHECK_THROWS_AS(combined_prob(spec, p, {200.0, 200.0}),
                  std::invalid_argument);
}

TEST_CASE("combined_prob is a pure function") {
  const auto spec = linear_pair();
  ParameterVector p;
  p.log_alpha = {-1.3, -2.4};
  p.log_beta = {0.2, -0.1};
  p.eta = {0.7};
  const DoseCombination d{137.5, 412.25};
  const double first = combined_prob(spec, p, d);
  for (int i = 0; i < 10; ++i) CHECK(combined_prob(spec, p, d) == first);
}

TEST_CASE("thall_prob: closed-form values") {
  ParameterVector p;
  p.log_alpha = {std::log(1.0 / 9.0), -5.0};
  p.log_beta = {0.0, 0.0};
  p.log_alpha3 = 1.0;
  p.log_beta3 = 0.5;
  const std::array<double, 2> refs{200.0, 200.0};
  // second drug absent: second and third summands vanish
  CHECK(std::abs(thall_prob(200.0, 0.0, p, refs) - 0.1) <= 1e-15);
  CHECK(thall_prob(0.0, 0.0, p, refs) == 0.0);

  // alpha3 = 0 with equal marginals: odds add up to 2/9
  p.log_alpha = {std::log(1.0 / 9.0), std::log(1.0 / 9.0)};
  p.log_alpha3 = kNegInf;
  p.log_beta3 = 0.0;
  CHECK(std::abs(thall_prob(200.0, 200.0, p, refs) - 2.0 / 11.0) <= 1e-15);
}

TEST_CASE("thall independence identity: alpha3 = alpha1*alpha2, beta3 = 1") {
  TestRng rng(42);
  const std::array<double, 2> refs{200.0, 150.0};
  for (int trial = 0; trial < 20; ++trial) {
    ParameterVector p;
    p.log_alpha = {rng.uniform(-4.0, 0.5), rng.uniform(-4.0, 0.5)};
    p.log_beta = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    p.log_alpha3 = p.log_alpha[0] + p.log_alpha[1];
    p.log_beta3 = 0.0;
    std::vector<DrugSpec> drugs{{"A", refs[0]}, {"B", refs[1]}};
    for (double d1 : {0.0, 25.0, 100.0, 200.0, 450.0}) {
      for (double d2 : {0.0, 50.0, 150.0, 300.0, 600.0}) {
        CHECK(std::abs(thall_prob(d1, d2, p, refs) -
                       prob_independent({d1, d2}, p, drugs)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("thall_prob validation") {
  ParameterVector p;
  p.log_alpha = {0.0, 0.0};
  p.log_beta = {0.0, 0.0};
  const std::array<double, 2> refs{200.0, 200.0};
  CHECK_THROWS_AS(thall_prob(-5.0, 100.0, p, refs), std::invalid_argument);
  p.log_beta[0] = kNegInf;
  CHECK_THROWS_AS(thall_prob(100.0, 100.0, p, refs), std::invalid_argument);
}

TEST_CASE("model spec validation") {
  CHECK_THROWS_AS(ModelSpec::make({}, ModelVariant::no_interaction()),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      ModelSpec::make({{"A", 200.0}, {"A", 100.0}},
                      ModelVariant::no_interaction()),
      std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec::make({{"A", 0.0}}, ModelVariant::no_interaction()),
                  std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec::make({{"bad name", 200.0}},
                                  ModelVariant::no_interaction()),
                  std::invalid_argument);
  // thall2 needs exactly two drugs
  CHECK_THROWS_AS(
      ModelSpec::make({{"A", 200.0}, {"B", 200.0}, {"C", 200.0}},
                      ModelVariant::thall2()),
      std::invalid_argument);
  // singleton interaction term
  CHECK_THROWS_AS(
      ModelSpec::make(two_drugs(),
                      ModelVariant::logit_additive(GammaKind::Linear),
                      {InteractionTerm{{0}}}),
      std::invalid_argument);
  // duplicate terms
  CHECK_THROWS_AS(
      ModelSpec::make(two_drugs(),
                      ModelVariant::logit_additive(GammaKind::Linear),
                      {InteractionTerm{{0, 1}}, InteractionTerm{{1, 0}}}),
      std::invalid_argument);
  // out-of-range member
  CHECK_THROWS_AS(
      ModelSpec::make(two_drugs(),
                      ModelVariant::logit_additive(GammaKind::Linear),
                      {InteractionTerm{{0, 2}}}),
      std::invalid_argument);
}

TEST_CASE("ModelSpec::make canonicalizes term order") {
  std::vector<DrugSpec> drugs{
      {"A", 200.0}, {"B", 200.0}, {"C", 200.0}};
  const auto spec = ModelSpec::make(
      drugs, ModelVariant::logit_additive(GammaKind::Saturating),
      {InteractionTerm{{2, 1, 0}}, InteractionTerm{{2, 0}},
       InteractionTerm{{0, 1}}});
  REQUIRE(spec.terms.size() == 3);
  CHECK(spec.terms[0].members == std::vector<int>{0, 1});
  CHECK(spec.terms[1].members == std::vector<int>{0, 2});
  CHECK(spec.terms[2].members == std::vector<int>{0, 1, 2});
}

TEST_CASE("parameter packing round-trips and names align") {
  std::vector<DrugSpec> drugs{{"A", 200.0}, {"B", 150.0}, {"C", 100.0}};
  const auto spec =
      ModelSpec::make(drugs, ModelVariant::logit_additive(GammaKind::Linear),
                      enumerate_interactions(3));
  CHECK(spec.param_dim() == 10);
  const auto names = spec.param_names();
  REQUIRE(names.size() == 10);
  CHECK(names[0] == "log_alpha[A]");
  CHECK(names[5] == "log_beta[C]");
  CHECK(names[6] == "eta[A,B]");
  CHECK(names[9] == "eta[A,B,C]");

  ParameterVector p;
  p.log_alpha = {-1.0, -2.0, -3.0};
  p.log_beta = {0.1, 0.2, 0.3};
  p.eta = {0.5, -0.5, 0.25, -0.25};
  const auto flat = pack_parameters(spec, p);
  REQUIRE(flat.size() == 10);
  CHECK(flat[0] == -1.0);
  CHECK(flat[3] == 0.1);
  CHECK(flat[6] == 0.5);
  CHECK(unpack_parameters(spec, flat) == p);

  const auto thall = ModelSpec::make(two_drugs(), ModelVariant::thall2());
  CHECK(thall.param_dim() == 6);
  const auto tn = thall.param_names();
  CHECK(tn[4] == "log_alpha3");
  CHECK(tn[5] == "log_beta3");
  ParameterVector tp;
  tp.log_alpha = {-1.0, -2.0};
  tp.log_beta = {0.1, 0.2};
  tp.log_alpha3 = -3.0;
  tp.log_beta3 = 0.4;
  const auto tflat = pack_parameters(thall, tp);
  CHECK(tflat == std::vector<double>{-1.0, -2.0, 0.1, 0.2, -3.0, 0.4});
  CHECK(unpack_parameters(thall, tflat) == tp);
}

TEST_CASE("zero-dose reduction equals the model with the drug removed") {
  // three-drug saturating model with all four terms; drop each drug in turn
  TestRng rng(314);
  std::vector<DrugSpec> drugs{{"A", 200.0}, {"B", 150.0}, {"C", 250.0}};
  const auto spec =
      ModelSpec::make(drugs, ModelVariant::logit_additive(GammaKind::Saturating),
                      enumerate_interactions(3));
  for (int trial = 0; trial < 30; ++trial) {
    ParameterVector p;
    for (int i = 0; i < 3; ++i) {
      p.log_alpha.push_back(rng.uniform(-4.0, 0.0));
      p.log_beta.push_back(rng.uniform(-1.0, 1.0));
    }
    for (std::size_t k = 0; k < spec.terms.size(); ++k) {
      p.eta.push_back(rng.uniform(-2.0, 2.0));
    }
    DoseCombination doses{rng.uniform(20.0, 500.0), rng.uniform(20.0, 500.0),
                          rng.uniform(20.0, 500.0)};
    for (int drop = 0; drop < 3; ++drop) {
      DoseCombination zeroed = doses;
      zeroed[static_cast<std::size_t>(drop)] = 0.0;

      // reduced model: drug `drop` removed, surviving terms reindexed
      std::vector<DrugSpec> rd;
      ParameterVector rp;
      DoseCombination rdoses;
      for (int i = 0; i < 3; ++i) {
        if (i == drop) continue;
        rd.push_back(drugs[static_cast<std::size_t>(i)]);
        rp.log_alpha.push_back(p.log_alpha[static_cast<std::size_t>(i)]);
        rp.log_beta.push_back(p.log_beta[static_cast<std::size_t>(i)]);
        rdoses.push_back(doses[static_cast<std::size_t>(i)]);
      }
      std::vector<InteractionTerm> rterms;
      for (std::size_t k = 0; k < spec.terms.size(); ++k) {
        const auto& m = spec.terms[k].members;
        if (std::find(m.begin(), m.end(), drop) != m.end()) continue;
        InteractionTerm rt;
        for (int idx : m) rt.members.push_back(idx < drop ? idx : idx - 1);
        rterms.push_back(rt);
        rp.eta.push_back(p.eta[k]);
      }
      const auto rspec = ModelSpec::make(
          rd, ModelVariant::logit_additive(GammaKind::Saturating), rterms);
      CHECK(std::abs(combined_prob(spec, p, zeroed) -
                     combined_prob(rspec, rp, rdoses)) <= 1e-12);
    }
  }
}
