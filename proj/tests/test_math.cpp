#include "blrm/math.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"

using namespace blrm;

TEST_CASE("log1pexp matches naive formula in the safe range") {
  for (double x : {-30.0, -5.0, -1.0, 0.0, 0.5, 3.0, 25.0}) {
    CHECK(std::abs(log1pexp(x) - std::log(1.0 + std::exp(x))) <= 1e-14);
  }
}

TEST_CASE("log1pexp stays finite and asymptotically linear for large x") {
  CHECK(log1pexp(800.0) == 800.0);
  CHECK(log1pexp(-800.0) == 0.0);  // exp(-800) underflows; true value ~ 1e-348
  CHECK(std::abs(log1pexp(-40.0) - std::exp(-40.0)) <= 1e-30);
}

TEST_CASE("log1mexp") {
  constexpr double kLog2 = 0.6931471805599453;
  CHECK(std::abs(log1mexp(-kLog2) - (-kLog2)) <= 1e-15);
  CHECK(log1mexp(0.0) == kNegInf);
  // near zero: log(1 - e^x) ~ log(-x)
  CHECK(std::abs(log1mexp(-1e-10) - std::log(1e-10)) <= 1e-9);
  CHECK(std::isnan(log1mexp(0.5)));
}

TEST_CASE("expit and logit are inverse on the representable range") {
  for (double x : {-10.0, -3.0, 0.0, 0.25, 5.0, 10.0}) {
    CHECK(std::abs(logit(expit(x)) - x) <= 1e-11 * std::max(1.0, std::abs(x)));
  }
  // past |x| ~ 20 the round-trip degrades with 1/(1-p) as expected
  CHECK(std::abs(logit(expit(30.0)) - 30.0) <= 0.01);
  CHECK(expit(kNegInf) == 0.0);
  CHECK(expit(kInf) == 1.0);
  CHECK(logit(0.5) == 0.0);
  CHECK(logit(0.0) == kNegInf);
  CHECK(logit(1.0) == kInf);
}

TEST_CASE("log_sum_exp handles absent (-inf) terms") {
  CHECK(log_sum_exp(kNegInf, kNegInf) == kNegInf);
  CHECK(log_sum_exp(kNegInf, 1.5) == 1.5);
  CHECK(log_sum_exp(1.5, kNegInf) == 1.5);
  const double kLog2 = std::log(2.0);
  CHECK(std::abs(log_sum_exp(0.0, 0.0) - kLog2) <= 1e-15);
  // dominant term wins without overflow
  CHECK(std::abs(log_sum_exp(1000.0, 0.0) - 1000.0) <= 1e-12);
}

TEST_CASE("sorted_quantile linear interpolation") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  CHECK(sorted_quantile(xs, 0.0) == 1.0);
  CHECK(sorted_quantile(xs, 1.0) == 4.0);
  CHECK(sorted_quantile(xs, 0.5) == 2.5);
  CHECK(sorted_quantile(xs, 0.25) == 1.75);
  const std::vector<double> one{7.0};
  CHECK(sorted_quantile(one, 0.9) == 7.0);
  CHECK_THROWS_AS(sorted_quantile(std::vector<double>{}, 0.5),
                  std::invalid_argument);
  CHECK_THROWS_AS(sorted_quantile(xs, 1.5), std::invalid_argument);
}

TEST_CASE("mean_of and sd_of") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  CHECK(mean_of(xs) == 2.5);
  CHECK(std::abs(sd_of(xs) - std::sqrt(5.0 / 3.0)) <= 1e-15);
  CHECK(sd_of(std::vector<double>{3.0}) == 0.0);
}
