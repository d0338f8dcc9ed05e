#include "blrm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "blrm/math.hpp"

namespace blrm {

namespace {

std::vector<std::vector<double>> split_in_half(
    const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) {
    throw std::invalid_argument("diagnostics need at least two chains");
  }
  const std::size_t len = chains.front().size();
  if (len < 4) {
    throw std::invalid_argument("diagnostics need at least four draws per chain");
  }
  for (const auto& c : chains) {
    if (c.size() != len) {
      throw std::invalid_argument("chains must have equal length");
    }
  }
  const std::size_t half = len / 2;  // odd lengths drop the middle draw
  std::vector<std::vector<double>> split;
  split.reserve(2 * chains.size());
  for (const auto& c : chains) {
    split.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    split.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  return split;
}

struct Variances {
  double within = 0.0;    // W: mean of per-chain sample variances
  double var_plus = 0.0;  // pooled marginal variance estimate
  std::vector<double> chain_mean;
};

Variances pooled_variances(const std::vector<std::vector<double>>& chains) {
  const auto m = chains.size();
  const auto n = chains.front().size();
  Variances v;
  v.chain_mean.reserve(m);
  double w = 0.0;
  for (const auto& c : chains) {
    const double mu = mean_of(c);
    v.chain_mean.push_back(mu);
    double s2 = 0.0;
    for (double x : c) s2 += (x - mu) * (x - mu);
    w += s2 / static_cast<double>(n - 1);
  }
  w /= static_cast<double>(m);
  const double grand = mean_of(v.chain_mean);
  double b = 0.0;  // between-chain variance times n
  for (double mu : v.chain_mean) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(n) / static_cast<double>(m - 1);
  v.within = w;
  v.var_plus = static_cast<double>(n - 1) / static_cast<double>(n) * w +
               b / static_cast<double>(n);
  return v;
}

// Autocovariance at the given lag, averaged over chains, each centered at its
// own mean with the biased (1/n) normalizer.
double mean_autocov(const std::vector<std::vector<double>>& chains,
                    const std::vector<double>& chain_mean, std::size_t lag) {
  const auto n = chains.front().size();
  double acc = 0.0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& x = chains[c];
    const double mu = chain_mean[c];
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) {
      s += (x[t] - mu) * (x[t + lag] - mu);
    }
    acc += s / static_cast<double>(n);
  }
  return acc / static_cast<double>(chains.size());
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
  const auto split = split_in_half(chains);
  const auto v = pooled_variances(split);
  if (v.within <= 0.0) return kInf;
  const double r2 = v.var_plus / v.within;
  return std::sqrt(std::max(r2, 0.0));
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  const auto split = split_in_half(chains);
  const auto v = pooled_variances(split);
  const auto m = split.size();
  const auto n = split.front().size();
  const double total = static_cast<double>(m) * static_cast<double>(n);
  if (v.var_plus <= 0.0 || v.within <= 0.0) return 0.0;

  // rho_t = 1 - (W - mean within-chain autocov at lag t) / var_plus, with
  // rho_0 fixed at 1. Sum adjacent pairs (rho_{2k} + rho_{2k+1}) over the
  // initial sequence where pair sums stay positive, forced non-increasing
  // (Geyer's initial monotone sequence estimator of the correlation time).
  auto rho = [&](std::size_t t) {
    if (t == 0) return 1.0;
    return 1.0 - (v.within - mean_autocov(split, v.chain_mean, t)) / v.var_plus;
  };
  double tau = -1.0;
  double prev_pair = kInf;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair <= 0.0) break;  // initial positive sequence ends
    if (pair > prev_pair) pair = prev_pair;
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  const double cap = 1.25 * total;
  if (!(tau > 0.0)) return cap;  // strongly antithetic draws: maximal mixing
  return std::min(total / tau, cap);
}

}  // namespace blrm
