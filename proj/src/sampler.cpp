#include "blrm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "blrm/diagnostics.hpp"
#include "blrm/math.hpp"

namespace blrm {

double Rng::uniform01() {
  // 53 random bits into (0, 1]; never returns 0 so log(u) is safe
  return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform01()));
  const double theta = 2.0 * std::numbers::pi * uniform01();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

bool Rng::coin() { return (gen_() >> 63) != 0; }

std::uint64_t mix_seed(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t chain_seed(std::uint64_t master, int index) {
  return mix_seed(mix_seed(master) + static_cast<std::uint64_t>(index));
}

std::uint64_t labeled_seed(std::uint64_t master, const std::string& label) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a offset basis
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return mix_seed(mix_seed(master) ^ h);
}

void SamplerConfig::validate() const {
  if (chains < 1) throw std::invalid_argument("sampler: chains must be >= 1");
  if (warmup_iters < 0) {
    throw std::invalid_argument("sampler: warmup_iters must be >= 0");
  }
  if (sampling_iters < 1) {
    throw std::invalid_argument("sampler: sampling_iters must be >= 1");
  }
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw std::invalid_argument("sampler: target_acceptance must be in (0,1)");
  }
  if (max_leapfrog_depth < 1 || max_leapfrog_depth > 14) {
    throw std::invalid_argument("sampler: max_leapfrog_depth must be in [1,14]");
  }
}

std::vector<std::vector<double>> PosteriorDraws::chains_for(int param) const {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(n_chains));
  for (int c = 0; c < n_chains; ++c) {
    auto& chain = out[static_cast<std::size_t>(c)];
    chain.reserve(static_cast<std::size_t>(n_iters));
    for (int i = 0; i < n_iters; ++i) {
      chain.push_back(at(c * n_iters + i, param));
    }
  }
  return out;
}

namespace {

constexpr double kMaxEnergyError = 1000.0;  // divergence threshold

// Phase-space point with cached target value and gradient.
struct Psi {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> g;
  double logp = 0.0;
};

struct Target {
  const LogPosterior* post;
  LogPosterior::Workspace* ws;

  double operator()(std::span<const double> q, std::span<double> grad) const {
    return post->value_and_gradient(q, grad, *ws);
  }
};

double kinetic(const std::vector<double>& p, const std::vector<double>& m_inv) {
  double k = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) k += m_inv[j] * p[j] * p[j];
  return 0.5 * k;
}

double hamiltonian(const Psi& z, const std::vector<double>& m_inv) {
  if (z.logp == kNegInf) return kInf;
  return -z.logp + kinetic(z.p, m_inv);
}

void leapfrog(const Target& f, Psi& z, double eps,
              const std::vector<double>& m_inv) {
  const auto dim = z.q.size();
  for (std::size_t j = 0; j < dim; ++j) z.p[j] += 0.5 * eps * z.g[j];
  for (std::size_t j = 0; j < dim; ++j) z.q[j] += eps * m_inv[j] * z.p[j];
  z.logp = f(z.q, z.g);
  for (std::size_t j = 0; j < dim; ++j) z.p[j] += 0.5 * eps * z.g[j];
}

// Trajectory segment endpoints in integration order plus the multinomial
// proposal drawn from the segment.
struct Tree {
  Psi begin;
  Psi end;
  Psi proposal;
  std::vector<double> rho;  // sum of momenta over the segment
  double lw = kNegInf;      // log sum of exp(-H) over the segment
  double sum_alpha = 0.0;   // accumulated single-step acceptance statistics
  int n_alpha = 0;
  bool ok = false;
  bool divergent = false;
};

// The termination criterion: the segment stops expanding when the momentum
// at either endpoint points back across the segment's net displacement.
// rho is orientation-free (a sum), so the same test serves both directions.
bool is_uturn(const std::vector<double>& rho, const Psi& a, const Psi& b,
              const std::vector<double>& m_inv) {
  double da = 0.0, db = 0.0;
  for (std::size_t j = 0; j < rho.size(); ++j) {
    da += rho[j] * m_inv[j] * a.p[j];
    db += rho[j] * m_inv[j] * b.p[j];
  }
  return da <= 0.0 || db <= 0.0;
}

class NutsChain {
 public:
  NutsChain(const Target& f, std::vector<double> q0, double logp0,
            std::vector<double> g0, Rng& rng, int max_depth)
      : f_(f), rng_(rng), max_depth_(max_depth) {
    current_.q = std::move(q0);
    current_.p.assign(current_.q.size(), 0.0);
    current_.g = std::move(g0);
    current_.logp = logp0;
    m_inv_.assign(current_.q.size(), 1.0);
  }

  const std::vector<double>& q() const { return current_.q; }
  const std::vector<double>& m_inv() const { return m_inv_; }
  void set_m_inv(std::vector<double> m_inv) { m_inv_ = std::move(m_inv); }
  double eps() const { return eps_; }
  void set_eps(double eps) { eps_ = eps; }

  /// Heuristic initial step size: double/halve until one leapfrog step from
  /// the current point crosses 50% acceptance.
  void init_eps() {
    Psi z = current_;
    for (auto& pj : z.p) pj = rng_.normal();
    for (std::size_t j = 0; j < z.p.size(); ++j) {
      z.p[j] /= std::sqrt(m_inv_[j]);
    }
    const double h0 = hamiltonian(z, m_inv_);
    if (h0 == kInf) {
      eps_ = 1e-3;
      return;
    }
    eps_ = 1.0;
    Psi trial = z;
    leapfrog(f_, trial, eps_, m_inv_);
    double delta = h0 - hamiltonian(trial, m_inv_);  // log acceptance ratio
    if (std::isnan(delta)) delta = kNegInf;
    const double dir = delta > std::log(0.5) ? 1.0 : -1.0;
    for (int i = 0; i < 100; ++i) {
      eps_ *= dir > 0.0 ? 2.0 : 0.5;
      if (eps_ > 1e7 || eps_ < 1e-10) break;
      trial = z;
      leapfrog(f_, trial, eps_, m_inv_);
      delta = h0 - hamiltonian(trial, m_inv_);
      if (std::isnan(delta)) delta = kNegInf;
      if (dir * delta <= dir * std::log(0.5)) break;
    }
    eps_ = std::clamp(eps_, 1e-10, 1e7);
  }

  /// One transition. Returns the mean proposal acceptance statistic;
  /// sets `divergent`.
  double transition(bool& divergent) {
    const auto dim = current_.q.size();
    for (std::size_t j = 0; j < dim; ++j) {
      current_.p[j] = rng_.normal() / std::sqrt(m_inv_[j]);
    }
    h0_ = hamiltonian(current_, m_inv_);

    Tree tree;
    tree.begin = current_;
    tree.end = current_;
    tree.proposal = current_;
    tree.rho = current_.p;
    tree.lw = -h0_;
    tree.ok = true;

    divergent = false;
    for (int depth = 0; depth < max_depth_; ++depth) {
      const bool forward = rng_.coin();
      Tree sub = build_tree(depth, forward ? 1.0 : -1.0,
                            forward ? tree.end : tree.begin);
      tree.sum_alpha += sub.sum_alpha;
      tree.n_alpha += sub.n_alpha;
      if (!sub.ok) {
        divergent = sub.divergent;
        break;
      }
      // biased progressive sampling: new subtrees win with probability
      // proportional to their weight relative to the tree so far
      if (std::log(rng_.uniform01()) < sub.lw - tree.lw) {
        tree.proposal = sub.proposal;
      }
      tree.lw = log_sum_exp(tree.lw, sub.lw);
      for (std::size_t j = 0; j < dim; ++j) tree.rho[j] += sub.rho[j];
      if (forward) {
        tree.end = sub.end;
      } else {
        tree.begin = sub.end;
      }
      if (is_uturn(tree.rho, tree.begin, tree.end, m_inv_)) break;
    }
    current_ = tree.proposal;
    return tree.n_alpha > 0
               ? tree.sum_alpha / static_cast<double>(tree.n_alpha)
               : 0.0;
  }

 private:
  // Builds 2^depth leapfrog steps from `from` in direction `dir`.
  Tree build_tree(int depth, double dir, const Psi& from) {
    if (depth == 0) {
      Tree leaf;
      leaf.begin = from;
      leapfrog(f_, leaf.begin, dir * eps_, m_inv_);
      const double h = hamiltonian(leaf.begin, m_inv_);
      double delta = h0_ - h;  // log acceptance ratio vs the initial point
      if (std::isnan(delta)) delta = kNegInf;
      leaf.sum_alpha = std::min(1.0, std::exp(delta));
      leaf.n_alpha = 1;
      leaf.divergent = !(h - h0_ <= kMaxEnergyError);
      leaf.ok = !leaf.divergent;
      leaf.end = leaf.begin;
      leaf.proposal = leaf.begin;
      leaf.rho = leaf.begin.p;
      leaf.lw = leaf.ok ? -h : kNegInf;
      return leaf;
    }
    Tree first = build_tree(depth - 1, dir, from);
    if (!first.ok) return first;
    Tree second = build_tree(depth - 1, dir, first.end);
    first.sum_alpha += second.sum_alpha;
    first.n_alpha += second.n_alpha;
    if (!second.ok) {
      first.ok = false;
      first.divergent = second.divergent;
      return first;
    }
    const double lw = log_sum_exp(first.lw, second.lw);
    // uniform multinomial draw between the two halves
    if (std::log(rng_.uniform01()) < second.lw - lw) {
      first.proposal = second.proposal;
    }
    first.lw = lw;
    for (std::size_t j = 0; j < first.rho.size(); ++j) {
      first.rho[j] += second.rho[j];
    }
    first.end = second.end;
    first.ok = !is_uturn(first.rho, first.begin, first.end, m_inv_);
    return first;
  }

  const Target& f_;
  Rng& rng_;
  int max_depth_;
  Psi current_;
  std::vector<double> m_inv_;
  double eps_ = 1.0;
  double h0_ = 0.0;
};

// Nesterov dual averaging of log step size toward a target acceptance rate.
class DualAveraging {
 public:
  DualAveraging(double eps0, double target) : target_(target) { reset(eps0); }

  void reset(double eps0) {
    mu_ = std::log(10.0 * eps0);
    log_eps_ = std::log(eps0);
    log_eps_bar_ = 0.0;
    h_bar_ = 0.0;
    count_ = 0;
  }

  double update(double alpha) {
    ++count_;
    const double t = static_cast<double>(count_);
    h_bar_ = (1.0 - 1.0 / (t + kT0)) * h_bar_ + (target_ - alpha) / (t + kT0);
    log_eps_ = mu_ - std::sqrt(t) / kGamma * h_bar_;
    const double w = std::pow(t, -kKappa);
    log_eps_bar_ = w * log_eps_ + (1.0 - w) * log_eps_bar_;
    return std::exp(log_eps_);
  }

  double adapted_eps() const { return std::exp(log_eps_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;

  double target_;
  double mu_ = 0.0;
  double log_eps_ = 0.0;
  double log_eps_bar_ = 0.0;
  double h_bar_ = 0.0;
  int count_ = 0;
};

// Streaming mean/variance for the metric windows.
class Welford {
 public:
  explicit Welford(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void add(const std::vector<double>& x) {
    ++n_;
    for (std::size_t j = 0; j < mean_.size(); ++j) {
      const double d = x[j] - mean_[j];
      mean_[j] += d / static_cast<double>(n_);
      m2_[j] += d * (x[j] - mean_[j]);
    }
  }

  long n() const { return n_; }

  // regularized variance estimate, shrunk slightly toward unit scale
  std::vector<double> regularized_variance() const {
    std::vector<double> v(mean_.size(), 1.0);
    if (n_ < 2) return v;
    const double n = static_cast<double>(n_);
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double var = m2_[j] / (n - 1.0);
      v[j] = n / (n + 5.0) * var + 1e-3 * (5.0 / (n + 5.0));
      if (!(v[j] > 0.0) || !std::isfinite(v[j])) v[j] = 1.0;
    }
    return v;
  }

 private:
  long n_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

// Warmup layout: a fast step-size-only ramp, doubling slow windows for the
// metric, and a fast tail to re-tune the step size on the final metric.
struct WarmupSchedule {
  int init_end = 0;          // [0, init_end): step size only
  std::vector<int> window_ends;  // metric refresh points
  int term_start = 0;        // [term_start, warmup): step size only

  static WarmupSchedule build(int warmup) {
    WarmupSchedule s;
    if (warmup <= 0) return s;
    int init = 75, base = 25, term = 50;
    if (warmup < init + base + term) {
      init = std::max(1, static_cast<int>(0.15 * warmup));
      term = std::max(1, static_cast<int>(0.10 * warmup));
      base = std::max(1, warmup - init - term);
    }
    s.init_end = init;
    s.term_start = warmup - term;
    int start = init;
    int size = base;
    while (start < s.term_start) {
      int end = start + size;
      // absorb a remainder too small for another doubling
      if (end + 2 * size > s.term_start) end = s.term_start;
      s.window_ends.push_back(std::min(end, s.term_start));
      start = end;
      size *= 2;
    }
    return s;
  }
};

struct ChainResult {
  std::vector<double> draws;  // [sampling_iters * dim]
  int divergences = 0;
};

ChainResult run_chain(const LogPosterior& post, const SamplerConfig& config,
                      std::uint64_t seed) {
  const auto dim = static_cast<std::size_t>(post.dim());
  Rng rng(seed);
  LogPosterior::Workspace ws;
  Target f{&post, &ws};

  // overdispersed start around the prior: mean + sd * U(-2, 2) per coordinate
  std::vector<double> q0(dim), g0(dim);
  double lp0 = kNegInf;
  for (int attempt = 0; attempt < 100 && lp0 == kNegInf; ++attempt) {
    for (std::size_t j = 0; j < dim; ++j) {
      q0[j] = post.prior_mean()[j] + post.prior_sd()[j] * rng.uniform(-2.0, 2.0);
    }
    lp0 = f(q0, g0);
  }
  if (lp0 == kNegInf) {
    throw std::runtime_error(
        "sampler: failed to find a usable starting point in 100 attempts");
  }

  NutsChain chain(f, std::move(q0), lp0, std::move(g0), rng,
                  config.max_leapfrog_depth);

  const auto schedule = WarmupSchedule::build(config.warmup_iters);
  chain.init_eps();
  DualAveraging da(chain.eps(), config.target_acceptance);
  Welford welford(dim);
  std::size_t next_window = 0;

  bool divergent = false;
  for (int it = 0; it < config.warmup_iters; ++it) {
    const double alpha = chain.transition(divergent);
    chain.set_eps(da.update(alpha));
    const bool in_slow_window =
        it >= schedule.init_end && it < schedule.term_start;
    if (in_slow_window) welford.add(chain.q());
    if (next_window < schedule.window_ends.size() &&
        it + 1 == schedule.window_ends[next_window]) {
      if (welford.n() >= 2) chain.set_m_inv(welford.regularized_variance());
      welford = Welford(dim);
      ++next_window;
      chain.init_eps();
      da.reset(chain.eps());
    }
  }
  if (config.warmup_iters > 0) chain.set_eps(da.adapted_eps());

  ChainResult result;
  result.draws.reserve(static_cast<std::size_t>(config.sampling_iters) * dim);
  for (int it = 0; it < config.sampling_iters; ++it) {
    chain.transition(divergent);
    if (divergent) ++result.divergences;
    result.draws.insert(result.draws.end(), chain.q().begin(), chain.q().end());
  }
  return result;
}

}  // namespace

PosteriorDraws run_mcmc(const std::vector<CohortRecord>& data,
                        const ModelSpec& spec, const PriorSpec& priors,
                        const SamplerConfig& config) {
  config.validate();
  LogPosterior post(data, spec, priors);

  PosteriorDraws out;
  out.n_chains = config.chains;
  out.n_iters = config.sampling_iters;
  out.dim = post.dim();
  out.param_names = spec.param_names();
  out.draws.reserve(static_cast<std::size_t>(out.n_rows()) *
                    static_cast<std::size_t>(out.dim));

  for (int c = 0; c < config.chains; ++c) {
    auto chain = run_chain(post, config, chain_seed(config.seed, c));
    out.divergence_count += chain.divergences;
    out.draws.insert(out.draws.end(), chain.draws.begin(), chain.draws.end());
  }

  out.rhat.assign(static_cast<std::size_t>(out.dim), 0.0);
  out.ess.assign(static_cast<std::size_t>(out.dim), 0.0);
  bool ok = config.chains >= 2 && config.sampling_iters >= 4;
  for (int j = 0; j < out.dim; ++j) {
    if (config.chains >= 2 && config.sampling_iters >= 4) {
      const auto per_chain = out.chains_for(j);
      out.rhat[static_cast<std::size_t>(j)] = split_rhat(per_chain);
      out.ess[static_cast<std::size_t>(j)] = effective_sample_size(per_chain);
      ok = ok && out.rhat[static_cast<std::size_t>(j)] <= kRhatThreshold &&
           out.ess[static_cast<std::size_t>(j)] >= kMinEffectiveSamples;
    } else {
      // single short chain: no mixing evidence, never mark converged
      out.rhat[static_cast<std::size_t>(j)] = kInf;
      out.ess[static_cast<std::size_t>(j)] = 0.0;
    }
  }
  out.converged = ok;
  return out;
}

}  // namespace blrm
