#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "blrm/posterior.hpp"

namespace blrm {

/// Deterministic random stream: explicit bit mappings on top of
/// std::mt19937_64 (the engine is pinned by the standard; the library
/// distributions are implementation-defined, so we map bits ourselves).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }
  double uniform01();          // (0, 1]
  double uniform(double lo, double hi);
  double normal();             // Box-Muller, caches the spare deviate
  bool coin();

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// One step of the seed-derivation chain (splitmix64 output function).
std::uint64_t mix_seed(std::uint64_t x);

/// Stream seed for chain `index` under a master seed. Documented scheme:
/// master is mixed once, the chain counter added, and mixed again, so
/// changing the chain count never reuses a stream.
std::uint64_t chain_seed(std::uint64_t master, int index);

/// Stream seed for a named job (scenario/variant fits). FNV-1a over the label
/// xor-folded into the mixed master.
std::uint64_t labeled_seed(std::uint64_t master, const std::string& label);

struct SamplerConfig {
  int chains = 4;
  int warmup_iters = 1000;
  int sampling_iters = 1000;
  std::uint64_t seed = 1;
  double target_acceptance = 0.8;
  int max_leapfrog_depth = 10;

  void validate() const;

  bool operator==(const SamplerConfig&) const = default;
};

/// Convergence gate applied to every parameter.
inline constexpr double kRhatThreshold = 1.01;
inline constexpr double kMinEffectiveSamples = 100.0;

struct PosteriorDraws {
  int n_chains = 0;
  int n_iters = 0;  // post-warmup iterations per chain
  int dim = 0;
  std::vector<std::string> param_names;
  // row-major [n_chains * n_iters, dim], chains concatenated in order
  std::vector<double> draws;
  std::vector<double> rhat;  // per parameter
  std::vector<double> ess;   // per parameter
  int divergence_count = 0;
  bool converged = false;

  int n_rows() const { return n_chains * n_iters; }
  double at(int row, int param) const {
    return draws[static_cast<std::size_t>(row) * static_cast<std::size_t>(dim) +
                 static_cast<std::size_t>(param)];
  }
  /// One parameter's post-warmup draws, per chain (diagnostics layout).
  std::vector<std::vector<double>> chains_for(int param) const;
};

/// Runs `config.chains` independent chains of a dynamic Hamiltonian sampler
/// (multinomial no-U-turn trajectory sampling, dual-averaging step size
/// tuned to target_acceptance, windowed diagonal metric adaptation during
/// warmup). Deterministic given the seed. Chains are merged in chain order;
/// diagnostics and the convergence flag are filled on the result.
PosteriorDraws run_mcmc(const std::vector<CohortRecord>& data,
                        const ModelSpec& spec, const PriorSpec& priors,
                        const SamplerConfig& config);

}  // namespace blrm
