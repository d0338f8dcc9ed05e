#include "blrm/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "blrm/math.hpp"

namespace blrm {

void QuadratureSpec::validate() const {
  if (nodes_per_axis < 400) {
    throw std::invalid_argument("quadrature: need at least 400 nodes per axis");
  }
  if (!(sd_span >= 4.0) || !std::isfinite(sd_span)) {
    throw std::invalid_argument("quadrature: sd_span must be >= 4");
  }
  for (double d : eval_doses) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument("quadrature: eval doses must be finite, >= 0");
    }
  }
}

QuadratureSummary quadrature_posterior(const std::vector<CohortRecord>& data,
                                       const ModelSpec& spec,
                                       const PriorSpec& priors,
                                       const QuadratureSpec& grid) {
  grid.validate();
  spec.validate();
  if (spec.param_dim() > 3) {
    throw std::invalid_argument(
        "quadrature_posterior supports single-drug models only");
  }
  if (spec.n_drugs() != 1 || spec.variant.kind != VariantKind::NoInteraction) {
    throw std::invalid_argument(
        "quadrature_posterior needs a one-drug no-interaction model");
  }
  if (priors.log_alpha.size() != 1 || priors.log_beta.size() != 1) {
    throw std::invalid_argument("quadrature: priors must cover exactly one drug");
  }
  const double ref = spec.drugs[0].ref_dose;
  const GaussianPrior pa = priors.log_alpha[0];
  const GaussianPrior pb = priors.log_beta[0];
  if (!(pa.sd > 0.0) || !(pb.sd > 0.0)) {
    throw std::invalid_argument("quadrature: prior sds must be positive");
  }

  struct Cell {
    double log_x;
    double n;
    double r;
  };
  std::vector<Cell> cells;
  for (const auto& c : data) {
    validate_cohort(spec, c);
    if (c.n_patients == 0) continue;
    if (c.doses[0] == 0.0) {
      if (c.n_dlt > 0) {
        throw std::invalid_argument(
            "quadrature: DLTs observed at zero dose have likelihood zero");
      }
      continue;
    }
    cells.push_back({std::log(c.doses[0] / ref),
                     static_cast<double>(c.n_patients),
                     static_cast<double>(c.n_dlt)});
  }

  const int n = grid.nodes_per_axis;
  const double a_lo = pa.mean - grid.sd_span * pa.sd;
  const double a_hi = pa.mean + grid.sd_span * pa.sd;
  const double b_lo = pb.mean - grid.sd_span * pb.sd;
  const double b_hi = pb.mean + grid.sd_span * pb.sd;
  const double ha = (a_hi - a_lo) / static_cast<double>(n - 1);
  const double hb = (b_hi - b_lo) / static_cast<double>(n - 1);

  // pass 1: unnormalized log posterior on the grid, track the max
  std::vector<double> logp(static_cast<std::size_t>(n) *
                           static_cast<std::size_t>(n));
  double max_lp = kNegInf;
  for (int i = 0; i < n; ++i) {
    const double a = a_lo + ha * static_cast<double>(i);
    const double za = (a - pa.mean) / pa.sd;
    for (int j = 0; j < n; ++j) {
      const double b = b_lo + hb * static_cast<double>(j);
      const double zb = (b - pb.mean) / pb.sd;
      double lp = -0.5 * (za * za + zb * zb);
      const double beta = std::exp(b);
      for (const auto& cell : cells) {
        const double lin = a + beta * cell.log_x;
        lp += cell.r * (-log1pexp(-lin)) + (cell.n - cell.r) * (-log1pexp(lin));
      }
      logp[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
           static_cast<std::size_t>(j)] = lp;
      if (lp > max_lp) max_lp = lp;
    }
  }

  // pass 2: trapezoid weights, accumulate moments of the parameters and of
  // pi(d) at the requested doses
  QuadratureSummary out;
  out.pi_mean.assign(grid.eval_doses.size(), 0.0);
  out.pi_sd.assign(grid.eval_doses.size(), 0.0);
  double z = 0.0, ma = 0.0, ma2 = 0.0, mb = 0.0, mb2 = 0.0;
  std::vector<double> mpi(grid.eval_doses.size(), 0.0);
  std::vector<double> mpi2(grid.eval_doses.size(), 0.0);
  std::vector<double> log_xd(grid.eval_doses.size(), 0.0);
  for (std::size_t k = 0; k < grid.eval_doses.size(); ++k) {
    log_xd[k] = grid.eval_doses[k] > 0.0 ? std::log(grid.eval_doses[k] / ref)
                                         : kNegInf;
  }
  for (int i = 0; i < n; ++i) {
    const double a = a_lo + ha * static_cast<double>(i);
    const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    for (int j = 0; j < n; ++j) {
      const double b = b_lo + hb * static_cast<double>(j);
      const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
      const double w =
          wi * wj *
          std::exp(logp[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                        static_cast<std::size_t>(j)] -
                   max_lp);
      if (w == 0.0) continue;
      z += w;
      ma += w * a;
      ma2 += w * a * a;
      mb += w * b;
      mb2 += w * b * b;
      const double beta = std::exp(b);
      for (std::size_t k = 0; k < log_xd.size(); ++k) {
        const double pi =
            log_xd[k] == kNegInf ? 0.0 : expit(a + beta * log_xd[k]);
        mpi[k] += w * pi;
        mpi2[k] += w * pi * pi;
      }
    }
  }
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw std::runtime_error("quadrature: normalization constant is not positive");
  }

  const auto finish = [](double m1, double m2, double z) {
    const double mean = m1 / z;
    const double var = std::max(m2 / z - mean * mean, 0.0);
    return std::pair<double, double>{mean, std::sqrt(var)};
  };
  std::tie(out.mean_log_alpha, out.sd_log_alpha) = finish(ma, ma2, z);
  std::tie(out.mean_log_beta, out.sd_log_beta) = finish(mb, mb2, z);
  for (std::size_t k = 0; k < mpi.size(); ++k) {
    const auto [m, s] = finish(mpi[k], mpi2[k], z);
    out.pi_mean[k] = m;
    out.pi_sd[k] = s;
  }
  out.log_norm_const = max_lp + std::log(z * ha * hb);
  return out;
}

}  // namespace blrm
