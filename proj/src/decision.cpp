#include "blrm/decision.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "blrm/math.hpp"

namespace blrm {

void IntervalSpec::validate() const {
  if (!(under_max > 0.0) || !(under_max < 1.0) || !(over_min > 0.0) ||
      !(over_min < 1.0) || !std::isfinite(under_max) ||
      !std::isfinite(over_min)) {
    throw std::invalid_argument("interval edges must lie strictly in (0,1)");
  }
  if (!(under_max < over_min)) {
    throw std::invalid_argument("under_max must be below over_min");
  }
  if (!(ewoc_max > 0.0) || !(ewoc_max < 1.0) || !std::isfinite(ewoc_max)) {
    throw std::invalid_argument("ewoc_max must lie strictly in (0,1)");
  }
}

ToxCategory classify_pi(double pi, const IntervalSpec& intervals) {
  if (pi >= intervals.over_min) return ToxCategory::Over;
  if (pi >= intervals.under_max) return ToxCategory::Target;
  return ToxCategory::Under;
}

bool ewoc_satisfied(double p_over, const IntervalSpec& intervals) {
  return p_over <= intervals.ewoc_max;
}

const std::vector<double>& default_dose_ladder() {
  static const std::vector<double> ladder = {0.0,   12.5,  25.0,  50.0,
                                             100.0, 150.0, 200.0, 300.0,
                                             400.0, 600.0};
  return ladder;
}

std::vector<DoseCombination> cartesian_grid(
    const std::vector<std::vector<double>>& ladders) {
  if (ladders.empty()) {
    throw std::invalid_argument("cartesian_grid needs at least one ladder");
  }
  std::size_t total = 1;
  for (const auto& ladder : ladders) {
    if (ladder.empty()) {
      throw std::invalid_argument("dose ladders must be non-empty");
    }
    total *= ladder.size();
  }
  std::vector<DoseCombination> grid;
  grid.reserve(total);
  DoseCombination point(ladders.size(), 0.0);
  std::vector<std::size_t> idx(ladders.size(), 0);
  for (std::size_t row = 0; row < total; ++row) {
    for (std::size_t d = 0; d < ladders.size(); ++d) point[d] = ladders[d][idx[d]];
    grid.push_back(point);
    for (std::size_t d = ladders.size(); d-- > 0;) {
      if (++idx[d] < ladders[d].size()) break;
      idx[d] = 0;
    }
  }
  return grid;
}

namespace {

void check_draws_match(const PosteriorDraws& draws, const ModelSpec& spec) {
  if (draws.dim != spec.param_dim()) {
    throw std::invalid_argument(
        "posterior draws have a different dimension than the model");
  }
  if (draws.n_rows() <= 0) {
    throw std::invalid_argument("posterior draws are empty");
  }
}

SurfaceRow summarize_point_impl(const PosteriorDraws& draws,
                                const ModelSpec& spec,
                                const DoseCombination& doses,
                                const IntervalSpec& intervals,
                                detail::Scratch& scratch,
                                std::vector<double>& pis) {
  if (static_cast<int>(doses.size()) != spec.n_drugs()) {
    throw std::invalid_argument(
        "grid point has a different number of doses than the model has drugs");
  }
  for (double d : doses) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument("doses must be finite and non-negative");
    }
  }

  const int n = draws.n_rows();
  pis.resize(static_cast<std::size_t>(n));
  long n_under = 0, n_target = 0, n_over = 0;
  double sum = 0.0;
  for (int r = 0; r < n; ++r) {
    std::span<const double> flat(
        draws.draws.data() + static_cast<std::size_t>(r) * draws.dim,
        static_cast<std::size_t>(draws.dim));
    const double pi = expit(detail::model_logit_flat(spec, flat, doses, scratch));
    pis[static_cast<std::size_t>(r)] = pi;
    sum += pi;
    switch (classify_pi(pi, intervals)) {
      case ToxCategory::Under: ++n_under; break;
      case ToxCategory::Target: ++n_target; break;
      case ToxCategory::Over: ++n_over; break;
    }
  }
  std::sort(pis.begin(), pis.end());

  SurfaceRow row;
  row.doses = doses;
  row.p_under = static_cast<double>(n_under) / n;
  row.p_target = static_cast<double>(n_target) / n;
  row.p_over = static_cast<double>(n_over) / n;
  row.mean_pi = sum / n;
  row.q025 = sorted_quantile(pis, 0.025);
  row.q50 = sorted_quantile(pis, 0.50);
  row.q975 = sorted_quantile(pis, 0.975);
  row.ewoc_ok = ewoc_satisfied(row.p_over, intervals);
  return row;
}

}  // namespace

SurfaceRow summarize_point(const PosteriorDraws& draws, const ModelSpec& spec,
                           const DoseCombination& doses,
                           const IntervalSpec& intervals) {
  intervals.validate();
  check_draws_match(draws, spec);
  detail::Scratch scratch;
  std::vector<double> pis;
  return summarize_point_impl(draws, spec, doses, intervals, scratch, pis);
}

std::vector<SurfaceRow> evaluate_grid(const PosteriorDraws& draws,
                                      const ModelSpec& spec,
                                      const std::vector<DoseCombination>& grid,
                                      const IntervalSpec& intervals,
                                      bool force_unconverged) {
  intervals.validate();
  check_draws_match(draws, spec);
  if (!draws.converged && !force_unconverged) {
    throw NotConvergedError(
        "posterior draws failed the convergence gate (Rhat/ESS); rerun with "
        "more iterations or explicitly force the evaluation");
  }
  detail::Scratch scratch;
  std::vector<double> pis;
  std::vector<SurfaceRow> rows;
  rows.reserve(grid.size());
  for (const auto& point : grid) {
    rows.push_back(
        summarize_point_impl(draws, spec, point, intervals, scratch, pis));
  }
  return rows;
}

std::vector<SurfaceRow> marginal_summary(const PosteriorDraws& draws,
                                         const ModelSpec& spec, int drug_index,
                                         const std::vector<double>& ladder,
                                         const IntervalSpec& intervals,
                                         bool force_unconverged) {
  if (drug_index < 0 || drug_index >= spec.n_drugs()) {
    throw std::invalid_argument("drug index out of range");
  }
  std::vector<DoseCombination> grid;
  grid.reserve(ladder.size());
  for (double d : ladder) {
    DoseCombination point(static_cast<std::size_t>(spec.n_drugs()), 0.0);
    point[static_cast<std::size_t>(drug_index)] = d;
    grid.push_back(std::move(point));
  }
  return evaluate_grid(draws, spec, grid, intervals, force_unconverged);
}

}  // namespace blrm
