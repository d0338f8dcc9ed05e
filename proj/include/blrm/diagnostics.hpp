#pragma once

#include <vector>

namespace blrm {

/// Split-chain potential scale reduction factor. Each chain is split in half
/// before the between/within variance comparison, so within-chain drift shows
/// up as well. Returns +inf when the within-chain variance is zero (constant
/// chains carry no mixing evidence). Pre: >= 2 chains with >= 4 draws each,
/// equal lengths.
double split_rhat(const std::vector<std::vector<double>>& chains);

/// Effective sample size from the initial-monotone-positive-sequence
/// estimator of the autocorrelation time, computed on split chains. Returns
/// 0 for constant chains; capped at 1.25x the total draw count.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

}  // namespace blrm
