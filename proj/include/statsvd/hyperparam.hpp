#pragma once

#include "statsvd/statsvd.hpp"

#include <string>
#include <vector>

namespace statsvd {

/// 75% quantile of the standard normal, the MAD-to-sigma constant.
inline constexpr double kNormalQ75 = 0.6744;
inline constexpr double kRankDeltaScale = 1.02;

struct SigmaEstimate {
  double sigma = 0.0;
  bool degenerate = false;  // estimate is zero; a fit cannot use it
};

/// median(|Y|) / 0.6744, lower median for even entry counts.
SigmaEstimate estimate_sigma_median(const Tensor& y);

/// Sample standard deviation after dropping the ceil(trim_fraction * n)
/// entries of largest absolute value. Throws if fewer than two entries remain.
SigmaEstimate estimate_sigma_trimmed(const Tensor& y, double trim_fraction);

/// Support-size dependent singular-value threshold of the spectral rank rule:
/// scale * (sqrt(i) + sqrt(j) + sqrt(2 i log(e p_k / i) + 2 j log(e p_rest / j) + 4 log p_k)).
/// Terms with i = 0 or j = 0 vanish.
double rank_delta(double i, double j, double p_k, double p_rest, double scale = kRankDeltaScale);

struct RankEstimate {
  std::vector<Index> ranks;
  std::vector<bool> fallback;                       // per mode: no singular value cleared the threshold
  std::vector<Index> support_sizes;                 // |I_k^(0)|
  std::vector<double> thresholds;                   // sigma_hat * delta per mode
  std::vector<Eigen::VectorXd> singular_values;     // inspected spectrum per mode
  bool any_fallback() const;
};

/// Spectral rank rule on the support-thresholded tensor:
/// r_k = max{ r : sigma_r(M_k(Y~)) >= sigma_hat * delta(|I_k|, prod_{j != k} |I_j|) }, or 1 (flagged).
RankEstimate estimate_ranks_spectral(const Tensor& y, double sigma_hat, const std::vector<int>& sparse_modes,
                                     double delta_scale = kRankDeltaScale);

/// Cumulative-percentage-of-variation rule:
/// r_k = min{ r : sum_{i<=r} sigma_i^2 / sum_i sigma_i^2 > rho }.
std::vector<Index> estimate_ranks_cpv(const Tensor& y, double rho);

struct HyperEstimates {
  double sigma_hat = 0.0;
  std::vector<Index> ranks_hat;
  std::string sigma_method;  // "median" | "trimmed"
  std::string rank_method;   // "spectral" | "cpv"
  bool degenerate = false;
  RankEstimate spectral;     // populated for the spectral rule
};

/// Median sigma followed by the spectral rank rule.
HyperEstimates estimate_hyperparameters(const Tensor& y, const std::vector<int>& sparse_modes);

}  // namespace statsvd
