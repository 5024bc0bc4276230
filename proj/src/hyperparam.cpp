#include "statsvd/hyperparam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace statsvd {

SigmaEstimate estimate_sigma_median(const Tensor& y) {
  std::vector<double> abs_values(static_cast<std::size_t>(y.size()));
  for (Index i = 0; i < y.size(); ++i) abs_values[static_cast<std::size_t>(i)] = std::abs(y.data()[i]);
  // Lower median: order statistic ceil(n/2) (1-based).
  const std::size_t n = abs_values.size();
  const std::size_t pos = (n + 1) / 2 - 1;
  std::nth_element(abs_values.begin(), abs_values.begin() + static_cast<std::ptrdiff_t>(pos), abs_values.end());
  const double sigma = abs_values[pos] / kNormalQ75;
  return {sigma, !(sigma > 0.0)};
}

SigmaEstimate estimate_sigma_trimmed(const Tensor& y, double trim_fraction) {
  if (!(trim_fraction >= 0.0 && trim_fraction < 1.0))
    throw std::invalid_argument("trimmed sigma: trim fraction must lie in [0, 1)");
  const auto n = static_cast<std::size_t>(y.size());
  const auto drop = static_cast<std::size_t>(std::ceil(trim_fraction * static_cast<double>(n)));
  if (n < drop + 2) throw std::invalid_argument("trimmed sigma: fewer than two entries remain after trimming");
  std::vector<double> values(y.data().data(), y.data().data() + n);
  std::stable_sort(values.begin(), values.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  values.resize(n - drop);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sigma = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return {sigma, !(sigma > 0.0)};
}

double rank_delta(double i, double j, double p_k, double p_rest, double scale) {
  const auto term = [](double n, double p) { return n > 0.0 ? 2.0 * n * std::log(std::exp(1.0) * p / n) : 0.0; };
  return scale * (std::sqrt(i) + std::sqrt(j) + std::sqrt(term(i, p_k) + term(j, p_rest) + 4.0 * std::log(p_k)));
}

bool RankEstimate::any_fallback() const {
  return std::any_of(fallback.begin(), fallback.end(), [](bool b) { return b; });
}

RankEstimate estimate_ranks_spectral(const Tensor& y, double sigma_hat, const std::vector<int>& sparse_modes,
                                     double delta_scale) {
  if (!(sigma_hat > 0.0)) throw std::invalid_argument("spectral rank rule: sigma_hat must be positive");
  const int d = y.order();
  // Rank-free support screening: the initialization levels do not depend on the ranks.
  StatSvdConfig screen;
  screen.ranks.assign(static_cast<std::size_t>(d), 1);
  screen.sigma = sigma_hat;
  screen.sparse_modes = sparse_modes;
  const auto supports = init_support(y, screen);

  RankEstimate out;
  bool any_empty = false;
  for (const auto& s : supports) {
    out.support_sizes.push_back(static_cast<Index>(s.size()));
    any_empty = any_empty || s.empty();
  }
  Tensor sub;
  if (!any_empty) {
    sub = y;
    for (int k = 0; k < d; ++k) {
      const auto& rows = supports[static_cast<std::size_t>(k)];
      if (static_cast<Index>(rows.size()) < y.dim(k)) sub = select_mode(sub, k, rows);
    }
  }
  const double total = static_cast<double>(y.size());
  for (int k = 0; k < d; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    const double i = static_cast<double>(out.support_sizes[ks]);
    double j = 1.0;
    for (int m = 0; m < d; ++m)
      if (m != k) j *= static_cast<double>(out.support_sizes[static_cast<std::size_t>(m)]);
    const double p_k = static_cast<double>(y.dim(k));
    const double threshold = sigma_hat * rank_delta(i, j, p_k, total / p_k, delta_scale);
    out.thresholds.push_back(threshold);
    Eigen::VectorXd sv = any_empty ? Eigen::VectorXd() : singular_values(matricize(sub, k));
    Index r = 0;
    for (Index q = 0; q < sv.size(); ++q)
      if (sv[q] >= threshold) r = q + 1;
    out.fallback.push_back(r == 0);
    out.ranks.push_back(std::max<Index>(r, 1));
    out.singular_values.push_back(std::move(sv));
  }
  return out;
}

std::vector<Index> estimate_ranks_cpv(const Tensor& y, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("cpv rank rule: rho must lie in (0, 1)");
  if (!(y.squared_norm() > 0.0)) throw std::invalid_argument("cpv rank rule: zero tensor");
  std::vector<Index> out;
  for (int k = 0; k < y.order(); ++k) {
    const Eigen::VectorXd sv = singular_values(matricize(y, k));
    const Eigen::VectorXd energy = sv.array().square();
    const double total = energy.sum();
    double acc = 0.0;
    Index r = sv.size();
    for (Index q = 0; q < sv.size(); ++q) {
      acc += energy[q];
      if (acc / total > rho) {
        r = q + 1;
        break;
      }
    }
    out.push_back(r);
  }
  return out;
}

HyperEstimates estimate_hyperparameters(const Tensor& y, const std::vector<int>& sparse_modes) {
  HyperEstimates out;
  const auto sigma = estimate_sigma_median(y);
  out.sigma_hat = sigma.sigma;
  out.sigma_method = "median";
  out.rank_method = "spectral";
  if (sigma.degenerate) {
    out.degenerate = true;
    out.ranks_hat.assign(static_cast<std::size_t>(y.order()), 1);
    return out;
  }
  out.spectral = estimate_ranks_spectral(y, sigma.sigma, sparse_modes);
  out.ranks_hat = out.spectral.ranks;
  out.degenerate = out.spectral.any_fallback();
  return out;
}

}  // namespace statsvd
