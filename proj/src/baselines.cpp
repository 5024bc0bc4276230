#include "statsvd/baselines.hpp"

#include "fit_driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace statsvd {

namespace {

constexpr int kSparseSvdMaxIterations = 100;

IndexSet rows_at_least(const Eigen::VectorXd& stat, double level) {
  IndexSet rows;
  for (Index i = 0; i < stat.size(); ++i)
    if (stat[i] >= level) rows.push_back(i);
  return rows;
}

Eigen::MatrixXd keep_rows(const Eigen::MatrixXd& a, const IndexSet& rows) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (Index i : rows) out.row(i) = a.row(i);
  return out;
}

void validate_ranks(const Shape& shape, const std::vector<Index>& ranks) {
  if (ranks.size() != shape.size())
    throw std::invalid_argument("baseline: " + std::to_string(ranks.size()) + " ranks for an order-" +
                                std::to_string(shape.size()) + " tensor");
  for (std::size_t k = 0; k < shape.size(); ++k) {
    Index rest = 1;
    for (std::size_t j = 0; j < shape.size(); ++j)
      if (j != k) rest *= ranks[j];
    if (ranks[k] < 1 || ranks[k] > shape[k] || ranks[k] > rest)
      throw std::invalid_argument("baseline: rank " + std::to_string(ranks[k]) + " invalid for mode " +
                                  std::to_string(k));
  }
}

Frame mode_factor(const Eigen::MatrixXd& a, Index rank, bool sparse, double sigma, bool& degenerate) {
  if (!sparse) return svd_leading(a, rank).left;
  auto res = ssvd_rank_r(a, rank, sigma);
  degenerate = degenerate || res.degenerate;
  return std::move(res.left);
}

TuckerDecomposition per_mode_init(const Tensor& y, const std::vector<Index>& ranks,
                                  const std::vector<int>& sparse_modes, double sigma) {
  TuckerDecomposition out;
  for (int k = 0; k < y.order(); ++k) {
    const bool sparse = std::find(sparse_modes.begin(), sparse_modes.end(), k) != sparse_modes.end();
    out.loadings.push_back(
        mode_factor(matricize(y, k), ranks[static_cast<std::size_t>(k)], sparse, sigma, out.degenerate));
  }
  out.core = project_except(y, out.loadings, -1);
  out.core_norms.push_back(out.core.norm());
  return out;
}

// Alternating projection + (sparse) SVD sweeps shared by HOOI and S-HOOI.
void orthogonal_iteration(const Tensor& y, const std::vector<Index>& ranks, const std::vector<int>& sparse_modes,
                          double sigma, int t_max, double eps_tol, TuckerDecomposition& state,
                          const SweepObserver& observer) {
  const int d = y.order();
  for (int t = 0; t < t_max; ++t) {
    double core_norm = 0.0;
    for (int k = 0; k < d; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const bool sparse = std::find(sparse_modes.begin(), sparse_modes.end(), k) != sparse_modes.end();
      const Eigen::MatrixXd a = project_unfolding(y, state.loadings, k);
      state.loadings[ks] = mode_factor(a, ranks[ks], sparse, sigma, state.degenerate);
      if (k == d - 1) core_norm = (state.loadings[ks].matrix().transpose() * a).norm();
    }
    state.sweeps = t + 1;
    state.core_norms.push_back(core_norm);
    if (observer) observer(t, state.loadings);
    const double prev = state.core_norms[state.core_norms.size() - 2];
    if (std::abs(core_norm - prev) <= eps_tol * std::max(prev, std::numeric_limits<double>::min())) {
      state.converged = true;
      break;
    }
  }
  state.core = project_except(y, state.loadings, -1);
}

}  // namespace

bool BaselineConfig::is_sparse(int k) const {
  return std::find(sparse_modes.begin(), sparse_modes.end(), k) != sparse_modes.end();
}

void BaselineConfig::validate(const Shape& shape) const {
  validate_ranks(shape, ranks);
  for (int k : sparse_modes)
    if (k < 0 || k >= static_cast<int>(shape.size()))
      throw std::invalid_argument("baseline: sparse mode " + std::to_string(k) + " out of range");
  if (!sparse_modes.empty() && !(sigma > 0.0)) throw std::invalid_argument("baseline: sigma must be positive");
  if (t_max < 1) throw std::invalid_argument("baseline: t_max must be at least 1");
  if (!(eps_tol >= 0.0)) throw std::invalid_argument("baseline: eps_tol must be nonnegative");
}

TuckerDecomposition hosvd(const Tensor& y, const std::vector<Index>& ranks) {
  validate_ranks(y.shape(), ranks);
  return per_mode_init(y, ranks, {}, 1.0);
}

TuckerDecomposition hooi(const Tensor& y, const std::vector<Index>& ranks, int t_max, double eps_tol,
                         const SweepObserver& observer) {
  BaselineConfig cfg{ranks, {}, 1.0, t_max, eps_tol};
  return s_hooi(y, cfg, observer);
}

SparseSvdResult ssvd_rank_r(const Eigen::MatrixXd& m, Index r, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("ssvd_rank_r: sigma must be positive");
  const auto rows = static_cast<double>(m.rows());
  const auto cols = static_cast<double>(m.cols());
  const double level = chi_square_level(sigma, cols, std::log(rows * cols));

  SparseSvdResult out;
  out.left = svd_leading(m, r).left;
  for (int it = 1; it <= kSparseSvdMaxIterations; ++it) {
    const Frame v = qr_orthonormalize(m.transpose() * out.left.matrix());
    const Eigen::MatrixXd w = m * v.matrix();
    const Eigen::VectorXd norms = w.rowwise().squaredNorm();
    IndexSet kept = rows_at_least(norms, level);
    bool degenerate = false;
    if (kept.empty()) {
      kept = top_rows(norms, r);
      degenerate = true;
    }
    auto qr = qr_thin(keep_rows(w, kept));
    degenerate = degenerate || qr.completed > 0;
    Frame next(std::move(qr.q));
    const double moved = sin_theta_fro(next, out.left);
    out.left = std::move(next);
    out.support = std::move(kept);
    out.degenerate = degenerate;
    out.iterations = it;
    if (moved <= 1e-10) {
      out.converged = true;
      break;
    }
  }
  return out;
}

TuckerDecomposition s_hosvd(const Tensor& y, const BaselineConfig& cfg) {
  cfg.validate(y.shape());
  return per_mode_init(y, cfg.ranks, cfg.sparse_modes, cfg.sigma);
}

TuckerDecomposition s_hooi(const Tensor& y, const BaselineConfig& cfg, const SweepObserver& observer) {
  cfg.validate(y.shape());
  auto state = per_mode_init(y, cfg.ranks, cfg.sparse_modes, cfg.sigma);
  orthogonal_iteration(y, cfg.ranks, cfg.sparse_modes, cfg.sigma, cfg.t_max, cfg.eps_tol, state, observer);
  return state;
}

TuckerFit stat_svd_single_threshold(const Tensor& y, const StatSvdConfig& cfg, const SweepObserver& observer) {
  return detail::run_fit(y, cfg, detail::SparseRule::kSingleThreshold, observer);
}

}  // namespace statsvd
