#include "statsvd/statsvd.hpp"

#include "fit_driver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace statsvd {

namespace {

Index product_except(std::span<const Index> values, int k) {
  Index out = 1;
  for (std::size_t j = 0; j < values.size(); ++j)
    if (static_cast<int>(j) != k) out *= values[j];
  return out;
}

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

IndexSet full_range(Index n) {
  IndexSet all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  return all;
}

void check_loadings(const Tensor& y, std::span<const Frame> loadings, int skip) {
  if (static_cast<int>(loadings.size()) != y.order())
    throw std::invalid_argument("expected " + std::to_string(y.order()) + " loadings, got " +
                                std::to_string(loadings.size()));
  for (int j = 0; j < y.order(); ++j) {
    if (j == skip) continue;
    if (loadings[static_cast<std::size_t>(j)].rows() != y.dim(j))
      throw std::invalid_argument("loading " + std::to_string(j) + " has " +
                                  std::to_string(loadings[static_cast<std::size_t>(j)].rows()) +
                                  " rows, tensor mode has size " + std::to_string(y.dim(j)));
  }
}

}  // namespace

bool StatSvdConfig::is_sparse(int k) const {
  return std::find(sparse_modes.begin(), sparse_modes.end(), k) != sparse_modes.end();
}

void StatSvdConfig::validate(const Shape& shape) const {
  const int d = static_cast<int>(shape.size());
  if (static_cast<int>(ranks.size()) != d)
    throw std::invalid_argument("config: " + std::to_string(ranks.size()) + " ranks for an order-" +
                                std::to_string(d) + " tensor");
  for (int k = 0; k < d; ++k) {
    const Index r = ranks[static_cast<std::size_t>(k)];
    if (r < 1 || r > shape[static_cast<std::size_t>(k)])
      throw std::invalid_argument("config: rank " + std::to_string(r) + " invalid for mode " + std::to_string(k) +
                                  " of size " + std::to_string(shape[static_cast<std::size_t>(k)]));
    if (r > product_except(ranks, k))
      throw std::invalid_argument("config: rank of mode " + std::to_string(k) +
                                  " exceeds the product of the other ranks");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("config: sigma must be positive");
  for (int k : sparse_modes)
    if (k < 0 || k >= d) throw std::invalid_argument("config: sparse mode " + std::to_string(k) + " out of range");
  if (t_max && *t_max < 1) throw std::invalid_argument("config: t_max must be at least 1");
  if (eps_tol && !(*eps_tol >= 0.0)) throw std::invalid_argument("config: eps_tol must be nonnegative");
}

double chi_square_level(double sigma, double n, double log_p) {
  return sigma * sigma * (n + 2.0 * std::sqrt(n * log_p) + 2.0 * log_p);
}

ThresholdLevels ThresholdLevels::make(const Shape& shape, std::span<const Index> ranks, double sigma,
                                      ThresholdVariant variant) {
  const int d = static_cast<int>(shape.size());
  const double log_p = std::log(static_cast<double>(shape_product(shape)));
  ThresholdLevels lv;
  lv.init_entry = 2.0 * sigma * std::sqrt(log_p);
  for (int k = 0; k < d; ++k) {
    const auto rk = static_cast<double>(ranks[static_cast<std::size_t>(k)]);
    const auto r_rest = static_cast<double>(product_except(ranks, k));
    const auto p_rest = static_cast<double>(product_except(shape, k));
    const double log_pk = std::log(static_cast<double>(shape[static_cast<std::size_t>(k)]));
    lv.init_row.push_back(chi_square_level(sigma, p_rest, log_p));
    lv.eta.push_back(variant == ThresholdVariant::kDouble ? chi_square_level(sigma, r_rest, log_p)
                                                          : chi_square_level(sigma, r_rest, log_pk));
    lv.eta_bar.push_back(chi_square_level(sigma, rk, log_p));
  }
  return lv;
}

IndexSet top_rows(const Eigen::VectorXd& row_norms, Index r) {
  IndexSet order = full_range(row_norms.size());
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return row_norms[a] > row_norms[b]; });
  order.resize(static_cast<std::size_t>(std::min<Index>(r, row_norms.size())));
  std::sort(order.begin(), order.end());
  return order;
}

int default_t_max(int order, double support_total, double total_entries) {
  const double inner = order * support_total * std::log(total_entries);
  if (!(inner > 1.0)) return 1;
  return std::clamp(static_cast<int>(std::ceil(5.0 * std::log(inner))), 1, 50);
}

double default_eps_tol(double sigma, std::span<const Index> ranks) {
  const auto r = static_cast<double>(std::accumulate(ranks.begin(), ranks.end(), Index{0}));
  return 1e-6 * sigma * sigma * r;
}

std::vector<IndexSet> init_support(const Tensor& y, const StatSvdConfig& cfg) {
  cfg.validate(y.shape());
  const auto lv = ThresholdLevels::make(y.shape(), cfg.ranks, cfg.sigma);
  std::vector<IndexSet> out;
  for (int k = 0; k < y.order(); ++k) {
    if (!cfg.is_sparse(k)) {
      out.push_back(full_range(y.dim(k)));
      continue;
    }
    const Eigen::VectorXd norms = mode_row_squared_norms(y, k);
    const Eigen::VectorXd maxabs = mode_row_max_abs(y, k);
    IndexSet rows;
    for (Index i = 0; i < y.dim(k); ++i)
      if (norms[i] >= lv.init_row[static_cast<std::size_t>(k)] || maxabs[i] >= lv.init_entry) rows.push_back(i);
    out.push_back(std::move(rows));
  }
  return out;
}

Tensor restrict_to_supports(const Tensor& y, std::span<const IndexSet> supports) {
  const int d = y.order();
  if (static_cast<int>(supports.size()) != d) throw std::invalid_argument("restrict_to_supports: support count mismatch");
  std::vector<std::vector<bool>> keep(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    auto& mask = keep[static_cast<std::size_t>(k)];
    mask.assign(static_cast<std::size_t>(y.dim(k)), false);
    for (Index i : supports[static_cast<std::size_t>(k)]) mask.at(static_cast<std::size_t>(i)) = true;
  }
  Tensor out = Tensor::Zero(y.shape());
  std::vector<Index> idx(static_cast<std::size_t>(d), 0);
  for (Index lin = 0; lin < y.size(); ++lin) {
    bool inside = true;
    for (int k = 0; k < d && inside; ++k) inside = keep[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
    if (inside) out.data()[lin] = y.data()[lin];
    for (int k = d; k-- > 0;) {
      if (++idx[static_cast<std::size_t>(k)] < y.dim(k)) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return out;
}

InitialLoadings init_loadings(const Tensor& y, std::span<const IndexSet> supports, const StatSvdConfig& cfg) {
  cfg.validate(y.shape());
  const int d = y.order();
  if (static_cast<int>(supports.size()) != d) throw std::invalid_argument("init_loadings: support count mismatch");
  InitialLoadings out;
  out.supports.assign(supports.begin(), supports.end());
  for (int k = 0; k < d; ++k) {
    auto& rows = out.supports[static_cast<std::size_t>(k)];
    const Index rk = cfg.ranks[static_cast<std::size_t>(k)];
    if (rows.empty()) {
      rows = top_rows(mode_row_squared_norms(y, k), rk);
      out.degenerate = true;
    }
    if (static_cast<Index>(rows.size()) < rk) out.degenerate = true;
  }

  Tensor sub = y;
  for (int k = 0; k < d; ++k) {
    const auto& rows = out.supports[static_cast<std::size_t>(k)];
    if (static_cast<Index>(rows.size()) < y.dim(k)) sub = select_mode(sub, k, rows);
  }
  if (sub.data().cwiseAbs().maxCoeff() == 0.0) out.degenerate = true;

  for (int k = 0; k < d; ++k) {
    const auto& rows = out.supports[static_cast<std::size_t>(k)];
    const Index rk = cfg.ranks[static_cast<std::size_t>(k)];
    const Eigen::MatrixXd m = matricize(sub, k);
    if (rk <= std::min(m.rows(), m.cols())) {
      const auto svd = svd_leading(m, rk);
      Eigen::MatrixXd u = Eigen::MatrixXd::Zero(y.dim(k), rk);
      for (std::size_t j = 0; j < rows.size(); ++j) u.row(rows[j]) = svd.left.matrix().row(static_cast<Index>(j));
      out.loadings.emplace_back(std::move(u));
      continue;
    }
    // The restricted unfolding is too small for rank r_k: work on the zero-padded tensor.
    const Tensor padded = restrict_to_supports(y, out.supports);
    out.loadings.push_back(svd_leading(matricize(padded, k), rk).left);
    out.degenerate = true;
  }
  return out;
}

Tensor project_except(const Tensor& y, std::span<const Frame> loadings, int skip) {
  check_loadings(y, loadings, skip);
  std::vector<int> modes;
  for (int j = 0; j < y.order(); ++j)
    if (j != skip) modes.push_back(j);
  // Contract the most strongly reducing modes first; the order is fixed by the shapes alone.
  std::stable_sort(modes.begin(), modes.end(), [&](int a, int b) {
    const auto& fa = loadings[static_cast<std::size_t>(a)];
    const auto& fb = loadings[static_cast<std::size_t>(b)];
    return static_cast<double>(fa.cols()) / static_cast<double>(fa.rows()) <
           static_cast<double>(fb.cols()) / static_cast<double>(fb.rows());
  });

  const Tensor* cur = &y;
  Tensor work;
  for (int j : modes) {
    const Frame& f = loadings[static_cast<std::size_t>(j)];
    const IndexSet rows = f.support();
    if (static_cast<Index>(rows.size()) < f.rows()) {
      Eigen::MatrixXd ut(f.cols(), static_cast<Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) ut.col(static_cast<Index>(i)) = f.matrix().row(rows[i]).transpose();
      work = mode_product(select_mode(*cur, j, rows), j, ut);
    } else {
      work = mode_product(*cur, j, f.matrix().transpose());
    }
    cur = &work;
  }
  return cur == &y ? y : work;
}

Eigen::MatrixXd project_unfolding(const Tensor& y, std::span<const Frame> loadings, int k) {
  detail::check_mode(y.order(), k);
  return matricize(project_except(y, loadings, k), k);
}

Tensor expand(const Tensor& core, std::span<const Frame> loadings) {
  if (static_cast<int>(loadings.size()) != core.order())
    throw std::invalid_argument("expand: loading count does not match core order");
  Tensor out = core;
  for (int k = 0; k < core.order(); ++k) {
    const Frame& f = loadings[static_cast<std::size_t>(k)];
    if (f.cols() != core.dim(k)) throw std::invalid_argument("expand: loading and core dimension mismatch");
    out = mode_product(out, k, f.matrix());
  }
  return out;
}

Tensor denoise(const Tensor& y, std::span<const Frame> loadings) {
  return expand(project_except(y, loadings, -1), loadings);
}

DenseUpdate dense_mode_update(const Tensor& y, int k, std::span<const Frame> loadings, Index rank) {
  const Eigen::MatrixXd a = project_unfolding(y, loadings, k);
  auto svd = svd_leading(a, rank);
  return {std::move(svd.left), svd.values.squaredNorm()};
}

DoubleThresholdStep double_threshold_step(const Eigen::MatrixXd& a, Index rank, double eta, double eta_bar,
                                          SecondThresholdStatistic statistic) {
  DoubleThresholdStep out;
  const Eigen::VectorXd row_norms = a.rowwise().squaredNorm();
  out.first = rows_at_least(row_norms, eta);
  if (out.first.empty()) {
    out.first = top_rows(row_norms, rank);
    out.degenerate = true;
  }
  out.b = keep_rows(a, out.first);
  out.v = svd_leading(out.b.transpose(), rank).left;
  out.a_bar = a * out.v.matrix();
  const Eigen::VectorXd second_stat =
      statistic == SecondThresholdStatistic::kProjected ? Eigen::VectorXd(out.a_bar.rowwise().squaredNorm()) : row_norms;
  out.second = rows_at_least(second_stat, eta_bar);
  if (out.second.empty()) {
    out.second = top_rows(second_stat, rank);
    out.degenerate = true;
  }
  out.b_bar = keep_rows(out.a_bar, out.second);
  auto qr = qr_thin(out.b_bar);
  if (qr.completed > 0) out.degenerate = true;
  out.loading = Frame(std::move(qr.q));
  return out;
}

SparseUpdate sparse_mode_update(const Tensor& y, int k, std::span<const Frame> loadings, Index rank, double eta,
                                double eta_bar, SecondThresholdStatistic statistic) {
  auto step = double_threshold_step(project_unfolding(y, loadings, k), rank, eta, eta_bar, statistic);
  return {std::move(step.loading), std::move(step.first), std::move(step.second), step.b_bar.squaredNorm(),
          step.degenerate};
}

namespace detail {

namespace {

struct SingleUpdate {
  Frame loading;
  IndexSet kept;
  double energy = 0.0;
  bool degenerate = false;
};

SingleUpdate single_threshold_update(const Tensor& y, int k, std::span<const Frame> loadings, Index rank,
                                     double eta) {
  const Eigen::MatrixXd a = project_unfolding(y, loadings, k);
  const Eigen::VectorXd row_norms = a.rowwise().squaredNorm();
  SingleUpdate out;
  out.kept = rows_at_least(row_norms, eta);
  if (out.kept.empty()) {
    out.kept = top_rows(row_norms, rank);
    out.degenerate = true;
  }
  auto svd = svd_leading(keep_rows(a, out.kept), rank);
  out.loading = std::move(svd.left);
  out.energy = svd.values.squaredNorm();
  return out;
}

}  // namespace

TuckerFit run_fit(const Tensor& y, const StatSvdConfig& cfg, SparseRule rule, const SweepObserver& observer) {
  cfg.validate(y.shape());
  if (!y.data().allFinite()) throw std::invalid_argument("fit: input contains non-finite entries");
  const int d = y.order();
  const auto levels = ThresholdLevels::make(
      y.shape(), cfg.ranks, cfg.sigma,
      rule == SparseRule::kDoubleThreshold ? ThresholdVariant::kDouble : ThresholdVariant::kSingle);

  TuckerFit fit;
  fit.initial_supports = init_support(y, cfg);
  auto init = init_loadings(y, fit.initial_supports, cfg);
  fit.degenerate = init.degenerate;
  double support_total = 0.0;
  for (const auto& s : init.supports) support_total += static_cast<double>(s.size());
  fit.t_max = cfg.t_max.value_or(default_t_max(d, support_total, static_cast<double>(y.size())));
  fit.eps_tol = cfg.eps_tol.value_or(default_eps_tol(cfg.sigma, cfg.ranks));

  std::vector<Frame> frames = std::move(init.loadings);
  fit.supports.resize(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    if (!cfg.is_sparse(k)) {
      fit.supports[static_cast<std::size_t>(k)] = {full_range(y.dim(k)), full_range(y.dim(k))};
    } else {
      fit.supports[static_cast<std::size_t>(k)] = {init.supports[static_cast<std::size_t>(k)],
                                                   init.supports[static_cast<std::size_t>(k)]};
    }
  }

  for (int t = 0; t < fit.t_max; ++t) {
    std::vector<double> energies(static_cast<std::size_t>(d), 0.0);
    for (int k = 0; k < d; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const Index rk = cfg.ranks[ks];
      if (!cfg.is_sparse(k)) {
        auto up = dense_mode_update(y, k, frames, rk);
        frames[ks] = std::move(up.loading);
        energies[ks] = up.projected_energy;
      } else if (rule == SparseRule::kDoubleThreshold) {
        auto up = sparse_mode_update(y, k, frames, rk, levels.eta[ks], levels.eta_bar[ks], cfg.second_statistic);
        frames[ks] = std::move(up.loading);
        fit.supports[ks] = {std::move(up.first), std::move(up.second)};
        energies[ks] = up.thresholded_energy;
        fit.degenerate = fit.degenerate || up.degenerate;
      } else {
        auto up = single_threshold_update(y, k, frames, rk, levels.eta[ks]);
        frames[ks] = std::move(up.loading);
        fit.supports[ks] = {up.kept, up.kept};
        energies[ks] = up.energy;
        fit.degenerate = fit.degenerate || up.degenerate;
      }
    }
    fit.trace.push_back(std::move(energies));
    fit.iterations_run = t + 1;
    if (observer) observer(t, frames);
    if (t >= 5) {
      const auto& now = fit.trace[static_cast<std::size_t>(t)];
      const auto& then = fit.trace[static_cast<std::size_t>(t - 5)];
      bool all = true;
      for (int k = 0; k < d; ++k)
        all = all && std::abs(now[static_cast<std::size_t>(k)] - then[static_cast<std::size_t>(k)]) < fit.eps_tol;
      if (all) {
        fit.converged = true;
        break;
      }
    }
  }

  fit.core = project_except(y, frames, -1);
  fit.denoised = expand(fit.core, frames);
  fit.loadings = std::move(frames);
  return fit;
}

}  // namespace detail

TuckerFit fit(const Tensor& y, const StatSvdConfig& cfg, const SweepObserver& observer) {
  return detail::run_fit(y, cfg, detail::SparseRule::kDoubleThreshold, observer);
}

}  // namespace statsvd
