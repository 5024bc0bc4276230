#pragma once

#include "statsvd/linalg.hpp"
#include "statsvd/tensor.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace statsvd {

using IndexSet = std::vector<Index>;  // sorted ascending

/// Which row statistic the second thresholding of the sparse-mode update
/// compares against eta_bar.
enum class SecondThresholdStatistic {
  kProjected,  // ||Abar_[i,:]||^2, the r_k-dimensional projected row
  kFirst,      // ||A_[i,:]||^2, the same statistic as the first thresholding
};

/// Inputs of the STAT-SVD fit. Modes are 0-based.
struct StatSvdConfig {
  std::vector<Index> ranks;
  double sigma = 0.0;
  std::vector<int> sparse_modes;
  std::optional<int> t_max;         // default: ceil(5 log(d s log p)) capped at 50
  std::optional<double> eps_tol;    // default: 1e-6 sigma^2 sum(r_k)
  SecondThresholdStatistic second_statistic = SecondThresholdStatistic::kProjected;

  bool is_sparse(int k) const;
  /// Throws std::invalid_argument if the config does not fit a tensor of this shape.
  void validate(const Shape& shape) const;
};

enum class ThresholdVariant {
  kDouble,  // log p = log(p_1 ... p_d) throughout
  kSingle,  // single thresholding: log p_k in eta_k
};

/// Hard-thresholding levels. log is natural; p is the total entry count.
struct ThresholdLevels {
  std::vector<double> eta;       // first (or only) row-norm threshold per mode
  std::vector<double> eta_bar;   // second threshold per mode (double variant)
  std::vector<double> init_row;  // initialization: squared row norm of Y_k
  double init_entry = 0.0;       // initialization: largest absolute entry

  static ThresholdLevels make(const Shape& shape, std::span<const Index> ranks, double sigma,
                              ThresholdVariant variant = ThresholdVariant::kDouble);
};

/// sigma^2 (n + 2 sqrt(n log_p) + 2 log_p): the chi-square style tail level
/// shared by every threshold in the procedure.
double chi_square_level(double sigma, double n, double log_p);

struct ModeSupport {
  IndexSet first;   // rows kept by the first thresholding
  IndexSet second;  // rows kept by the second thresholding (== first for dense modes)
};

struct TuckerFit {
  std::vector<Frame> loadings;
  Tensor core;
  Tensor denoised;
  std::vector<ModeSupport> supports;
  std::vector<IndexSet> initial_supports;
  int iterations_run = 0;
  bool converged = false;
  bool degenerate = false;
  // trace[t][k]: squared Frobenius norm of the thresholded, projected matrix of mode k in sweep t.
  std::vector<std::vector<double>> trace;
  int t_max = 0;
  double eps_tol = 0.0;
};

/// Called after every sweep with the sweep index (0-based) and current loadings.
using SweepObserver = std::function<void(int, std::span<const Frame>)>;

/// Initial support selection: rows of Y_k whose squared norm or largest
/// entry clears the initialization levels for sparse modes; full range otherwise.
std::vector<IndexSet> init_support(const Tensor& y, const StatSvdConfig& cfg);

/// Y with every entry outside the product of the supports set to zero.
Tensor restrict_to_supports(const Tensor& y, std::span<const IndexSet> supports);

struct InitialLoadings {
  std::vector<Frame> loadings;
  std::vector<IndexSet> supports;  // after the empty-support fallback
  bool degenerate = false;
};

/// Top-r_k left singular vectors of the unfoldings of Y restricted to the
/// product of the supports. An empty sparse-mode support is replaced by the
/// r_k rows of largest norm and flagged.
InitialLoadings init_loadings(const Tensor& y, std::span<const IndexSet> supports, const StatSvdConfig& cfg);

/// M_k(Y x_{j != k} U_j^T): the p_k x r_{-k} projection, columns in cyclic mode order.
Eigen::MatrixXd project_unfolding(const Tensor& y, std::span<const Frame> loadings, int k);

/// Y x_j U_j^T over every mode j except `skip` (pass -1 to project all modes).
Tensor project_except(const Tensor& y, std::span<const Frame> loadings, int skip);

/// Core expanded by the loadings: core x_1 U_1 ... x_d U_d.
Tensor expand(const Tensor& core, std::span<const Frame> loadings);

struct DenseUpdate {
  Frame loading;
  double projected_energy = 0.0;  // sum of the top r_k squared singular values of A_k
};

DenseUpdate dense_mode_update(const Tensor& y, int k, std::span<const Frame> loadings, Index rank);

/// Every intermediate of the double projection & thresholding step on a given A_k.
struct DoubleThresholdStep {
  Eigen::MatrixXd b;         // A with rows failing eta zeroed
  Frame v;                   // leading r_k right singular vectors of b
  Eigen::MatrixXd a_bar;     // A v
  Eigen::MatrixXd b_bar;     // a_bar with rows failing eta_bar zeroed
  Frame loading;             // orthonormalized b_bar
  IndexSet first;
  IndexSet second;
  bool degenerate = false;
};

DoubleThresholdStep double_threshold_step(const Eigen::MatrixXd& a, Index rank, double eta, double eta_bar,
                                          SecondThresholdStatistic statistic);

struct SparseUpdate {
  Frame loading;
  IndexSet first;
  IndexSet second;
  double thresholded_energy = 0.0;  // ||Bbar_k||_F^2
  bool degenerate = false;
};

SparseUpdate sparse_mode_update(const Tensor& y, int k, std::span<const Frame> loadings, Index rank, double eta,
                                double eta_bar, SecondThresholdStatistic statistic);

/// Projection denoiser Y x_k (U_k U_k^T).
Tensor denoise(const Tensor& y, std::span<const Frame> loadings);

/// Full STAT-SVD fit.
TuckerFit fit(const Tensor& y, const StatSvdConfig& cfg, const SweepObserver& observer = {});

int default_t_max(int order, double support_total, double total_entries);
double default_eps_tol(double sigma, std::span<const Index> ranks);

/// The r rows of largest norm in `row_norms`, ascending by index (ties to the lower index).
IndexSet top_rows(const Eigen::VectorXd& row_norms, Index r);

}  // namespace statsvd
