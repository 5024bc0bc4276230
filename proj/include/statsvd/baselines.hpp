#pragma once

#include "statsvd/statsvd.hpp"

#include <optional>
#include <string>
#include <vector>

namespace statsvd {

/// Inputs shared by the reference Tucker decompositions. Modes are 0-based.
struct BaselineConfig {
  std::vector<Index> ranks;
  std::vector<int> sparse_modes;
  double sigma = 1.0;          // noise level for the sparse matrix SVD thresholds
  int t_max = 50;
  double eps_tol = 1e-10;      // relative change of the core norm between sweeps

  bool is_sparse(int k) const;
  void validate(const Shape& shape) const;
};

struct TuckerDecomposition {
  std::vector<Frame> loadings;
  Tensor core;
  int sweeps = 0;
  bool converged = false;
  bool degenerate = false;
  // Core norm after initialization (index 0) and after every sweep.
  std::vector<double> core_norms;
};

/// Per-mode truncated SVD of the unfoldings.
TuckerDecomposition hosvd(const Tensor& y, const std::vector<Index>& ranks);

/// Higher-order orthogonal iteration from the HOSVD start.
TuckerDecomposition hooi(const Tensor& y, const std::vector<Index>& ranks, int t_max = 50, double eps_tol = 1e-10,
                         const SweepObserver& observer = {});

struct SparseSvdResult {
  Frame left;
  IndexSet support;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
};

/// Row-sparse rank-r matrix SVD by thresholded power iteration. This is a
/// stand-in for an external sparse SVD routine: starting from the leading
/// left singular vectors, each step orthonormalizes m^T U, forms W = m V and
/// zeroes rows with ||W_i||^2 below sigma^2 (n + 2 sqrt(n log N) + 2 log N),
/// n = cols, N = rows * cols, then orthonormalizes W. Stops after 100 steps.
SparseSvdResult ssvd_rank_r(const Eigen::MatrixXd& m, Index r, double sigma);

/// S-HOSVD: sparse matrix SVD on sparse modes, truncated SVD elsewhere.
TuckerDecomposition s_hosvd(const Tensor& y, const BaselineConfig& cfg);

/// S-HOOI: orthogonal iteration from S-HOSVD with sparse matrix SVD on sparse modes.
TuckerDecomposition s_hooi(const Tensor& y, const BaselineConfig& cfg, const SweepObserver& observer = {});

/// STAT-SVD driver with the single projection & thresholding update on sparse modes.
TuckerFit stat_svd_single_threshold(const Tensor& y, const StatSvdConfig& cfg, const SweepObserver& observer = {});

}  // namespace statsvd
