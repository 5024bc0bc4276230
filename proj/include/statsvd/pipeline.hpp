#pragma once

#include "statsvd/statsvd.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace statsvd {

/// n x n tridiagonal second-difference matrix: -2 on the diagonal, 1 next to it.
Eigen::MatrixXd make_secondary_difference(Index n);

enum class Preprocess { kNone, kLog };

/// Longitudinal-data preprocessing and fit. Modes are 0-based.
struct PipelineSpec {
  int difference_mode = 0;
  double rho = 0.5;
  double trim_fraction = 0.15;
  std::vector<int> sparse_modes{0};
  Preprocess pre = Preprocess::kNone;
  std::optional<int> t_max;
  std::optional<double> eps_tol;

  void validate(int order) const;
};

struct PipelineResult {
  Tensor transformed;                // Y x_m D (after the optional log)
  double sigma_hat = 0.0;            // trimmed standard deviation of the transformed tensor
  std::vector<Index> cpv_ranks;      // CPV ranks before feasibility capping
  std::vector<Index> ranks;          // ranks used for the fit
  TuckerFit fit;                     // fit of the transformed tensor
  Eigen::MatrixXd back_raw;          // D^{-1} U_m, not orthonormal
  Frame back_orthonormal;            // orthonormal basis of span(back_raw)
  std::vector<Eigen::VectorXd> singular_values;  // of each unfolding of the transformed tensor
};

PipelineResult run_pipeline(const Tensor& y, const PipelineSpec& spec);

/// Writes fit.json, summary.json, loadings_mode<k>.csv, back_transform_raw.csv,
/// back_transform_orthonormal.csv, supports.csv and singular_values_mode<k>.csv.
void write_pipeline_outputs(const PipelineResult& result, const PipelineSpec& spec,
                            const std::filesystem::path& out_dir);

/// Ranks capped so each r_k is at most the product of the others.
std::vector<Index> cap_ranks(std::vector<Index> ranks);

/// Synthetic tensor shaped like a mortality table (age x year x country).
/// Mode 0 loadings are U = D^{-1} W with W row-sparse, so they are smooth
/// except at the rows in `planted_support`.
struct SmokeTensor {
  Tensor y;
  Tensor x;
  Eigen::MatrixXd smooth_loading;  // U
  Eigen::MatrixXd sparse_loading;  // W
  IndexSet planted_support;
  double sigma = 0.0;
};

SmokeTensor make_mortality_smoke(std::uint64_t seed, Shape shape = {96, 52, 26}, std::vector<Index> ranks = {2, 3, 3},
                                 double lambda = 200.0, double sigma = 1.0);

}  // namespace statsvd
