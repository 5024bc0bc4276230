#pragma once

#include "statsvd/rng.hpp"
#include "statsvd/statsvd.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace statsvd {

enum class NoiseFamily { kGaussian, kUniform };

std::string to_string(NoiseFamily f);
NoiseFamily noise_family_from_string(const std::string& name);

/// Generation parameters of one synthetic instance. Modes are 0-based;
/// s_k == p_k means mode k is dense.
struct SimParams {
  Shape p;
  std::vector<Index> r;
  std::vector<Index> s;
  double lambda = 1.0;
  double sigma = 1.0;
  NoiseFamily noise = NoiseFamily::kGaussian;
  std::vector<int> sparse_modes;

  void validate() const;
};

struct SimInstance {
  SimParams params;
  std::uint64_t seed = 0;
  Tensor core;
  std::vector<Frame> loadings;
  std::vector<IndexSet> supports;
  Tensor x;
  Tensor y;
};

/// i.i.d. N(0,1) core rescaled so min_k sigma_{r_k}(M_k(S)) == lambda.
Tensor gen_core(const std::vector<Index>& r, double lambda, std::uint64_t seed);

struct SparseFrame {
  Frame frame;
  IndexSet support;
};

/// Uniform random p x r frame with exactly s nonzero rows: a Haar s x r block
/// (QR of a Gaussian matrix, R diagonal positive) placed on a uniform s-subset.
SparseFrame gen_sparse_frame(Index p, Index r, Index s, std::uint64_t seed);

/// X = S x_1 U_1 ... x_d U_d, Y = X + Z with Z i.i.d. of standard deviation sigma
/// (Gaussian, or uniform on [-sigma sqrt 3, sigma sqrt 3]).
SimInstance gen_instance(const SimParams& params, std::uint64_t seed);

/// Instance with strong and weak rows on mode 0, the only sparse mode.
/// M_0(S) = lambda Q with Q orthonormal rows, so row i of the projected mode-0
/// matrix carries signal energy lambda^2 ||U_0[i]||^2. U_0 has r0 rows of
/// squared norm a^2 and s - r0 rows of squared norm weak_energy / lambda^2.
struct WeakRowParams {  // r0 must be 2
  Index p0 = 200;
  Index p_dense = 12;
  Index r0 = 2;
  Index r_dense = 10;
  Index s = 40;
  double lambda = 60.0;
  double sigma = 1.0;
  // Signal energy of each weak row; default: midway between the extra terms
  // of the second double threshold and of the single threshold.
  std::optional<double> weak_energy;

  double resolved_weak_energy() const;
};

SimInstance gen_weak_row_instance(const WeakRowParams& params, std::uint64_t seed);

struct Score {
  double l2_subspace = 0.0;  // mean over modes of ||sin Theta||_F
  double l_recovery = 0.0;   // ||X_hat - X||_F
  std::vector<double> per_mode;
};

Score score(std::span<const Frame> loadings, const Tensor& x_hat, std::span<const Frame> truth_loadings,
            const Tensor& truth_x);

enum class Method { kStatSvd, kHosvd, kHooi, kSHosvd, kSHooi, kStatSvdSingle };

std::string to_string(Method m);
Method method_from_string(const std::string& name);
const std::vector<Method>& all_methods();

struct MethodOutput {
  std::vector<Frame> loadings;
  Tensor x_hat;
  bool degenerate = false;
};

/// Runs one decomposition with the given ranks, sparse modes and noise level.
MethodOutput run_method(Method m, const Tensor& y, const std::vector<Index>& ranks,
                        const std::vector<int>& sparse_modes, double sigma);

enum class SigmaSource { kMedian, kOracle };

/// Experiment grid: a base setting, optionally swept along one axis.
struct GridSpec {
  SimParams base;
  std::string sweep_axis;  // "", "sigma", "rank", "lambda", "p"
  std::vector<double> sweep_values;
  int replications = 1;
  std::uint64_t seed = 1;
  std::vector<Method> methods = all_methods();
  SigmaSource sigma_source = SigmaSource::kMedian;
  bool record_timing = true;
  double scale = 1.0;

  /// Effective per-cell parameters after scaling and sweeping.
  std::vector<SimParams> cells() const;
  /// Seed of replication `rep` in cell `cell`.
  std::uint64_t instance_seed(std::size_t cell, int rep) const;
};

/// Shrinks p and s by `factor`, r by sqrt(factor), and rescales lambda so that
/// lambda / sqrt(sum(s) log prod(p)) is unchanged.
SimParams scale_params(const SimParams& params, double factor);

struct ReportRow {
  std::string method;
  std::size_t cell = 0;
  SimParams params;
  std::uint64_t seed = 0;
  int replication = 0;
  double l2_subspace = 0.0;
  double l_recovery = 0.0;
  std::vector<double> per_mode;
  double wall_time_s = 0.0;
  std::string flags;
};

struct SummaryStats {
  double mean = 0.0;
  double sd = 0.0;
};

struct CellSummary {
  std::size_t cell = 0;
  std::string method;
  SimParams params;
  int count = 0;
  int failures = 0;
  SummaryStats l2_subspace;
  SummaryStats l_recovery;
  SummaryStats wall_time_s;
  std::vector<SummaryStats> per_mode;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::vector<CellSummary> summaries;

  const CellSummary& summary(std::size_t cell, Method m) const;
  void write_csv(std::ostream& os) const;
  std::string summary_json() const;
};

inline constexpr const char* kReportCsvHeader =
    "method,p,r,s,lambda,sigma,noise,seed,l2_subspace,l_recovery,wall_time_s,flags";

ExperimentReport run_grid(const GridSpec& spec);

/// Parses a JSON grid description (sparse_modes 1-based).
GridSpec grid_from_json(const std::string& text);

}  // namespace statsvd
