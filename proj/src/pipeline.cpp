#include "statsvd/pipeline.hpp"

#include "statsvd/hyperparam.hpp"
#include "statsvd/rng.hpp"
#include "statsvd/serialize.hpp"
#include "statsvd/simbench.hpp"
#include "statsvd/tns_io.hpp"

#include <Eigen/LU>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace statsvd {

namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::string out = "row";
  for (Index j = 0; j < m.cols(); ++j) out += ",v" + std::to_string(j + 1);
  out += '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    out += std::to_string(i);
    for (Index j = 0; j < m.cols(); ++j) out += ',' + num(m(i, j));
    out += '\n';
  }
  return out;
}

}  // namespace

Eigen::MatrixXd make_secondary_difference(Index n) {
  if (n < 1) throw std::invalid_argument("secondary difference: n must be positive");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    d(i, i) = -2.0;
    if (i + 1 < n) d(i, i + 1) = d(i + 1, i) = 1.0;
  }
  return d;
}

void PipelineSpec::validate(int order) const {
  if (difference_mode < 0 || difference_mode >= order)
    throw std::invalid_argument("pipeline: difference mode " + std::to_string(difference_mode + 1) +
                                " out of range for an order-" + std::to_string(order) + " tensor");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("pipeline: rho must lie in (0, 1)");
  if (!(trim_fraction >= 0.0 && trim_fraction < 1.0))
    throw std::invalid_argument("pipeline: trim fraction must lie in [0, 1)");
  for (int k : sparse_modes)
    if (k < 0 || k >= order) throw std::invalid_argument("pipeline: sparse mode out of range");
}

std::vector<Index> cap_ranks(std::vector<Index> ranks) {
  // Shrinking one rank can only tighten the others, so iterate to a fixed point.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = 0; k < ranks.size(); ++k) {
      Index rest = 1;
      for (std::size_t j = 0; j < ranks.size(); ++j)
        if (j != k) rest *= ranks[j];
      if (ranks[k] > rest) {
        ranks[k] = rest;
        changed = true;
      }
    }
  }
  return ranks;
}

PipelineResult run_pipeline(const Tensor& y, const PipelineSpec& spec) {
  spec.validate(y.order());
  Tensor input = y;
  if (spec.pre == Preprocess::kLog) {
    if (!(input.data().minCoeff() > 0.0)) throw DataError("pipeline: --pre log needs strictly positive entries");
    input.data() = input.data().array().log().matrix();
  }
  const int m = spec.difference_mode;
  const Eigen::MatrixXd d = make_secondary_difference(input.dim(m));

  PipelineResult out;
  out.transformed = mode_product(input, m, d);
  const auto sigma = estimate_sigma_trimmed(out.transformed, spec.trim_fraction);
  if (sigma.degenerate) throw std::domain_error("pipeline: trimmed noise estimate is zero");
  out.sigma_hat = sigma.sigma;
  out.cpv_ranks = estimate_ranks_cpv(out.transformed, spec.rho);
  out.ranks = cap_ranks(out.cpv_ranks);
  for (int k = 0; k < out.transformed.order(); ++k) out.singular_values.push_back(singular_values(matricize(out.transformed, k)));

  StatSvdConfig cfg;
  cfg.ranks = out.ranks;
  cfg.sigma = out.sigma_hat;
  cfg.sparse_modes = spec.sparse_modes;
  cfg.t_max = spec.t_max;
  cfg.eps_tol = spec.eps_tol;
  out.fit = fit(out.transformed, cfg);

  const Eigen::MatrixXd& u_tilde = out.fit.loadings[static_cast<std::size_t>(m)].matrix();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(d);
  out.back_raw = lu.solve(u_tilde);
  const double residual = (d * out.back_raw - u_tilde).norm();
  if (!out.back_raw.allFinite() || residual > 1e-8 * std::max(1.0, u_tilde.norm()))
    throw std::domain_error("pipeline: difference matrix solve failed");
  out.back_orthonormal = qr_orthonormalize(out.back_raw);
  return out;
}

void write_pipeline_outputs(const PipelineResult& result, const PipelineSpec& spec,
                            const std::filesystem::path& out_dir) {
  nlohmann::json fit_json = fit_to_json(result.fit);
  write_file_atomic(out_dir / "fit.json", fit_json.dump(2) + "\n");

  nlohmann::json summary{{"difference_mode", spec.difference_mode + 1},
                         {"preprocess", spec.pre == Preprocess::kLog ? "log" : "none"},
                         {"rho", spec.rho},
                         {"trim_fraction", spec.trim_fraction},
                         {"sigma_hat", result.sigma_hat},
                         {"cpv_ranks", result.cpv_ranks},
                         {"ranks", result.ranks},
                         {"iterations_run", result.fit.iterations_run},
                         {"converged", result.fit.converged},
                         {"degenerate", result.fit.degenerate}};
  write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");

  for (std::size_t k = 0; k < result.fit.loadings.size(); ++k) {
    write_file_atomic(out_dir / ("loadings_mode" + std::to_string(k + 1) + ".csv"),
                      matrix_csv(result.fit.loadings[k].matrix()));
    std::string sv = "index,singular_value\n";
    for (Index i = 0; i < result.singular_values[k].size(); ++i)
      sv += std::to_string(i + 1) + ',' + num(result.singular_values[k][i]) + '\n';
    write_file_atomic(out_dir / ("singular_values_mode" + std::to_string(k + 1) + ".csv"), sv);
  }
  write_file_atomic(out_dir / "back_transform_raw.csv", matrix_csv(result.back_raw));
  write_file_atomic(out_dir / "back_transform_orthonormal.csv", matrix_csv(result.back_orthonormal.matrix()));

  std::string supports = "mode,row,stage\n";
  for (std::size_t k = 0; k < result.fit.supports.size(); ++k) {
    for (Index i : result.fit.supports[k].first) supports += std::to_string(k + 1) + ',' + std::to_string(i) + ",first\n";
    for (Index i : result.fit.supports[k].second)
      supports += std::to_string(k + 1) + ',' + std::to_string(i) + ",second\n";
  }
  write_file_atomic(out_dir / "supports.csv", supports);
}

SmokeTensor make_mortality_smoke(std::uint64_t seed, Shape shape, std::vector<Index> ranks, double lambda,
                                 double sigma) {
  if (shape.size() != 3 || ranks.size() != 3) throw std::invalid_argument("smoke tensor: order must be 3");
  const Index p0 = shape[0];
  if (p0 < 12) throw std::invalid_argument("smoke tensor: first mode needs at least 12 rows");
  SmokeTensor out;
  out.sigma = sigma;
  // Breaks in the age profile: infancy, the young-adult hump and the oldest ages.
  out.planted_support = {0, 1, p0 / 5, p0 / 5 + 1, p0 / 4, p0 - 2, p0 - 1};
  const Index s = static_cast<Index>(out.planted_support.size());
  if (ranks[0] > s) throw std::invalid_argument("smoke tensor: rank exceeds planted support");

  Rng rng(derive_seed(seed, StreamRole::kFrames, 0));
  Eigen::MatrixXd block(s, ranks[0]);
  for (Index i = 0; i < block.size(); ++i) block.data()[i] = rng.normal();
  const Eigen::MatrixXd q = qr_orthonormalize(block).matrix();
  out.sparse_loading = Eigen::MatrixXd::Zero(p0, ranks[0]);
  for (Index i = 0; i < s; ++i) out.sparse_loading.row(out.planted_support[static_cast<std::size_t>(i)]) = q.row(i);
  out.smooth_loading = make_secondary_difference(p0).partialPivLu().solve(out.sparse_loading);

  std::vector<Frame> frames{qr_orthonormalize(out.smooth_loading)};
  for (std::size_t k = 1; k < 3; ++k)
    frames.push_back(gen_sparse_frame(shape[k], ranks[k], shape[k], derive_seed(seed, StreamRole::kFrames, k)).frame);
  // Core chosen so that Y x_0 D = S x_0 W x_1 U_1 x_2 U_2 + noise has signal lambda.
  const Tensor core = gen_core(ranks, lambda, derive_seed(seed, StreamRole::kCore));
  Tensor x = mode_product(core, 0, out.smooth_loading);
  for (int k = 1; k < 3; ++k) x = mode_product(x, k, frames[static_cast<std::size_t>(k)].matrix());
  out.x = x;
  out.y = x;
  Rng noise(derive_seed(seed, StreamRole::kNoise));
  for (Index i = 0; i < out.y.size(); ++i) out.y.data()[i] += sigma * noise.normal();
  return out;
}

}  // namespace statsvd
