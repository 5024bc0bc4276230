#include "statsvd/serialize.hpp"

#include <stdexcept>

namespace statsvd {

using nlohmann::json;

json frame_to_json(const Frame& f) {
  const auto& m = f.matrix();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Frame frame_from_json(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 1 || cols < 1 || data.size() != static_cast<std::size_t>(rows * cols))
    throw std::invalid_argument("frame JSON: data length does not match rows x cols");
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[static_cast<std::size_t>(i * cols + j2)];
  return Frame(std::move(m));
}

json fit_to_json(const TuckerFit& fit) {
  json loadings = json::array();
  json shape = json::array();
  json ranks = json::array();
  for (const auto& f : fit.loadings) {
    loadings.push_back(frame_to_json(f));
    shape.push_back(f.rows());
    ranks.push_back(f.cols());
  }
  json supports = json::array();
  for (const auto& s : fit.supports) supports.push_back({{"first", s.first}, {"second", s.second}});
  std::vector<double> core(fit.core.data().data(), fit.core.data().data() + fit.core.size());
  return {{"shape", shape},
          {"ranks", ranks},
          {"loadings", loadings},
          {"supports", supports},
          {"initial_supports", fit.initial_supports},
          {"core", {{"shape", fit.core.shape()}, {"data", core}}},
          {"iterations_run", fit.iterations_run},
          {"converged", fit.converged},
          {"degenerate", fit.degenerate},
          {"t_max", fit.t_max},
          {"eps_tol", fit.eps_tol},
          {"trace", fit.trace}};
}

TuckerFit fit_from_json(const json& j) {
  TuckerFit fit;
  for (const auto& f : j.at("loadings")) fit.loadings.push_back(frame_from_json(f));
  for (const auto& s : j.at("supports"))
    fit.supports.push_back({s.at("first").get<IndexSet>(), s.at("second").get<IndexSet>()});
  fit.initial_supports = j.at("initial_supports").get<std::vector<IndexSet>>();
  const auto core_shape = j.at("core").at("shape").get<Shape>();
  const auto core = j.at("core").at("data").get<std::vector<double>>();
  fit.core = Tensor(core_shape, Eigen::Map<const Eigen::VectorXd>(core.data(), static_cast<Index>(core.size())));
  fit.iterations_run = j.at("iterations_run").get<int>();
  fit.converged = j.at("converged").get<bool>();
  fit.degenerate = j.at("degenerate").get<bool>();
  fit.t_max = j.at("t_max").get<int>();
  fit.eps_tol = j.at("eps_tol").get<double>();
  fit.trace = j.at("trace").get<std::vector<std::vector<double>>>();
  fit.denoised = expand(fit.core, fit.loadings);
  return fit;
}

}  // namespace statsvd
