#include "statsvd/simbench.hpp"

#include "statsvd/baselines.hpp"
#include "statsvd/hyperparam.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace statsvd {

namespace {

using json = nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join_dims(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string csv_safe(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

SummaryStats summarize(const std::vector<double>& xs) {
  SummaryStats st;
  if (xs.empty()) {
    st.mean = std::numeric_limits<double>::quiet_NaN();
    st.sd = st.mean;
    return st;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  st.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - st.mean) * (x - st.mean);
    st.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return st;
}

json stats_json(const SummaryStats& s) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"mean", num(s.mean)}, {"sd", num(s.sd)}};
}

std::vector<Index> dims_from_json(const json& j, std::size_t order, const char* key) {
  std::vector<Index> out;
  if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<Index>());
  } else {
    out.assign(order, j.get<Index>());
  }
  if (out.size() != order)
    throw std::invalid_argument(std::string("grid spec: '") + key + "' has " + std::to_string(out.size()) +
                                " entries, expected " + std::to_string(order));
  return out;
}

}  // namespace

std::string to_string(NoiseFamily f) { return f == NoiseFamily::kGaussian ? "gaussian" : "uniform"; }

NoiseFamily noise_family_from_string(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::kGaussian;
  if (name == "uniform") return NoiseFamily::kUniform;
  throw std::invalid_argument("unknown noise family '" + name + "' (expected gaussian or uniform)");
}

void SimParams::validate() const {
  const std::size_t d = p.size();
  if (d < 2) throw std::invalid_argument("simulation: tensor order must be at least 2");
  if (r.size() != d || s.size() != d)
    throw std::invalid_argument("simulation: p, r and s must have the same number of modes");
  for (std::size_t k = 0; k < d; ++k) {
    Index rest = 1;
    for (std::size_t j = 0; j < d; ++j)
      if (j != k) rest *= r[j];
    if (p[k] < 1 || s[k] < 1 || s[k] > p[k] || r[k] < 1 || r[k] > s[k] || r[k] > rest)
      throw std::invalid_argument("simulation: mode " + std::to_string(k) + " needs 1 <= r <= s <= p and r <= " +
                                  "product of the other ranks (p=" + std::to_string(p[k]) +
                                  ", s=" + std::to_string(s[k]) + ", r=" + std::to_string(r[k]) + ")");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("simulation: lambda must be >= 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("simulation: sigma must be >= 0");
  for (int k : sparse_modes)
    if (k < 0 || k >= static_cast<int>(d))
      throw std::invalid_argument("simulation: sparse mode " + std::to_string(k) + " out of range");
}

Tensor gen_core(const std::vector<Index>& r, double lambda, std::uint64_t seed) {
  Rng rng(seed);
  Tensor s{Shape(r.begin(), r.end())};
  for (Index i = 0; i < s.size(); ++i) s.data()[i] = rng.normal();
  double smallest = std::numeric_limits<double>::infinity();
  for (int k = 0; k < s.order(); ++k) {
    const Eigen::VectorXd sv = singular_values(matricize(s, k));
    smallest = std::min(smallest, sv[r[static_cast<std::size_t>(k)] - 1]);
  }
  if (!(smallest > 0.0)) throw std::runtime_error("gen_core: drawn core is rank deficient");
  return s * (lambda / smallest);
}

SparseFrame gen_sparse_frame(Index p, Index r, Index s, std::uint64_t seed) {
  if (!(1 <= r && r <= s && s <= p)) throw std::invalid_argument("gen_sparse_frame: need 1 <= r <= s <= p");
  Rng pick(derive_seed(seed, StreamRole::kSupports));
  std::vector<Index> perm(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) perm[static_cast<std::size_t>(i)] = i;
  // Partial Fisher-Yates: the first s entries are a uniform s-subset.
  for (Index i = 0; i < s; ++i) {
    const auto j = i + static_cast<Index>(pick.below(static_cast<std::uint64_t>(p - i)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  IndexSet support(perm.begin(), perm.begin() + s);
  std::sort(support.begin(), support.end());

  Rng gauss(derive_seed(seed, StreamRole::kFrames));
  Eigen::MatrixXd g(s, r);
  for (Index i = 0; i < s; ++i)
    for (Index j = 0; j < r; ++j) g(i, j) = gauss.normal();
  auto qr = qr_thin(g);
  for (Index j = 0; j < r; ++j)
    if (qr.r(j, j) < 0.0) qr.q.col(j) *= -1.0;

  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(p, r);
  for (Index i = 0; i < s; ++i) u.row(support[static_cast<std::size_t>(i)]) = qr.q.row(i);
  return {Frame(std::move(u)), std::move(support)};
}

SimInstance gen_instance(const SimParams& params, std::uint64_t seed) {
  params.validate();
  SimInstance inst;
  inst.params = params;
  inst.seed = seed;
  inst.core = gen_core(params.r, params.lambda, derive_seed(seed, StreamRole::kCore));
  for (std::size_t k = 0; k < params.p.size(); ++k) {
    auto f = gen_sparse_frame(params.p[k], params.r[k], params.s[k], derive_seed(seed, StreamRole::kFrames, k));
    inst.loadings.push_back(std::move(f.frame));
    inst.supports.push_back(std::move(f.support));
  }
  inst.x = expand(inst.core, inst.loadings);
  inst.y = inst.x;
  if (params.sigma > 0.0) {
    Rng rng(derive_seed(seed, StreamRole::kNoise));
    const double half_width = params.sigma * std::sqrt(3.0);
    for (Index i = 0; i < inst.y.size(); ++i) {
      const double z = params.noise == NoiseFamily::kGaussian ? params.sigma * rng.normal()
                                                              : rng.uniform(-half_width, half_width);
      inst.y.data()[i] += z;
    }
  }
  return inst;
}

double WeakRowParams::resolved_weak_energy() const {
  if (weak_energy) return *weak_energy;
  const double total = static_cast<double>(p0 * p_dense * p_dense);
  const double r_rest = static_cast<double>(r_dense * r_dense);
  const double extra_double = chi_square_level(sigma, static_cast<double>(r0), std::log(total)) -
                              sigma * sigma * static_cast<double>(r0);
  const double extra_single =
      chi_square_level(sigma, r_rest, std::log(static_cast<double>(p0))) - sigma * sigma * r_rest;
  return 0.5 * (extra_double + extra_single);
}

SimInstance gen_weak_row_instance(const WeakRowParams& params, std::uint64_t seed) {
  const Index r0 = params.r0, rd = params.r_dense, s = params.s;
  if (!(r0 == 2 && s - r0 >= 3 && s <= params.p0 && rd <= params.p_dense && rd <= r0 * rd))
    throw std::invalid_argument("weak-row instance: inconsistent sizes");
  const double weak = params.resolved_weak_energy();
  const double b2 = weak * static_cast<double>(s - r0) / (static_cast<double>(r0) * params.lambda * params.lambda);
  if (!(b2 > 0.0 && b2 < 1.0)) throw std::invalid_argument("weak-row instance: lambda too small for weak_energy");
  const double a = std::sqrt(1.0 - b2), b = std::sqrt(b2);

  SimInstance inst;
  inst.params.p = {params.p0, params.p_dense, params.p_dense};
  inst.params.r = {r0, rd, rd};
  inst.params.s = {s, params.p_dense, params.p_dense};
  inst.params.lambda = params.lambda;
  inst.params.sigma = params.sigma;
  inst.params.sparse_modes = {0};
  inst.seed = seed;

  // Core: mode-0 unfolding lambda * Q.
  Rng core_rng(derive_seed(seed, StreamRole::kCore));
  Eigen::MatrixXd g(rd * rd, r0);
  for (Index i = 0; i < g.size(); ++i) g.data()[i] = core_rng.normal();
  const Eigen::MatrixXd q = qr_orthonormalize(g).matrix().transpose();
  inst.core = fold(params.lambda * q, 0, Shape{r0, rd, rd});

  // Mode 0: strong rows a * I, weak rows b * W with W's rows on a circle.
  // Columns of W are orthonormal because the angles are equally spaced.
  const auto frame0 = gen_sparse_frame(params.p0, r0, s, derive_seed(seed, StreamRole::kFrames, 0));
  const IndexSet& support = frame0.support;
  const Index n_weak = s - r0;
  const double pi = std::acos(-1.0);
  Eigen::MatrixXd block(s, r0);
  block.setZero();
  block.topRows(r0) = a * Eigen::MatrixXd::Identity(r0, r0);
  Eigen::MatrixXd w(n_weak, r0);
  w.setZero();
  for (Index i = 0; i < n_weak; ++i) {
    const double theta = 2.0 * pi * static_cast<double>(i) / static_cast<double>(n_weak);
    w(i, 0) = std::cos(theta);
    w(i, 1) = std::sin(theta);
  }
  w *= std::sqrt(2.0 / static_cast<double>(n_weak));
  block.bottomRows(n_weak) = b * w;
  // Random rotation on the right keeps the row norms and spreads the strong rows.
  Rng rot_rng(derive_seed(seed, StreamRole::kFrames, 100));
  Eigen::MatrixXd h(r0, r0);
  for (Index i = 0; i < h.size(); ++i) h.data()[i] = rot_rng.normal();
  block = block * qr_orthonormalize(h).matrix();
  Eigen::MatrixXd u0 = Eigen::MatrixXd::Zero(params.p0, r0);
  for (Index i = 0; i < s; ++i) u0.row(support[static_cast<std::size_t>(i)]) = block.row(i);
  inst.loadings.push_back(Frame(std::move(u0)));
  inst.supports.push_back(support);
  for (std::size_t k = 1; k < 3; ++k) {
    auto f = gen_sparse_frame(params.p_dense, rd, params.p_dense, derive_seed(seed, StreamRole::kFrames, k));
    inst.loadings.push_back(std::move(f.frame));
    inst.supports.push_back(std::move(f.support));
  }
  inst.x = expand(inst.core, inst.loadings);
  inst.y = inst.x;
  Rng noise(derive_seed(seed, StreamRole::kNoise));
  for (Index i = 0; i < inst.y.size(); ++i) inst.y.data()[i] += params.sigma * noise.normal();
  return inst;
}

Score score(std::span<const Frame> loadings, const Tensor& x_hat, std::span<const Frame> truth_loadings,
            const Tensor& truth_x) {
  if (loadings.size() != truth_loadings.size()) throw std::invalid_argument("score: mode count mismatch");
  Score out;
  double total = 0.0;
  for (std::size_t k = 0; k < loadings.size(); ++k) {
    out.per_mode.push_back(sin_theta_fro(loadings[k], truth_loadings[k]));
    total += out.per_mode.back();
  }
  out.l2_subspace = total / static_cast<double>(loadings.size());
  out.l_recovery = (x_hat - truth_x).norm();
  return out;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kStatSvd: return "stat_svd";
    case Method::kHosvd: return "hosvd";
    case Method::kHooi: return "hooi";
    case Method::kSHosvd: return "s_hosvd";
    case Method::kSHooi: return "s_hooi";
    case Method::kStatSvdSingle: return "stat_svd_single";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : all_methods())
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown method '" + name + "'");
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::kStatSvd, Method::kHosvd,  Method::kHooi,
                                           Method::kSHosvd,  Method::kSHooi, Method::kStatSvdSingle};
  return methods;
}

MethodOutput run_method(Method m, const Tensor& y, const std::vector<Index>& ranks,
                        const std::vector<int>& sparse_modes, double sigma) {
  MethodOutput out;
  if (m == Method::kStatSvd || m == Method::kStatSvdSingle) {
    StatSvdConfig cfg;
    cfg.ranks = ranks;
    cfg.sigma = sigma;
    cfg.sparse_modes = sparse_modes;
    TuckerFit f = m == Method::kStatSvd ? fit(y, cfg) : stat_svd_single_threshold(y, cfg);
    out.loadings = std::move(f.loadings);
    out.x_hat = std::move(f.denoised);
    out.degenerate = f.degenerate;
    return out;
  }
  TuckerDecomposition dec;
  BaselineConfig cfg{ranks, sparse_modes, sigma};
  switch (m) {
    case Method::kHosvd: dec = hosvd(y, ranks); break;
    case Method::kHooi: dec = hooi(y, ranks); break;
    case Method::kSHosvd: dec = s_hosvd(y, cfg); break;
    default: dec = s_hooi(y, cfg); break;
  }
  out.x_hat = expand(dec.core, dec.loadings);
  out.loadings = std::move(dec.loadings);
  out.degenerate = dec.degenerate;
  return out;
}

SimParams scale_params(const SimParams& params, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw std::invalid_argument("scale factor must be positive");
  if (factor == 1.0) return params;
  SimParams out = params;
  double sum_s = 0.0, sum_s_new = 0.0, log_p = 0.0, log_p_new = 0.0;
  for (std::size_t k = 0; k < params.p.size(); ++k) {
    const bool dense = params.s[k] >= params.p[k];
    out.p[k] = std::max<Index>(1, std::lround(static_cast<double>(params.p[k]) * factor));
    out.s[k] = dense ? out.p[k]
                     : std::clamp<Index>(std::lround(static_cast<double>(params.s[k]) * factor), 1, out.p[k]);
    out.r[k] = std::clamp<Index>(std::lround(static_cast<double>(params.r[k]) * std::sqrt(factor)), 1, out.s[k]);
    sum_s += static_cast<double>(params.s[k]);
    sum_s_new += static_cast<double>(out.s[k]);
    log_p += std::log(static_cast<double>(params.p[k]));
    log_p_new += std::log(static_cast<double>(out.p[k]));
  }
  if (log_p > 0.0 && log_p_new > 0.0) out.lambda = params.lambda * std::sqrt(sum_s_new * log_p_new / (sum_s * log_p));
  return out;
}

std::vector<SimParams> GridSpec::cells() const {
  std::vector<SimParams> out;
  const std::vector<double> values = sweep_axis.empty() ? std::vector<double>{0.0} : sweep_values;
  if (!sweep_axis.empty() && values.empty()) throw std::invalid_argument("grid spec: sweep has no values");
  for (double v : values) {
    SimParams c = base;
    if (sweep_axis == "sigma") {
      c.sigma = v;
    } else if (sweep_axis == "lambda") {
      c.lambda = v;
    } else if (sweep_axis == "rank") {
      for (auto& r : c.r) r = static_cast<Index>(std::lround(v));
    } else if (sweep_axis == "p") {
      for (std::size_t k = 0; k < c.p.size(); ++k) {
        const bool dense = c.s[k] >= c.p[k];
        c.p[k] = static_cast<Index>(std::lround(v));
        if (dense) c.s[k] = c.p[k];
      }
    } else if (!sweep_axis.empty()) {
      throw std::invalid_argument("grid spec: unknown sweep axis '" + sweep_axis + "'");
    }
    c = scale_params(c, scale);
    c.validate();
    out.push_back(std::move(c));
  }
  return out;
}

std::uint64_t GridSpec::instance_seed(std::size_t cell, int rep) const {
  return derive_seed(derive_seed(seed, StreamRole::kReplication, cell), StreamRole::kReplication,
                     static_cast<std::uint64_t>(rep));
}

const CellSummary& ExperimentReport::summary(std::size_t cell, Method m) const {
  const std::string name = to_string(m);
  for (const auto& s : summaries)
    if (s.cell == cell && s.method == name) return s;
  throw std::out_of_range("no summary for cell " + std::to_string(cell) + " method " + name);
}

void ExperimentReport::write_csv(std::ostream& os) const {
  os << kReportCsvHeader << '\n';
  for (const auto& row : rows) {
    os << row.method << ',' << join_dims(row.params.p) << ',' << join_dims(row.params.r) << ','
       << join_dims(row.params.s) << ',' << format_double(row.params.lambda) << ','
       << format_double(row.params.sigma) << ',' << to_string(row.params.noise) << ',' << row.seed << ','
       << format_double(row.l2_subspace) << ',' << format_double(row.l_recovery) << ','
       << format_fixed(row.wall_time_s, 6) << ',' << csv_safe(row.flags) << '\n';
  }
}

std::string ExperimentReport::summary_json() const {
  json cells = json::array();
  for (const auto& s : summaries) {
    json per_mode = json::array();
    for (const auto& m : s.per_mode) per_mode.push_back(stats_json(m));
    cells.push_back({{"cell", s.cell},
                     {"method", s.method},
                     {"p", s.params.p},
                     {"r", s.params.r},
                     {"s", s.params.s},
                     {"lambda", s.params.lambda},
                     {"sigma", s.params.sigma},
                     {"noise", to_string(s.params.noise)},
                     {"replications", s.count},
                     {"failures", s.failures},
                     {"l2_subspace", stats_json(s.l2_subspace)},
                     {"l_recovery", stats_json(s.l_recovery)},
                     {"wall_time_s", stats_json(s.wall_time_s)},
                     {"sin_theta_per_mode", per_mode}});
  }
  return json{{"summaries", cells}}.dump(2) + "\n";
}

ExperimentReport run_grid(const GridSpec& spec) {
  if (spec.replications < 1) throw std::invalid_argument("grid spec: replications must be at least 1");
  if (spec.methods.empty()) throw std::invalid_argument("grid spec: no methods");
  const auto cells = spec.cells();
  ExperimentReport report;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<const ReportRow*>> by_cell;
  bool warmed_up = false;

  for (std::size_t c = 0; c < cells.size(); ++c) {
    const SimParams& params = cells[c];
    for (int rep = 0; rep < spec.replications; ++rep) {
      const std::uint64_t seed = spec.instance_seed(c, rep);
      const SimInstance inst = gen_instance(params, seed);
      std::string base_flags;
      double sigma = params.sigma;
      if (spec.sigma_source == SigmaSource::kMedian) {
        const auto est = estimate_sigma_median(inst.y);
        sigma = est.sigma;
        if (est.degenerate) {
          // More than half the entries are exactly zero (noiseless data).
          sigma = 1e-12 * std::max(1.0, inst.y.data().cwiseAbs().maxCoeff());
          base_flags = "sigma_fallback";
        }
      } else if (!(sigma > 0.0)) {
        sigma = 1e-12 * std::max(1.0, inst.y.data().cwiseAbs().maxCoeff());
        base_flags = "sigma_fallback";
      }

      if (spec.record_timing && !warmed_up) {
        for (Method m : spec.methods) {
          try {
            (void)run_method(m, inst.y, params.r, params.sparse_modes, sigma);
          } catch (const std::exception&) {
          }
        }
        warmed_up = true;
      }

      for (Method m : spec.methods) {
        ReportRow row;
        row.method = to_string(m);
        row.cell = c;
        row.params = params;
        row.seed = seed;
        row.replication = rep;
        std::string flags = base_flags;
        try {
          const auto start = std::chrono::steady_clock::now();
          MethodOutput out = run_method(m, inst.y, params.r, params.sparse_modes, sigma);
          const auto stop = std::chrono::steady_clock::now();
          if (spec.record_timing) row.wall_time_s = std::chrono::duration<double>(stop - start).count();
          const Score sc = score(out.loadings, out.x_hat, inst.loadings, inst.x);
          row.l2_subspace = sc.l2_subspace;
          row.l_recovery = sc.l_recovery;
          row.per_mode = sc.per_mode;
          if (out.degenerate) flags += flags.empty() ? "degenerate" : ";degenerate";
        } catch (const std::exception& e) {
          row.l2_subspace = std::numeric_limits<double>::quiet_NaN();
          row.l_recovery = row.l2_subspace;
          flags += (flags.empty() ? "error:" : ";error:") + std::string(e.what());
        }
        row.flags = std::move(flags);
        report.rows.push_back(std::move(row));
      }
    }
  }

  for (const auto& row : report.rows)
    by_cell[{row.cell, static_cast<std::size_t>(method_from_string(row.method))}].push_back(&row);
  for (const auto& [key, rows] : by_cell) {
    CellSummary s;
    s.cell = key.first;
    s.method = rows.front()->method;
    s.params = rows.front()->params;
    std::vector<double> l2, lr, tm;
    std::vector<std::vector<double>> modes(s.params.p.size());
    for (const ReportRow* r : rows) {
      ++s.count;
      if (std::isnan(r->l2_subspace)) {
        ++s.failures;
        continue;
      }
      l2.push_back(r->l2_subspace);
      lr.push_back(r->l_recovery);
      tm.push_back(r->wall_time_s);
      for (std::size_t k = 0; k < r->per_mode.size(); ++k) modes[k].push_back(r->per_mode[k]);
    }
    s.l2_subspace = summarize(l2);
    s.l_recovery = summarize(lr);
    s.wall_time_s = summarize(tm);
    for (const auto& m : modes) s.per_mode.push_back(summarize(m));
    report.summaries.push_back(std::move(s));
  }
  return report;
}

GridSpec grid_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("grid spec: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("grid spec: top level must be an object");
  try {
    GridSpec g;
    if (!j.contains("p")) throw std::invalid_argument("grid spec: 'p' is required");
    const std::size_t order = j["p"].is_array() ? j["p"].size() : j.value("order", std::size_t{3});
    g.base.p = dims_from_json(j["p"], order, "p");
    g.base.r = dims_from_json(j.at("r"), order, "r");
    g.base.s = j.contains("s") ? dims_from_json(j["s"], order, "s") : g.base.p;
    g.base.lambda = j.value("lambda", 1.0);
    g.base.sigma = j.value("sigma", 1.0);
    g.base.noise = noise_family_from_string(j.value("noise", std::string("gaussian")));
    if (j.contains("sparse_modes")) {
      for (int m : j["sparse_modes"].get<std::vector<int>>()) {
        if (m < 1 || m > static_cast<int>(order))
          throw std::invalid_argument("grid spec: sparse mode " + std::to_string(m) + " out of range 1.." +
                                      std::to_string(order));
        g.base.sparse_modes.push_back(m - 1);
      }
    } else {
      for (std::size_t k = 0; k < order; ++k)
        if (g.base.s[k] < g.base.p[k]) g.base.sparse_modes.push_back(static_cast<int>(k));
    }
    if (j.contains("sweep")) {
      const auto& sw = j["sweep"];
      g.sweep_axis = sw.at("axis").get<std::string>();
      g.sweep_values = sw.at("values").get<std::vector<double>>();
    }
    g.replications = j.value("replications", 1);
    g.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("methods")) {
      g.methods.clear();
      for (const auto& name : j["methods"].get<std::vector<std::string>>()) g.methods.push_back(method_from_string(name));
    }
    const std::string src = j.value("sigma_source", std::string("median"));
    if (src == "median") {
      g.sigma_source = SigmaSource::kMedian;
    } else if (src == "oracle") {
      g.sigma_source = SigmaSource::kOracle;
    } else {
      throw std::invalid_argument("grid spec: sigma_source must be median or oracle");
    }
    g.record_timing = j.value("record_timing", true);
    g.scale = j.value("scale", 1.0);
    (void)g.cells();
    return g;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("grid spec: ") + e.what());
  }
}

}  // namespace statsvd
