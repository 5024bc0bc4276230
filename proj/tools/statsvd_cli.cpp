// statsvd command-line tool: simulate, fit, estimate-params, pipeline, bench.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical degeneracy.

#include "statsvd/baselines.hpp"
#include "statsvd/hyperparam.hpp"
#include "statsvd/pipeline.hpp"
#include "statsvd/serialize.hpp"
#include "statsvd/simbench.hpp"
#include "statsvd/statsvd.hpp"
#include "statsvd/tns_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace statsvd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDegenerate = 3;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

long long parse_int(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw UsageError(what + ": '" + s + "' is not an integer");
  return v;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw UsageError(what + ": '" + s + "' is not a number");
  return v;
}

// "1,3" (1-based) -> {0, 2}
std::vector<int> parse_modes(const std::string& s, int order) {
  std::vector<int> out;
  for (const auto& item : split(s, ',')) {
    const long long m = parse_int(item, "--sparse-modes");
    if (m < 1 || m > order)
      throw UsageError("--sparse-modes: mode " + item + " out of range 1.." + std::to_string(order));
    out.push_back(static_cast<int>(m - 1));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Index> parse_ranks(const std::string& s, int order) {
  std::vector<Index> out;
  for (const auto& item : split(s, ',')) out.push_back(static_cast<Index>(parse_int(item, "--ranks")));
  if (out.size() == 1 && order > 1) out.assign(static_cast<std::size_t>(order), out[0]);
  if (static_cast<int>(out.size()) != order)
    throw UsageError("--ranks: expected " + std::to_string(order) + " values, got " + std::to_string(out.size()));
  return out;
}

std::string to_json_string(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string config;
  std::string out = ".";
  std::optional<double> scale;
  std::optional<std::uint64_t> seed;
  bool no_timing = false;
  bool emit_tensors = false;
};

int cmd_simulate(const SimulateOptions& o) {
  GridSpec spec;
  try {
    spec = grid_from_json(read_file(o.config));
    if (o.scale) spec.scale = *o.scale;
    if (o.seed) spec.seed = *o.seed;
    if (o.no_timing) spec.record_timing = false;
    (void)spec.cells();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const ExperimentReport report = run_grid(spec);
  std::ostringstream csv;
  report.write_csv(csv);
  const fs::path out(o.out);
  write_file_atomic(out / "report.csv", csv.str());
  write_file_atomic(out / "summary.json", report.summary_json());
  if (o.emit_tensors) {
    const SimInstance inst = gen_instance(spec.cells().front(), spec.instance_seed(0, 0));
    write_tns(out / "instance_y.tns", inst.y);
    write_tns(out / "instance_x.tns", inst.x);
  }
  std::cerr << "wrote " << report.rows.size() << " rows to " << (out / "report.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- fit

struct FitOptions {
  std::string input;
  std::string ranks = "auto";
  std::string sigma = "auto";
  std::string sparse_modes;
  std::optional<int> t_max;
  std::optional<double> eps_tol;
  std::string out = ".";
  bool write_denoised = false;
};

int cmd_fit(const FitOptions& o) {
  const Tensor y = read_tensor_file(o.input);
  const int d = y.order();
  StatSvdConfig cfg;
  cfg.sparse_modes = o.sparse_modes.empty() ? std::vector<int>{} : parse_modes(o.sparse_modes, d);
  cfg.t_max = o.t_max;
  cfg.eps_tol = o.eps_tol;

  nlohmann::json estimators;
  bool degenerate = false;
  if (o.sigma == "auto") {
    const auto est = estimate_sigma_median(y);
    if (est.degenerate) {
      std::cerr << "error: median noise estimate is zero; pass --sigma explicitly\n";
      return kExitDegenerate;
    }
    cfg.sigma = est.sigma;
    estimators["sigma"] = "median";
  } else {
    cfg.sigma = parse_double(o.sigma, "--sigma");
    if (!(cfg.sigma > 0.0)) throw UsageError("--sigma must be positive (got " + o.sigma + ")");
    estimators["sigma"] = "given";
  }
  if (o.ranks == "auto") {
    const auto est = estimate_ranks_spectral(y, cfg.sigma, cfg.sparse_modes);
    cfg.ranks = cap_ranks(est.ranks);
    degenerate = est.any_fallback();
    estimators["ranks"] = "spectral";
  } else {
    cfg.ranks = parse_ranks(o.ranks, d);
    estimators["ranks"] = "given";
  }
  try {
    cfg.validate(y.shape());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const TuckerFit result = fit(y, cfg);
  degenerate = degenerate || result.degenerate;
  nlohmann::json j = fit_to_json(result);
  j["sigma"] = cfg.sigma;
  j["sparse_modes"] = nlohmann::json::array();
  for (int k : cfg.sparse_modes) j["sparse_modes"].push_back(k + 1);
  j["estimators"] = estimators;
  const fs::path out(o.out);
  write_file_atomic(out / "fit.json", to_json_string(j));
  if (o.write_denoised) write_tns(out / "denoised.tns", result.denoised);
  std::cerr << "fit: " << result.iterations_run << " sweeps, converged=" << (result.converged ? "yes" : "no")
            << ", sigma=" << cfg.sigma << "\n";
  if (degenerate) {
    std::cerr << "warning: degenerate step encountered (see fit.json)\n";
    return kExitDegenerate;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- estimate-params

struct EstimateOptions {
  std::string input;
  std::string sparse_modes;
  std::string out;
};

int cmd_estimate(const EstimateOptions& o) {
  const Tensor y = read_tensor_file(o.input);
  const auto modes = o.sparse_modes.empty() ? std::vector<int>{} : parse_modes(o.sparse_modes, y.order());
  const HyperEstimates est = estimate_hyperparameters(y, modes);
  nlohmann::json j{{"sigma_hat", est.sigma_hat},
                   {"ranks_hat", est.ranks_hat},
                   {"sigma_method", est.sigma_method},
                   {"rank_method", est.rank_method},
                   {"degenerate", est.degenerate},
                   {"support_sizes", est.spectral.support_sizes},
                   {"rank_thresholds", est.spectral.thresholds}};
  if (o.out.empty()) {
    std::cout << to_json_string(j);
  } else {
    write_file_atomic(fs::path(o.out) / "estimates.json", to_json_string(j));
  }
  return est.degenerate ? kExitDegenerate : kExitOk;
}

// ---------------------------------------------------------------- pipeline

struct PipelineOptions {
  std::string input;
  bool smoke = false;
  std::uint64_t seed = 1;
  int difference_mode = 1;
  double rho = 0.5;
  double trim = 0.15;
  std::string sparse_modes = "1";
  std::string pre = "none";
  std::optional<int> t_max;
  std::optional<double> eps_tol;
  std::string out = ".";
};

int cmd_pipeline(const PipelineOptions& o) {
  Tensor y;
  if (o.smoke) {
    if (!o.input.empty()) throw UsageError("pipeline: give either an input file or --smoke, not both");
    y = make_mortality_smoke(o.seed).y;
  } else {
    if (o.input.empty()) throw UsageError("pipeline: an input file (.tns or long-format .csv) is required");
    y = read_tensor_file(o.input);
  }
  PipelineSpec spec;
  spec.difference_mode = o.difference_mode - 1;
  spec.rho = o.rho;
  spec.trim_fraction = o.trim;
  spec.sparse_modes = parse_modes(o.sparse_modes, y.order());
  if (o.pre == "log") {
    spec.pre = Preprocess::kLog;
  } else if (o.pre != "none") {
    throw UsageError("--pre must be none or log");
  }
  spec.t_max = o.t_max;
  spec.eps_tol = o.eps_tol;
  try {
    spec.validate(y.order());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const PipelineResult result = run_pipeline(y, spec);
  write_pipeline_outputs(result, spec, o.out);
  std::cerr << "pipeline: sigma_hat=" << result.sigma_hat << " ranks=" << shape_string(result.ranks) << "\n";
  return result.fit.degenerate ? kExitDegenerate : kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchOptions {
  std::string config;
  double scale = 1.0;
  std::uint64_t seed = 1;
  int runs = 5;
  std::string out = ".";
};

int cmd_bench(const BenchOptions& o) {
  if (o.runs < 1) throw UsageError("--runs must be at least 1");
  GridSpec spec;
  if (!o.config.empty()) {
    try {
      spec = grid_from_json(read_file(o.config));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else {
    spec.base.p = {110, 110, 110};
    spec.base.s = {10, 10, 10};
    spec.base.r = {5, 5, 5};
    spec.base.lambda = 70.0;
    spec.base.sigma = 1.0;
    spec.base.sparse_modes = {0, 1, 2};
    spec.methods = {Method::kStatSvd, Method::kHosvd, Method::kHooi, Method::kSHosvd, Method::kSHooi};
  }
  spec.scale = o.scale;
  spec.seed = o.seed;
  SimParams params;
  try {
    params = spec.cells().front();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const SimInstance inst = gen_instance(params, spec.instance_seed(0, 0));
  const double sigma_hat = estimate_sigma_median(inst.y).sigma;

  std::string csv = "method,run,wall_time_s\n";
  nlohmann::json medians;
  for (Method m : spec.methods) {
    (void)run_method(m, inst.y, params.r, params.sparse_modes, sigma_hat);  // warm-up
    std::vector<double> times;
    for (int run = 0; run < o.runs; ++run) {
      const auto start = std::chrono::steady_clock::now();
      (void)run_method(m, inst.y, params.r, params.sparse_modes, sigma_hat);
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      csv += to_string(m) + ',' + std::to_string(run) + ',' + std::to_string(times.back()) + '\n';
    }
    std::sort(times.begin(), times.end());
    const double median = times.size() % 2 ? times[times.size() / 2]
                                            : 0.5 * (times[times.size() / 2 - 1] + times[times.size() / 2]);
    medians[to_string(m)] = median;
    std::cout << to_string(m) << " median " << median << " s\n";
  }
  const fs::path out(o.out);
  write_file_atomic(out / "bench.csv", csv);
  write_file_atomic(out / "bench.json",
                    to_json_string({{"p", params.p}, {"r", params.r}, {"s", params.s}, {"lambda", params.lambda},
                                    {"sigma", params.sigma}, {"runs", o.runs}, {"median_wall_time_s", medians}}));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse tensor SVD: STAT-SVD fitting, simulation and benchmarking"};
  app.require_subcommand(1);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation grid described by a JSON file");
  simulate->add_option("config", sim.config, "Grid spec (JSON)")->required();
  simulate->add_option("--out", sim.out, "Output directory");
  simulate->add_option("--scale", sim.scale, "Shrink p, s, r (lambda rescaled) by this factor");
  simulate->add_option("--seed", sim.seed, "Base seed (overrides the spec)");
  simulate->add_flag("--no-timing", sim.no_timing, "Record zero wall times (byte-reproducible CSV)");
  simulate->add_flag("--emit-tensors", sim.emit_tensors, "Also write the first instance as .tns");

  FitOptions fo;
  auto* fitcmd = app.add_subcommand("fit", "Fit STAT-SVD to a tensor file");
  fitcmd->add_option("input", fo.input, "Tensor (.tns or long-format .csv)")->required();
  fitcmd->add_option("--ranks", fo.ranks, "r1,r2,... or auto");
  fitcmd->add_option("--sigma", fo.sigma, "Noise level or auto");
  fitcmd->add_option("--sparse-modes", fo.sparse_modes, "Sparse modes, 1-based, e.g. 1,3");
  fitcmd->add_option("--tmax", fo.t_max, "Maximum number of sweeps");
  fitcmd->add_option("--eps-tol", fo.eps_tol, "Convergence tolerance");
  fitcmd->add_option("--out", fo.out, "Output directory");
  fitcmd->add_flag("--denoised", fo.write_denoised, "Also write denoised.tns");

  EstimateOptions eo;
  auto* estimate = app.add_subcommand("estimate-params", "Estimate sigma and Tucker ranks");
  estimate->add_option("input", eo.input, "Tensor (.tns or long-format .csv)")->required();
  estimate->add_option("--sparse-modes", eo.sparse_modes, "Sparse modes, 1-based");
  estimate->add_option("--out", eo.out, "Output directory (default: print to stdout)");

  PipelineOptions po;
  auto* pipeline = app.add_subcommand("pipeline", "Difference, estimate, fit and back-transform longitudinal data");
  pipeline->add_option("input", po.input, "Tensor (.tns or long-format .csv)");
  pipeline->add_flag("--smoke", po.smoke, "Use the built-in synthetic mortality-shaped tensor");
  pipeline->add_option("--seed", po.seed, "Seed for --smoke");
  pipeline->add_option("--difference-mode", po.difference_mode, "Mode (1-based) to apply the second difference to");
  pipeline->add_option("--rho", po.rho, "Cumulative percentage of variance for rank selection");
  pipeline->add_option("--trim", po.trim, "Fraction of largest |entries| dropped for the noise estimate");
  pipeline->add_option("--sparse-modes", po.sparse_modes, "Sparse modes, 1-based");
  pipeline->add_option("--pre", po.pre, "Preprocessing: none or log");
  pipeline->add_option("--tmax", po.t_max, "Maximum number of sweeps");
  pipeline->add_option("--eps-tol", po.eps_tol, "Convergence tolerance");
  pipeline->add_option("--out", po.out, "Output directory");

  BenchOptions bo;
  auto* bench = app.add_subcommand("bench", "Time the methods on one instance (medians over runs)");
  bench->add_option("config", bo.config, "Optional grid spec (JSON); first cell is used");
  bench->add_option("--scale", bo.scale, "Shrink factor");
  bench->add_option("--seed", bo.seed, "Seed");
  bench->add_option("--runs", bo.runs, "Timed runs per method");
  bench->add_option("--out", bo.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*fitcmd) return cmd_fit(fo);
    if (*estimate) return cmd_estimate(eo);
    if (*pipeline) return cmd_pipeline(po);
    if (*bench) return cmd_bench(bo);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
