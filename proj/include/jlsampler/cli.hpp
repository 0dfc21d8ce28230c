// Copyright 2026 The jlsampler Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command-line front end. Each subcommand reads its parameters from an
// optional JSON config (`--config`, with a "command" field) and from flags;
// flags win. Everything is validated before any computation or output.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure or
// non-convergence, 4 I/O error.

#ifndef JLSAMPLER_CLI_HPP
#define JLSAMPLER_CLI_HPP

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "jlsampler/core.hpp"
#include "jlsampler/counterexample.hpp"
#include "jlsampler/errors.hpp"
#include "jlsampler/io.hpp"
#include "jlsampler/mcsim.hpp"
#include "jlsampler/objective.hpp"
#include "jlsampler/optimizer.hpp"

namespace jlsampler::cli {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kOther = 1, kValidation = 2, kNumerical = 3, kIo = 4 };

enum class Kind { integer, real, text, reals, integers };

struct OptionSpec {
  std::string key;  // JSON key; the flag is --key with '_' replaced by '-'
  Kind kind;
  std::string help;
};

/// Parameter bag for one subcommand: config values overlaid with flags.
class Params {
 public:
  explicit Params(json values) : values_(std::move(values)) {}

  bool has(const std::string& key) const {
    return values_.contains(key) && !values_[key].is_null();
  }

  long long integer(const std::string& key, std::optional<long long> fallback = {}) const {
    if (!has(key)) return require(key, fallback);
    const json& v = values_[key];
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>())))
      return static_cast<long long>(v.get<double>());
    throw ParameterError("'" + key + "' must be an integer");
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = values_[key];
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    const long long s = integer(key);
    if (s < 0) throw ParameterError("'" + key + "' must be nonnegative");
    return static_cast<std::uint64_t>(s);
  }

  double real(const std::string& key, std::optional<double> fallback = {}) const {
    if (!has(key)) return require(key, fallback);
    const json& v = values_[key];
    if (!v.is_number()) throw ParameterError("'" + key + "' must be a number");
    return v.get<double>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = {}) const {
    if (!has(key)) return require(key, fallback);
    const json& v = values_[key];
    if (!v.is_string()) throw ParameterError("'" + key + "' must be a string");
    return v.get<std::string>();
  }

  std::vector<double> reals(const std::string& key,
                            std::optional<std::vector<double>> fallback = {}) const {
    if (!has(key)) return require(key, fallback);
    const json& v = values_[key];
    if (!v.is_array()) throw ParameterError("'" + key + "' must be a list of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ParameterError("'" + key + "' must be a list of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<long long> integers(const std::string& key,
                                  std::optional<std::vector<long long>> fallback = {}) const {
    if (!has(key)) return require(key, fallback);
    const json& v = values_[key];
    if (!v.is_array()) throw ParameterError("'" + key + "' must be a list of integers");
    std::vector<long long> out;
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw ParameterError("'" + key + "' must be a list of integers");
      out.push_back(e.get<long long>());
    }
    return out;
  }

 private:
  template <class T>
  static T require_impl(const std::string& key, const std::optional<T>& fallback) {
    if (!fallback) throw ParameterError("missing required parameter '" + key + "'");
    return *fallback;
  }
  template <class T>
  T require(const std::string& key, const std::optional<T>& fallback) const {
    return require_impl(key, fallback);
  }

  json values_;
};

namespace detail {

inline std::string flag_name(const std::string& key) {
  std::string s = key;
  for (char& c : s)
    if (c == '_') c = '-';
  return "--" + s;
}

inline json convert(const std::string& raw, Kind kind, const std::string& key) {
  auto number = [&](const std::string& s) -> json {
    try {
      std::size_t used = 0;
      if (kind == Kind::integer || kind == Kind::integers) {
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument("");
        return v;
      }
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ParameterError("bad value '" + s + "' for " + flag_name(key));
    }
  };
  switch (kind) {
    case Kind::text: return raw;
    case Kind::integer:
    case Kind::real: return number(raw);
    default: {
      json arr = json::array();
      std::stringstream ss(raw);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) arr.push_back(number(item));
      return arr;
    }
  }
}

inline void ensure_parent_writable(const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path parent = fs::absolute(fs::path(path)).parent_path();
  std::error_code ec;
  if (!fs::is_directory(parent, ec))
    throw IoError("output directory does not exist: " + parent.string());
}

inline Dataset dataset_from(const Params& p) {
  if (p.has("data")) return io::read_dataset(p.text("data"));
  const long long n = p.integer("n"), d = p.integer("d");
  if (n < 1) throw ParameterError("n must be at least 1");
  if (d < 2) throw ParameterError("d must be at least 2");
  return make_unit_dataset(n, d, p.seed("data_seed", 0));
}

inline DescentConfig descent_config(const Params& p) {
  DescentConfig cfg;
  cfg.rho = p.real("rho", cfg.rho);
  cfg.L = p.real("L", cfg.L);
  cfg.K = p.real("K", cfg.K);
  const std::string mode = p.text("mode", "adaptive");
  if (mode == "adaptive") cfg.mode = DescentMode::adaptive;
  else if (mode == "fixed") cfg.mode = DescentMode::fixed;
  else throw ParameterError("mode must be 'adaptive' or 'fixed'");
  cfg.max_iters = static_cast<int>(p.integer("max_iters", cfg.max_iters));
  cfg.eig_tol = p.real("eig_tol", cfg.eig_tol);
  cfg.validate();
  return cfg;
}

inline int checked_k(const Params& p) {
  const long long k = p.integer("k");
  if (k < 1) throw ParameterError("k must be at least 1");
  return static_cast<int>(k);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands.

inline int cmd_gen_data(const Params& p, std::ostream& out) {
  const long long n = p.integer("n"), d = p.integer("d");
  if (n < 1) throw ParameterError("n must be at least 1");
  if (d < 2) throw ParameterError("d must be at least 2");
  const std::uint64_t seed = p.seed("seed", 0);
  const std::string path = p.text("out");
  detail::ensure_parent_writable(path);
  const std::string csv = io::dataset_csv(make_unit_dataset(n, d, seed));
  io::write_file_atomic(path, csv);
  out << "n=" << n << " d=" << d << " checksum=" << io::checksum(csv) << "\n";
  return kOk;
}

inline int cmd_optimize(const Params& p, std::ostream& out) {
  const Dataset data = detail::dataset_from(p);
  const int k = detail::checked_k(p);
  const DescentConfig cfg = detail::descent_config(p);
  const double floor = p.real("sigma_floor", 1e-8);
  const std::string out_matrix = p.text("out_matrix");
  const std::string out_trace = p.text("out_trace");
  const std::string out_summary = p.text("out_summary");
  for (const auto* path : {&out_matrix, &out_trace, &out_summary})
    detail::ensure_parent_writable(*path);

  std::optional<double> c;
  double eps = 0.0;
  if (p.has("eps")) {
    eps = p.real("eps");
  } else {
    c = p.has("C") ? p.real("C") : calibrate_epsilon_constant(static_cast<int>(data.n()), k);
    eps = jl_epsilon(static_cast<double>(data.n()), k, *c);
  }
  const ObjectiveContext ctx(data, k, eps, floor);

  const auto t0 = std::chrono::steady_clock::now();
  const DescentResult run = hessian_descent(ctx, cfg);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const TraceRecord& last = run.trace.back();
  const double distortion = max_distortion(run.mean(), data).max;

  json summary = {{"n", data.n()},
                  {"d", data.d()},
                  {"k", k},
                  {"C", c ? io::number(*c) : json(nullptr)},
                  {"eps", eps},
                  {"rho", cfg.rho},
                  {"mode", to_string(cfg.mode)},
                  {"converged", run.converged},
                  {"iterations", run.trace.size()},
                  {"gradient_steps", run.gradient_steps},
                  {"curvature_steps", run.curvature_steps},
                  {"final_g", last.g},
                  {"final_f", last.f},
                  {"final_sigma2", run.params.variance},
                  {"final_grad_norm", last.grad_norm},
                  {"max_distortion", distortion},
                  {"L_hat", io::number(run.L_hat)},
                  {"K_hat", io::number(run.K_hat)},
                  {"wall_time_s", wall}};
  io::write_file_atomic(out_matrix, io::matrix_csv(run.mean()));
  io::write_file_atomic(out_trace, io::trace_csv(run.trace));
  io::write_file_atomic(out_summary, io::dump(summary));
  out << "eps=" << io::fmt(eps) << " converged=" << (run.converged ? "true" : "false")
      << " iterations=" << run.trace.size() << " sigma2=" << io::fmt(run.params.variance)
      << " max_distortion=" << io::fmt(distortion) << "\n";
  return run.converged ? kOk : kNumerical;
}

inline int cmd_mc(const Params& p, std::ostream& out) {
  const Dataset data = detail::dataset_from(p);
  const int k = detail::checked_k(p);
  McConfig cfg;
  cfg.iters = static_cast<int>(p.integer("iters", cfg.iters));
  cfg.batch = static_cast<int>(p.integer("batch", cfg.batch));
  cfg.step_size = p.real("step_size", cfg.step_size);
  cfg.beta1 = p.real("beta1", cfg.beta1);
  cfg.beta2 = p.real("beta2", cfg.beta2);
  cfg.seed = p.seed("seed", cfg.seed);
  cfg.log_every = static_cast<int>(p.integer("log_every", cfg.log_every));
  cfg.validate();
  const long long baseline_trials = p.integer("baseline_trials", 0);
  if (baseline_trials < 0) throw ParameterError("baseline_trials must be >= 0");
  const std::string out_matrix = p.text("out_matrix");
  const std::string out_traj = p.text("out_trajectory");
  const std::optional<std::string> out_svg =
      p.has("out_svg") ? std::optional(p.text("out_svg")) : std::nullopt;
  const std::optional<std::string> out_summary =
      p.has("out_summary") ? std::optional(p.text("out_summary")) : std::nullopt;
  detail::ensure_parent_writable(out_matrix);
  detail::ensure_parent_writable(out_traj);
  if (out_svg) detail::ensure_parent_writable(*out_svg);
  if (out_summary) detail::ensure_parent_writable(*out_summary);

  const McResult res = run_mc_training(data, k, cfg);
  const double h = max_distortion(res.params.mean, data).max;
  double baseline_min = std::numeric_limits<double>::quiet_NaN();
  double baseline_avg = baseline_min;
  if (baseline_trials > 0) {
    const BaselineSummary b =
        baseline_gaussian_trials(data, k, static_cast<int>(baseline_trials), cfg.seed);
    baseline_min = b.min_max_distortion;
    baseline_avg = b.avg_max_distortion;
  }
  io::write_file_atomic(out_matrix, io::matrix_csv(res.params.mean));
  io::write_file_atomic(out_traj, io::trajectory_csv(res.trajectory));
  if (out_svg) io::write_file_atomic(*out_svg, io::trajectory_svg(res.trajectory, baseline_min));
  if (out_summary) {
    json s = {{"n", data.n()},       {"d", data.d()},
              {"k", k},              {"iters", cfg.iters},
              {"batch", cfg.batch},  {"step_size", cfg.step_size},
              {"seed", cfg.seed},    {"final_max_distortion", h},
              {"final_sigma2", res.params.variance},
              {"baseline_trials", baseline_trials},
              {"baseline_avg_max_distortion", io::number(baseline_avg)},
              {"baseline_min_max_distortion", io::number(baseline_min)}};
    io::write_file_atomic(*out_summary, io::dump(s));
  }
  out << "final_max_distortion=" << io::fmt(h) << " sigma2=" << io::fmt(res.params.variance);
  if (baseline_trials > 0) out << " baseline_min=" << io::fmt(baseline_min);
  out << "\n";
  return kOk;
}

inline int cmd_baseline(const Params& p, std::ostream& out) {
  const Dataset data = detail::dataset_from(p);
  const int k = detail::checked_k(p);
  const long long trials = p.integer("trials", 1000);
  if (trials < 1) throw ParameterError("trials must be at least 1");
  const std::uint64_t seed = p.seed("seed", 0);
  const std::string path = p.text("out");
  detail::ensure_parent_writable(path);
  const BaselineSummary b = baseline_gaussian_trials(data, k, static_cast<int>(trials), seed);
  json s = {{"n", data.n()},
            {"d", data.d()},
            {"k", k},
            {"trials", trials},
            {"seed", seed},
            {"avg_max_distortion", b.avg_max_distortion},
            {"min_max_distortion", b.min_max_distortion}};
  io::write_file_atomic(path, io::dump(s));
  out << "avg_max_distortion=" << io::fmt(b.avg_max_distortion)
      << " min_max_distortion=" << io::fmt(b.min_max_distortion) << "\n";
  return kOk;
}

inline json report_json(const LocalMinReport& r, Eigen::Index n_points) {
  json margins = json::array();
  for (double m : r.min_margin_per_level) margins.push_back(io::number(m));
  return {{"k", r.k},
          {"n_points", n_points},
          {"convention", to_string(r.convention)},
          {"distortion", r.distortion},
          {"radius_levels", r.radius_levels},
          {"trials", r.trials},
          {"all_worse", r.all_worse},
          {"min_margin", io::number(r.min_margin)},
          {"min_margin_per_level", margins},
          {"axis_min_margin", io::number(r.axis_min_margin)},
          {"violations", r.violations}};
}

inline int cmd_counterexample(const Params& p, std::ostream& out) {
  const std::vector<long long> ks = p.integers("ks", std::vector<long long>{2, 3, 4, 5, 6, 7, 8});
  if (ks.empty()) throw ParameterError("ks is empty");
  for (long long k : ks)
    if (k < 2) throw ParameterError("every k must be at least 2");
  const double radius = p.real("radius", 1e-3);
  if (!(radius > 0.0 && radius <= 1e-2)) throw ParameterError("radius must lie in (0, 1e-2]");
  const long long trials = p.integer("trials", 10000);
  if (trials < 1) throw ParameterError("trials must be at least 1");
  const std::uint64_t seed = p.seed("seed", 0);
  const std::string conv_name = p.text("convention", "squared_ratio");
  Convention conv;
  if (conv_name == "squared_ratio") conv = Convention::squared_ratio;
  else if (conv_name == "norm_ratio") conv = Convention::norm_ratio;
  else throw ParameterError("convention must be 'squared_ratio' or 'norm_ratio'");
  const std::string path = p.text("out");
  detail::ensure_parent_writable(path);

  json reports = json::array();
  for (long long k : ks) {
    const BadInstance inst = build_bad_instance(static_cast<int>(k));
    const LocalMinReport r =
        verify_local_min(inst, radius, static_cast<int>(trials), seed, conv);
    reports.push_back(report_json(r, inst.n()));
    out << "k=" << k << " points=" << inst.n() << " distortion=" << io::fmt(r.distortion)
        << " all_worse=" << (r.all_worse ? "true" : "false")
        << " min_margin=" << io::fmt(r.min_margin) << "\n";
  }
  io::write_file_atomic(path, io::dump({{"convention", conv_name}, {"reports", reports}}));
  return kOk;
}

inline int cmd_grid_search(const Params& p, std::ostream& out) {
  const Dataset data = detail::dataset_from(p);
  const int k = detail::checked_k(p);
  const std::vector<double> grid = p.reals("eps_grid");
  if (grid.empty()) throw ParameterError("eps_grid is empty");
  for (double e : grid)
    if (!(e > 0.0) || !std::isfinite(e)) throw ParameterError("eps values must be positive");
  const DescentConfig cfg = detail::descent_config(p);
  const double floor = p.real("sigma_floor", 1e-8);
  if (!(floor > 0.0 && floor <= 1e-4)) throw ParameterError("sigma_floor must lie in (0, 1e-4]");
  const std::string path = p.text("out");
  const std::optional<std::string> out_matrix =
      p.has("out_matrix") ? std::optional(p.text("out_matrix")) : std::nullopt;
  detail::ensure_parent_writable(path);
  if (out_matrix) detail::ensure_parent_writable(*out_matrix);

  const GridResult g = grid_search(data, k, floor, cfg, grid);
  json cells = json::array();
  for (const auto& c : g.cells)
    cells.push_back({{"eps", c.eps},
                     {"max_distortion", io::number(c.max_distortion)},
                     {"converged", c.converged},
                     {"error", c.error}});
  json s = {{"n", data.n()},
            {"d", data.d()},
            {"k", k},
            {"cells", cells},
            {"best_eps", g.best_eps},
            {"best_max_distortion", g.best_max_distortion}};
  io::write_file_atomic(path, io::dump(s));
  if (out_matrix) io::write_file_atomic(*out_matrix, io::matrix_csv(g.best_mean));
  out << "best_eps=" << io::fmt(g.best_eps)
      << " best_max_distortion=" << io::fmt(g.best_max_distortion) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct Command {
  std::string name;
  std::string help;
  std::vector<OptionSpec> options;
  int (*handler)(const Params&, std::ostream&);
};

inline std::vector<OptionSpec> data_options() {
  return {{"data", Kind::text, "dataset CSV"},
          {"n", Kind::integer, "points to generate when no dataset is given"},
          {"d", Kind::integer, "dimension to generate when no dataset is given"},
          {"data_seed", Kind::integer, "seed for the generated dataset"}};
}

inline std::vector<OptionSpec> descent_options() {
  return {{"rho", Kind::real, "stationarity tolerance"},
          {"L", Kind::real, "smoothness constant"},
          {"K", Kind::real, "Hessian Lipschitz constant"},
          {"mode", Kind::text, "adaptive or fixed"},
          {"max_iters", Kind::integer, "iteration cap"},
          {"eig_tol", Kind::real, "eigensolver tolerance"},
          {"sigma_floor", Kind::real, "lower clamp on the variance"}};
}

inline std::vector<Command> commands() {
  auto join = [](std::vector<OptionSpec> a, const std::vector<OptionSpec>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  return {
      {"gen-data", "write a random unit-norm dataset",
       {{"n", Kind::integer, "number of points"},
        {"d", Kind::integer, "dimension"},
        {"seed", Kind::integer, "random seed"},
        {"out", Kind::text, "output CSV"}},
       &cmd_gen_data},
      {"optimize", "run Hessian Descent on the sampler objective",
       join(join(data_options(), descent_options()),
            {{"k", Kind::integer, "target dimension"},
             {"eps", Kind::real, "distortion threshold (default: calibrated)"},
             {"C", Kind::real, "constant in eps = C sqrt(ln n / k)"},
             {"out_matrix", Kind::text, "matrix CSV"},
             {"out_trace", Kind::text, "trace CSV"},
             {"out_summary", Kind::text, "summary JSON"}}),
       &cmd_optimize},
      {"mc", "train the Monte Carlo proxy with Adam",
       join(data_options(),
            {{"k", Kind::integer, "target dimension"},
             {"iters", Kind::integer, "iterations"},
             {"batch", Kind::integer, "samples per step"},
             {"step_size", Kind::real, "learning rate"},
             {"beta1", Kind::real, "first-moment decay"},
             {"beta2", Kind::real, "second-moment decay"},
             {"seed", Kind::integer, "random seed"},
             {"log_every", Kind::integer, "logging period"},
             {"baseline_trials", Kind::integer, "random baselines for comparison"},
             {"out_matrix", Kind::text, "matrix CSV"},
             {"out_trajectory", Kind::text, "trajectory CSV"},
             {"out_svg", Kind::text, "optional SVG plot"},
             {"out_summary", Kind::text, "optional summary JSON"}}),
       &cmd_mc},
      {"baseline", "summarize random Gaussian projections",
       join(data_options(),
            {{"k", Kind::integer, "target dimension"},
             {"trials", Kind::integer, "number of matrices"},
             {"seed", Kind::integer, "random seed"},
             {"out", Kind::text, "summary JSON"}}),
       &cmd_baseline},
      {"counterexample", "check the [2I | 0] local minimum on the bad instance",
       {{"ks", Kind::integers, "comma-separated block dimensions"},
        {"radius", Kind::real, "largest perturbation radius"},
        {"trials", Kind::integer, "random perturbations per radius"},
        {"seed", Kind::integer, "random seed"},
        {"convention", Kind::text, "squared_ratio or norm_ratio"},
        {"out", Kind::text, "report JSON"}},
       &cmd_counterexample},
      {"grid-search", "pick eps from a grid by the distortion of the result",
       join(join(data_options(), descent_options()),
            {{"k", Kind::integer, "target dimension"},
             {"eps_grid", Kind::reals, "comma-separated eps values"},
             {"out", Kind::text, "summary JSON"},
             {"out_matrix", Kind::text, "optional matrix CSV of the best run"}}),
       &cmd_grid_search},
  };
}

/// Entry point. Output streams are parameters so tests can capture them.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Learned Johnson-Lindenstrauss projections via Gaussian solution samplers"};
  app.require_subcommand(0, 1);
  std::string config_path;
  int threads = 0;
  app.add_option("--config", config_path, "JSON config with a \"command\" field");
  app.add_option("--threads", threads, "worker threads (default: JLSAMPLER_THREADS or 1)");

  const std::vector<Command> cmds = commands();
  std::map<std::string, std::map<std::string, std::string>> raw;
  std::vector<CLI::App*> subs;
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    auto& store = raw[c.name];
    for (const auto& o : c.options) sub->add_option(detail::flag_name(o.key), store[o.key], o.help);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }

  try {
    if (threads < 0) throw ParameterError("--threads must be >= 0");
    if (threads > 0) set_thread_hint(threads);

    json config = json::object();
    if (!config_path.empty()) {
      try {
        config = json::parse(io::read_file(config_path));
      } catch (const json::parse_error& e) {
        throw ParameterError("config " + config_path + " is not valid JSON: " + e.what());
      }
      if (!config.is_object()) throw ParameterError("config must be a JSON object");
    }
    std::string name;
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) name = cmds[i].name;
    if (config.contains("command")) {
      if (!config["command"].is_string()) throw ParameterError("'command' must be a string");
      const std::string from_config = config["command"].get<std::string>();
      if (name.empty()) name = from_config;
      else if (name != from_config)
        throw ParameterError("config is for '" + from_config + "' but '" + name + "' was requested");
    }
    if (name.empty()) {
      err << "error: no subcommand given\n" << app.help();
      return kValidation;
    }
    const auto it = std::find_if(cmds.begin(), cmds.end(),
                                 [&](const Command& c) { return c.name == name; });
    if (it == cmds.end()) throw ParameterError("unknown command '" + name + "'");

    json merged = json::object();
    for (auto& [key, value] : config.items()) {
      if (key == "command") continue;
      const bool known = std::any_of(it->options.begin(), it->options.end(),
                                     [&](const OptionSpec& o) { return o.key == key; });
      if (!known) throw ParameterError("unknown config key '" + key + "' for " + name);
      merged[key] = value;
    }
    const std::size_t idx = static_cast<std::size_t>(it - cmds.begin());
    for (const auto& o : it->options) {
      const CLI::Option* opt = subs[idx]->get_option(detail::flag_name(o.key));
      if (opt->count() > 0) merged[o.key] = detail::convert(raw[name][o.key], o.kind, o.key);
    }
    return it->handler(Params(std::move(merged)), out);
  } catch (const ParameterError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ConvergenceError& e) {
    err << "did not converge: " << e.what() << "\n";
    return kNumerical;
  } catch (const CalibrationError& e) {
    err << "calibration failed: " << e.what() << "\n";
    return kNumerical;
  } catch (const ConstantMisestimateError& e) {
    err << "constant misestimate: " << e.what() << "\n";
    return kNumerical;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << "\n";
    return kNumerical;
  } catch (const InternalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kOther;
  }
}

inline int run(int argc, char** argv) {
  return run(argc, const_cast<const char* const*>(argv), std::cout, std::cerr);
}

}  // namespace jlsampler::cli

#endif  // JLSAMPLER_CLI_HPP
