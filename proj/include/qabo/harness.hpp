// Copyright 2026 The qabo Authors
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

// Experiment runner: builds objectives from a config, runs seeded
// repetitions in parallel, appends JSON-lines records through a single
// writer, aggregates results and writes CSV plot data.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "qabo/config.hpp"
#include "qabo/graph.hpp"
#include "qabo/openquantum.hpp"
#include "qabo/optimizer.hpp"
#include "qabo/pspin.hpp"
#include "qabo/rydberg.hpp"

#ifndef QABO_VERSION
#define QABO_VERSION "0.1.0"
#endif

namespace qabo {

inline constexpr const char* kVersion = QABO_VERSION;

// Measurement distribution over the simulation basis at one parameter
// vector. success marks basis states that count as solved.
struct Outcome {
  std::vector<double> probability;
  std::vector<double> energy;
  std::vector<char> success;
};

// Immutable problem instance shared by all repetitions of an experiment.
class ExperimentModel {
 public:
  explicit ExperimentModel(const ExperimentConfig& c) : cfg_(c) {
    if (c.problem == Problem::RydbergMIS) {
      graph_ = std::make_shared<const UnitDiskGraph>(load_graph(c.rydberg.graph_path));
      rydberg_ = std::make_shared<const RydbergModel>(*graph_, c.rydberg.base.c6);
      mis_ = std::make_shared<const MisResult>(brute_force_mis(*graph_));
      if (c.rydberg.parametrization == RydbergParametrization::Linear) {
        space_.bounds = c.rydberg.linear_bounds;
        const auto& b = c.rydberg.base;
        std::vector<double> probe{b.delta_i, b.delta_f, b.omega_max, b.tau_omega / b.t_final};
        bool inside = true;
        for (std::size_t i = 0; i < probe.size(); ++i) inside = inside && space_.bounds[i].contains(probe[i]);
        if (inside) space_.linear_probe = std::move(probe);
      } else {
        space_ = search_space(c.schedules);
      }
    } else {
      pspin_ = std::make_shared<const PSpinModel>(c.system);
      space_ = search_space(c.schedules);
      if (c.problem == Problem::PSpinAME && c.bath.eta > 0.0 && c.lamb_shift) {
        lamb_ = shared_lamb_table(c.bath);
      }
    }
    if (c.optimizer != OptimizerKind::None && space_.bounds.empty()) {
      throw ConfigError({"optimizer: the schedules have no free parameters; use kind None"});
    }
  }

  const ExperimentConfig& config() const { return cfg_; }
  const SearchSpace& space() const { return space_; }
  const PSpinModel* pspin() const { return pspin_.get(); }
  const UnitDiskGraph* graph() const { return graph_.get(); }
  const MisResult* mis() const { return mis_.get(); }

  void check_theta(std::span<const double> theta) const {
    if (theta.size() != space_.bounds.size()) {
      throw InvalidArgument("expected " + std::to_string(space_.bounds.size()) + " parameters, got " +
                            std::to_string(theta.size()));
    }
  }

  AnnealingControls controls(std::span<const double> theta) const {
    check_theta(theta);
    AnnealingControls out;
    std::size_t k = 0;
    for (const auto& spec : cfg_.schedules) {
      const auto n = std::size_t(spec.n_params);
      out.schedules.emplace_back(spec, std::vector<double>(theta.begin() + std::ptrdiff_t(k),
                                                           theta.begin() + std::ptrdiff_t(k + n)));
      k += n;
    }
    return out;
  }

  RydbergParams rydberg_params(std::span<const double> theta) const {
    check_theta(theta);
    RydbergParams p = cfg_.rydberg.base;
    if (cfg_.rydberg.parametrization == RydbergParametrization::Linear) {
      p.delta_i = theta[0];
      p.delta_f = theta[1];
      p.omega_max = theta[2];
      p.tau_omega = theta[3] * p.t_final;
    } else {
      p.omega_max = cfg_.rydberg.detuning_omega_max;
      p.tau_omega = cfg_.rydberg.detuning_tau_fraction * p.t_final;
      p.detuning = DetuningShape{cfg_.schedules[0], std::vector<double>(theta.begin(), theta.end())};
    }
    return p;
  }

  StateVector pure_state(std::span<const double> theta) const {
    if (rydberg_) return evolve_rydberg(*rydberg_, rydberg_params(theta));
    return evolve(*pspin_, controls(theta), cfg_.t_final);
  }

  DensityMatrix density(std::span<const double> theta) const {
    AmeOptions o;
    o.n_levels = cfg_.n_levels;
    o.lamb_shift = cfg_.lamb_shift;
    o.lamb_table = lamb_;
    return evolve_ame(*pspin_, controls(theta), cfg_.t_final, cfg_.bath, o);
  }

  Outcome outcome(std::span<const double> theta) const {
    Outcome out;
    if (cfg_.problem == Problem::PSpinAME) {
      const DensityMatrix rho = density(theta);
      for (Eigen::Index i = 0; i < rho.rows(); ++i) out.probability.push_back(std::max(rho(i, i).real(), 0.0));
    } else {
      const StateVector psi = pure_state(theta);
      for (Eigen::Index i = 0; i < psi.size(); ++i) out.probability.push_back(std::norm(psi[i]));
    }
    const std::size_t dim = out.probability.size();
    out.energy.resize(dim);
    out.success.assign(dim, 0);
    if (rydberg_) {
      for (std::size_t b = 0; b < dim; ++b) out.energy[b] = mis_energy(VertexMask(b), *graph_, cfg_.rydberg.alpha);
      for (VertexMask m : mis_->maximum_sets) out.success[std::size_t(m)] = 1;
    } else {
      const auto& e = pspin_->target_diagonal();
      for (std::size_t b = 0; b < dim; ++b) out.energy[b] = e[Eigen::Index(b)];
      out.success[pspin_->ground_index()] = 1;
    }
    return out;
  }

  // The objective: maximized figure of merit, sampled when n_shots is set.
  Evaluation evaluate(std::span<const double> theta, std::uint64_t seed) const {
    const Outcome o = outcome(theta);
    if (!cfg_.n_shots) return {exact_fom(o), 0.0};
    const auto shots = std::size_t(*cfg_.n_shots);
    const DiscreteSampler sampler(o.probability);
    Rng rng(seed);
    std::vector<std::size_t> draws(shots);
    for (auto& d : draws) d = sampler(rng);
    std::vector<double> e(shots);
    double succ = 0.0;
    for (std::size_t s = 0; s < shots; ++s) {
      e[s] = o.energy[draws[s]];
      succ += o.success[draws[s]] ? 1.0 : 0.0;
    }
    double mean = 0.0;
    for (double v : e) mean += v;
    mean /= double(shots);
    double var = 0.0;
    for (double v : e) var += (v - mean) * (v - mean);
    const double sd = shots > 1 ? std::sqrt(var / double(shots - 1)) : 0.0;
    const double se = sd / std::sqrt(double(shots));
    switch (cfg_.fom) {
      case FomKind::Fidelity: return {exact_fom(o), 0.0};
      case FomKind::Energy: return {-mean, se};
      case FomKind::QuantileEnergy:
      case FomKind::HHalf: return {quantile_fom(e, cfg_.quantile), se};
      case FomKind::PMis: {
        const double p = succ / double(shots);
        return {p, std::sqrt(std::max(p * (1.0 - p), 1.0 / double(shots)) / double(shots))};
      }
    }
    return {};
  }

  double exact_fom(const Outcome& o) const {
    switch (cfg_.fom) {
      case FomKind::Fidelity:
      case FomKind::PMis: {
        double p = 0.0;
        for (std::size_t b = 0; b < o.probability.size(); ++b) p += o.success[b] ? o.probability[b] : 0.0;
        return std::clamp(p, 0.0, 1.0);
      }
      case FomKind::Energy: {
        double e = 0.0;
        for (std::size_t b = 0; b < o.probability.size(); ++b) e += o.probability[b] * o.energy[b];
        return -e;
      }
      case FomKind::QuantileEnergy:
      case FomKind::HHalf: return quantile_fom_exact(o.probability, o.energy, cfg_.quantile);
    }
    return 0.0;
  }

  // Noise-free diagnostics at one parameter vector.
  nlohmann::json metrics(std::span<const double> theta) const {
    const Outcome o = outcome(theta);
    double succ = 0.0, energy = 0.0;
    for (std::size_t b = 0; b < o.probability.size(); ++b) {
      succ += o.success[b] ? o.probability[b] : 0.0;
      energy += o.probability[b] * o.energy[b];
    }
    nlohmann::json m;
    m[rydberg_ ? "p_mis" : "fidelity"] = std::clamp(succ, 0.0, 1.0);
    m["energy"] = energy;
    m["quantile_energy"] = quantile_fom_exact(o.probability, o.energy, cfg_.quantile);
    return m;
  }

  nlohmann::json labels() const {
    nlohmann::json l;
    l["problem"] = enum_name(cfg_.problem, problem_names());
    l["optimizer"] = enum_name(cfg_.optimizer, optimizer_names());
    l["fom"] = enum_name(cfg_.fom, fom_names());
    l["t_final"] = cfg_.t_final;
    if (pspin_) {
      l["n_spins"] = cfg_.system.n_spins;
      if (cfg_.system.mode == PSpinMode::ReverseAnnealing) l["c"] = cfg_.system.c;
    }
    if (cfg_.problem == Problem::PSpinAME) {
      l["eta"] = cfg_.bath.eta;
      l["anneal"] = cfg_.ame_mode == PSpinMode::ReverseAnnealing ? "ra" : "qa";
    }
    if (graph_) l["graph"] = cfg_.rydberg.graph_path;
    return l;
  }

 private:
  ExperimentConfig cfg_;
  SearchSpace space_;
  std::shared_ptr<const PSpinModel> pspin_;
  std::shared_ptr<const LambShiftTable> lamb_;
  std::shared_ptr<const UnitDiskGraph> graph_;
  std::shared_ptr<const RydbergModel> rydberg_;
  std::shared_ptr<const MisResult> mis_;
};

// Parameters for a single evaluation: an explicit override, then the
// config's theta, then the linear-equivalent parameters.
inline std::vector<double> chosen_theta(const ExperimentModel& model,
                                        const std::optional<std::vector<double>>& override_theta = std::nullopt) {
  std::vector<double> theta;
  if (override_theta) {
    theta = *override_theta;
  } else if (model.config().theta) {
    theta = *model.config().theta;
  } else if (model.space().linear_probe) {
    theta = *model.space().linear_probe;
  } else if (!model.space().bounds.empty()) {
    throw InvalidArgument("no parameters given and the schedule has no linear equivalent; pass theta");
  }
  model.check_theta(theta);
  return theta;
}

inline Objective make_objective(std::shared_ptr<const ExperimentModel> model) {
  return [model](std::span<const double> theta, std::uint64_t seed) { return model->evaluate(theta, seed); };
}

// Command-line overrides. A new base seed is a different experiment (new
// digest); a new repetition count extends or truncates the same one.
inline void apply_overrides(ExperimentConfig& c, std::optional<std::uint64_t> seed,
                            std::optional<std::size_t> reps) {
  if (seed) {
    c.base_seed = *seed;
    c.source["base_seed"] = *seed;
  }
  if (reps) {
    if (*reps < 1) throw ConfigError({"repetitions: must be at least 1"});
    c.repetitions = *reps;
    c.source["repetitions"] = *reps;
  }
}

// ---- records -------------------------------------------------------------

struct RunRecord {
  std::string digest;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  OptimizationTrace trace;
  nlohmann::json metrics = nlohmann::json::object();
  nlohmann::json labels = nlohmann::json::object();
  double duration_s = 0.0;
  std::string version = kVersion;
};

namespace detail {

inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> read_optional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const OptimizationTrace& t) {
  nlohmann::json evals = nlohmann::json::array();
  for (const auto& e : t.evaluations) {
    evals.push_back({{"theta", e.theta},
                     {"value", e.value},
                     {"sigma_obs", e.sigma_obs},
                     {"index", e.index},
                     {"phase", to_string(e.phase)},
                     {"kappa", detail::optional_number(e.kappa)},
                     {"length_scale", detail::optional_number(e.length_scale)},
                     {"signal_variance", detail::optional_number(e.signal_variance)}});
  }
  nlohmann::json j{{"evaluations", evals}};
  if (t.evaluations.empty()) {
    j["best"] = nullptr;
  } else {
    j["best"] = {{"theta", t.best_theta}, {"value", t.best_value}, {"index", t.best_index}};
  }
  j["final_theta"] = t.final_theta ? nlohmann::json(*t.final_theta) : nlohmann::json(nullptr);
  return j;
}

inline OptimizationTrace trace_from_json(const nlohmann::json& j) {
  OptimizationTrace t;
  for (const auto& e : j.at("evaluations")) {
    TraceEntry te;
    te.theta = e.at("theta").get<std::vector<double>>();
    te.value = e.at("value").get<double>();
    te.sigma_obs = e.at("sigma_obs").get<double>();
    te.index = e.at("index").get<std::size_t>();
    te.phase = parse_phase(e.at("phase").get<std::string>());
    te.kappa = detail::read_optional(e, "kappa");
    te.length_scale = detail::read_optional(e, "length_scale");
    te.signal_variance = detail::read_optional(e, "signal_variance");
    t.evaluations.push_back(std::move(te));
  }
  if (!j.at("best").is_null()) {
    t.best_theta = j["best"].at("theta").get<std::vector<double>>();
    t.best_value = j["best"].at("value").get<double>();
    t.best_index = j["best"].at("index").get<std::size_t>();
  }
  if (j.contains("final_theta") && !j["final_theta"].is_null()) {
    t.final_theta = j["final_theta"].get<std::vector<double>>();
  }
  return t;
}

inline nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json j{{"digest", r.digest},       {"repetition", r.repetition}, {"seed", r.seed},
                   {"status", r.ok ? "ok" : "error"}, {"trace", to_json(r.trace)}, {"metrics", r.metrics},
                   {"labels", r.labels},       {"duration_s", r.duration_s}, {"version", r.version}};
  if (!r.ok) j["error"] = r.error;
  return j;
}

inline RunRecord record_from_json(const nlohmann::json& j) {
  RunRecord r;
  r.digest = j.at("digest").get<std::string>();
  r.repetition = j.at("repetition").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ok = j.at("status").get<std::string>() == "ok";
  r.error = j.value("error", std::string{});
  r.trace = trace_from_json(j.at("trace"));
  r.metrics = j.value("metrics", nlohmann::json::object());
  r.labels = j.value("labels", nlohmann::json::object());
  r.duration_s = j.value("duration_s", 0.0);
  r.version = j.value("version", std::string{});
  return r;
}

// Reads a JSON-lines file. A malformed final line (an interrupted write)
// is dropped with a warning; malformed earlier lines are errors.
inline std::vector<RunRecord> read_records(const std::string& path) {
  std::vector<RunRecord> out;
  std::ifstream in(path);
  if (!in) return out;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(lines[i])));
    } catch (const std::exception& e) {
      if (i + 1 == lines.size()) {
        std::clog << "warning: ignoring truncated last record in " << path << "\n";
        continue;
      }
      throw ParseError(std::string("bad record in ") + path + ": " + e.what(), i + 1);
    }
  }
  return out;
}

// ---- running ---------------------------------------------------------------

inline std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

struct RunOptions {
  std::string out_path;  // empty: records are only returned
  std::size_t jobs = default_jobs();
  std::function<void(const RunRecord&)> on_record;
};

inline RunRecord run_repetition(const ExperimentModel& model, const std::string& digest, std::size_t rep) {
  const auto& c = model.config();
  RunRecord r;
  r.digest = digest;
  r.repetition = rep;
  r.seed = c.base_seed + rep;
  r.labels = model.labels();
  const auto start = std::chrono::steady_clock::now();
  try {
    Objective f = [&model](std::span<const double> theta, std::uint64_t seed) { return model.evaluate(theta, seed); };
    switch (c.optimizer) {
      case OptimizerKind::BO: {
        BOConfig bo = c.bo;
        bo.seed = r.seed;
        r.trace = run_bo(f, model.space(), bo);
        break;
      }
      case OptimizerKind::SPSA: {
        SPSAConfig s = c.spsa;
        s.seed = r.seed;
        r.trace = run_spsa(f, model.space(), s, c.n_evals);
        break;
      }
      case OptimizerKind::Random:
        r.trace = run_random(f, model.space(), c.n_evals, r.seed);
        break;
      case OptimizerKind::None: {
        const std::vector<double> theta = chosen_theta(model);
        const Evaluation e = detail::call_objective(f, theta, mix_seed(r.seed, 0));
        const Phase ph = c.theta ? Phase::Fixed : Phase::LinearProbe;
        r.trace.record({theta, e.value, e.sigma_obs, 0, ph, std::nullopt, std::nullopt, std::nullopt});
        break;
      }
    }
    r.metrics = model.metrics(r.trace.best_theta);
    if (r.trace.final_theta) r.metrics["final"] = model.metrics(*r.trace.final_theta);
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  r.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// Runs repetitions 0..repetitions-1 with seeds base_seed + i. Repetitions
// already present in out_path under the same digest are not rerun. Returns
// every record for this digest, ordered by repetition.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const RunOptions& opt = {}) {
  const std::string digest = config_digest(config.source);
  auto model = std::make_shared<const ExperimentModel>(config);

  std::map<std::size_t, RunRecord> done;
  if (!opt.out_path.empty()) {
    for (auto& r : read_records(opt.out_path)) {
      if (r.digest == digest) done.emplace(r.repetition, std::move(r));
    }
  }
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < config.repetitions; ++i) {
    if (!done.count(i)) todo.push_back(i);
  }

  std::ofstream out;
  if (!opt.out_path.empty() && !todo.empty()) {
    const auto parent = std::filesystem::path(opt.out_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    out.open(opt.out_path, std::ios::app);
    if (!out) throw Error("cannot open " + opt.out_path + " for writing");
  }

  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < todo.size(); k = next++) {
      RunRecord r = run_repetition(*model, digest, todo[k]);
      std::lock_guard lock(mutex);
      if (out.is_open()) {
        out << to_json(r).dump() << '\n';
        out.flush();
      }
      if (opt.on_record) opt.on_record(r);
      done.emplace(r.repetition, std::move(r));
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(opt.jobs, 1, std::max<std::size_t>(todo.size(), 1));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
  }
  if (out.is_open() && !out) throw Error("write to " + opt.out_path + " failed");

  std::vector<RunRecord> all;
  for (auto& [i, r] : done) all.push_back(std::move(r));
  return all;
}

// ---- statistics --------------------------------------------------------------

struct Summary {
  double median = 0.0;
  double lower = 0.0;  // 25th percentile
  double upper = 0.0;  // 75th percentile
  std::size_t n = 0;
};

// Percentile by linear interpolation between order statistics at
// position q (n - 1).
inline double percentile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * double(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

inline Summary aggregate(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("cannot aggregate an empty set of values");
  std::sort(values.begin(), values.end());
  return {percentile_sorted(values, 0.5), percentile_sorted(values, 0.25), percentile_sorted(values, 0.75),
          values.size()};
}

// metric is "best_value" or a key of the record metrics (e.g. "fidelity").
inline double record_metric(const RunRecord& r, const std::string& metric) {
  if (metric == "best_value") return r.trace.best_value;
  if (!r.metrics.contains(metric)) throw InvalidArgument("record has no metric '" + metric + "'");
  return r.metrics[metric].get<double>();
}

inline Summary aggregate(const std::vector<RunRecord>& records, const std::string& metric) {
  std::vector<double> v;
  for (const auto& r : records) {
    if (r.ok) v.push_back(record_metric(r, metric));
  }
  return aggregate(std::move(v));
}

// ---- plot data -------------------------------------------------------------

enum class PlotKind { Scaling, Convergence, GapLandscape, Path, Trace, Histogram, Excitations };

inline PlotKind parse_plot_kind(const std::string& s) {
  static const std::map<std::string, PlotKind> kinds{{"scaling", PlotKind::Scaling},
                                                     {"convergence", PlotKind::Convergence},
                                                     {"gap-landscape", PlotKind::GapLandscape},
                                                     {"path", PlotKind::Path},
                                                     {"trace", PlotKind::Trace},
                                                     {"histogram", PlotKind::Histogram},
                                                     {"excitations", PlotKind::Excitations}};
  const auto it = kinds.find(s);
  if (it == kinds.end()) {
    std::string names;
    for (const auto& [k, v] : kinds) names += (names.empty() ? "" : ", ") + k;
    throw InvalidArgument("unknown plot kind '" + s + "' (expected one of " + names + ")");
  }
  return it->second;
}

// Output location: absolute paths are kept; relative paths go under
// QABO_OUTPUT_DIR when that is set.
inline std::string resolve_output_path(const std::string& path) {
  const char* dir = std::getenv("QABO_OUTPUT_DIR");
  if (!dir || !*dir || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(dir) / path).string();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error("write to " + path + " failed");
}

inline std::string series_label(const RunRecord& r) {
  std::string s = r.labels.value("problem", std::string("?")) + "/" + r.labels.value("optimizer", std::string("?"));
  if (r.labels.contains("eta")) {
    std::ostringstream eta;
    eta << r.labels["eta"].get<double>();
    s += "/eta=" + eta.str();
  }
  return s;
}

// Metric summary per (series, N), N ascending.
inline std::string scaling_csv(const std::vector<RunRecord>& records, const std::string& metric) {
  std::map<std::pair<std::string, int>, std::vector<double>> groups;
  for (const auto& r : records) {
    if (!r.ok || !r.labels.contains("n_spins")) continue;
    groups[{series_label(r), r.labels["n_spins"].get<int>()}].push_back(record_metric(r, metric));
  }
  std::ostringstream os;
  os.precision(17);
  os << "series,n_spins,median,lower,upper,count\n";
  for (auto& [key, v] : groups) {
    const Summary s = aggregate(v);
    os << key.first << ',' << key.second << ',' << s.median << ',' << s.lower << ',' << s.upper << ',' << s.n << '\n';
  }
  return os.str();
}

// Best-so-far value after each evaluation, summarized across records.
inline std::string convergence_csv(const std::vector<RunRecord>& records) {
  std::map<std::string, std::vector<std::vector<double>>> series;
  for (const auto& r : records) {
    if (r.ok) series[series_label(r)].push_back(r.trace.best_so_far());
  }
  std::ostringstream os;
  os.precision(17);
  os << "series,evaluations,median,lower,upper,count\n";
  for (const auto& [name, runs] : series) {
    std::size_t longest = 0;
    for (const auto& b : runs) longest = std::max(longest, b.size());
    for (std::size_t k = 0; k < longest; ++k) {
      std::vector<double> v;
      for (const auto& b : runs) {
        if (k < b.size()) v.push_back(b[k]);
      }
      const Summary s = aggregate(v);
      os << name << ',' << k + 1 << ',' << s.median << ',' << s.lower << ',' << s.upper << ',' << s.n << '\n';
    }
  }
  return os.str();
}

inline std::string gap_landscape_csv(const std::vector<GapPoint>& points, bool with_lambda) {
  std::ostringstream os;
  os.precision(17);
  os << (with_lambda ? "s,lambda,gap\n" : "s,gap\n");
  for (const auto& p : points) {
    os << p.s << ',';
    if (with_lambda) os << p.lambda << ',';
    os << p.gap << '\n';
  }
  return os.str();
}

// Schedule values on a uniform time grid.
inline std::string path_csv(const AnnealingControls& controls, double t_final, std::size_t points = 201) {
  std::ostringstream os;
  os.precision(17);
  os << "t";
  for (std::size_t i = 0; i < controls.schedules.size(); ++i) os << ",schedule_" << i;
  os << '\n';
  for (double t : uniform_grid(0.0, t_final, points)) {
    os << t;
    for (const auto& s : controls.schedules) os << ',' << s(t);
    os << '\n';
  }
  return os.str();
}

// Instantaneous ground-state population and gap at every accepted step.
inline std::string trace_csv(const PSpinModel& model, const AnnealingControls& controls, double t_final) {
  std::ostringstream os;
  os.precision(17);
  os << "t,ground_population,gap\n";
  const auto mode = model.system().mode;
  EvolveOptions opt;
  opt.observer = [&](double t, const StateVector& psi) {
    const Eigen::MatrixXd h = model.dense_hamiltonian(controls.weights(mode, std::min(t, t_final)));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    const double overlap = std::norm(eig.eigenvectors().col(0).cast<cplx>().dot(psi));
    const double gap = eig.eigenvalues().size() > 1 ? eig.eigenvalues()[1] - eig.eigenvalues()[0] : 0.0;
    os << t << ',' << overlap << ',' << gap << '\n';
  };
  evolve(model, controls, t_final, opt);
  return os.str();
}

// Shot counts per energy bin [lo, lo + width); empty bins are omitted.
inline std::map<double, std::uint64_t> energy_histogram(const std::vector<std::pair<double, std::uint64_t>>& energies,
                                                        double width) {
  if (!(width > 0.0)) throw InvalidArgument("histogram bin width must be positive");
  std::map<double, std::uint64_t> bins;
  for (const auto& [e, c] : energies) bins[std::floor(e / width + 1e-9) * width] += c;
  return bins;
}

inline std::string histogram_csv(const SampleSet& s, const UnitDiskGraph& g, double width, double alpha = 1.2) {
  std::vector<std::pair<double, std::uint64_t>> e;
  for (const auto& [m, c] : s.entries()) e.emplace_back(mis_energy(m, g, alpha), c);
  const int mis = mis_size_of(g);
  std::ostringstream os;
  os.precision(17);
  os << "energy_bin,count,mis_reference\n";
  for (const auto& [bin, count] : energy_histogram(e, width)) os << bin << ',' << count << ',' << -mis << '\n';
  return os.str();
}

inline std::string excitations_csv(const UnitDiskGraph& g, const std::vector<double>& prob) {
  std::ostringstream os;
  os.precision(17);
  os << "node,x,y,probability\n";
  for (int i = 0; i < g.size(); ++i) {
    os << i << ',' << g.positions()[std::size_t(i)][0] << ',' << g.positions()[std::size_t(i)][1] << ','
       << prob[std::size_t(i)] << '\n';
  }
  return os.str();
}

}  // namespace qabo
