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

// Experiment configuration: JSON parsing, validation and digest.
//
// Validation collects every problem it finds instead of stopping at the
// first, so a config can be fixed in one pass.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "qabo/error.hpp"
#include "qabo/openquantum.hpp"
#include "qabo/optimizer.hpp"
#include "qabo/pspin.hpp"
#include "qabo/rydberg.hpp"
#include "qabo/schedule.hpp"

namespace qabo {

inline constexpr int kConfigVersion = 1;

enum class Problem { PSpinQA, PSpinQAIndependent, PSpinRA, PSpinBangBang, PSpinAME, RydbergMIS };
enum class OptimizerKind { BO, SPSA, Random, None };
enum class FomKind { Fidelity, Energy, QuantileEnergy, HHalf, PMis };
enum class RydbergParametrization { Linear, Detuning };

inline const std::vector<std::pair<Problem, std::string>>& problem_names() {
  static const std::vector<std::pair<Problem, std::string>> v{
      {Problem::PSpinQA, "PSpinQA"},           {Problem::PSpinQAIndependent, "PSpinQAIndependent"},
      {Problem::PSpinRA, "PSpinRA"},           {Problem::PSpinBangBang, "PSpinBangBang"},
      {Problem::PSpinAME, "PSpinAME"},         {Problem::RydbergMIS, "RydbergMIS"}};
  return v;
}
inline const std::vector<std::pair<OptimizerKind, std::string>>& optimizer_names() {
  static const std::vector<std::pair<OptimizerKind, std::string>> v{
      {OptimizerKind::BO, "BO"}, {OptimizerKind::SPSA, "SPSA"}, {OptimizerKind::Random, "Random"},
      {OptimizerKind::None, "None"}};
  return v;
}
inline const std::vector<std::pair<FomKind, std::string>>& fom_names() {
  static const std::vector<std::pair<FomKind, std::string>> v{{FomKind::Fidelity, "fidelity"},
                                                               {FomKind::Energy, "energy"},
                                                               {FomKind::QuantileEnergy, "quantile_energy"},
                                                               {FomKind::HHalf, "h_half"},
                                                               {FomKind::PMis, "p_mis"}};
  return v;
}

template <class E>
std::string enum_name(E e, const std::vector<std::pair<E, std::string>>& table) {
  for (const auto& [k, v] : table) {
    if (k == e) return v;
  }
  return "?";
}

template <class E>
std::optional<E> enum_parse(const std::string& s, const std::vector<std::pair<E, std::string>>& table) {
  for (const auto& [k, v] : table) {
    if (v == s) return k;
  }
  return std::nullopt;
}

// All violations found while reading a config.
class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : InvalidArgument(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid config:";
    for (const auto& m : p) s += "\n  - " + m;
    return s;
  }
  std::vector<std::string> problems_;
};

struct RydbergSettings {
  std::string graph_path;
  RydbergParametrization parametrization = RydbergParametrization::Linear;
  RydbergParams base;  // baseline protocol; tau_omega in microseconds
  double alpha = 1.2;
  // Linear parametrization: (delta_i, delta_f, omega_max, tau_omega / t_final).
  std::vector<Interval> linear_bounds{{-60.0, -5.0}, {5.0, 120.0}, {1.0, 15.8}, {0.05, 0.45}};
  // Detuning parametrization: fixed drive while the detuning shape is free.
  double detuning_omega_max = 15.8;
  double detuning_tau_fraction = 0.1;
};

struct ExperimentConfig {
  Problem problem = Problem::PSpinQA;
  PSpinSystem system;
  double t_final = 1.0;
  std::vector<ScheduleSpec> schedules;
  // PSpinAME only.
  PSpinMode ame_mode = PSpinMode::QaDependent;
  OhmicBath bath;
  std::size_t n_levels = 30;
  bool lamb_shift = true;
  RydbergSettings rydberg;
  OptimizerKind optimizer = OptimizerKind::BO;
  BOConfig bo;
  SPSAConfig spsa;
  std::size_t n_evals = 60;  // SPSA and Random
  FomKind fom = FomKind::Fidelity;
  double quantile = 0.5;
  std::optional<std::int64_t> n_shots;  // unset: exact expectation
  std::size_t repetitions = 80;
  std::uint64_t base_seed = 0;
  std::optional<std::vector<double>> theta;  // for single evaluations
  nlohmann::json source;  // normalized input, used for the digest
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(std::vector<std::string>& problems) : problems_(problems) {}

  template <class T>
  void get(const nlohmann::json& j, const std::string& path, const char* key, T& out) {
    if (!j.is_object() || !j.contains(key)) return;
    try {
      out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      problems_.push_back(path + key + ": wrong type");
    }
  }

  void fail(std::string m) { problems_.push_back(std::move(m)); }

  // Unknown keys are reported; they are usually typos.
  void allow(const nlohmann::json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) {
      if (!j.is_null()) problems_.push_back((path.empty() ? "config" : path) + ": expected an object");
      return;
    }
    for (const auto& item : j.items()) {
      bool known = false;
      for (const char* k : keys) known = known || item.key() == k;
      if (!known) problems_.push_back(path + item.key() + ": unknown key");
    }
  }

 private:
  std::vector<std::string>& problems_;
};

inline ScheduleSpec read_schedule(const nlohmann::json& j, const std::string& path, ConfigReader& r,
                                  std::vector<std::string>& problems, double t_final, Transform default_transform) {
  ScheduleSpec s;
  s.t_final = t_final;
  s.transform = default_transform;
  r.allow(j, path, {"family", "n_params", "zeta", "transform", "pulse"});
  std::string family = "linear", transform, pulse;
  r.get(j, path, "family", family);
  try {
    s.family = parse_family(family);
  } catch (const InvalidArgument& e) {
    problems.push_back(path + "family: " + e.what());
  }
  r.get(j, path, "n_params", s.n_params);
  r.get(j, path, "zeta", s.zeta);
  r.get(j, path, "transform", transform);
  if (transform == "identity") {
    s.transform = Transform::Identity;
  } else if (transform == "one_minus") {
    s.transform = Transform::OneMinus;
  } else if (!transform.empty()) {
    problems.push_back(path + "transform: expected identity or one_minus, got '" + transform + "'");
  }
  r.get(j, path, "pulse", pulse);
  if (pulse == "first_half") {
    s.pulse = PulseWindow::FirstHalf;
  } else if (pulse == "second_half") {
    s.pulse = PulseWindow::SecondHalf;
  } else if (!pulse.empty()) {
    problems.push_back(path + "pulse: expected first_half or second_half, got '" + pulse + "'");
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    problems.push_back(path + e.what());
  }
  return s;
}

}  // namespace detail

// SHA-256 of the config with the repetition count removed, so extending a
// run resumes into the same record stream.
inline std::string config_digest(const nlohmann::json& source) {
  nlohmann::json j = source;
  j.erase("repetitions");
  const std::string text = j.dump();  // object keys are sorted
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  std::vector<std::string> problems;
  detail::ConfigReader r(problems);
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError({"config must be a JSON object"});
  c.source = j;

  r.allow(j, "", {"version", "problem", "system", "bath", "schedules", "rydberg", "optimizer", "fom", "n_shots",
                  "repetitions", "base_seed", "theta"});
  int version = kConfigVersion;
  r.get(j, "", "version", version);
  if (version != kConfigVersion) problems.push_back("version: unsupported " + std::to_string(version));

  std::string problem;
  r.get(j, "", "problem", problem);
  if (auto p = enum_parse(problem, problem_names())) {
    c.problem = *p;
  } else {
    problems.push_back("problem: unknown '" + problem + "'");
  }
  const bool pspin = c.problem != Problem::RydbergMIS;

  const nlohmann::json sys = j.value("system", nlohmann::json::object());
  r.allow(sys, "system.", {"n_spins", "p", "gamma", "c", "t_final", "anneal"});
  r.get(sys, "system.", "n_spins", c.system.n_spins);
  r.get(sys, "system.", "p", c.system.p);
  r.get(sys, "system.", "gamma", c.system.gamma);
  r.get(sys, "system.", "c", c.system.c);
  r.get(sys, "system.", "t_final", c.t_final);
  if (!(c.t_final > 0.0)) problems.push_back("system.t_final: must be positive");

  std::string anneal = "qa";
  r.get(sys, "system.", "anneal", anneal);
  switch (c.problem) {
    case Problem::PSpinQA: c.system.mode = PSpinMode::QaDependent; break;
    case Problem::PSpinQAIndependent: c.system.mode = PSpinMode::QaIndependent; break;
    case Problem::PSpinRA: c.system.mode = PSpinMode::ReverseAnnealing; break;
    case Problem::PSpinBangBang: c.system.mode = PSpinMode::BangBang; break;
    case Problem::PSpinAME:
      if (anneal == "qa") {
        c.system.mode = PSpinMode::QaDependent;
      } else if (anneal == "ra") {
        c.system.mode = PSpinMode::ReverseAnnealing;
      } else {
        problems.push_back("system.anneal: expected qa or ra, got '" + anneal + "'");
      }
      break;
    case Problem::RydbergMIS: break;
  }
  c.ame_mode = c.system.mode;
  if (pspin) {
    try {
      c.system.validate();
    } catch (const InvalidArgument& e) {
      problems.push_back(std::string("system: ") + e.what());
    }
  }

  if (c.problem == Problem::PSpinAME) {
    const nlohmann::json b = j.value("bath", nlohmann::json::object());
    r.allow(b, "bath.", {"eta", "beta", "omega_c", "n_levels", "lamb_shift"});
    r.get(b, "bath.", "eta", c.bath.eta);
    r.get(b, "bath.", "beta", c.bath.beta);
    r.get(b, "bath.", "omega_c", c.bath.omega_c);
    r.get(b, "bath.", "n_levels", c.n_levels);
    r.get(b, "bath.", "lamb_shift", c.lamb_shift);
    try {
      c.bath.validate();
    } catch (const InvalidArgument& e) {
      problems.push_back(std::string("bath: ") + e.what());
    }
    if (c.n_levels < 2) problems.push_back("bath.n_levels: must be at least 2");
  }

  // Schedules: QA drives the transverse field from 1 down to 0.
  if (pspin) {
    const std::size_t want = c.system.mode == PSpinMode::QaDependent ? 1 : 2;
    const auto arr = j.value("schedules", nlohmann::json::array());
    if (!arr.is_array() || arr.size() != want) {
      problems.push_back("schedules: expected " + std::to_string(want) + " entries for this problem");
    } else {
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Transform def = Transform::Identity;
        if (c.system.mode == PSpinMode::QaDependent || (c.system.mode == PSpinMode::QaIndependent && i == 0)) {
          def = Transform::OneMinus;
        }
        c.schedules.push_back(detail::read_schedule(arr[i], "schedules[" + std::to_string(i) + "].", r, problems,
                                                    c.t_final, def));
      }
      if (c.system.mode == PSpinMode::BangBang) {
        for (const auto& s : c.schedules) {
          if (s.family != Family::BangBang) problems.push_back("schedules: PSpinBangBang needs bangbang families");
        }
        if (c.schedules.size() == 2) {
          c.schedules[0].pulse = PulseWindow::FirstHalf;
          c.schedules[1].pulse = PulseWindow::SecondHalf;
        }
      }
    }
  } else {
    const nlohmann::json ry = j.value("rydberg", nlohmann::json::object());
    auto& rs = c.rydberg;
    rs.base.t_final = c.t_final;
    rs.base.tau_omega = 0.1 * c.t_final;
    r.allow(ry, "rydberg.", {"graph", "parametrization", "omega_max", "tau_fraction", "delta_i", "delta_f", "c6",
                             "alpha", "detuning_omega_max", "detuning_tau_fraction", "linear_bounds"});
    r.get(ry, "rydberg.", "graph", rs.graph_path);
    if (rs.graph_path.empty()) problems.push_back("rydberg.graph: path required");
    std::string param = "linear";
    r.get(ry, "rydberg.", "parametrization", param);
    if (param == "linear") {
      rs.parametrization = RydbergParametrization::Linear;
    } else if (param == "detuning") {
      rs.parametrization = RydbergParametrization::Detuning;
    } else {
      problems.push_back("rydberg.parametrization: expected linear or detuning, got '" + param + "'");
    }
    r.get(ry, "rydberg.", "omega_max", rs.base.omega_max);
    double tau_fraction = 0.1;
    r.get(ry, "rydberg.", "tau_fraction", tau_fraction);
    rs.base.tau_omega = tau_fraction * c.t_final;
    r.get(ry, "rydberg.", "delta_i", rs.base.delta_i);
    r.get(ry, "rydberg.", "delta_f", rs.base.delta_f);
    r.get(ry, "rydberg.", "c6", rs.base.c6);
    r.get(ry, "rydberg.", "alpha", rs.alpha);
    r.get(ry, "rydberg.", "detuning_omega_max", rs.detuning_omega_max);
    r.get(ry, "rydberg.", "detuning_tau_fraction", rs.detuning_tau_fraction);
    if (ry.contains("linear_bounds")) {
      std::vector<std::vector<double>> b;
      r.get(ry, "rydberg.", "linear_bounds", b);
      if (b.size() != 4) {
        problems.push_back("rydberg.linear_bounds: expected 4 [lo, hi] pairs");
      } else {
        rs.linear_bounds.clear();
        for (const auto& p : b) {
          if (p.size() != 2 || !(p[1] > p[0])) {
            problems.push_back("rydberg.linear_bounds: each entry must be [lo, hi] with lo < hi");
            break;
          }
          rs.linear_bounds.push_back({p[0], p[1]});
        }
      }
    }
    try {
      rs.base.validate();
    } catch (const InvalidArgument& e) {
      problems.push_back(std::string("rydberg: ") + e.what());
    }
    if (rs.parametrization == RydbergParametrization::Detuning) {
      const auto arr = j.value("schedules", nlohmann::json::array());
      if (!arr.is_array() || arr.size() != 1) {
        problems.push_back("schedules: detuning parametrization needs exactly 1 entry");
      } else {
        c.schedules.push_back(detail::read_schedule(arr[0], "schedules[0].", r, problems, 1.0, Transform::Identity));
        const Family f = c.schedules[0].family;
        if (f != Family::Real && f != Family::LowPass && f != Family::Linear) {
          problems.push_back("schedules[0].family: detuning shape must be linear, real or lowpass");
        }
      }
      if (!(c.t_final > 2.0 * rs.detuning_tau_fraction * c.t_final) || rs.detuning_tau_fraction < 0.0) {
        problems.push_back("rydberg.detuning_tau_fraction: must lie in [0, 0.5)");
      }
    }
  }

  // Optimizer.
  const nlohmann::json opt = j.value("optimizer", nlohmann::json::object());
  std::string kind = "BO";
  r.allow(opt, "optimizer.", {"kind", "n_random_init", "probe_linear_first", "n_acquisition_iters", "kappa_start",
                              "kappa_end", "kappa_decay_start", "noise_floor", "n_evals", "spsa_a", "spsa_c",
                              "spsa_A"});
  r.get(opt, "optimizer.", "kind", kind);
  if (auto k = enum_parse(kind, optimizer_names())) {
    c.optimizer = *k;
  } else {
    problems.push_back("optimizer.kind: unknown '" + kind + "'");
  }
  r.get(opt, "optimizer.", "n_random_init", c.bo.n_random_init);
  r.get(opt, "optimizer.", "probe_linear_first", c.bo.probe_linear_first);
  r.get(opt, "optimizer.", "n_acquisition_iters", c.bo.n_acquisition_iters);
  r.get(opt, "optimizer.", "kappa_start", c.bo.kappa_start);
  r.get(opt, "optimizer.", "kappa_end", c.bo.kappa_end);
  r.get(opt, "optimizer.", "kappa_decay_start", c.bo.kappa_decay_start);
  r.get(opt, "optimizer.", "noise_floor", c.bo.noise_floor);
  r.get(opt, "optimizer.", "n_evals", c.n_evals);
  r.get(opt, "optimizer.", "spsa_a", c.spsa.a);
  r.get(opt, "optimizer.", "spsa_c", c.spsa.c);
  if (opt.contains("spsa_A")) {
    double a = 0.0;
    r.get(opt, "optimizer.", "spsa_A", a);
    c.spsa.stability = a;
  }
  if (c.optimizer == OptimizerKind::BO) {
    try {
      c.bo.validate();
    } catch (const InvalidArgument& e) {
      problems.push_back(std::string("optimizer: ") + e.what());
    }
  }
  if (c.optimizer == OptimizerKind::SPSA && c.n_evals < 2) problems.push_back("optimizer.n_evals: SPSA needs >= 2");
  if (c.optimizer == OptimizerKind::Random && c.n_evals < 1) problems.push_back("optimizer.n_evals: must be >= 1");

  // Figure of merit.
  const nlohmann::json fom = j.value("fom", nlohmann::json::object());
  std::string fk = pspin ? "fidelity" : "h_half";
  r.allow(fom, "fom.", {"kind", "x"});
  r.get(fom, "fom.", "kind", fk);
  if (auto f = enum_parse(fk, fom_names())) {
    c.fom = *f;
  } else {
    problems.push_back("fom.kind: unknown '" + fk + "'");
  }
  r.get(fom, "fom.", "x", c.quantile);
  if (c.fom == FomKind::HHalf) c.quantile = 0.5;
  if (!(c.quantile > 0.0 && c.quantile <= 1.0)) problems.push_back("fom.x: must lie in (0, 1]");
  if (pspin && (c.fom == FomKind::PMis || c.fom == FomKind::HHalf)) {
    problems.push_back("fom.kind: " + fk + " requires problem RydbergMIS");
  }
  if (!pspin && c.fom == FomKind::Fidelity) problems.push_back("fom.kind: fidelity is not defined for RydbergMIS");

  if (j.contains("n_shots")) {
    const auto& s = j["n_shots"];
    if (s.is_string() && s.get<std::string>() == "exact") {
      c.n_shots.reset();
    } else if (s.is_number_integer() && s.get<std::int64_t>() > 0) {
      c.n_shots = s.get<std::int64_t>();
    } else {
      problems.push_back("n_shots: expected a positive integer or \"exact\"");
    }
  }
  if (j.contains("repetitions")) {
    const auto& rep = j["repetitions"];
    if (!rep.is_number_integer() || rep.get<std::int64_t>() < 1) {
      problems.push_back("repetitions: must be an integer >= 1");
    } else {
      c.repetitions = rep.get<std::size_t>();
    }
  }
  r.get(j, "", "base_seed", c.base_seed);
  if (j.contains("theta")) {
    std::vector<double> t;
    r.get(j, "", "theta", t);
    c.theta = std::move(t);
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError({"config " + path + " is not valid JSON: " + e.what()});
  }
  ExperimentConfig c = parse_config(j);
  // Graph paths are relative to the config file.
  auto& g = c.rydberg.graph_path;
  if (!g.empty() && std::filesystem::path(g).is_relative()) {
    g = (std::filesystem::path(path).parent_path() / g).lexically_normal().string();
  }
  return c;
}

}  // namespace qabo
