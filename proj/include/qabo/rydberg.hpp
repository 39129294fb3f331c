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

// Rydberg-atom dynamics on unit-disk graphs and MIS scoring of samples.
//
//   H(t) = (Omega(t) / 2) sum_i X_i - Delta(t) sum_i n_i + sum_{i<j} V_ij n_i n_j
//
// with n = |1><1| (1 = Rydberg) and V_ij = C6 / r_ij^6 over all pairs.
// Basis index bit i is atom i. Frequencies are angular (rad/us), lengths
// micrometers, times microseconds.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "qabo/error.hpp"
#include "qabo/graph.hpp"
#include "qabo/integrator.hpp"
#include "qabo/pspin.hpp"
#include "qabo/rng.hpp"
#include "qabo/schedule.hpp"

namespace qabo {

inline constexpr double kDefaultC6 = 5.42e6;  // Rb-87 70S, rad/us * um^6

inline double blockade_radius(double c6, double omega) {
  if (!(omega > 0.0)) throw InvalidArgument("Rabi frequency must be positive for a blockade radius");
  if (!(c6 > 0.0)) throw InvalidArgument("C6 must be positive");
  return std::pow(c6 / omega, 1.0 / 6.0);
}

// Detuning shape between the ramps: a free schedule (Real or LowPass
// knots) mapped onto [0, 1] of the hold window.
struct DetuningShape {
  ScheduleSpec spec;
  std::vector<double> values;
};

struct RydbergParams {
  double omega_max = 9.0;
  double tau_omega = 0.07;
  double delta_i = -30.0;
  double delta_f = 60.0;
  double c6 = kDefaultC6;
  double t_final = 0.7;
  std::optional<DetuningShape> detuning;  // linear when unset

  void validate() const {
    if (!(t_final > 0.0)) throw InvalidArgument("t_final must be positive");
    if (!(tau_omega >= 0.0) || !(t_final > 2.0 * tau_omega)) {
      throw InvalidArgument("need 0 <= tau_omega and t_final > 2 tau_omega");
    }
    if (!(delta_i < 0.0 && delta_f > 0.0)) throw InvalidArgument("need delta_i < 0 < delta_f");
    if (!(omega_max >= 0.0)) throw InvalidArgument("omega_max must be nonnegative");
    if (!(c6 > 0.0)) throw InvalidArgument("C6 must be positive");
    if (detuning) {
      if (detuning->spec.t_final != 1.0) throw InvalidArgument("detuning shape must be defined on [0, 1]");
      Schedule(detuning->spec, detuning->values);
    }
  }
};

// Trapezoid: ramp up over tau, hold, ramp down over the last tau.
inline double rabi_at(const RydbergParams& p, double t) {
  if (p.tau_omega == 0.0) return p.omega_max;
  const double up = t / p.tau_omega;
  const double down = (p.t_final - t) / p.tau_omega;
  return p.omega_max * std::clamp(std::min(up, down), 0.0, 1.0);
}

// Held at delta_i during the up ramp and at delta_f during the down ramp.
class DetuningProfile {
 public:
  explicit DetuningProfile(const RydbergParams& p) : p_(p) {
    if (p.detuning) shape_.emplace(p.detuning->spec, p.detuning->values);
  }
  double operator()(double t) const {
    const double window = p_.t_final - 2.0 * p_.tau_omega;
    const double x = std::clamp((t - p_.tau_omega) / window, 0.0, 1.0);
    const double u = shape_ ? (*shape_)(x) : x;
    return p_.delta_i + (p_.delta_f - p_.delta_i) * u;
  }

 private:
  RydbergParams p_;
  std::optional<Schedule> shape_;
};

class RydbergModel {
 public:
  RydbergModel(const UnitDiskGraph& g, double c6, int max_atoms = 16) : n_(g.size()) {
    if (n_ > max_atoms) {
      throw InvalidArgument("state-vector simulation limited to " + std::to_string(max_atoms) + " atoms, graph has " +
                            std::to_string(n_));
    }
    if (!(c6 > 0.0)) throw InvalidArgument("C6 must be positive");
    const std::size_t dim = std::size_t{1} << n_;
    occupation_.resize(Eigen::Index(dim));
    interaction_.resize(Eigen::Index(dim));
    std::vector<double> v(std::size_t(n_ * n_), 0.0);
    for (int i = 0; i < n_; ++i) {
      for (int j = i + 1; j < n_; ++j) {
        const double r = g.distance(i, j);
        if (!(r > 0.0)) throw InvalidArgument("two atoms share a position");
        v[std::size_t(i * n_ + j)] = c6 / std::pow(r, 6);
      }
    }
    for (std::size_t b = 0; b < dim; ++b) {
      occupation_[Eigen::Index(b)] = std::popcount(b);
      double e = 0.0;
      for (int i = 0; i < n_; ++i) {
        if (!((b >> i) & 1U)) continue;
        for (int j = i + 1; j < n_; ++j) {
          if ((b >> j) & 1U) e += v[std::size_t(i * n_ + j)];
        }
      }
      interaction_[Eigen::Index(b)] = e;
    }
  }

  int atoms() const { return n_; }
  std::size_t dimension() const { return std::size_t(occupation_.size()); }
  const Eigen::VectorXd& occupation() const { return occupation_; }
  const Eigen::VectorXd& interaction() const { return interaction_; }

  // out = H x
  void apply(double omega, double delta, const StateVector& x, StateVector& out) const {
    const auto dim = x.size();
    out.resize(dim);
    const double half = 0.5 * omega;
    for (Eigen::Index b = 0; b < dim; ++b) {
      cplx acc = (interaction_[b] - delta * occupation_[b]) * x[b];
      if (half != 0.0) {
        cplx flip = 0.0;
        for (int i = 0; i < n_; ++i) flip += x[b ^ (Eigen::Index{1} << i)];
        acc += half * flip;
      }
      out[b] = acc;
    }
  }

  SparseReal hamiltonian(double omega, double delta) const {
    const auto dim = static_cast<Eigen::Index>(dimension());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(std::size_t(dim) * std::size_t(n_ + 1));
    for (Eigen::Index b = 0; b < dim; ++b) {
      trip.emplace_back(b, b, interaction_[b] - delta * occupation_[b]);
      if (omega != 0.0) {
        for (int i = 0; i < n_; ++i) trip.emplace_back(b, b ^ (Eigen::Index{1} << i), 0.5 * omega);
      }
    }
    SparseReal h(dim, dim);
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
  }

 private:
  int n_;
  Eigen::VectorXd occupation_;
  Eigen::VectorXd interaction_;
};

inline SparseReal rydberg_hamiltonian(const UnitDiskGraph& g, double omega, double delta, double c6 = kDefaultC6) {
  return RydbergModel(g, c6).hamiltonian(omega, delta);
}

// Starts in |0...0> and integrates the protocol in RydbergParams.
inline StateVector evolve_rydberg(const RydbergModel& model, const RydbergParams& p,
                                  const IntegratorOptions& opt = schrodinger_integrator_defaults()) {
  p.validate();
  StateVector psi = StateVector::Zero(Eigen::Index(model.dimension()));
  psi[0] = 1.0;
  const DetuningProfile delta(p);
  const cplx minus_i(0.0, -1.0);
  auto rhs = [&](double t, const StateVector& y, StateVector& dy) {
    model.apply(rabi_at(p, t), delta(t), y, dy);
    dy *= minus_i;
  };
  std::vector<double> cuts{p.tau_omega, p.t_final - p.tau_omega};
  if (p.detuning) {
    const double window = p.t_final - 2.0 * p.tau_omega;
    for (double b : Schedule(p.detuning->spec, p.detuning->values).breakpoints()) cuts.push_back(p.tau_omega + b * window);
  }
  return integrate_piecewise(rhs, std::move(psi), 0.0, p.t_final, cuts, opt);
}

inline StateVector evolve_rydberg(const UnitDiskGraph& g, const RydbergParams& p,
                                  const IntegratorOptions& opt = schrodinger_integrator_defaults()) {
  return evolve_rydberg(RydbergModel(g, p.c6), p, opt);
}

// Measurement record: distinct bitstrings (as masks) with shot counts.
class SampleSet {
 public:
  explicit SampleSet(int n_vertices = 0) : n_(n_vertices) {}

  void add(VertexMask m, std::uint64_t count = 1) {
    if (count == 0) throw InvalidArgument("sample counts must be positive");
    if (n_ < 64 && (m >> n_) != 0) throw InvalidArgument("bitstring has bits beyond the vertex count");
    counts_[m] += count;
    total_ += count;
  }

  int vertices() const { return n_; }
  std::uint64_t total_shots() const { return total_; }
  bool empty() const { return total_ == 0; }
  // Ascending by mask.
  const std::map<VertexMask, std::uint64_t>& entries() const { return counts_; }

 private:
  int n_;
  std::map<VertexMask, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

inline SampleSet sample(const StateVector& psi, int n_vertices, std::int64_t n_shots, std::uint64_t seed) {
  if (n_shots <= 0) throw InvalidArgument("n_shots must be positive");
  if (psi.size() != (Eigen::Index{1} << n_vertices)) throw InvalidArgument("state size does not match vertex count");
  std::vector<double> prob(std::size_t(psi.size()));
  for (Eigen::Index i = 0; i < psi.size(); ++i) prob[std::size_t(i)] = std::norm(psi[i]);
  const DiscreteSampler sampler(prob);
  Rng rng(seed);
  std::vector<std::uint64_t> hits(prob.size(), 0);
  for (std::int64_t s = 0; s < n_shots; ++s) ++hits[sampler(rng)];
  SampleSet out(n_vertices);
  for (std::size_t b = 0; b < hits.size(); ++b) {
    if (hits[b]) out.add(VertexMask(b), hits[b]);
  }
  return out;
}

inline double mis_energy(VertexMask x, const UnitDiskGraph& g, double alpha = 1.2) {
  double e = -double(std::popcount(x));
  for (auto [i, j] : g.edges()) {
    if (((x >> i) & 1U) && ((x >> j) & 1U)) e += alpha;
  }
  return e;
}

inline double mis_energy(const std::string& bits, const UnitDiskGraph& g, double alpha = 1.2) {
  if (int(bits.size()) != g.size()) {
    throw InvalidArgument("bitstring length " + std::to_string(bits.size()) + " does not match " +
                          std::to_string(g.size()) + " vertices");
  }
  return mis_energy(bitstring_to_mask(bits), g, alpha);
}

// |MIS| from metadata when present, else by enumeration.
inline int mis_size_of(const UnitDiskGraph& g) {
  if (g.known_mis_size) return *g.known_mis_size;
  return brute_force_mis(g).mis_size;
}

inline void check_samples(const SampleSet& s, const UnitDiskGraph& g) {
  if (s.vertices() != g.size()) throw InvalidArgument("sample width does not match the graph");
}

inline double p_mis(const SampleSet& s, const UnitDiskGraph& g) {
  check_samples(s, g);
  if (s.empty()) return 0.0;
  const int k = mis_size_of(g);
  std::uint64_t hits = 0;
  for (const auto& [m, c] : s.entries()) {
    if (std::popcount(m) == k && is_independent(m, g)) hits += c;
  }
  return double(hits) / double(s.total_shots());
}

// Probability mass of the maximum independent sets in a state.
inline double p_mis_exact(const StateVector& psi, const UnitDiskGraph& g) {
  double p = 0.0;
  for (VertexMask m : brute_force_mis(g).maximum_sets) p += std::norm(psi[Eigen::Index(m)]);
  return p;
}

// Mean MIS energy of the best ceil(x * shots) shots, negated.
inline double fom_top_quantile(const SampleSet& s, const UnitDiskGraph& g, double x, double alpha = 1.2) {
  check_samples(s, g);
  if (s.empty()) throw InvalidArgument("empty sample set");
  if (!(x > 0.0 && x <= 1.0)) throw InvalidArgument("quantile fraction must lie in (0, 1]");
  std::vector<std::pair<double, std::uint64_t>> e;
  for (const auto& [m, c] : s.entries()) e.emplace_back(mis_energy(m, g, alpha), c);
  std::sort(e.begin(), e.end());
  std::uint64_t need = quantile_count(std::size_t(s.total_shots()), x);
  const double k = double(need);
  double sum = 0.0;
  for (const auto& [energy, c] : e) {
    const std::uint64_t take = std::min(c, need);
    sum += energy * double(take);
    need -= take;
    if (need == 0) break;
  }
  return -sum / k;
}

// H_x over the exact measurement distribution of a state.
inline double fom_top_quantile_exact(const StateVector& psi, const UnitDiskGraph& g, double x, double alpha = 1.2) {
  std::vector<double> prob(std::size_t(psi.size())), energy(std::size_t(psi.size()));
  for (Eigen::Index b = 0; b < psi.size(); ++b) {
    prob[std::size_t(b)] = std::norm(psi[b]);
    energy[std::size_t(b)] = mis_energy(VertexMask(b), g, alpha);
  }
  return quantile_fom_exact(prob, energy, x);
}

struct ApproximationRatio {
  double ratio = 0.0;
  bool independent = false;  // whether the best-energy bitstring is an independent set
  double best_energy = 0.0;
  VertexMask best = 0;
};

inline ApproximationRatio approximation_ratio(const SampleSet& s, const UnitDiskGraph& g, double alpha = 1.2) {
  check_samples(s, g);
  if (s.empty()) throw InvalidArgument("empty sample set");
  const int k = mis_size_of(g);
  if (k <= 0) throw InvalidArgument("approximation ratio needs a nonempty MIS");
  ApproximationRatio r;
  r.best_energy = std::numeric_limits<double>::infinity();
  for (const auto& [m, c] : s.entries()) {
    const double e = mis_energy(m, g, alpha);
    if (e < r.best_energy) {
      r.best_energy = e;
      r.best = m;
    }
  }
  r.ratio = std::abs(r.best_energy) / double(k);
  r.independent = is_independent(r.best, g);
  return r;
}

// Per-atom Rydberg population <n_i>.
inline std::vector<double> excitation_probabilities(const StateVector& psi, int n_vertices) {
  std::vector<double> p(std::size_t(n_vertices), 0.0);
  for (Eigen::Index b = 0; b < psi.size(); ++b) {
    const double w = std::norm(psi[b]);
    for (int i = 0; i < n_vertices; ++i) {
      if ((b >> i) & 1) p[std::size_t(i)] += w;
    }
  }
  return p;
}

inline std::vector<double> excitation_probabilities(const SampleSet& s) {
  std::vector<double> p(std::size_t(s.vertices()), 0.0);
  for (const auto& [m, c] : s.entries()) {
    for (int i = 0; i < s.vertices(); ++i) {
      if ((m >> i) & 1U) p[std::size_t(i)] += double(c);
    }
  }
  for (double& v : p) v /= double(std::max<std::uint64_t>(s.total_shots(), 1));
  return p;
}

// Lines are "bitstring [count]"; blank lines and '#' comments are skipped
// and repeated bitstrings are merged.
inline SampleSet parse_samples(std::istream& in, const UnitDiskGraph& g) {
  SampleSet out(g.size());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string bits;
    if (!(ss >> bits)) continue;
    if (int(bits.size()) != g.size()) {
      throw ParseError("bitstring length " + std::to_string(bits.size()) + " does not match " +
                           std::to_string(g.size()) + " vertices",
                       lineno);
    }
    VertexMask m = 0;
    try {
      m = bitstring_to_mask(bits);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), lineno);
    }
    std::uint64_t count = 1;
    std::string tok;
    if (ss >> tok) {
      std::size_t used = 0;
      long long c = 0;
      try {
        c = std::stoll(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || c <= 0) throw ParseError("count '" + tok + "' is not a positive integer", lineno);
      count = std::uint64_t(c);
    }
    if (ss >> tok) throw ParseError("unexpected token '" + tok + "'", lineno);
    out.add(m, count);
  }
  return out;
}

inline SampleSet ingest_samples(const std::string& path, const UnitDiskGraph& g) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open sample file " + path);
  return parse_samples(in, g);
}

}  // namespace qabo
