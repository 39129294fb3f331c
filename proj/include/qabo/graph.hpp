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

// Unit-disk graphs on square lattices with diagonal connectivity, exact
// independent-set enumeration, the hardness parameter and canonical forms
// for isomorphism deduplication. Vertex sets are 64-bit masks, so graphs
// handled by the exact routines have at most 64 vertices.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qabo/error.hpp"
#include "qabo/rng.hpp"

namespace qabo {

using VertexMask = std::uint64_t;
using Point2 = std::array<double, 2>;

struct LatticeInfo {
  int rows = 0;
  int cols = 0;
  double spacing = 0.0;    // lattice constant a, micrometers
  std::vector<int> sites;  // occupied site index r * cols + c, one per vertex
};

class UnitDiskGraph {
 public:
  UnitDiskGraph() = default;

  // Edges are every pair closer than radius.
  UnitDiskGraph(std::vector<Point2> positions, double radius, std::optional<LatticeInfo> lattice = std::nullopt)
      : positions_(std::move(positions)), radius_(radius), lattice_(std::move(lattice)) {
    if (!(radius_ > 0.0)) throw InvalidArgument("disk radius must be positive");
    for (int i = 0; i < size(); ++i) {
      for (int j = i + 1; j < size(); ++j) {
        if (distance(i, j) < radius_) edges_.emplace_back(i, j);
      }
    }
    build_adjacency();
  }

  // Explicit edge list; checked against the disk rule.
  UnitDiskGraph(std::vector<Point2> positions, double radius, std::vector<std::pair<int, int>> edges,
                std::optional<LatticeInfo> lattice = std::nullopt)
      : UnitDiskGraph(std::move(positions), radius, std::move(lattice)) {
    std::vector<std::pair<int, int>> given;
    for (auto [i, j] : edges) {
      if (i == j) throw InvalidArgument("self-loop on vertex " + std::to_string(i));
      if (i < 0 || j < 0 || i >= size() || j >= size()) throw InvalidArgument("edge endpoint out of range");
      given.emplace_back(std::min(i, j), std::max(i, j));
    }
    std::sort(given.begin(), given.end());
    given.erase(std::unique(given.begin(), given.end()), given.end());
    if (given != edges_) throw InvalidArgument("edge list disagrees with the disk radius");
  }

  int size() const { return static_cast<int>(positions_.size()); }
  const std::vector<Point2>& positions() const { return positions_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  double radius() const { return radius_; }
  const std::optional<LatticeInfo>& lattice() const { return lattice_; }
  // Neighbour masks; only for graphs with at most 64 vertices.
  const std::vector<VertexMask>& adjacency() const {
    if (size() > 64) throw InvalidArgument("adjacency masks need at most 64 vertices");
    return adjacency_;
  }

  double distance(int i, int j) const {
    return std::hypot(positions_[std::size_t(i)][0] - positions_[std::size_t(j)][0],
                      positions_[std::size_t(i)][1] - positions_[std::size_t(j)][1]);
  }

  // Size of the maximum independent set when known from elsewhere (for
  // graphs too large to enumerate).
  std::optional<int> known_mis_size;

 private:
  void build_adjacency() {
    if (size() > 64) return;
    adjacency_.assign(std::size_t(size()), 0);
    for (auto [i, j] : edges_) {
      adjacency_[std::size_t(i)] |= VertexMask{1} << j;
      adjacency_[std::size_t(j)] |= VertexMask{1} << i;
    }
  }

  std::vector<Point2> positions_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<VertexMask> adjacency_;
  double radius_ = 0.0;
  std::optional<LatticeInfo> lattice_;
};

// Between the diagonal sqrt(2) a and the second-neighbour distance 2 a.
inline double lattice_disk_radius(double a) { return 0.5 * (std::sqrt(2.0) + 2.0) * a; }

inline UnitDiskGraph lattice_graph(int rows, int cols, double a, std::vector<int> sites) {
  if (rows <= 0 || cols <= 0 || !(a > 0.0)) throw InvalidArgument("lattice needs positive rows, cols and spacing");
  std::sort(sites.begin(), sites.end());
  std::vector<Point2> pos;
  for (int s : sites) {
    if (s < 0 || s >= rows * cols) throw InvalidArgument("lattice site " + std::to_string(s) + " out of range");
    pos.push_back({a * double(s % cols), a * double(s / cols)});
  }
  if (std::adjacent_find(sites.begin(), sites.end()) != sites.end()) throw InvalidArgument("duplicate lattice site");
  return UnitDiskGraph(std::move(pos), lattice_disk_radius(a), LatticeInfo{rows, cols, a, std::move(sites)});
}

// Every subset of lattice sites whose size is in node_counts, in
// lexicographic site order.
inline std::vector<UnitDiskGraph> generate_lattice_udgs(int rows, int cols, double a,
                                                         const std::vector<int>& node_counts) {
  const int sites = rows * cols;
  if (rows <= 0 || cols <= 0) throw InvalidArgument("lattice needs positive rows and cols");
  std::vector<UnitDiskGraph> out;
  for (int k : node_counts) {
    if (k < 0 || k > sites) {
      throw InvalidArgument("cannot place " + std::to_string(k) + " nodes on " + std::to_string(sites) + " sites");
    }
    std::vector<int> pick(static_cast<std::size_t>(k));
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      out.push_back(lattice_graph(rows, cols, a, pick));
      int i = k - 1;
      while (i >= 0 && pick[std::size_t(i)] == sites - k + i) --i;
      if (i < 0) break;
      ++pick[std::size_t(i)];
      for (int j = i + 1; j < k; ++j) pick[std::size_t(j)] = pick[std::size_t(j - 1)] + 1;
    }
  }
  return out;
}

// One uniformly random placement of n_nodes sites.
inline UnitDiskGraph random_lattice_udg(int rows, int cols, double a, int n_nodes, std::uint64_t seed) {
  const int sites = rows * cols;
  if (n_nodes < 0 || n_nodes > sites) {
    throw InvalidArgument("cannot place " + std::to_string(n_nodes) + " nodes on " + std::to_string(sites) + " sites");
  }
  Rng rng(seed);
  std::vector<int> all(static_cast<std::size_t>(sites));
  std::iota(all.begin(), all.end(), 0);
  for (int i = 0; i < n_nodes; ++i) {
    const int j = i + static_cast<int>(uniform01(rng) * double(sites - i));
    std::swap(all[std::size_t(i)], all[std::size_t(j)]);
  }
  all.resize(std::size_t(n_nodes));
  return lattice_graph(rows, cols, a, std::move(all));
}

struct MisResult {
  int mis_size = 0;
  std::vector<std::uint64_t> counts;          // counts[M] = independent sets of size M
  std::vector<VertexMask> maximum_sets;       // ascending
};

namespace detail {

inline int highest_degree(VertexMask p, const std::vector<VertexMask>& adj) {
  int best = -1, best_deg = -1;
  for (VertexMask m = p; m; m &= m - 1) {
    const int v = std::countr_zero(m);
    const int deg = std::popcount(adj[std::size_t(v)] & p);
    if (deg > best_deg) {
      best_deg = deg;
      best = v;
    }
  }
  return best_deg > 0 ? best : -1;
}

// Independence polynomial of the induced subgraph on p.
inline void count_independent(VertexMask p, const std::vector<VertexMask>& adj, std::vector<std::uint64_t>& out,
                              int offset) {
  const int v = highest_degree(p, adj);
  if (v < 0) {
    // Edgeless remainder: binomial row.
    const int k = std::popcount(p);
    std::uint64_t c = 1;
    for (int m = 0; m <= k; ++m) {
      out[std::size_t(offset + m)] += c;
      c = c * std::uint64_t(k - m) / std::uint64_t(m + 1);
    }
    return;
  }
  count_independent(p & ~(VertexMask{1} << v), adj, out, offset);
  count_independent(p & ~(adj[std::size_t(v)] | (VertexMask{1} << v)), adj, out, offset + 1);
}

inline void collect_maximum(VertexMask p, VertexMask chosen, const std::vector<VertexMask>& adj, int& best,
                            std::vector<VertexMask>& sets) {
  if (std::popcount(chosen) + std::popcount(p) < best) return;
  const int v = highest_degree(p, adj);
  if (v < 0) {
    const VertexMask s = chosen | p;
    const int size = std::popcount(s);
    if (size > best) {
      best = size;
      sets.clear();
    }
    sets.push_back(s);
    return;
  }
  collect_maximum(p & ~(adj[std::size_t(v)] | (VertexMask{1} << v)), chosen | (VertexMask{1} << v), adj, best, sets);
  collect_maximum(p & ~(VertexMask{1} << v), chosen, adj, best, sets);
}

}  // namespace detail

inline MisResult brute_force_mis(const UnitDiskGraph& g, int max_vertices = 30) {
  const int n = g.size();
  if (n > max_vertices) {
    throw InvalidArgument("exact MIS enumeration limited to " + std::to_string(max_vertices) + " vertices, graph has " +
                          std::to_string(n));
  }
  const auto& adj = g.adjacency();
  const VertexMask all = n == 64 ? ~VertexMask{0} : (VertexMask{1} << n) - 1;
  MisResult r;
  std::vector<std::uint64_t> counts(std::size_t(n) + 1, 0);
  detail::count_independent(all, adj, counts, 0);
  while (counts.size() > 1 && counts.back() == 0) counts.pop_back();
  r.counts = std::move(counts);
  r.mis_size = static_cast<int>(r.counts.size()) - 1;
  int best = 0;
  detail::collect_maximum(all, 0, adj, best, r.maximum_sets);
  std::sort(r.maximum_sets.begin(), r.maximum_sets.end());
  return r;
}

// N_{|MIS|-1} / (|MIS| N_{|MIS|}) as a reduced fraction.
inline std::pair<std::uint64_t, std::uint64_t> hardness_parameter_fraction(const MisResult& r) {
  if (r.mis_size < 1) throw InvalidArgument("hardness parameter undefined for an empty graph");
  std::uint64_t num = r.counts[std::size_t(r.mis_size - 1)];
  std::uint64_t den = std::uint64_t(r.mis_size) * r.counts[std::size_t(r.mis_size)];
  const std::uint64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

inline double hardness_parameter(const MisResult& r) {
  const auto [num, den] = hardness_parameter_fraction(r);
  return double(num) / double(den);
}

inline double hardness_parameter(const UnitDiskGraph& g) { return hardness_parameter(brute_force_mis(g)); }

inline bool is_independent(VertexMask s, const UnitDiskGraph& g) {
  const auto& adj = g.adjacency();
  for (VertexMask m = s; m; m &= m - 1) {
    if (adj[std::size_t(std::countr_zero(m))] & s) return false;
  }
  return true;
}

namespace detail {

// Colour refinement with canonical relabelling: new colours are ranks of
// (old colour, sorted neighbour colours).
inline std::vector<int> refine_colours(std::vector<int> colour, const std::vector<VertexMask>& adj) {
  const std::size_t n = colour.size();
  std::size_t classes = std::set<int>(colour.begin(), colour.end()).size();
  while (true) {
    std::vector<std::pair<int, std::vector<int>>> sig(n);
    for (std::size_t v = 0; v < n; ++v) {
      sig[v].first = colour[v];
      for (VertexMask m = adj[v]; m; m &= m - 1) sig[v].second.push_back(colour[std::size_t(std::countr_zero(m))]);
      std::sort(sig[v].second.begin(), sig[v].second.end());
    }
    auto sorted = sig;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (std::size_t v = 0; v < n; ++v) {
      colour[v] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), sig[v]) - sorted.begin());
    }
    if (sorted.size() == classes) return colour;
    classes = sorted.size();
  }
}

inline std::vector<bool> relabelled_adjacency(const std::vector<int>& order, const std::vector<VertexMask>& adj) {
  // order[v] = new label of v
  const std::size_t n = order.size();
  std::vector<int> inverse(n);
  for (std::size_t v = 0; v < n; ++v) inverse[std::size_t(order[v])] = static_cast<int>(v);
  std::vector<bool> bits;
  bits.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      bits.push_back((adj[std::size_t(inverse[i])] >> inverse[j]) & 1U);
    }
  }
  return bits;
}

inline void canonical_search(const std::vector<int>& colour, const std::vector<VertexMask>& adj,
                             std::optional<std::vector<bool>>& best, std::size_t& leaves, std::size_t max_leaves) {
  const std::size_t n = colour.size();
  std::vector<int> count(n, 0);
  for (int c : colour) ++count[std::size_t(c)];
  int target = -1;
  for (std::size_t c = 0; c < n; ++c) {
    if (count[c] > 1) {
      target = static_cast<int>(c);
      break;
    }
  }
  if (target < 0) {
    if (++leaves > max_leaves) throw Error("canonical form search exceeded its leaf budget");
    auto bits = relabelled_adjacency(colour, adj);
    if (!best || bits < *best) best = std::move(bits);
    return;
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (colour[v] != target) continue;
    // Individualize v: it keeps the cell's rank, the rest move one up.
    std::vector<int> next(n);
    for (std::size_t u = 0; u < n; ++u) next[u] = 2 * colour[u] + ((colour[u] == target && u != v) ? 1 : 0);
    canonical_search(refine_colours(next, adj), adj, best, leaves, max_leaves);
  }
}

}  // namespace detail

// Isomorphism-invariant string: vertex count, then the upper-triangular
// adjacency bits, minimal over all individualization-refinement leaves.
inline std::string canonical_form(const UnitDiskGraph& g, std::size_t max_leaves = 10'000'000) {
  const auto& adj = g.adjacency();
  const std::size_t n = std::size_t(g.size());
  std::optional<std::vector<bool>> best;
  std::size_t leaves = 0;
  if (n > 0) {
    detail::canonical_search(detail::refine_colours(std::vector<int>(n, 0), adj), adj, best, leaves, max_leaves);
  }
  std::string out = std::to_string(n) + ":";
  if (best) {
    for (bool b : *best) out.push_back(b ? '1' : '0');
  }
  return out;
}

inline bool isomorphic(const UnitDiskGraph& a, const UnitDiskGraph& b) {
  return a.size() == b.size() && a.edges().size() == b.edges().size() && canonical_form(a) == canonical_form(b);
}

// Graphs with exactly one maximum independent set, first representative
// of each isomorphism class kept, input order preserved.
inline std::vector<UnitDiskGraph> filter_unique_mis_noniso(const std::vector<UnitDiskGraph>& graphs) {
  std::vector<UnitDiskGraph> out;
  std::set<std::string> seen;
  for (const auto& g : graphs) {
    const MisResult r = brute_force_mis(g);
    if (r.counts[std::size_t(r.mis_size)] != 1) continue;
    if (seen.insert(canonical_form(g)).second) {
      out.push_back(g);
      out.back().known_mis_size = r.mis_size;
    }
  }
  return out;
}

inline std::string mask_to_bitstring(VertexMask m, int n) {
  std::string s(std::size_t(n), '0');
  for (int i = 0; i < n; ++i) {
    if ((m >> i) & 1U) s[std::size_t(i)] = '1';
  }
  return s;
}

inline VertexMask bitstring_to_mask(const std::string& s) {
  if (s.size() > 64) throw InvalidArgument("bitstrings longer than 64 are not supported");
  VertexMask m = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '1') {
      m |= VertexMask{1} << i;
    } else if (s[i] != '0') {
      throw InvalidArgument(std::string("non-binary character '") + s[i] + "' in bitstring");
    }
  }
  return m;
}

// JSON layout: {"version": 1, "positions": [[x, y], ...], "radius": R,
// "edges": [[i, j], ...], "lattice": {...}, "mis_size": k}.
inline nlohmann::json to_json(const UnitDiskGraph& g) {
  nlohmann::json j;
  j["version"] = 1;
  j["positions"] = nlohmann::json::array();
  for (const auto& p : g.positions()) j["positions"].push_back({p[0], p[1]});
  j["radius"] = g.radius();
  j["edges"] = nlohmann::json::array();
  for (auto [a, b] : g.edges()) j["edges"].push_back({a, b});
  if (g.lattice()) {
    j["lattice"] = {{"rows", g.lattice()->rows},
                    {"cols", g.lattice()->cols},
                    {"spacing", g.lattice()->spacing},
                    {"sites", g.lattice()->sites}};
  }
  if (g.known_mis_size) j["mis_size"] = *g.known_mis_size;
  return j;
}

inline UnitDiskGraph graph_from_json(const nlohmann::json& j) {
  try {
    std::vector<Point2> pos;
    for (const auto& p : j.at("positions")) {
      if (p.size() != 2) throw InvalidArgument("positions must be [x, y] pairs");
      pos.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    std::optional<LatticeInfo> lattice;
    if (j.contains("lattice")) {
      const auto& l = j["lattice"];
      lattice = LatticeInfo{l.at("rows").get<int>(), l.at("cols").get<int>(), l.at("spacing").get<double>(),
                            l.value("sites", std::vector<int>{})};
    }
    const double radius = j.at("radius").get<double>();
    UnitDiskGraph g;
    if (j.contains("edges")) {
      std::vector<std::pair<int, int>> edges;
      for (const auto& e : j["edges"]) {
        if (e.size() != 2) throw InvalidArgument("edges must be [i, j] pairs");
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
      }
      g = UnitDiskGraph(std::move(pos), radius, std::move(edges), std::move(lattice));
    } else {
      g = UnitDiskGraph(std::move(pos), radius, std::move(lattice));
    }
    if (j.contains("mis_size")) g.known_mis_size = j["mis_size"].get<int>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed graph JSON: ") + e.what());
  }
}

inline UnitDiskGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("graph file " + path + " is not valid JSON: " + e.what());
  }
  return graph_from_json(j);
}

}  // namespace qabo
