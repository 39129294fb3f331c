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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qabo/graph.hpp"

namespace qabo {
namespace {

constexpr double kSpacing = 5.3;
using Edges = std::vector<std::pair<int, int>>;

UnitDiskGraph triangle() {
  return UnitDiskGraph({{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}}, 1.5);
}

UnitDiskGraph path3() { return UnitDiskGraph({{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}}, 1.5); }

UnitDiskGraph permuted(const UnitDiskGraph& g, const std::vector<int>& order) {
  std::vector<Point2> pos;
  for (int i : order) pos.push_back(g.positions()[std::size_t(i)]);
  return UnitDiskGraph(pos, g.radius());
}

std::vector<UnitDiskGraph> shipped_graphs() {
  std::vector<UnitDiskGraph> out;
  for (int i = 0; i <= 10; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "/configs/graphs/graph_%02d.json", i);
    out.push_back(load_graph(std::string(QABO_SOURCE_DIR) + name));
  }
  return out;
}

TEST(Lattice, ExhaustiveCountAndUniqueFilter) {
  const auto all = generate_lattice_udgs(4, 3, kSpacing, {9, 10});
  ASSERT_EQ(all.size(), 286u);
  EXPECT_EQ(filter_unique_mis_noniso(all).size(), 11u);
}

TEST(Lattice, TwoSitesOneEdge) {
  const auto gs = generate_lattice_udgs(2, 1, kSpacing, {2});
  ASSERT_EQ(gs.size(), 1u);
  ASSERT_EQ(gs[0].edges().size(), 1u);
}

TEST(Lattice, LargeRandomFillHasOnlyShortEdges) {
  const auto g = random_lattice_udg(14, 14, kSpacing, 137, 7);
  ASSERT_EQ(g.size(), 137);
  std::vector<int> degree(137, 0);
  for (auto [i, j] : g.edges()) {
    const double d = g.distance(i, j);
    EXPECT_TRUE(std::abs(d - kSpacing) < 1e-9 || std::abs(d - std::sqrt(2.0) * kSpacing) < 1e-9) << d;
    ++degree[std::size_t(i)];
    ++degree[std::size_t(j)];
  }
  EXPECT_LE(*std::max_element(degree.begin(), degree.end()), 8);
  // Every lattice neighbour pair present is connected.
  std::size_t close = 0;
  for (int i = 0; i < g.size(); ++i) {
    for (int j = i + 1; j < g.size(); ++j) close += g.distance(i, j) < 1.5 * kSpacing;
  }
  EXPECT_EQ(close, g.edges().size());
}

TEST(Lattice, RandomIsSeedDeterministic) {
  EXPECT_EQ(random_lattice_udg(5, 5, 1.0, 12, 3).lattice()->sites, random_lattice_udg(5, 5, 1.0, 12, 3).lattice()->sites);
}

TEST(Lattice, InfeasibleOccupancyThrows) {
  EXPECT_THROW(generate_lattice_udgs(2, 2, 1.0, {5}), InvalidArgument);
  EXPECT_THROW(random_lattice_udg(2, 2, 1.0, 5, 0), InvalidArgument);
  EXPECT_THROW(lattice_graph(2, 2, 1.0, {0, 0}), InvalidArgument);
}

TEST(Filter, SingleEdgeRemoved) {
  const UnitDiskGraph edge({{0.0, 0.0}, {1.0, 0.0}}, 1.5);
  EXPECT_TRUE(filter_unique_mis_noniso({edge}).empty());
}

TEST(Filter, RelabelledCopiesCollapse) {
  const UnitDiskGraph g = path3();
  const auto kept = filter_unique_mis_noniso({g, permuted(g, {1, 2, 0})});
  EXPECT_EQ(kept.size(), 1u);
}

TEST(Mis, HandCounts) {
  const auto k3 = brute_force_mis(triangle());
  EXPECT_EQ(k3.mis_size, 1);
  EXPECT_EQ(k3.counts, (std::vector<std::uint64_t>{1, 3}));

  const auto p3 = brute_force_mis(path3());
  EXPECT_EQ(p3.mis_size, 2);
  EXPECT_EQ(p3.counts, (std::vector<std::uint64_t>{1, 3, 1}));
  EXPECT_EQ(p3.maximum_sets, (std::vector<VertexMask>{0b101}));

  const UnitDiskGraph empty4({{0.0, 0.0}, {10.0, 0.0}, {20.0, 0.0}, {30.0, 0.0}}, 1.0);
  const auto e4 = brute_force_mis(empty4);
  EXPECT_EQ(e4.mis_size, 4);
  for (int m = 0; m <= 4; ++m) EXPECT_EQ(e4.counts[std::size_t(m)], std::uint64_t(std::llround(oracle::binomial(4, m))));
}

TEST(Mis, SizeGuard) {
  const auto g = random_lattice_udg(6, 6, 1.0, 31, 1);
  EXPECT_THROW(brute_force_mis(g), InvalidArgument);
}

TEST(Hardness, HandValues) {
  EXPECT_DOUBLE_EQ(hardness_parameter(triangle()), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(hardness_parameter(path3()), 1.5);
  EXPECT_DOUBLE_EQ(hardness_parameter(UnitDiskGraph({{0.0, 0.0}}, 1.0)), 1.0);
  EXPECT_THROW(hardness_parameter(UnitDiskGraph(std::vector<Point2>{}, 1.0)), InvalidArgument);
  const auto [num, den] = hardness_parameter_fraction(brute_force_mis(path3()));
  EXPECT_EQ(num * 2, den * 3);
}

TEST(Mis, AgreesWithOraclesOnRandomGraphs) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + int(rng() % 20);
    const auto g = random_lattice_udg(5, 5, 1.0, n, rng());
    const auto r = brute_force_mis(g);
    const auto counts = oracle::enumerate_independent(n, g.edges());
    ASSERT_EQ(r.counts, counts) << "trial " << trial;
    ASSERT_EQ(r.mis_size, oracle::BranchAndBound(n, g.edges()).size());
    ASSERT_EQ(r.maximum_sets.size(), counts.back());
    for (VertexMask m : r.maximum_sets) {
      EXPECT_TRUE(is_independent(m, g));
      EXPECT_EQ(std::popcount(m), r.mis_size);
    }
  }
}

TEST(Udg, EdgesFollowRadius) {
  const auto g = random_lattice_udg(4, 4, 2.0, 10, 5);
  for (int i = 0; i < g.size(); ++i) {
    for (int j = i + 1; j < g.size(); ++j) {
      const bool linked = std::find(g.edges().begin(), g.edges().end(), std::pair{i, j}) != g.edges().end();
      EXPECT_EQ(linked, g.distance(i, j) < g.radius());
      EXPECT_EQ(linked, bool((g.adjacency()[std::size_t(i)] >> j) & 1U));
    }
  }
}

TEST(Udg, ExplicitEdgesChecked) {
  const std::vector<Point2> pos{{0.0, 0.0}, {1.0, 0.0}, {5.0, 0.0}};
  EXPECT_NO_THROW(UnitDiskGraph(pos, 1.5, Edges{{1, 0}}));
  EXPECT_THROW(UnitDiskGraph(pos, 1.5, Edges{{0, 2}}), InvalidArgument);
  EXPECT_THROW(UnitDiskGraph(pos, 1.5, Edges{}), InvalidArgument);
  EXPECT_THROW(UnitDiskGraph(pos, 1.5, Edges{{0, 0}}), InvalidArgument);
  EXPECT_THROW(UnitDiskGraph(pos, 0.0), InvalidArgument);
}

TEST(Udg, JsonRoundTrip) {
  auto g = random_lattice_udg(4, 3, kSpacing, 9, 11);
  g.known_mis_size = 4;
  const auto back = graph_from_json(nlohmann::json::parse(to_json(g).dump()));
  EXPECT_EQ(back.positions(), g.positions());
  EXPECT_EQ(back.edges(), g.edges());
  EXPECT_EQ(back.radius(), g.radius());
  ASSERT_TRUE(back.lattice());
  EXPECT_EQ(back.lattice()->sites, g.lattice()->sites);
  EXPECT_EQ(back.known_mis_size, std::optional<int>(4));
  EXPECT_THROW(graph_from_json(nlohmann::json::parse(R"({"radius": 1})")), InvalidArgument);
  EXPECT_THROW(load_graph("/nonexistent/graph.json"), Error);
}

TEST(Udg, Bitstrings) {
  EXPECT_EQ(mask_to_bitstring(0b0110, 4), "0110");
  EXPECT_EQ(mask_to_bitstring(0b0001, 4), "1000");
  EXPECT_EQ(bitstring_to_mask("1000"), 1u);
  for (VertexMask m = 0; m < 64; ++m) EXPECT_EQ(bitstring_to_mask(mask_to_bitstring(m, 6)), m);
  EXPECT_THROW(bitstring_to_mask("01a0"), InvalidArgument);
}

TEST(Canonical, ShippedGraphsDistinctAndLabelFree) {
  const auto gs = shipped_graphs();
  std::mt19937 rng(1);
  std::vector<std::string> forms;
  for (const auto& g : gs) {
    EXPECT_EQ(brute_force_mis(g).maximum_sets.size(), 1u);
    const std::string f = canonical_form(g);
    std::vector<int> order(std::size_t(g.size()));
    std::iota(order.begin(), order.end(), 0);
    for (int k = 0; k < 5; ++k) {
      std::shuffle(order.begin(), order.end(), rng);
      EXPECT_EQ(canonical_form(permuted(g, order)), f);
    }
    forms.push_back(f);
  }
  std::sort(forms.begin(), forms.end());
  EXPECT_EQ(std::unique(forms.begin(), forms.end()), forms.end());
}

TEST(Canonical, DistinguishesPathFromTriangle) {
  EXPECT_FALSE(isomorphic(triangle(), path3()));
  EXPECT_TRUE(isomorphic(path3(), permuted(path3(), {2, 0, 1})));
}

}  // namespace
}  // namespace qabo
