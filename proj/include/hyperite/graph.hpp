#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace hyperite {

// Undirected graph in CSR form. Edges are stored once in `edges` and twice
// in the adjacency; self-loops are rejected (aggregation adds them
// implicitly via the augmented degree).
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> offsets;    // size n + 1
  std::vector<int> neighbors;  // size 2|E|

  static Graph from_edges(int n, std::vector<std::pair<int, int>> edges);

  int degree(int i) const { return offsets[i + 1] - offsets[i]; }
  int augmented_degree(int i) const { return degree(i) + 1; }
  std::span<const int> neighbors_of(int i) const {
    return {neighbors.data() + offsets[i], static_cast<size_t>(degree(i))};
  }
  size_t edge_count() const { return edges.size(); }
};

// Preferential attachment with a seed clique on m nodes: each later node
// attaches to m distinct existing nodes with probability proportional to
// degree. Edge count is m(n-m) + C(m,2); the result is connected.
Graph generate_graph(int n, int m, uint64_t seed);

// Least-squares slope of the log-log complementary CDF over degrees >= min_degree,
// returned as the implied density tail exponent (1 - slope).
double fitted_degree_tail_exponent(const Graph& g, int min_degree);

}  // namespace hyperite
