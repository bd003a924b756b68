#include "hyperite/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "hyperite/rng.hpp"

namespace hyperite {

Graph Graph::from_edges(int n, std::vector<std::pair<int, int>> edges) {
  Graph g;
  g.n = n;
  std::set<std::pair<int, int>> seen;
  for (auto& [a, b] : edges) {
    if (a == b) throw std::invalid_argument("Graph: self-loop " + std::to_string(a));
    if (a < 0 || b < 0 || a >= n || b >= n) throw std::invalid_argument("Graph: node id out of range");
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) throw std::invalid_argument("Graph: duplicate edge");
  }
  g.edges.assign(seen.begin(), seen.end());
  g.offsets.assign(n + 1, 0);
  for (const auto& [a, b] : g.edges) {
    ++g.offsets[a + 1];
    ++g.offsets[b + 1];
  }
  for (int i = 0; i < n; ++i) g.offsets[i + 1] += g.offsets[i];
  g.neighbors.resize(g.edges.size() * 2);
  std::vector<int> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto& [a, b] : g.edges) {
    g.neighbors[cursor[a]++] = b;
    g.neighbors[cursor[b]++] = a;
  }
  for (int i = 0; i < n; ++i) {
    std::sort(g.neighbors.begin() + g.offsets[i], g.neighbors.begin() + g.offsets[i + 1]);
  }
  return g;
}

Graph generate_graph(int n, int m, uint64_t seed) {
  if (m < 1 || n <= m) throw std::invalid_argument("generate_graph: need n > m >= 1");
  Rng rng(stream_seed(seed, "graph"));
  std::vector<std::pair<int, int>> edges;
  std::vector<int> endpoints;  // each stored node appears once per incident edge
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      edges.emplace_back(a, b);
      endpoints.push_back(a);
      endpoints.push_back(b);
    }
  }
  for (int v = m; v < n; ++v) {
    std::set<int> targets;
    while (static_cast<int>(targets.size()) < m) {
      int t;
      if (endpoints.empty()) {
        t = static_cast<int>(rng.uniform_index(v));
      } else {
        t = endpoints[rng.uniform_index(endpoints.size())];
      }
      targets.insert(t);
    }
    for (int t : targets) {
      edges.emplace_back(t, v);
      endpoints.push_back(t);
      endpoints.push_back(v);
    }
  }
  return Graph::from_edges(n, std::move(edges));
}

double fitted_degree_tail_exponent(const Graph& g, int min_degree) {
  std::vector<int> degs(g.n);
  for (int i = 0; i < g.n; ++i) degs[i] = g.degree(i);
  std::sort(degs.begin(), degs.end());
  // empirical CCDF P(D >= k) at each distinct degree k >= min_degree
  std::vector<double> lx, ly;
  for (size_t i = 0; i < degs.size();) {
    const int k = degs[i];
    const double ccdf = static_cast<double>(degs.size() - i) / static_cast<double>(degs.size());
    size_t j = i;
    while (j < degs.size() && degs[j] == k) ++j;
    if (k >= min_degree && k > 0 && ccdf > 0.0) {
      lx.push_back(std::log(static_cast<double>(k)));
      ly.push_back(std::log(ccdf));
    }
    i = j;
  }
  if (lx.size() < 3) throw std::runtime_error("fitted_degree_tail_exponent: too few distinct degrees");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double nn = static_cast<double>(lx.size());
  for (size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  return 1.0 - slope;
}

}  // namespace hyperite
