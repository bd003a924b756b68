#pragma once

#include <optional>
#include <string>

#include "hyperite/graph.hpp"
#include "hyperite/linalg.hpp"

namespace hyperite {

enum class Split : int { kTrain = 0, kVal = 1, kTest = 2 };

struct GeneratorConfig {
  int n = 300;
  int m = 3;           // preferential-attachment parameter
  int feature_dim = 50;
  int confounder_dim = 5;
  double k = 1.0;      // neighbor-confounding strength
  double treatment_scale = 1.0;   // a
  double base_effect = 1.0;       // c0
  double feature_noise = 0.1;     // sigma_x
  double outcome_noise = 0.1;     // sigma_y
  uint64_t seed = 0;
};

struct NetworkedDataset {
  Graph graph;
  DenseMatrix features;       // n x d
  std::vector<int> treatment; // 0/1
  Vec outcome;                // factual y_i
  bool has_ground_truth = false;
  Vec y0, y1, ite;
  std::vector<int> split;     // Split values, one per node
  GeneratorConfig meta;

  std::vector<int> nodes_in(Split s) const;
};

NetworkedDataset generate_observational(const Graph& graph, const GeneratorConfig& cfg);

// 60/20/20 seeded shuffle split: floor(0.6n) / floor(0.2n) / remainder.
std::vector<int> split_nodes(int n, uint64_t seed);

void save_dataset(const NetworkedDataset& ds, const std::string& directory);
NetworkedDataset load_dataset(const std::string& directory);

// Shortest round-trip decimal representation (std::to_chars).
std::string format_double(double v);

}  // namespace hyperite
