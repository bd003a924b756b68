#pragma once

#include "hyperite/model.hpp"

namespace hyperite {

// phi^1(h^E) - phi^0(h^E) per requested node.
Vec predict_ite(const Model& model, const NetworkedDataset& ds, const std::vector<int>& nodes);

// sqrt((1/n) sum (ite_hat - ite_true)^2)
double pehe(const Vec& ite_hat, const Vec& ite_true);

// |mean(ite_hat) - mean(ite_true)|
double ate_error(const Vec& ite_hat, const Vec& ite_true);

struct MetricsReport {
  std::string variant;
  uint64_t seed = 0;
  std::string split;
  double pehe = 0.0;
  double ate_error = 0.0;
  int n = 0;
  bool failed = false;
  std::string error;
};

struct ExperimentResult {
  std::vector<MetricsReport> rows;
};

// Trains each (variant, seed) on the dataset and evaluates both metrics on
// every split. Failed runs are recorded as rows with failed = true.
ExperimentResult run_experiment(const NetworkedDataset& ds, const TrainConfig& base,
                                const std::vector<Variant>& variants,
                                const std::vector<uint64_t>& seeds, int jobs = 1);

std::vector<MetricsReport> evaluate_model(const Model& model, const NetworkedDataset& ds,
                                          uint64_t seed);

std::string results_to_csv(const std::vector<MetricsReport>& rows);
// per-variant test-split mean/sd of both metrics (+ failure list)
std::string summary_to_json(const std::vector<MetricsReport>& rows);

void write_file_atomically(const std::string& path, const std::string& contents);

}  // namespace hyperite
