#pragma once

#include "hyperite/model.hpp"

namespace hyperite {

// Adaptive-moment update (beta1 = 0.9, beta2 = 0.999, eps = 1e-8, bias
// correction on). All trainable parameters are Euclidean tangent-space
// objects, so no manifold retraction is involved.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr) : lr_(lr) {}
  void step(ParamStore& params);
  int step_count() const { return t_; }

 private:
  double lr_;
  int t_ = 0;
  std::vector<Vec> m_, v_;
};

struct TraceRow {
  int epoch = 0;
  double loss_y = 0.0, loss_t = 0.0, wass = 0.0, l2 = 0.0, total = 0.0, val_mse = 0.0;
};

struct TrainResult {
  Model model;             // final parameters
  ParamStore best_params;  // lowest validation factual MSE
  std::vector<TraceRow> trace;
  int best_epoch = -1;
  double best_val_mse = 0.0;
};

double total_loss(double loss_y, double loss_t, double wass, double l2, const LossWeights& w);

// Full-graph training with per-epoch pair resampling and validation-based
// early stopping (stops once patience epochs pass without improvement).
TrainResult train(const NetworkedDataset& ds, const TrainConfig& cfg);

std::string trace_to_csv(const std::vector<TraceRow>& trace);
void write_trace(const std::vector<TraceRow>& trace, const std::string& path);

}  // namespace hyperite
