#include "hyperite/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace hyperite {

void AdamOptimizer::step(ParamStore& params) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  if (m_.empty()) {
    for (const Tensor& t : params.tensors()) {
      m_.emplace_back(t.size(), 0.0);
      v_.emplace_back(t.size(), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, t_);
  const double bc2 = 1.0 - std::pow(kBeta2, t_);
  for (size_t ti = 0; ti < params.tensors().size(); ++ti) {
    Tensor& t = params.tensors()[ti];
    for (size_t e = 0; e < t.size(); ++e) {
      const double g = t.grad[e];
      m_[ti][e] = kBeta1 * m_[ti][e] + (1.0 - kBeta1) * g;
      v_[ti][e] = kBeta2 * v_[ti][e] + (1.0 - kBeta2) * g * g;
      const double m_hat = m_[ti][e] / bc1;
      const double v_hat = v_[ti][e] / bc2;
      t.value[e] -= lr_ * m_hat / (std::sqrt(v_hat) + kEps);
    }
  }
}

double total_loss(double loss_y, double loss_t, double wass, double l2, const LossWeights& w) {
  for (double v : {loss_y, loss_t, wass, l2}) {
    if (!std::isfinite(v)) throw std::runtime_error("total_loss: non-finite component");
  }
  return loss_y + w.alpha * loss_t + w.beta * wass + w.lambda * l2;
}

TrainResult train(const NetworkedDataset& ds, const TrainConfig& raw_cfg) {
  const TrainConfig cfg = resolve_variant(raw_cfg);
  TrainResult result{Model::build(cfg, ds)};
  Model& model = result.model;

  const std::vector<int> train_nodes = ds.nodes_in(Split::kTrain);
  const std::vector<int> val_nodes = ds.nodes_in(Split::kVal);
  if (train_nodes.empty() || val_nodes.empty()) {
    throw std::invalid_argument("train: empty train or validation split");
  }
  {
    int treated = 0;
    for (int i : train_nodes) treated += ds.treatment[i];
    if (treated == 0 || treated == static_cast<int>(train_nodes.size())) {
      throw std::invalid_argument("train: degenerate treatment assignment on the training split");
    }
  }
  std::vector<uint8_t> train_mask(ds.graph.n, 0);
  for (int i : train_nodes) train_mask[i] = 1;

  AdamOptimizer opt(cfg.learning_rate);
  const bool use_pairs = cfg.weights.alpha != 0.0 && model.has_relation_head();
  result.best_val_mse = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const std::vector<PairSample> pairs =
        use_pairs ? sample_pairs(model.graph, ds.treatment, cfg.seed, epoch, train_mask)
                  : std::vector<PairSample>{};
    const ForwardPass fwd = model_forward(model, ds, pairs, train_nodes);
    const double val_mse = factual_loss(fwd.y_hat, ds.outcome, val_nodes);
    result.trace.push_back({epoch, fwd.loss_y, fwd.loss_t, fwd.wass, fwd.l2, fwd.total, val_mse});

    if (val_mse < result.best_val_mse) {
      result.best_val_mse = val_mse;
      result.best_epoch = epoch;
      result.best_params = model.params;
    }
    if (epoch - result.best_epoch >= cfg.patience) break;

    model.params.zero_grads();
    const LossWeights& w = cfg.weights;
    model_backward(model, ds, pairs, train_nodes, fwd, {1.0, w.alpha, w.beta, w.lambda});
    std::string offender;
    if (!model.params.grads_finite(&offender)) {
      throw std::runtime_error("train: non-finite gradient in tensor '" + offender + "' at epoch " +
                               std::to_string(epoch));
    }
    opt.step(model.params);
  }
  return result;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
  std::string out = "epoch,loss_y,loss_t,wass,l2,total,val_mse\n";
  for (const TraceRow& r : trace) {
    out += std::to_string(r.epoch);
    for (double v : {r.loss_y, r.loss_t, r.wass, r.l2, r.total, r.val_mse}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_trace(const std::vector<TraceRow>& trace, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_trace: cannot open " + tmp);
    const std::string csv = trace_to_csv(trace);
    out.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    if (!out) throw std::runtime_error("write_trace: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace hyperite
