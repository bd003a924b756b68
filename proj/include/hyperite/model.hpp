#pragma once

#include <string>
#include <vector>

#include "hyperite/dataset.hpp"
#include "hyperite/encoder.hpp"
#include "hyperite/heads.hpp"

namespace hyperite {

enum class Variant { kFull, kNoHb, kNoTa, kFeaturesOnly };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct LossWeights {
  double alpha = 1e-2;   // relation loss
  double beta = 1e-4;    // Wasserstein balancing
  double lambda = 1e-5;  // squared l2
};

struct TrainConfig {
  double learning_rate = 1e-2;
  int max_epochs = 300;
  int patience = 30;
  uint64_t seed = 0;
  double curvature = 1e-2;
  int layers = 1;
  int hidden_dim = 50;
  int head_hidden_layers = 1;
  LossWeights weights;
  SinkhornConfig sinkhorn;
  Variant variant = Variant::kFull;
};

// Applies variant semantics: no-hb forces c = 0; no-ta forces alpha = 0 (and
// the relation head is never constructed); features-only additionally drops
// every edge.
TrainConfig resolve_variant(TrainConfig cfg);

std::string config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const std::string& text);

// Per-term coefficients used by the backward pass; training uses
// (1, alpha, beta, lambda), the finite-difference check isolates one term.
struct TermWeights {
  double y = 1.0;
  double t = 0.0;
  double wass = 0.0;
  double l2 = 0.0;
};

struct ForwardPass {
  EncodeCache enc;
  Vec y_hat;  // factual-arm prediction per node
  std::vector<MlpCache> head_cache;
  Vec pair_probs;
  std::vector<int> treated_train, control_train;
  TransportResult transport;
  bool pairs_empty = true;
  double loss_y = 0.0, loss_t = 0.0, wass = 0.0, l2 = 0.0, total = 0.0;
};

struct Model {
  TrainConfig cfg;  // resolved
  int feature_dim = 0;
  OutcomeHeadConfig head_cfg;
  Graph graph;  // effective message-passing graph (empty for features-only)
  ParamStore params;

  bool has_relation_head() const { return params.has("rel.W"); }
  HgcnConfig hgcn_config() const { return {cfg.layers, cfg.hidden_dim, cfg.curvature}; }

  static Model build(const TrainConfig& cfg, const NetworkedDataset& ds);
};

ForwardPass model_forward(const Model& model, const NetworkedDataset& ds,
                          const std::vector<PairSample>& pairs, const std::vector<int>& train_nodes);

// Fills gradient buffers (callers zero them first). Sinkhorn term uses the
// fixed-plan envelope gradient of <P, C>.
void model_backward(Model& model, const NetworkedDataset& ds, const std::vector<PairSample>& pairs,
                    const std::vector<int>& train_nodes, const ForwardPass& fwd,
                    const TermWeights& tw);

struct FdComponentReport {
  std::string component;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct FdReport {
  std::vector<FdComponentReport> components;
  bool pass = true;
};

// Central finite differences (step `step`) over every parameter entry for
// each loss component separately. `corrupt_gradients` perturbs one analytic
// gradient entry, for exercising the failure path.
FdReport finite_difference_check(const NetworkedDataset& ds, const TrainConfig& cfg,
                                 double step = 1e-4, bool corrupt_gradients = false);

}  // namespace hyperite
