#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hyperite/graph.hpp"
#include "hyperite/linalg.hpp"
#include "hyperite/params.hpp"

namespace hyperite {

inline constexpr double kProbClamp = 1e-7;

struct PairSample {
  int center = 0;
  int neighbor = 0;
  int label = 0;  // 1 iff t_center == t_neighbor
};

// p = sigmoid(W_I [h_i ; h_j] + b_I), concatenation ordered (center, neighbor).
double pair_probability(std::span<const double> h_i, std::span<const double> h_j,
                        const DenseMatrix& weight, double bias);

inline int pair_label(int t_i, int t_j) { return t_i == t_j ? 1 : 0; }

// Per center node i: ceil(min(|N_i^1|, |N_i^0|) / 5) neighbors drawn without
// replacement from each treatment side; redrawn per epoch. When `mask` is
// given, both endpoints must satisfy it.
std::vector<PairSample> sample_pairs(const Graph& graph, const std::vector<int>& treatments,
                                     uint64_t seed, int epoch,
                                     const std::vector<uint8_t>& mask = {});

// Mean binary cross-entropy with probabilities clamped to
// [kProbClamp, 1 - kProbClamp]. Empty pair set yields 0 (flagged via *empty).
double relation_loss(const std::vector<PairSample>& pairs, const Vec& probabilities,
                     bool* empty = nullptr);

// Outcome regression networks phi^1 / phi^0: `hidden_layers` ReLU layers of
// width `hidden_dim` plus a scalar output layer, parameters disjoint.
struct OutcomeHeadConfig {
  int input_dim = 50;
  int hidden_dim = 50;
  int hidden_layers = 1;
};

struct MlpCache {
  std::vector<Vec> pre;   // pre-activations per hidden layer
  std::vector<Vec> post;  // post-ReLU per hidden layer
  double output = 0.0;
};

// Head parameter names: "<prefix>.<l>.W" / "<prefix>.<l>.b" with the output
// layer at index hidden_layers.
void add_outcome_head(ParamStore& params, const std::string& prefix, const OutcomeHeadConfig& cfg,
                      uint64_t seed);
double outcome_forward(std::span<const double> h, const std::string& prefix,
                       const OutcomeHeadConfig& cfg, const ParamStore& params,
                       MlpCache* cache = nullptr);
// Returns dL/dh given dL/d(output); accumulates parameter gradients.
Vec outcome_backward(std::span<const double> h, const std::string& prefix,
                     const OutcomeHeadConfig& cfg, ParamStore& params, const MlpCache& cache,
                     double grad_output);

double factual_loss(const Vec& y_hat, const Vec& y, const std::vector<int>& nodes);

struct SinkhornConfig {
  double epsilon = 0.0;        // <= 0 selects epsilon_scale * median off-diagonal cost
  double epsilon_scale = 0.1;
  int max_iters = 100;
  double tol = 1e-9;           // max marginal violation at which iteration stops
};

struct TransportResult {
  double distance = 0.0;       // <P, C>
  DenseMatrix plan;            // n1 x n0
  double epsilon = 0.0;
  bool converged = false;
  int iterations = 0;
  double marginal_error = 0.0;
};

// Squared Euclidean pairwise costs between the two clouds.
DenseMatrix cost_matrix(const DenseMatrix& treated, const DenseMatrix& control);

// Log-domain Sinkhorn with uniform marginals 1/n1 and 1/n0.
TransportResult sinkhorn_distance(const DenseMatrix& treated, const DenseMatrix& control,
                                  const SinkhornConfig& cfg);

// Brute-force optimum for clouds of <= 6 points each: permutation
// enumeration when sizes match, exact assignment on the replicated
// (n1*n0)-point problem otherwise.
double exact_ot_oracle(const DenseMatrix& treated, const DenseMatrix& control);

// Exact min-cost assignment on a square cost matrix (Jonker-Volgenant).
double solve_assignment(const DenseMatrix& cost);

}  // namespace hyperite
