#pragma once

#include "hyperite/geometry.hpp"
#include "hyperite/graph.hpp"
#include "hyperite/params.hpp"

namespace hyperite {

struct HgcnConfig {
  int layers = 1;      // l_m
  int hidden_dim = 50; // d'
  double curvature = 0.0;
};

// Per-layer intermediates kept for the backward pass. Stage order inside a
// layer is linear -> bias -> aggregate -> activate, all in the chart at the
// origin.
struct LayerCache {
  DenseMatrix u;      // log_o of layer input
  DenseMatrix v;      // W u
  DenseMatrix p;      // exp_o(v)
  Vec bias_point;     // exp_o(b)
  DenseMatrix q_raw;  // p (+) exp_o(b), before projection
  DenseMatrix q;      // projected
  DenseMatrix w;      // log_o(q)
  DenseMatrix s;      // aggregated tangent vectors
  DenseMatrix out;    // exp_o(relu(s))
};

struct EncodeCache {
  DenseMatrix x0;  // lifted input ball points
  std::vector<LayerCache> layers;
  DenseMatrix h_ball;     // final ball points h^B
  DenseMatrix h_tangent;  // h^E = log_o(h^B)
};

// Single-point helpers: the lift / linear / bias / activation layer ops.
Vec lift_features(std::span<const double> x, geometry::Curvature c);
Vec hyp_linear(const DenseMatrix& W, std::span<const double> x, geometry::Curvature c);
Vec hyp_bias_add(std::span<const double> x, std::span<const double> b, geometry::Curvature c);
Vec hyp_activation(std::span<const double> x, geometry::Curvature c);

// Symmetric-normalized tangent-space aggregation with implicit self-loops:
// out_i = exp_o( sum_{j in N(i) + {i}} log_o(x_j) / sqrt(d^_i d^_j) ).
DenseMatrix aggregate(const DenseMatrix& points, const Graph& graph, geometry::Curvature c);

DenseMatrix hgcn_layer(const DenseMatrix& points, const DenseMatrix& W, std::span<const double> b,
                       const Graph& graph, geometry::Curvature c);

// Full encoder: features -> (h^B, h^E). Layer l parameters are named
// "enc.<l>.W" / "enc.<l>.b" in the store.
EncodeCache encode(const DenseMatrix& features, const Graph& graph, const HgcnConfig& cfg,
                   const ParamStore& params);

// Backpropagates dL/dh^E into the encoder parameter gradients.
void encode_backward(const DenseMatrix& grad_h_tangent, const Graph& graph, const HgcnConfig& cfg,
                     ParamStore& params, const EncodeCache& cache);

}  // namespace hyperite
