#include "hyperite/encoder.hpp"

#include <cmath>

namespace hyperite {

using geometry::Curvature;

Vec lift_features(std::span<const double> x, Curvature c) { return geometry::exp_map_origin(x, c); }

Vec hyp_linear(const DenseMatrix& W, std::span<const double> x, Curvature c) {
  const Vec u = geometry::log_map_origin(x, c);
  Vec v(W.rows);
  affine(W, u, {}, v);
  return geometry::exp_map_origin(v, c);
}

Vec hyp_bias_add(std::span<const double> x, std::span<const double> b, Curvature c) {
  Vec out = geometry::mobius_add(x, geometry::exp_map_origin(b, c), c);
  geometry::project_to_ball_inplace(out, c);
  return out;
}

Vec hyp_activation(std::span<const double> x, Curvature c) {
  Vec u = geometry::log_map_origin(x, c);
  relu(u, u);
  return geometry::exp_map_origin(u, c);
}

namespace {

// s_i = sum_{j in N(i) + {i}} w_j / sqrt(d^_i d^_j); symmetric, so it is
// also the backward operator.
DenseMatrix tangent_aggregate(const DenseMatrix& w, const Graph& graph) {
  DenseMatrix s(w.rows, w.cols);
  for (int i = 0; i < graph.n; ++i) {
    const double di = static_cast<double>(graph.augmented_degree(i));
    auto si = s.row(i);
    axpy(1.0 / di, w.row(i), si);
    for (int j : graph.neighbors_of(i)) {
      const double dj = static_cast<double>(graph.augmented_degree(j));
      axpy(1.0 / std::sqrt(di * dj), w.row(j), si);
    }
  }
  return s;
}

void set_row(DenseMatrix& m, int i, const Vec& v) {
  auto r = m.row(i);
  std::copy(v.begin(), v.end(), r.begin());
}

}  // namespace

DenseMatrix aggregate(const DenseMatrix& points, const Graph& graph, Curvature c) {
  DenseMatrix w(points.rows, points.cols);
  for (int i = 0; i < points.rows; ++i) set_row(w, i, geometry::log_map_origin(points.row(i), c));
  DenseMatrix s = tangent_aggregate(w, graph);
  DenseMatrix out(points.rows, points.cols);
  for (int i = 0; i < points.rows; ++i) set_row(out, i, geometry::exp_map_origin(s.row(i), c));
  return out;
}

DenseMatrix hgcn_layer(const DenseMatrix& points, const DenseMatrix& W, std::span<const double> b,
                       const Graph& graph, Curvature c) {
  DenseMatrix h(points.rows, W.rows);
  for (int i = 0; i < points.rows; ++i) {
    Vec p = hyp_linear(W, points.row(i), c);
    p = hyp_bias_add(p, b, c);
    set_row(h, i, p);
  }
  h = aggregate(h, graph, c);
  for (int i = 0; i < h.rows; ++i) set_row(h, i, hyp_activation(h.row(i), c));
  return h;
}

namespace {

DenseMatrix view_as_matrix(const Tensor& t) {
  DenseMatrix m(t.rows, t.cols);
  m.data = t.value;
  return m;
}

}  // namespace

EncodeCache encode(const DenseMatrix& features, const Graph& graph, const HgcnConfig& cfg,
                   const ParamStore& params) {
  const Curvature c(cfg.curvature);
  const int n = features.rows;
  EncodeCache cache;
  cache.x0 = DenseMatrix(n, features.cols);
  for (int i = 0; i < n; ++i) set_row(cache.x0, i, geometry::exp_map_origin(features.row(i), c));

  const DenseMatrix* input = &cache.x0;
  cache.layers.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l) {
    LayerCache& lc = cache.layers[l];
    const std::string prefix = "enc." + std::to_string(l) + ".";
    const Tensor& W = params.get(prefix + "W");
    const Tensor& b = params.get(prefix + "b");
    if (W.cols != input->cols) {
      throw std::invalid_argument("encode: weight shape mismatch at layer " + std::to_string(l));
    }
    const DenseMatrix Wm = view_as_matrix(W);
    const int dout = W.rows;

    lc.u = DenseMatrix(n, input->cols);
    lc.v = DenseMatrix(n, dout);
    lc.p = DenseMatrix(n, dout);
    lc.q_raw = DenseMatrix(n, dout);
    lc.q = DenseMatrix(n, dout);
    lc.w = DenseMatrix(n, dout);
    lc.bias_point = geometry::exp_map_origin(b.value, c);
    for (int i = 0; i < n; ++i) {
      set_row(lc.u, i, geometry::log_map_origin(input->row(i), c));
      affine(Wm, lc.u.row(i), {}, lc.v.row(i));
      set_row(lc.p, i, geometry::exp_map_origin(lc.v.row(i), c));
      set_row(lc.q_raw, i, geometry::mobius_add(lc.p.row(i), lc.bias_point, c));
      set_row(lc.q, i, geometry::project_to_ball(lc.q_raw.row(i), c));
      set_row(lc.w, i, geometry::log_map_origin(lc.q.row(i), c));
    }
    lc.s = tangent_aggregate(lc.w, graph);
    lc.out = DenseMatrix(n, dout);
    for (int i = 0; i < n; ++i) {
      Vec a(dout);
      relu(lc.s.row(i), a);
      set_row(lc.out, i, geometry::exp_map_origin(a, c));
    }
    input = &lc.out;
  }

  cache.h_ball = *input;
  cache.h_tangent = DenseMatrix(n, cache.h_ball.cols);
  for (int i = 0; i < n; ++i) {
    set_row(cache.h_tangent, i, geometry::log_map_origin(cache.h_ball.row(i), c));
  }
  return cache;
}

void encode_backward(const DenseMatrix& grad_h_tangent, const Graph& graph, const HgcnConfig& cfg,
                     ParamStore& params, const EncodeCache& cache) {
  const Curvature c(cfg.curvature);
  const int n = grad_h_tangent.rows;

  // through h^E = log_o(h^B)
  DenseMatrix g_out(n, cache.h_ball.cols);
  for (int i = 0; i < n; ++i) {
    set_row(g_out, i, geometry::log_origin_vjp(cache.h_ball.row(i), grad_h_tangent.row(i), c));
  }

  for (int l = cfg.layers - 1; l >= 0; --l) {
    const LayerCache& lc = cache.layers[l];
    const std::string prefix = "enc." + std::to_string(l) + ".";
    Tensor& W = params.get(prefix + "W");
    Tensor& b = params.get(prefix + "b");
    const DenseMatrix Wm = view_as_matrix(W);
    const int dout = W.rows;
    const DenseMatrix& input = l == 0 ? cache.x0 : cache.layers[l - 1].out;

    // activation: out = exp_o(relu(s))
    DenseMatrix g_s(n, dout);
    for (int i = 0; i < n; ++i) {
      Vec a(dout);
      relu(lc.s.row(i), a);
      const Vec g_a = geometry::exp_origin_vjp(a, g_out.row(i), c);
      auto gsi = g_s.row(i);
      const auto si = lc.s.row(i);
      for (int k = 0; k < dout; ++k) gsi[k] = si[k] > 0.0 ? g_a[k] : 0.0;
    }

    // aggregation is self-adjoint
    const DenseMatrix g_w = tangent_aggregate(g_s, graph);

    // w = log_o(project(p (+) exp_o(b)))
    Vec g_bias_point(dout, 0.0);
    DenseMatrix g_p(n, dout);
    DenseMatrix g_input(n, input.cols);
    DenseMatrix grad_W(W.rows, W.cols);
    for (int i = 0; i < n; ++i) {
      const Vec g_q = geometry::log_origin_vjp(lc.q.row(i), g_w.row(i), c);
      const Vec g_qraw = geometry::project_vjp(lc.q_raw.row(i), g_q, c);
      Vec g_eb(dout);
      geometry::mobius_add_vjp(lc.p.row(i), lc.bias_point, g_qraw, c, g_p.row(i), g_eb);
      axpy(1.0, g_eb, g_bias_point);

      // p = exp_o(W log_o(x))
      const Vec g_v = geometry::exp_origin_vjp(lc.v.row(i), g_p.row(i), c);
      outer_accumulate(grad_W, g_v, lc.u.row(i));
      Vec g_u(input.cols);
      matvec_transposed(Wm, g_v, g_u);
      set_row(g_input, i, geometry::log_origin_vjp(input.row(i), g_u, c));
    }
    axpy(1.0, grad_W.data, W.grad);
    const Vec g_b = geometry::exp_origin_vjp(b.value, g_bias_point, c);
    axpy(1.0, g_b, b.grad);

    g_out = std::move(g_input);
    if (l == 0) break;  // x0 = exp_o(features); features are data, not parameters
  }
}

}  // namespace hyperite
