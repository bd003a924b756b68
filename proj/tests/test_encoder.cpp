#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>

#include "hyperite/encoder.hpp"
#include "hyperite/rng.hpp"

using namespace hyperite;
using geometry::Curvature;

namespace {

DenseMatrix identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

DenseMatrix random_features(Rng& rng, int n, int d, double scale) {
  DenseMatrix x(n, d);
  for (double& v : x.data) v = scale * rng.normal();
  return x;
}

}  // namespace

TEST_CASE("identity layer on an isolated node is the identity") {
  // W = I, b = 0, no neighbors, non-negative coordinates: every stage of the
  // layer reduces to the identity map.
  Graph g = Graph::from_edges(1, {});
  Curvature c(0.7);
  DenseMatrix pts(1, 3);
  pts.at(0, 0) = 0.1;
  pts.at(0, 1) = 0.0;
  pts.at(0, 2) = 0.25;
  Vec b(3, 0.0);
  DenseMatrix out = hgcn_layer(pts, identity(3), b, g, c);
  for (int j = 0; j < 3; ++j) CHECK(out.at(0, j) == doctest::Approx(pts.at(0, j)).epsilon(1e-12));
}

TEST_CASE("aggregation fixes isolated nodes and uses 1/sqrt(d^_i d^_j) weights") {
  Curvature c0(0.0);
  // 0 - 1 edge plus isolated node 2; at c = 0 aggregation is plain averaging
  // with the augmented-degree normalization.
  Graph g = Graph::from_edges(3, {{0, 1}});
  DenseMatrix pts(3, 2);
  pts.at(0, 0) = 1.0;
  pts.at(1, 0) = 2.0;
  pts.at(1, 1) = -4.0;
  pts.at(2, 1) = 3.0;
  DenseMatrix out = aggregate(pts, g, c0);
  // d^_0 = d^_1 = 2: out_0 = p_0 / 2 + p_1 / 2
  CHECK(out.at(0, 0) == doctest::Approx(1.5));
  CHECK(out.at(0, 1) == doctest::Approx(-2.0));
  CHECK(out.at(1, 0) == doctest::Approx(1.5));
  // isolated node: alpha_ii = 1 / d^_i = 1
  CHECK(out.at(2, 1) == doctest::Approx(3.0));
}

TEST_CASE("c = 0 encoder equals a plain GCN layer") {
  Rng rng(5);
  int n = 7, d = 4, dh = 3;
  Graph g = generate_graph(n, 2, 11);
  DenseMatrix x = random_features(rng, n, d, 0.5);

  ParamStore params;
  params.add_matrix("enc.0.W", dh, d, stream_seed(1, "enc.0.W"));
  params.add_bias("enc.0.b", dh);
  Tensor& b = params.get("enc.0.b");
  for (double& v : b.value) v = 0.1 * rng.normal();

  HgcnConfig cfg{1, dh, 0.0};
  EncodeCache cache = encode(x, g, cfg, params);

  // manual GCN: relu(A_hat (x W^T + b)) with A_hat the sym-normalized
  // adjacency including self-loops
  const DenseMatrix& W = [&]() -> const DenseMatrix& {
    static DenseMatrix w;
    w = DenseMatrix(dh, d);
    const Tensor& t = params.get("enc.0.W");
    w.data = t.value;
    return w;
  }();
  DenseMatrix lin(n, dh);
  for (int i = 0; i < n; ++i) affine(W, x.row(i), b.value, lin.row(i));
  for (int i = 0; i < n; ++i) {
    Vec agg(dh, 0.0);
    double di = g.augmented_degree(i);
    axpy(1.0 / di, lin.row(i), agg);
    for (int j : g.neighbors_of(i))
      axpy(1.0 / std::sqrt(di * g.augmented_degree(j)), lin.row(j), agg);
    for (int k = 0; k < dh; ++k)
      CHECK(cache.h_tangent.at(i, k) == doctest::Approx(std::max(agg[k], 0.0)).epsilon(1e-10));
  }
}

TEST_CASE("encoder is equivariant to node relabeling") {
  Rng rng(21);
  int n = 8, d = 5, dh = 4;
  Graph g = generate_graph(n, 2, 3);
  DenseMatrix x = random_features(rng, n, d, 0.4);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng shuf(77);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[shuf.uniform_index(i + 1)]);

  std::vector<std::pair<int, int>> pedges;
  for (auto [u, v] : g.edges) pedges.push_back({perm[u], perm[v]});
  Graph gp = Graph::from_edges(n, pedges);
  DenseMatrix xp(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) xp.at(perm[i], j) = x.at(i, j);

  ParamStore params;
  params.add_matrix("enc.0.W", dh, d, stream_seed(9, "enc.0.W"));
  params.add_bias("enc.0.b", dh);

  HgcnConfig cfg{1, dh, 0.05};
  EncodeCache a = encode(x, g, cfg, params);
  EncodeCache bres = encode(xp, gp, cfg, params);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < dh; ++k)
      CHECK(a.h_tangent.at(i, k) == doctest::Approx(bres.h_tangent.at(perm[i], k)).epsilon(1e-10));
}

TEST_CASE("outputs stay inside the ball") {
  Rng rng(13);
  int n = 10, d = 6, dh = 5;
  Graph g = generate_graph(n, 2, 4);
  DenseMatrix x = random_features(rng, n, d, 3.0);  // large inputs
  ParamStore params;
  for (int l = 0; l < 2; ++l) {
    params.add_matrix("enc." + std::to_string(l) + ".W", dh, l == 0 ? d : dh,
                      stream_seed(2, "enc.W", l));
    params.add_bias("enc." + std::to_string(l) + ".b", dh);
  }
  HgcnConfig cfg{2, dh, 1.0};
  Curvature c(1.0);
  EncodeCache cache = encode(x, g, cfg, params);
  for (int i = 0; i < n; ++i) CHECK(norm(cache.h_ball.row(i)) <= c.max_norm() + 1e-12);
}

TEST_CASE("encode_backward matches finite differences") {
  Rng rng(31);
  int n = 6, d = 3, dh = 3;
  Graph g = generate_graph(n, 2, 8);
  DenseMatrix x = random_features(rng, n, d, 0.5);

  for (double cc : {0.0, 0.3}) {
    for (int layers : {1, 2}) {
      ParamStore params;
      for (int l = 0; l < layers; ++l) {
        params.add_matrix("enc." + std::to_string(l) + ".W", dh, l == 0 ? d : dh,
                          stream_seed(6, "enc.W", l));
        Tensor& b = params.add_bias("enc." + std::to_string(l) + ".b", dh);
        for (double& v : b.value) v = 0.05 * rng.normal();
      }
      HgcnConfig cfg{layers, dh, cc};

      // scalar objective: sum of g_ik * h_ik for fixed random g
      DenseMatrix gmat(n, dh);
      for (double& v : gmat.data) v = rng.normal();
      auto objective = [&]() {
        EncodeCache cache = encode(x, g, cfg, params);
        double s = 0.0;
        for (size_t q = 0; q < gmat.data.size(); ++q) s += gmat.data[q] * cache.h_tangent.data[q];
        return s;
      };

      params.zero_grads();
      EncodeCache cache = encode(x, g, cfg, params);
      encode_backward(gmat, g, cfg, params, cache);

      const double h = 1e-5;
      for (Tensor& t : params.tensors()) {
        for (size_t q = 0; q < t.value.size(); ++q) {
          double orig = t.value[q];
          t.value[q] = orig + h;
          double fp = objective();
          t.value[q] = orig - h;
          double fm = objective();
          t.value[q] = orig;
          double fd = (fp - fm) / (2.0 * h);
          double an = t.grad[q];
          CHECK(std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1.0}) < 2e-5);
        }
      }
    }
  }
}
