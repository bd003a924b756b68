#include "hyperite/heads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hyperite/rng.hpp"

namespace hyperite {

double pair_probability(std::span<const double> h_i, std::span<const double> h_j,
                        const DenseMatrix& weight, double bias) {
  if (weight.rows != 1 || static_cast<size_t>(weight.cols) != h_i.size() + h_j.size()) {
    throw std::invalid_argument("pair_probability: weight shape mismatch");
  }
  double logit = bias;
  for (size_t k = 0; k < h_i.size(); ++k) logit += weight.data[k] * h_i[k];
  for (size_t k = 0; k < h_j.size(); ++k) logit += weight.data[h_i.size() + k] * h_j[k];
  return sigmoid(logit);
}

std::vector<PairSample> sample_pairs(const Graph& graph, const std::vector<int>& treatments,
                                     uint64_t seed, int epoch, const std::vector<uint8_t>& mask) {
  if (static_cast<int>(treatments.size()) != graph.n) {
    throw std::invalid_argument("sample_pairs: treatments size mismatch");
  }
  Rng rng(stream_seed(seed, "pairs", static_cast<uint64_t>(epoch)));
  std::vector<PairSample> out;
  std::vector<int> side[2];
  for (int i = 0; i < graph.n; ++i) {
    if (!mask.empty() && !mask[i]) continue;
    side[0].clear();
    side[1].clear();
    for (int j : graph.neighbors_of(i)) {
      if (!mask.empty() && !mask[j]) continue;
      side[treatments[j]].push_back(j);
    }
    const size_t smaller = std::min(side[0].size(), side[1].size());
    if (smaller == 0) continue;
    const auto n_s = static_cast<size_t>(std::ceil(static_cast<double>(smaller) / 5.0));
    for (int t : {1, 0}) {
      auto& pool = side[t];
      // partial Fisher-Yates: first n_s entries are a uniform draw without replacement
      for (size_t k = 0; k < n_s; ++k) {
        const size_t j = k + rng.uniform_index(pool.size() - k);
        std::swap(pool[k], pool[j]);
        out.push_back({i, pool[k], pair_label(treatments[i], treatments[pool[k]])});
      }
    }
  }
  return out;
}

double relation_loss(const std::vector<PairSample>& pairs, const Vec& probabilities, bool* empty) {
  if (empty) *empty = pairs.empty();
  if (pairs.empty()) return 0.0;
  if (pairs.size() != probabilities.size()) {
    throw std::invalid_argument("relation_loss: size mismatch");
  }
  double loss = 0.0;
  for (size_t k = 0; k < pairs.size(); ++k) {
    const double p = std::clamp(probabilities[k], kProbClamp, 1.0 - kProbClamp);
    loss -= pairs[k].label ? std::log(p) : std::log(1.0 - p);
  }
  return loss / static_cast<double>(pairs.size());
}

void add_outcome_head(ParamStore& params, const std::string& prefix, const OutcomeHeadConfig& cfg,
                      uint64_t seed) {
  int in = cfg.input_dim;
  for (int l = 0; l < cfg.hidden_layers; ++l) {
    const std::string p = prefix + "." + std::to_string(l) + ".";
    params.add_matrix(p + "W", cfg.hidden_dim, in, seed);
    params.add_bias(p + "b", cfg.hidden_dim);
    in = cfg.hidden_dim;
  }
  const std::string p = prefix + "." + std::to_string(cfg.hidden_layers) + ".";
  params.add_matrix(p + "W", 1, in, seed);
  params.add_bias(p + "b", 1);
}

double outcome_forward(std::span<const double> h, const std::string& prefix,
                       const OutcomeHeadConfig& cfg, const ParamStore& params, MlpCache* cache) {
  Vec cur(h.begin(), h.end());
  MlpCache local;
  MlpCache& c = cache ? *cache : local;
  c.pre.assign(cfg.hidden_layers, {});
  c.post.assign(cfg.hidden_layers, {});
  for (int l = 0; l < cfg.hidden_layers; ++l) {
    const std::string p = prefix + "." + std::to_string(l) + ".";
    const Tensor& W = params.get(p + "W");
    const Tensor& b = params.get(p + "b");
    DenseMatrix Wm(W.rows, W.cols);
    Wm.data = W.value;
    Vec pre(W.rows);
    affine(Wm, cur, b.value, pre);
    c.pre[l] = pre;
    relu(pre, pre);
    c.post[l] = pre;
    cur = std::move(pre);
  }
  const std::string p = prefix + "." + std::to_string(cfg.hidden_layers) + ".";
  const Tensor& W = params.get(p + "W");
  const Tensor& b = params.get(p + "b");
  double out = b.value[0];
  for (int k = 0; k < W.cols; ++k) out += W.value[k] * cur[k];
  c.output = out;
  return out;
}

Vec outcome_backward(std::span<const double> h, const std::string& prefix,
                     const OutcomeHeadConfig& cfg, ParamStore& params, const MlpCache& cache,
                     double grad_output) {
  const std::string po = prefix + "." + std::to_string(cfg.hidden_layers) + ".";
  Tensor& Wo = params.get(po + "W");
  Tensor& bo = params.get(po + "b");
  std::span<const double> last =
      cfg.hidden_layers > 0 ? std::span<const double>(cache.post.back()) : h;
  for (int k = 0; k < Wo.cols; ++k) Wo.grad[k] += grad_output * last[k];
  bo.grad[0] += grad_output;

  Vec g(Wo.cols);
  for (int k = 0; k < Wo.cols; ++k) g[k] = grad_output * Wo.value[k];

  for (int l = cfg.hidden_layers - 1; l >= 0; --l) {
    const std::string p = prefix + "." + std::to_string(l) + ".";
    Tensor& W = params.get(p + "W");
    Tensor& b = params.get(p + "b");
    // through ReLU
    for (int k = 0; k < W.rows; ++k)
      if (cache.pre[l][k] <= 0.0) g[k] = 0.0;
    const std::span<const double> in = l > 0 ? std::span<const double>(cache.post[l - 1]) : h;
    for (int r = 0; r < W.rows; ++r) {
      b.grad[r] += g[r];
      for (int cidx = 0; cidx < W.cols; ++cidx) {
        W.grad[static_cast<size_t>(r) * W.cols + cidx] += g[r] * in[cidx];
      }
    }
    Vec g_in(W.cols, 0.0);
    for (int r = 0; r < W.rows; ++r) {
      for (int cidx = 0; cidx < W.cols; ++cidx) {
        g_in[cidx] += W.value[static_cast<size_t>(r) * W.cols + cidx] * g[r];
      }
    }
    g = std::move(g_in);
  }
  return g;
}

double factual_loss(const Vec& y_hat, const Vec& y, const std::vector<int>& nodes) {
  if (nodes.empty()) throw std::invalid_argument("factual_loss: empty node mask");
  double s = 0.0;
  for (int i : nodes) {
    const double d = y_hat[i] - y[i];
    s += d * d;
  }
  return s / static_cast<double>(nodes.size());
}

DenseMatrix cost_matrix(const DenseMatrix& treated, const DenseMatrix& control) {
  DenseMatrix C(treated.rows, control.rows);
  for (int i = 0; i < treated.rows; ++i) {
    for (int j = 0; j < control.rows; ++j) {
      double s = 0.0;
      const auto a = treated.row(i);
      const auto b = control.row(j);
      for (int k = 0; k < treated.cols; ++k) {
        const double d = a[k] - b[k];
        s += d * d;
      }
      C.at(i, j) = s;
    }
  }
  return C;
}

namespace {

double log_sum_exp(const Vec& x) {
  const double mx = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}

double median_cost(const DenseMatrix& C) {
  Vec vals;
  vals.reserve(C.data.size());
  for (int i = 0; i < C.rows; ++i)
    for (int j = 0; j < C.cols; ++j)
      if (i != j) vals.push_back(C.at(i, j));
  if (vals.empty()) vals = C.data;
  const size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
  return vals[mid];
}

}  // namespace

TransportResult sinkhorn_distance(const DenseMatrix& treated, const DenseMatrix& control,
                                  const SinkhornConfig& cfg) {
  const int n1 = treated.rows;
  const int n0 = control.rows;
  if (n1 == 0 || n0 == 0) {
    throw std::invalid_argument("sinkhorn_distance: empty cloud (degenerate treatment assignment)");
  }
  const DenseMatrix C = cost_matrix(treated, control);

  TransportResult res;
  res.epsilon = cfg.epsilon > 0.0 ? cfg.epsilon
                                  : std::max(cfg.epsilon_scale * median_cost(C), 1e-12);
  const double eps = res.epsilon;
  const double log_mu = -std::log(static_cast<double>(n1));
  const double log_nu = -std::log(static_cast<double>(n0));

  Vec f(n1, 0.0), g(n0, 0.0);
  Vec buf(std::max(n1, n0));
  for (int it = 0; it < cfg.max_iters; ++it) {
    // g update (columns), then f update (rows): row marginals end exact.
    for (int j = 0; j < n0; ++j) {
      buf.resize(n1);
      for (int i = 0; i < n1; ++i) buf[i] = (f[i] - C.at(i, j)) / eps;
      g[j] = eps * (log_nu - log_sum_exp(buf));
    }
    for (int i = 0; i < n1; ++i) {
      buf.resize(n0);
      for (int j = 0; j < n0; ++j) buf[j] = (g[j] - C.at(i, j)) / eps;
      f[i] = eps * (log_mu - log_sum_exp(buf));
    }
    res.iterations = it + 1;

    double err = 0.0;
    for (int j = 0; j < n0; ++j) {
      double col = 0.0;
      for (int i = 0; i < n1; ++i) col += std::exp((f[i] + g[j] - C.at(i, j)) / eps);
      err = std::max(err, std::abs(col - 1.0 / n0));
    }
    res.marginal_error = err;
    if (err < cfg.tol) {
      res.converged = true;
      break;
    }
  }

  res.plan = DenseMatrix(n1, n0);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n0; ++j) res.plan.at(i, j) = std::exp((f[i] + g[j] - C.at(i, j)) / eps);

  // Round onto the transport polytope: scale overfull rows/columns down to
  // their marginals, then patch the nonnegative residual with a rank-one
  // correction. The iterates plateau around 1e-6 marginal violation at small
  // epsilon (double-precision limit of the log-domain updates); the rounded
  // plan is exactly feasible.
  const double mu = 1.0 / n1, nu = 1.0 / n0;
  for (int i = 0; i < n1; ++i) {
    double row = 0.0;
    for (int j = 0; j < n0; ++j) row += res.plan.at(i, j);
    if (row > mu) {
      const double r = mu / row;
      for (int j = 0; j < n0; ++j) res.plan.at(i, j) *= r;
    }
  }
  Vec col_sum(n0, 0.0);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n0; ++j) col_sum[j] += res.plan.at(i, j);
  for (int j = 0; j < n0; ++j) {
    if (col_sum[j] > nu) {
      const double r = nu / col_sum[j];
      for (int i = 0; i < n1; ++i) res.plan.at(i, j) *= r;
    }
  }
  Vec row_def(n1, 0.0), col_def(n0, 0.0);
  double total_def = 0.0;
  std::fill(col_sum.begin(), col_sum.end(), 0.0);
  for (int i = 0; i < n1; ++i) {
    double row = 0.0;
    for (int j = 0; j < n0; ++j) {
      row += res.plan.at(i, j);
      col_sum[j] += res.plan.at(i, j);
    }
    row_def[i] = mu - row;
    total_def += row_def[i];
  }
  for (int j = 0; j < n0; ++j) col_def[j] = nu - col_sum[j];
  if (total_def > 0.0) {
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n0; ++j) res.plan.at(i, j) += row_def[i] * col_def[j] / total_def;
  }

  res.distance = 0.0;
  double err = 0.0;
  std::fill(col_sum.begin(), col_sum.end(), 0.0);
  for (int i = 0; i < n1; ++i) {
    double row = 0.0;
    for (int j = 0; j < n0; ++j) {
      res.distance += res.plan.at(i, j) * C.at(i, j);
      row += res.plan.at(i, j);
      col_sum[j] += res.plan.at(i, j);
    }
    err = std::max(err, std::abs(row - mu));
  }
  for (int j = 0; j < n0; ++j) err = std::max(err, std::abs(col_sum[j] - nu));
  res.marginal_error = err;
  res.converged = res.converged || err < cfg.tol;
  return res;
}

double solve_assignment(const DenseMatrix& cost) {
  if (cost.rows != cost.cols) throw std::invalid_argument("solve_assignment: matrix must be square");
  const int n = cost.rows;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost.at(p[j] - 1, j - 1);
  return total;
}

double exact_ot_oracle(const DenseMatrix& treated, const DenseMatrix& control) {
  const int n1 = treated.rows;
  const int n0 = control.rows;
  if (n1 == 0 || n0 == 0) throw std::invalid_argument("exact_ot_oracle: empty cloud");
  if (n1 > 6 || n0 > 6) throw std::invalid_argument("exact_ot_oracle: clouds must have <= 6 points");
  const DenseMatrix C = cost_matrix(treated, control);
  if (n1 == n0) {
    std::vector<int> perm(n1);
    for (int i = 0; i < n1; ++i) perm[i] = i;
    double best = std::numeric_limits<double>::infinity();
    do {
      double s = 0.0;
      for (int i = 0; i < n1; ++i) s += C.at(i, perm[i]);
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(n1);
  }
  // Uniform marginals 1/n1, 1/n0: replicate each treated point n0 times and
  // each control point n1 times; an LP vertex is then an assignment.
  const int N = n1 * n0;
  DenseMatrix E(N, N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) E.at(a, b) = C.at(a / n0, b / n1);
  return solve_assignment(E) / static_cast<double>(N);
}

}  // namespace hyperite
