#include "hyperite/model.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "json.hpp"

using nlohmann::json;

namespace hyperite {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoHb: return "no-hb";
    case Variant::kNoTa: return "no-ta";
    case Variant::kFeaturesOnly: return "features-only";
  }
  throw std::logic_error("variant_name: unreachable");
}

Variant variant_from_name(const std::string& name) {
  if (name == "full") return Variant::kFull;
  if (name == "no-hb") return Variant::kNoHb;
  if (name == "no-ta") return Variant::kNoTa;
  if (name == "features-only") return Variant::kFeaturesOnly;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

TrainConfig resolve_variant(TrainConfig cfg) {
  switch (cfg.variant) {
    case Variant::kFull:
      break;
    case Variant::kNoHb:
      cfg.curvature = 0.0;
      break;
    case Variant::kNoTa:
      cfg.weights.alpha = 0.0;
      break;
    case Variant::kFeaturesOnly:
      cfg.curvature = 0.0;
      cfg.weights.alpha = 0.0;
      break;
  }
  return cfg;
}

namespace {

void validate_config(const TrainConfig& cfg) {
  auto in_set = [](double v, std::initializer_list<double> set) {
    for (double s : set)
      if (std::abs(v - s) < 1e-15) return true;
    return false;
  };
  if (!(cfg.curvature >= 0.0 && cfg.curvature <= 1.0)) {
    throw std::invalid_argument("config: curvature must be in [0, 1]");
  }
  if (cfg.layers != 1 && cfg.layers != 2) throw std::invalid_argument("config: layers must be 1 or 2");
  if (cfg.hidden_dim != 50 && cfg.hidden_dim != 100) {
    throw std::invalid_argument("config: hidden_dim must be 50 or 100");
  }
  if (!in_set(cfg.learning_rate, {1e-3, 1e-2})) {
    throw std::invalid_argument("config: lr must be 1e-3 or 1e-2");
  }
  const double a = cfg.weights.alpha;
  if (!(a == 0.0 || (a >= 1e-3 && a <= 1.0))) {
    throw std::invalid_argument("config: alpha must be 0 or in [1e-3, 1]");
  }
  for (auto [v, name] : {std::pair{cfg.weights.beta, "beta"}, std::pair{cfg.weights.lambda, "lambda"}}) {
    if (!(v == 0.0 || (v >= 1e-5 && v <= 1e-3))) {
      throw std::invalid_argument(std::string("config: ") + name + " must be 0 or in [1e-5, 1e-3]");
    }
  }
  if (cfg.max_epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
  if (cfg.patience < 1) throw std::invalid_argument("config: patience must be >= 1");
  if (cfg.sinkhorn.epsilon_scale <= 0.0) throw std::invalid_argument("config: sinkhorn.epsilon_scale must be > 0");
  if (cfg.sinkhorn.max_iters < 1) throw std::invalid_argument("config: sinkhorn.max_iters must be >= 1");
  if (cfg.sinkhorn.tol <= 0.0) throw std::invalid_argument("config: sinkhorn.tol must be > 0");
}

}  // namespace

std::string config_to_json(const TrainConfig& cfg) {
  json j;
  j["curvature"] = cfg.curvature;
  j["layers"] = cfg.layers;
  j["hidden_dim"] = cfg.hidden_dim;
  j["lr"] = cfg.learning_rate;
  j["alpha"] = cfg.weights.alpha;
  j["beta"] = cfg.weights.beta;
  j["lambda"] = cfg.weights.lambda;
  j["epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["sinkhorn"] = {{"epsilon_scale", cfg.sinkhorn.epsilon_scale},
                   {"max_iters", cfg.sinkhorn.max_iters},
                   {"tol", cfg.sinkhorn.tol}};
  j["seed"] = cfg.seed;
  j["variant"] = variant_name(cfg.variant);
  return j.dump(2) + "\n";
}

TrainConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: document must be a JSON object");

  static const std::set<std::string> kKnown = {"curvature", "layers", "hidden_dim", "lr",
                                               "alpha",     "beta",   "lambda",     "epochs",
                                               "patience",  "sinkhorn", "seed",     "variant"};
  for (const auto& [key, _] : j.items()) {
    if (!kKnown.count(key)) throw std::invalid_argument("config: unknown key '" + key + "'");
  }

  TrainConfig cfg;
  try {
    if (j.contains("curvature")) cfg.curvature = j["curvature"].get<double>();
    if (j.contains("layers")) cfg.layers = j["layers"].get<int>();
    if (j.contains("hidden_dim")) cfg.hidden_dim = j["hidden_dim"].get<int>();
    if (j.contains("lr")) cfg.learning_rate = j["lr"].get<double>();
    if (j.contains("alpha")) cfg.weights.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) cfg.weights.beta = j["beta"].get<double>();
    if (j.contains("lambda")) cfg.weights.lambda = j["lambda"].get<double>();
    if (j.contains("epochs")) cfg.max_epochs = j["epochs"].get<int>();
    if (j.contains("patience")) cfg.patience = j["patience"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("variant")) cfg.variant = variant_from_name(j["variant"].get<std::string>());
    if (j.contains("sinkhorn")) {
      const json& s = j["sinkhorn"];
      if (!s.is_object()) throw std::invalid_argument("config: sinkhorn must be an object");
      static const std::set<std::string> kSink = {"epsilon_scale", "max_iters", "tol"};
      for (const auto& [key, _] : s.items()) {
        if (!kSink.count(key)) throw std::invalid_argument("config: unknown key 'sinkhorn." + key + "'");
      }
      if (s.contains("epsilon_scale")) cfg.sinkhorn.epsilon_scale = s["epsilon_scale"].get<double>();
      if (s.contains("max_iters")) cfg.sinkhorn.max_iters = s["max_iters"].get<int>();
      if (s.contains("tol")) cfg.sinkhorn.tol = s["tol"].get<double>();
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: bad value type: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

Model Model::build(const TrainConfig& raw_cfg, const NetworkedDataset& ds) {
  Model m;
  m.cfg = resolve_variant(raw_cfg);
  m.feature_dim = ds.features.cols;
  m.head_cfg = {m.cfg.hidden_dim, m.cfg.hidden_dim, m.cfg.head_hidden_layers};
  m.graph = m.cfg.variant == Variant::kFeaturesOnly ? Graph::from_edges(ds.graph.n, {}) : ds.graph;

  const uint64_t seed = m.cfg.seed;
  int in = m.feature_dim;
  for (int l = 0; l < m.cfg.layers; ++l) {
    const std::string prefix = "enc." + std::to_string(l) + ".";
    m.params.add_matrix(prefix + "W", m.cfg.hidden_dim, in, seed);
    m.params.add_bias(prefix + "b", m.cfg.hidden_dim);
    in = m.cfg.hidden_dim;
  }
  if (m.cfg.variant != Variant::kNoTa) {
    m.params.add_matrix("rel.W", 1, 2 * m.cfg.hidden_dim, seed);
    m.params.add_bias("rel.b", 1);
  }
  add_outcome_head(m.params, "out1", m.head_cfg, seed);
  add_outcome_head(m.params, "out0", m.head_cfg, seed);
  return m;
}

ForwardPass model_forward(const Model& model, const NetworkedDataset& ds,
                          const std::vector<PairSample>& pairs,
                          const std::vector<int>& train_nodes) {
  const int n = ds.graph.n;
  ForwardPass fwd;
  fwd.enc = encode(ds.features, model.graph, model.hgcn_config(), model.params);

  fwd.y_hat.resize(n);
  fwd.head_cache.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::string prefix = ds.treatment[i] == 1 ? "out1" : "out0";
    fwd.y_hat[i] = outcome_forward(fwd.enc.h_tangent.row(i), prefix, model.head_cfg, model.params,
                                   &fwd.head_cache[i]);
  }
  fwd.loss_y = factual_loss(fwd.y_hat, ds.outcome, train_nodes);

  fwd.pairs_empty = pairs.empty();
  if (!pairs.empty()) {
    if (!model.has_relation_head()) throw std::logic_error("model_forward: pairs given but no relation head");
    const Tensor& W = model.params.get("rel.W");
    DenseMatrix Wm(W.rows, W.cols);
    Wm.data = W.value;
    const double bias = model.params.get("rel.b").value[0];
    fwd.pair_probs.resize(pairs.size());
    for (size_t k = 0; k < pairs.size(); ++k) {
      fwd.pair_probs[k] = pair_probability(fwd.enc.h_tangent.row(pairs[k].center),
                                           fwd.enc.h_tangent.row(pairs[k].neighbor), Wm, bias);
    }
    fwd.loss_t = relation_loss(pairs, fwd.pair_probs);
  }

  for (int i : train_nodes) {
    (ds.treatment[i] == 1 ? fwd.treated_train : fwd.control_train).push_back(i);
  }
  if (fwd.treated_train.empty() || fwd.control_train.empty()) {
    throw std::invalid_argument("model_forward: a treatment group is empty on the training split");
  }
  if (model.cfg.weights.beta != 0.0) {
    DenseMatrix treated(static_cast<int>(fwd.treated_train.size()), model.cfg.hidden_dim);
    DenseMatrix control(static_cast<int>(fwd.control_train.size()), model.cfg.hidden_dim);
    for (size_t a = 0; a < fwd.treated_train.size(); ++a) {
      auto r = treated.row(static_cast<int>(a));
      const auto src = fwd.enc.h_tangent.row(fwd.treated_train[a]);
      std::copy(src.begin(), src.end(), r.begin());
    }
    for (size_t b = 0; b < fwd.control_train.size(); ++b) {
      auto r = control.row(static_cast<int>(b));
      const auto src = fwd.enc.h_tangent.row(fwd.control_train[b]);
      std::copy(src.begin(), src.end(), r.begin());
    }
    fwd.transport = sinkhorn_distance(treated, control, model.cfg.sinkhorn);
    fwd.wass = fwd.transport.distance;
  }

  fwd.l2 = model.params.squared_l2();
  const LossWeights& w = model.cfg.weights;
  fwd.total = fwd.loss_y + w.alpha * fwd.loss_t + w.beta * fwd.wass + w.lambda * fwd.l2;
  if (!std::isfinite(fwd.total)) throw std::runtime_error("model_forward: non-finite loss");
  return fwd;
}

void model_backward(Model& model, const NetworkedDataset& ds, const std::vector<PairSample>& pairs,
                    const std::vector<int>& train_nodes, const ForwardPass& fwd,
                    const TermWeights& tw) {
  const int n = ds.graph.n;
  const int dh = model.cfg.hidden_dim;
  DenseMatrix grad_h(n, dh);

  if (tw.y != 0.0) {
    const double inv = 1.0 / static_cast<double>(train_nodes.size());
    for (int i : train_nodes) {
      const double go = tw.y * 2.0 * (fwd.y_hat[i] - ds.outcome[i]) * inv;
      const std::string prefix = ds.treatment[i] == 1 ? "out1" : "out0";
      const Vec gh = outcome_backward(fwd.enc.h_tangent.row(i), prefix, model.head_cfg,
                                      model.params, fwd.head_cache[i], go);
      axpy(1.0, gh, grad_h.row(i));
    }
  }

  if (tw.t != 0.0 && !pairs.empty()) {
    Tensor& W = model.params.get("rel.W");
    Tensor& b = model.params.get("rel.b");
    const double inv = 1.0 / static_cast<double>(pairs.size());
    for (size_t k = 0; k < pairs.size(); ++k) {
      const double glogit = tw.t * (fwd.pair_probs[k] - pairs[k].label) * inv;
      const auto hi = fwd.enc.h_tangent.row(pairs[k].center);
      const auto hj = fwd.enc.h_tangent.row(pairs[k].neighbor);
      for (int d = 0; d < dh; ++d) {
        W.grad[d] += glogit * hi[d];
        W.grad[dh + d] += glogit * hj[d];
      }
      b.grad[0] += glogit;
      auto gi = grad_h.row(pairs[k].center);
      auto gj = grad_h.row(pairs[k].neighbor);
      for (int d = 0; d < dh; ++d) {
        gi[d] += glogit * W.value[d];
        gj[d] += glogit * W.value[dh + d];
      }
    }
  }

  if (tw.wass != 0.0 && fwd.transport.plan.rows > 0) {
    const DenseMatrix& P = fwd.transport.plan;
    for (int a = 0; a < P.rows; ++a) {
      const int i = fwd.treated_train[a];
      auto gi = grad_h.row(i);
      const auto hi = fwd.enc.h_tangent.row(i);
      for (int bdx = 0; bdx < P.cols; ++bdx) {
        const int j = fwd.control_train[bdx];
        const auto hj = fwd.enc.h_tangent.row(j);
        const double p = P.at(a, bdx);
        auto gj = grad_h.row(j);
        for (int d = 0; d < dh; ++d) {
          const double diff = hi[d] - hj[d];
          gi[d] += tw.wass * 2.0 * p * diff;
          gj[d] -= tw.wass * 2.0 * p * diff;
        }
      }
    }
  }

  if (tw.l2 != 0.0) model.params.accumulate_l2_grad(tw.l2);

  encode_backward(grad_h, model.graph, model.hgcn_config(), model.params, fwd.enc);
}

FdReport finite_difference_check(const NetworkedDataset& ds, const TrainConfig& raw_cfg, double step,
                                 bool corrupt_gradients) {
  if (ds.graph.n > 50) {
    throw std::invalid_argument("finite_difference_check: instance too large (need <= 50 nodes)");
  }
  TrainConfig cfg = resolve_variant(raw_cfg);
  // The fixed-plan gradient of <P, C> carries an O(epsilon) entropic bias and
  // ignores the dependence of the data-driven epsilon on the representation,
  // so the check pins a small epsilon computed once from the unperturbed cost
  // and solves each perturbed problem to tight feasibility.
  cfg.sinkhorn.max_iters = std::max(cfg.sinkhorn.max_iters, 200000);
  cfg.sinkhorn.tol = std::min(cfg.sinkhorn.tol, 1e-12);

  Model model = Model::build(cfg, ds);
  if (cfg.weights.beta != 0.0) {
    const std::vector<int> probe_nodes = ds.nodes_in(Split::kTrain);
    const ForwardPass probe = model_forward(model, ds, {}, probe_nodes);
    const double median_cost = probe.transport.epsilon / cfg.sinkhorn.epsilon_scale;
    cfg.sinkhorn.epsilon = std::max(1e-3 * median_cost, 1e-12);
    model.cfg.sinkhorn = cfg.sinkhorn;
  }
  const std::vector<int> train_nodes = ds.nodes_in(Split::kTrain);
  std::vector<uint8_t> mask(ds.graph.n, 0);
  for (int i : train_nodes) mask[i] = 1;
  const std::vector<PairSample> pairs =
      model.has_relation_head() ? sample_pairs(model.graph, ds.treatment, cfg.seed, 0, mask)
                                : std::vector<PairSample>{};

  struct Component {
    const char* name;
    TermWeights tw;
    double tol;
  };
  std::vector<Component> comps = {{"loss_y", {1, 0, 0, 0}, 1e-4},
                                  {"l2", {0, 0, 0, 1}, 1e-4}};
  if (!pairs.empty()) comps.push_back({"loss_t", {0, 1, 0, 0}, 1e-4});
  if (cfg.weights.beta != 0.0) comps.push_back({"wass", {0, 0, 1, 0}, 1e-2});

  auto component_value = [&](const ForwardPass& fwd, const std::string& name) {
    if (name == "loss_y") return fwd.loss_y;
    if (name == "loss_t") return fwd.loss_t;
    if (name == "wass") return fwd.wass;
    return fwd.l2;
  };

  FdReport report;
  const double beta_saved = model.cfg.weights.beta;
  for (const Component& comp : comps) {
    // skip the Sinkhorn solve inside forward unless this component needs it
    model.cfg.weights.beta = std::string(comp.name) == "wass" ? beta_saved : 0.0;
    model.params.zero_grads();
    const ForwardPass fwd = model_forward(model, ds, pairs, train_nodes);
    TermWeights tw = comp.tw;
    model_backward(model, ds, pairs, train_nodes, fwd, tw);
    std::vector<Vec> analytic;
    for (const Tensor& t : model.params.tensors()) analytic.push_back(t.grad);
    if (corrupt_gradients && !analytic.empty() && !analytic[0].empty()) analytic[0][0] += 0.1;

    double max_err = 0.0;
    for (size_t ti = 0; ti < model.params.tensors().size(); ++ti) {
      Tensor& t = model.params.tensors()[ti];
      for (size_t e = 0; e < t.value.size(); ++e) {
        const double orig = t.value[e];
        t.value[e] = orig + step;
        const double hi = component_value(model_forward(model, ds, pairs, train_nodes), comp.name);
        t.value[e] = orig - step;
        const double lo = component_value(model_forward(model, ds, pairs, train_nodes), comp.name);
        t.value[e] = orig;
        const double fd = (hi - lo) / (2.0 * step);
        const double an = analytic[ti][e];
        const double err = std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), 1e-6);
        max_err = std::max(max_err, err);
      }
    }
    report.components.push_back({comp.name, max_err, comp.tol, max_err <= comp.tol});
    report.pass = report.pass && max_err <= comp.tol;
  }
  model.cfg.weights.beta = beta_saved;
  return report;
}

}  // namespace hyperite
