#include "hyperite/eval.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <stdexcept>

#include "hyperite/trainer.hpp"
#include "json.hpp"

using nlohmann::json;

namespace hyperite {

Vec predict_ite(const Model& model, const NetworkedDataset& ds, const std::vector<int>& nodes) {
  const EncodeCache enc = encode(ds.features, model.graph, model.hgcn_config(), model.params);
  Vec out;
  out.reserve(nodes.size());
  for (int i : nodes) {
    const double y1 = outcome_forward(enc.h_tangent.row(i), "out1", model.head_cfg, model.params);
    const double y0 = outcome_forward(enc.h_tangent.row(i), "out0", model.head_cfg, model.params);
    out.push_back(y1 - y0);
  }
  return out;
}

double pehe(const Vec& ite_hat, const Vec& ite_true) {
  if (ite_hat.size() != ite_true.size() || ite_hat.empty()) {
    throw std::invalid_argument("pehe: length mismatch or empty input");
  }
  double s = 0.0;
  for (size_t i = 0; i < ite_hat.size(); ++i) {
    const double d = ite_hat[i] - ite_true[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(ite_hat.size()));
}

double ate_error(const Vec& ite_hat, const Vec& ite_true) {
  if (ite_hat.size() != ite_true.size() || ite_hat.empty()) {
    throw std::invalid_argument("ate_error: length mismatch or empty input");
  }
  double a = 0.0, b = 0.0;
  for (size_t i = 0; i < ite_hat.size(); ++i) {
    a += ite_hat[i];
    b += ite_true[i];
  }
  return std::abs(a - b) / static_cast<double>(ite_hat.size());
}

std::vector<MetricsReport> evaluate_model(const Model& model, const NetworkedDataset& ds,
                                          uint64_t seed) {
  if (!ds.has_ground_truth) throw std::invalid_argument("evaluate_model: dataset lacks ground truth");
  std::vector<MetricsReport> rows;
  static const std::pair<Split, const char*> kSplits[] = {
      {Split::kTrain, "train"}, {Split::kVal, "val"}, {Split::kTest, "test"}};
  for (const auto& [split, name] : kSplits) {
    const std::vector<int> nodes = ds.nodes_in(split);
    const Vec ite_hat = predict_ite(model, ds, nodes);
    Vec ite_true;
    ite_true.reserve(nodes.size());
    for (int i : nodes) ite_true.push_back(ds.ite[i]);
    MetricsReport r;
    r.variant = variant_name(model.cfg.variant);
    r.seed = seed;
    r.split = name;
    r.pehe = pehe(ite_hat, ite_true);
    r.ate_error = ate_error(ite_hat, ite_true);
    r.n = static_cast<int>(nodes.size());
    rows.push_back(std::move(r));
  }
  return rows;
}

ExperimentResult run_experiment(const NetworkedDataset& ds, const TrainConfig& base,
                                const std::vector<Variant>& variants,
                                const std::vector<uint64_t>& seeds, int jobs) {
  struct Task {
    Variant variant;
    uint64_t seed;
  };
  std::vector<Task> tasks;
  for (Variant v : variants)
    for (uint64_t s : seeds) tasks.push_back({v, s});

  auto run_one = [&](const Task& task) -> std::vector<MetricsReport> {
    TrainConfig cfg = base;
    cfg.variant = task.variant;
    cfg.seed = task.seed;
    try {
      TrainResult tr = train(ds, cfg);
      Model best = std::move(tr.model);
      best.params = tr.best_params;
      return evaluate_model(best, ds, task.seed);
    } catch (const std::exception& e) {
      MetricsReport r;
      r.variant = variant_name(task.variant);
      r.seed = task.seed;
      r.split = "test";
      r.failed = true;
      r.error = e.what();
      return {r};
    }
  };

  ExperimentResult result;
  if (jobs <= 1) {
    for (const Task& t : tasks) {
      auto rows = run_one(t);
      result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
    return result;
  }
  std::vector<std::vector<MetricsReport>> collected(tasks.size());
  size_t next = 0;
  while (next < tasks.size()) {
    const size_t batch = std::min(static_cast<size_t>(jobs), tasks.size() - next);
    std::vector<std::future<std::vector<MetricsReport>>> futs;
    for (size_t k = 0; k < batch; ++k) {
      futs.push_back(std::async(std::launch::async, run_one, tasks[next + k]));
    }
    for (size_t k = 0; k < batch; ++k) collected[next + k] = futs[k].get();
    next += batch;
  }
  for (auto& rows : collected) result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  return result;
}

std::string results_to_csv(const std::vector<MetricsReport>& rows) {
  std::string out = "variant,seed,split,pehe,ate_error\n";
  for (const MetricsReport& r : rows) {
    out += r.variant + "," + std::to_string(r.seed) + "," + r.split + ",";
    if (r.failed) {
      out += "nan,nan\n";
    } else {
      out += format_double(r.pehe) + "," + format_double(r.ate_error) + "\n";
    }
  }
  return out;
}

std::string summary_to_json(const std::vector<MetricsReport>& rows) {
  std::map<std::string, std::vector<const MetricsReport*>> by_variant;
  json failures = json::array();
  for (const MetricsReport& r : rows) {
    if (r.failed) {
      failures.push_back({{"variant", r.variant}, {"seed", r.seed}, {"error", r.error}});
    } else if (r.split == "test") {
      by_variant[r.variant].push_back(&r);
    }
  }
  auto mean_sd = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    if (xs.size() > 1) {
      for (double x : xs) var += (x - mean) * (x - mean);
      var /= static_cast<double>(xs.size() - 1);
    }
    return std::pair{mean, std::sqrt(var)};
  };
  json j;
  for (const auto& [variant, reports] : by_variant) {
    std::vector<double> pehes, ates;
    for (const MetricsReport* r : reports) {
      pehes.push_back(r->pehe);
      ates.push_back(r->ate_error);
    }
    const auto [pm, ps] = mean_sd(pehes);
    const auto [am, as] = mean_sd(ates);
    j[variant] = {{"n_runs", reports.size()},
                  {"pehe_mean", pm},
                  {"pehe_sd", ps},
                  {"ate_error_mean", am},
                  {"ate_error_sd", as}};
  }
  j["failures"] = failures;
  return j.dump(2) + "\n";
}

void write_file_atomically(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace hyperite
