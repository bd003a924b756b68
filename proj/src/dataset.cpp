#include "hyperite/dataset.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hyperite/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hyperite {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

namespace {

double parse_double(std::string_view s, const std::string& file, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error(file + ":" + std::to_string(line) + ": bad float '" + std::string(s) + "'");
  }
  return v;
}

long parse_int(std::string_view s, const std::string& file, int line) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error(file + ":" + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::vector<int> NetworkedDataset::nodes_in(Split s) const {
  std::vector<int> out;
  for (int i = 0; i < graph.n; ++i)
    if (split[i] == static_cast<int>(s)) out.push_back(i);
  return out;
}

std::vector<int> split_nodes(int n, uint64_t seed) {
  if (n < 5) throw std::invalid_argument("split_nodes: need n >= 5");
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  Rng rng(stream_seed(seed, "split"));
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  const int n_train = static_cast<int>(0.6 * n);
  const int n_val = static_cast<int>(0.2 * n);
  std::vector<int> split(n, static_cast<int>(Split::kTest));
  for (int i = 0; i < n_train; ++i) split[perm[i]] = static_cast<int>(Split::kTrain);
  for (int i = n_train; i < n_train + n_val; ++i) split[perm[i]] = static_cast<int>(Split::kVal);
  return split;
}

NetworkedDataset generate_observational(const Graph& graph, const GeneratorConfig& cfg) {
  if (cfg.n != graph.n) throw std::invalid_argument("generate_observational: n mismatch with graph");
  if (cfg.feature_dim < 1 || cfg.confounder_dim < 1 || cfg.k < 0 || cfg.feature_noise < 0 ||
      cfg.outcome_noise < 0) {
    throw std::invalid_argument("generate_observational: invalid config");
  }
  const int n = graph.n;
  const int d = cfg.feature_dim;
  const int r = cfg.confounder_dim;

  DenseMatrix z(n, r);
  {
    Rng rng(stream_seed(cfg.seed, "confounder"));
    for (double& v : z.data) v = rng.normal();
  }
  DenseMatrix feature_map(d, r);
  {
    Rng rng(stream_seed(cfg.seed, "feature_map"));
    const double s = 1.0 / std::sqrt(static_cast<double>(r));
    for (double& v : feature_map.data) v = s * rng.normal();
  }
  DenseMatrix features(n, d);
  {
    Rng rng(stream_seed(cfg.seed, "feature_noise"));
    for (int i = 0; i < n; ++i) {
      affine(feature_map, z.row(i), {}, features.row(i));
      for (int j = 0; j < d; ++j) features.at(i, j) += cfg.feature_noise * rng.normal();
    }
  }

  // neighbor-mean confounder (zero for isolated nodes)
  DenseMatrix z_nbr(n, r);
  for (int i = 0; i < n; ++i) {
    const auto nbrs = graph.neighbors_of(i);
    if (nbrs.empty()) continue;
    auto row = z_nbr.row(i);
    for (int j : nbrs) axpy(1.0, z.row(j), row);
    scale(row, 1.0 / static_cast<double>(nbrs.size()));
  }

  Vec w_t(r), w_y(r), w_yn(r), w_e(r);
  {
    Rng rng(stream_seed(cfg.seed, "weights"));
    const double s = 1.0 / std::sqrt(static_cast<double>(r));
    // Scales chosen so estimation error is dominated by network-borne confounding
    // rather than by recovery of per-unit effect heterogeneity: the treatment
    // direction is loud, the own-confounder baseline quiet, the effect term modest.
    const double kTreatmentWeightScale = 2.75;
    const double kBaselineWeightScale = 0.25;
    const double kEffectWeightScale = 0.2;
    for (double& v : w_t) v = kTreatmentWeightScale * s * rng.normal();
    for (double& v : w_y) v = kBaselineWeightScale * s * rng.normal();
    // The neighbor-borne outcome weights coincide with the treatment weights so the
    // same hidden neighborhood confounder drives both treatment and outcome; with
    // independent draws the two directions are nearly orthogonal and the network
    // carries no confounding signal worth adjusting for.
    w_yn = w_t;
    for (double& v : w_e) v = kEffectWeightScale * s * rng.normal();
  }

  NetworkedDataset ds;
  ds.graph = graph;
  ds.features = std::move(features);
  ds.meta = cfg;
  ds.treatment.assign(n, 0);

  bool ok = false;
  for (int retry = 0; retry < 10 && !ok; ++retry) {
    Rng rng(stream_seed(cfg.seed, "treatment", static_cast<uint64_t>(retry)));
    int treated = 0;
    for (int i = 0; i < n; ++i) {
      const double logit = cfg.treatment_scale * (dot(w_t, z.row(i)) + cfg.k * dot(w_t, z_nbr.row(i)));
      ds.treatment[i] = rng.bernoulli(sigmoid(logit)) ? 1 : 0;
      treated += ds.treatment[i];
    }
    ok = treated > 0 && treated < n;
  }
  if (!ok) throw std::runtime_error("generate_observational: degenerate treatment assignment after 10 retries");

  ds.y0.resize(n);
  ds.y1.resize(n);
  ds.ite.resize(n);
  ds.outcome.resize(n);
  ds.has_ground_truth = true;
  Rng rng(stream_seed(cfg.seed, "outcome_noise"));
  for (int i = 0; i < n; ++i) {
    const double base = dot(w_y, z.row(i)) + cfg.k * dot(w_yn, z_nbr.row(i)) + cfg.outcome_noise * rng.normal();
    const double effect = cfg.base_effect + dot(w_e, z.row(i));
    ds.y0[i] = base;
    ds.y1[i] = base + effect;
    ds.ite[i] = ds.y1[i] - ds.y0[i];
    ds.outcome[i] = ds.treatment[i] == 1 ? ds.y1[i] : ds.y0[i];
  }

  ds.split = split_nodes(n, cfg.seed);
  return ds;
}

void save_dataset(const NetworkedDataset& ds, const std::string& directory) {
  fs::create_directories(directory);
  const fs::path dir(directory);

  json meta;
  meta["n"] = ds.graph.n;
  meta["m"] = ds.meta.m;
  meta["feature_dim"] = ds.features.cols;
  meta["confounder_dim"] = ds.meta.confounder_dim;
  meta["k"] = ds.meta.k;
  meta["treatment_scale"] = ds.meta.treatment_scale;
  meta["base_effect"] = ds.meta.base_effect;
  meta["feature_noise"] = ds.meta.feature_noise;
  meta["outcome_noise"] = ds.meta.outcome_noise;
  meta["seed"] = ds.meta.seed;
  meta["has_ground_truth"] = ds.has_ground_truth;
  write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");

  std::string edges = "src,dst\n";
  for (const auto& [a, b] : ds.graph.edges) {
    edges += std::to_string(a) + "," + std::to_string(b) + "\n";
  }
  write_file_atomic(dir / "edges.csv", edges);

  std::string feats;
  for (int i = 0; i < ds.features.rows; ++i) {
    for (int j = 0; j < ds.features.cols; ++j) {
      if (j) feats += ',';
      feats += format_double(ds.features.at(i, j));
    }
    feats += '\n';
  }
  write_file_atomic(dir / "features.csv", feats);

  std::string units = ds.has_ground_truth ? "node,t,y,y0,y1\n" : "node,t,y\n";
  for (int i = 0; i < ds.graph.n; ++i) {
    units += std::to_string(i) + "," + std::to_string(ds.treatment[i]) + "," + format_double(ds.outcome[i]);
    if (ds.has_ground_truth) {
      units += "," + format_double(ds.y0[i]) + "," + format_double(ds.y1[i]);
    }
    units += '\n';
  }
  write_file_atomic(dir / "units.csv", units);

  static const char* kSplitNames[] = {"train", "val", "test"};
  std::string splits = "node,split\n";
  for (int i = 0; i < ds.graph.n; ++i) {
    splits += std::to_string(i) + "," + kSplitNames[ds.split[i]] + "\n";
  }
  write_file_atomic(dir / "splits.csv", splits);
}

NetworkedDataset load_dataset(const std::string& directory) {
  const fs::path dir(directory);
  for (const char* name : {"meta.json", "edges.csv", "features.csv", "units.csv", "splits.csv"}) {
    if (!fs::exists(dir / name)) {
      throw std::runtime_error("load_dataset: missing file " + (dir / name).string());
    }
  }

  json meta;
  {
    std::ifstream in(dir / "meta.json");
    try {
      in >> meta;
    } catch (const json::exception& e) {
      throw std::runtime_error("load_dataset: malformed meta.json: " + std::string(e.what()));
    }
  }
  NetworkedDataset ds;
  ds.meta.n = meta.at("n").get<int>();
  ds.meta.m = meta.at("m").get<int>();
  ds.meta.feature_dim = meta.at("feature_dim").get<int>();
  ds.meta.confounder_dim = meta.at("confounder_dim").get<int>();
  ds.meta.k = meta.at("k").get<double>();
  ds.meta.treatment_scale = meta.at("treatment_scale").get<double>();
  ds.meta.base_effect = meta.at("base_effect").get<double>();
  ds.meta.feature_noise = meta.at("feature_noise").get<double>();
  ds.meta.outcome_noise = meta.at("outcome_noise").get<double>();
  ds.meta.seed = meta.at("seed").get<uint64_t>();
  ds.has_ground_truth = meta.at("has_ground_truth").get<bool>();
  const int n = ds.meta.n;
  const int d = ds.meta.feature_dim;

  {
    const std::string file = (dir / "edges.csv").string();
    const auto lines = read_lines(file);
    if (lines.empty() || lines[0] != "src,dst") throw std::runtime_error(file + ":1: expected header 'src,dst'");
    std::vector<std::pair<int, int>> edges;
    for (size_t i = 1; i < lines.size(); ++i) {
      const auto f = split_csv(lines[i]);
      if (f.size() != 2) throw std::runtime_error(file + ":" + std::to_string(i + 1) + ": expected 2 fields");
      edges.emplace_back(static_cast<int>(parse_int(f[0], file, static_cast<int>(i + 1))),
                         static_cast<int>(parse_int(f[1], file, static_cast<int>(i + 1))));
    }
    try {
      ds.graph = Graph::from_edges(n, std::move(edges));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(file + ": " + e.what());
    }
  }

  {
    const std::string file = (dir / "features.csv").string();
    const auto lines = read_lines(file);
    if (static_cast<int>(lines.size()) != n) {
      throw std::runtime_error(file + ": expected " + std::to_string(n) + " rows, got " +
                               std::to_string(lines.size()));
    }
    ds.features = DenseMatrix(n, d);
    for (int i = 0; i < n; ++i) {
      const auto f = split_csv(lines[i]);
      if (static_cast<int>(f.size()) != d) {
        throw std::runtime_error(file + ":" + std::to_string(i + 1) + ": expected " + std::to_string(d) +
                                 " fields");
      }
      for (int j = 0; j < d; ++j) ds.features.at(i, j) = parse_double(f[j], file, i + 1);
    }
  }

  {
    const std::string file = (dir / "units.csv").string();
    const auto lines = read_lines(file);
    const std::string want_header = ds.has_ground_truth ? "node,t,y,y0,y1" : "node,t,y";
    if (lines.empty() || lines[0] != want_header) {
      throw std::runtime_error(file + ":1: expected header '" + want_header + "'");
    }
    if (static_cast<int>(lines.size()) != n + 1) throw std::runtime_error(file + ": wrong row count");
    ds.treatment.assign(n, 0);
    ds.outcome.assign(n, 0.0);
    if (ds.has_ground_truth) {
      ds.y0.assign(n, 0.0);
      ds.y1.assign(n, 0.0);
      ds.ite.assign(n, 0.0);
    }
    for (int i = 0; i < n; ++i) {
      const int ln = i + 2;
      const auto f = split_csv(lines[i + 1]);
      if (f.size() != (ds.has_ground_truth ? 5u : 3u)) {
        throw std::runtime_error(file + ":" + std::to_string(ln) + ": wrong field count");
      }
      const int node = static_cast<int>(parse_int(f[0], file, ln));
      if (node != i) throw std::runtime_error(file + ":" + std::to_string(ln) + ": nodes must be 0..n-1 in order");
      const long t = parse_int(f[1], file, ln);
      if (t != 0 && t != 1) throw std::runtime_error(file + ":" + std::to_string(ln) + ": treatment must be 0/1");
      ds.treatment[i] = static_cast<int>(t);
      ds.outcome[i] = parse_double(f[2], file, ln);
      if (ds.has_ground_truth) {
        ds.y0[i] = parse_double(f[3], file, ln);
        ds.y1[i] = parse_double(f[4], file, ln);
        ds.ite[i] = ds.y1[i] - ds.y0[i];
      }
    }
  }

  {
    const std::string file = (dir / "splits.csv").string();
    const auto lines = read_lines(file);
    if (lines.empty() || lines[0] != "node,split") throw std::runtime_error(file + ":1: expected header 'node,split'");
    if (static_cast<int>(lines.size()) != n + 1) throw std::runtime_error(file + ": wrong row count");
    ds.split.assign(n, -1);
    for (int i = 0; i < n; ++i) {
      const int ln = i + 2;
      const auto f = split_csv(lines[i + 1]);
      if (f.size() != 2) throw std::runtime_error(file + ":" + std::to_string(ln) + ": wrong field count");
      const int node = static_cast<int>(parse_int(f[0], file, ln));
      if (node != i) throw std::runtime_error(file + ":" + std::to_string(ln) + ": nodes must be 0..n-1 in order");
      if (f[1] == "train") ds.split[i] = static_cast<int>(Split::kTrain);
      else if (f[1] == "val") ds.split[i] = static_cast<int>(Split::kVal);
      else if (f[1] == "test") ds.split[i] = static_cast<int>(Split::kTest);
      else throw std::runtime_error(file + ":" + std::to_string(ln) + ": unknown split '" + std::string(f[1]) + "'");
    }
  }

  return ds;
}

}  // namespace hyperite
