// End-to-end acceptance suite. Each criterion prints exactly one PASS/FAIL
// line; the process exits non-zero if any criterion fails. Tolerances and
// budgets are pinned here, next to the check they guard.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hyperite/eval.hpp"
#include "hyperite/rng.hpp"
#include "hyperite/trainer.hpp"

using namespace hyperite;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------- criterion 1
// 1000 random (z, v, c) cases: exp/log inverses, Mobius identity/inverse,
// projection invariants at <= 1e-6 relative; c -> 0 continuity at 1e-4.
// Budget: 5 s.
void criterion_1() {
  using namespace hyperite::geometry;
  auto t0 = std::chrono::steady_clock::now();
  const double kRelTol = 1e-6;
  const double kContinuityTol = 1e-4;
  double worst = 0.0, worst_cont = 0.0;
  bool ok = true;
  Rng rng(424242);
  const double curvs[] = {1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0};

  for (int it = 0; it < 1000 && ok; ++it) {
    int dim = 2 + static_cast<int>(rng.uniform_index(6));
    Curvature c(curvs[rng.uniform_index(6)]);

    Vec z(dim), v(dim);
    for (double& q : z) q = rng.normal();
    for (double& q : v) q = rng.normal();
    double zlen = rng.uniform(0.0, 0.5 / c.sqrt_c());
    double vlen = rng.uniform(0.0, 2.0);
    scale(z, zlen / std::max(norm(z), 1e-12));
    scale(v, vlen / std::max(norm(v), 1e-12));

    auto rel = [&](const Vec& a, const Vec& b) {
      double m = 0.0;
      for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
      return m / std::max({norm(a), norm(b), 1.0});
    };

    // inverses
    worst = std::max(worst, rel(log_map_origin(exp_map_origin(v, c), c), v));
    worst = std::max(worst, rel(log_map(z, exp_map(z, v, c), c), v));

    // Mobius identity and inverse
    Vec zero(dim, 0.0);
    worst = std::max(worst, rel(mobius_add(zero, z, c), z));
    Vec negz = z;
    scale(negz, -1.0);
    worst = std::max(worst, norm(mobius_add(negz, z, c)));

    // projection: interior fixed, exterior clamped to the rim
    worst = std::max(worst, rel(project_to_ball(z, c), z));
    Vec far = z.empty() ? z : z;
    scale(far, 10.0 / std::max(norm(z), 1e-9) / c.sqrt_c());
    worst = std::max(worst, std::abs(norm(project_to_ball(far, c)) - c.max_norm()));

    // c -> 0 continuity at curvature 1e-8 against the exact Euclidean branch
    Curvature tiny(1e-8), zc(0.0);
    Vec zs = z, vs = v;
    scale(zs, std::min(1.0, 0.4 / std::max(norm(z), 1e-12)));
    scale(vs, std::min(1.0, 0.4 / std::max(norm(v), 1e-12)));
    Vec e1 = exp_map(zs, vs, tiny), e0 = exp_map(zs, vs, zc);
    for (size_t i = 0; i < e1.size(); ++i)
      worst_cont = std::max(worst_cont, std::abs(e1[i] - e0[i]));

    ok = worst <= kRelTol && worst_cont <= kContinuityTol;
  }
  double dt = seconds_since(t0);
  bool pass = ok && dt < 5.0;
  report(1, pass,
         "geometry invariants over 1000 cases: max rel err " + fmt(worst) + " (tol 1e-6), c->0 "
         "deviation " + fmt(worst_cont) + " (tol 1e-4), " + fmt(dt) + " s (budget 5 s)");
}

// ---------------------------------------------------------------- criterion 2
// Finite-difference gradient agreement on a 12-node instance: <= 1e-4
// relative for the factual, relation, and l2 terms, <= 1e-2 for the Sinkhorn
// term with the plan re-solved per perturbation. Budget: 60 s.
void criterion_2() {
  auto t0 = std::chrono::steady_clock::now();
  Graph g = generate_graph(12, 2, 2);
  GeneratorConfig gc;
  gc.n = 12;
  gc.seed = 2;
  NetworkedDataset ds = generate_observational(g, gc);
  ds.split = split_nodes(12, 2);

  TrainConfig cfg;
  cfg.seed = 2;
  cfg.hidden_dim = 6;
  cfg.layers = 1;
  FdReport rep = finite_difference_check(ds, cfg);

  std::string detail = "gradient check:";
  for (const auto& comp : rep.components)
    detail += " " + comp.component + "=" + fmt(comp.max_rel_err) + " (tol " +
              fmt(comp.tolerance) + ")";
  double dt = seconds_since(t0);
  detail += ", " + fmt(dt) + " s (budget 60 s)";
  report(2, rep.pass && dt < 60.0, detail);
}

// ---------------------------------------------------------------- criterion 3
// 50 random instances, clouds of <= 5 points: Sinkhorn at
// eps = 0.001 * mean(C) within 1% of the brute-force optimum, plan marginals
// within 1e-6. Budget: 10 s.
void criterion_3() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(777);
  double worst_gap = 0.0, worst_marginal = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    int n1 = 2 + static_cast<int>(rng.uniform_index(4));
    int n0 = 2 + static_cast<int>(rng.uniform_index(4));
    int dim = 2 + static_cast<int>(rng.uniform_index(3));
    DenseMatrix a(n1, dim), b(n0, dim);
    for (double& v : a.data) v = rng.normal();
    for (double& v : b.data) v = rng.normal();

    DenseMatrix cost = cost_matrix(a, b);
    double mean_c = 0.0;
    for (double v : cost.data) mean_c += v;
    mean_c /= cost.data.size();

    SinkhornConfig scfg;
    scfg.epsilon = 0.001 * mean_c;
    scfg.max_iters = 500000;
    scfg.tol = 1e-9;
    TransportResult res = sinkhorn_distance(a, b, scfg);

    double exact = exact_ot_oracle(a, b);
    worst_gap = std::max(worst_gap, std::abs(res.distance - exact) / std::max(exact, 1e-12));

    for (int i = 0; i < n1; ++i) {
      double row = 0.0;
      for (int j = 0; j < n0; ++j) row += res.plan.at(i, j);
      worst_marginal = std::max(worst_marginal, std::abs(row - 1.0 / n1));
    }
    for (int j = 0; j < n0; ++j) {
      double col = 0.0;
      for (int i = 0; i < n1; ++i) col += res.plan.at(i, j);
      worst_marginal = std::max(worst_marginal, std::abs(col - 1.0 / n0));
    }
  }
  double dt = seconds_since(t0);
  bool pass = worst_gap < 0.01 && worst_marginal < 1e-6 && dt < 10.0;
  report(3, pass,
         "transport oracle over 50 instances: max relative gap " + fmt(worst_gap) +
             " (tol 0.01), max marginal violation " + fmt(worst_marginal) + " (tol 1e-6), " +
             fmt(dt) + " s (budget 10 s)");
}

// ---------------------------------------------------------------- criterion 4
// Metric oracles reproduce the fixed examples exactly and pehe >= ate_error
// on 1000 random vectors.
void criterion_4() {
  bool ok = true;
  Vec hat{1.0, 2.0}, truth{0.0, 0.0};
  ok = ok && std::abs(pehe(hat, truth) - 1.5811388300841897) < 1e-14;
  ok = ok && std::abs(ate_error(hat, truth) - 1.5) < 1e-14;
  Vec opp{1.0, -1.0}, zero{0.0, 0.0};
  ok = ok && ate_error(opp, zero) == 0.0 && std::abs(pehe(opp, zero) - 1.0) < 1e-14;
  Vec same{0.5, -2.0, 3.0};
  ok = ok && pehe(same, same) == 0.0 && ate_error(same, same) == 0.0;

  Rng rng(161803);
  int violations = 0;
  for (int it = 0; it < 1000; ++it) {
    int n = 1 + static_cast<int>(rng.uniform_index(25));
    Vec a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = rng.uniform(-10.0, 10.0);
      b[i] = rng.uniform(-10.0, 10.0);
    }
    if (pehe(a, b) < ate_error(a, b) - 1e-12) ++violations;
  }
  report(4, ok && violations == 0,
         "metric oracles: fixed examples exact, pehe >= ate_error violations " +
             std::to_string(violations) + "/1000");
}

// ------------------------------------------------------------ criteria 5 & 6
// Shared 10-seed benchmark at n = 300, m = 3, k = 1. Criterion 5: the full
// variant's test pehe beats features-only on >= 8/10 seeds and in the mean.
// Criterion 6: full mean <= 1.05 x each of no-hb / no-ta; the 4-variant table
// is printed regardless. Budget: 10 min combined.
void criteria_5_and_6() {
  auto t0 = std::chrono::steady_clock::now();
  const int kSeeds = 10;
  std::vector<Variant> variants{Variant::kFull, Variant::kNoHb, Variant::kNoTa,
                                Variant::kFeaturesOnly};
  std::vector<std::vector<double>> test_pehe(variants.size());

  for (uint64_t seed = 0; seed < kSeeds; ++seed) {
    Graph g = generate_graph(300, 3, seed);
    GeneratorConfig gc;
    gc.seed = seed;
    NetworkedDataset ds = generate_observational(g, gc);
    ds.split = split_nodes(300, seed);

    TrainConfig base;
    base.curvature = 0.01;
    base.layers = 1;
    base.hidden_dim = 50;
    base.learning_rate = 0.01;
    base.weights.alpha = 0.01;
    base.weights.beta = 1e-4;
    base.weights.lambda = 1e-5;
    base.max_epochs = 300;
    base.patience = 30;
    base.seed = seed;

    ExperimentResult res = run_experiment(ds, base, variants, {seed}, 4);
    for (const MetricsReport& row : res.rows)
      if (row.split == "test" && !row.failed)
        for (size_t vi = 0; vi < variants.size(); ++vi)
          if (row.variant == variant_name(variants[vi])) test_pehe[vi].push_back(row.pehe);
  }

  bool complete = true;
  for (const auto& v : test_pehe) complete = complete && static_cast<int>(v.size()) == kSeeds;

  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / std::max<size_t>(v.size(), 1);
  };

  std::printf("  %-14s %s\n", "variant", "test pehe per seed (mean)");
  for (size_t vi = 0; vi < variants.size(); ++vi) {
    std::string line;
    for (double x : test_pehe[vi]) line += fmt(x) + " ";
    std::printf("  %-14s %s(mean %s)\n", variant_name(variants[vi]).c_str(), line.c_str(),
                fmt(mean(test_pehe[vi])).c_str());
  }

  int wins = 0;
  if (complete)
    for (int s = 0; s < kSeeds; ++s)
      if (test_pehe[0][s] < test_pehe[3][s]) ++wins;
  double m_full = mean(test_pehe[0]), m_nohb = mean(test_pehe[1]), m_nota = mean(test_pehe[2]),
         m_fo = mean(test_pehe[3]);
  double dt = seconds_since(t0);

  bool pass5 = complete && wins >= 8 && m_full < m_fo && dt < 600.0;
  report(5, pass5,
         "benchmark ordering: full beats features-only on " + std::to_string(wins) +
             "/10 seeds (need >= 8), means " + fmt(m_full) + " vs " + fmt(m_fo) + ", " + fmt(dt) +
             " s (budget 600 s)");

  bool pass6 = complete && m_full <= 1.05 * m_nohb && m_full <= 1.05 * m_nota;
  report(6, pass6,
         "ablation ordering: full/no-hb = " + fmt(m_full / m_nohb) + ", full/no-ta = " +
             fmt(m_full / m_nota) + " (each must be <= 1.05)");
}

// ---------------------------------------------------------------- criterion 7
void criterion_7() {
  report(7, true,
         "non-reproducibility statement: the originally reported BlogCatalog k=1 results "
         "(sqrt-pehe 4.009, ate error 0.165) depend on an external LDA-based synthesis of a "
         "real social-media corpus and cannot be reproduced here; criteria 5 and 6 are the "
         "property-based substitutes on the built-in parametric generator");
}

// ---------------------------------------------------------------- criterion 8
// Training twice via the CLI with identical inputs yields byte-identical
// trace.csv files.
void criterion_8(const std::string& cli) {
  fs::path dir = fs::temp_directory_path() / "hyperite_acceptance_c8";
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::path data = dir / "data";
  fs::path cfg = dir / "cfg.json";
  {
    std::ofstream f(cfg);
    f << "{\"curvature\":0.01,\"layers\":1,\"hidden_dim\":50,\"lr\":0.01,\"alpha\":0.01,"
         "\"beta\":0.0001,\"lambda\":0.00001,\"epochs\":40,\"patience\":15,"
         "\"sinkhorn\":{\"epsilon_scale\":0.1,\"max_iters\":100,\"tol\":1e-9},"
         "\"seed\":0,\"variant\":\"full\"}";
  }
  auto sh = [&](const std::string& args) {
    std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  bool ok = sh("generate --out " + data.string() + " --nodes 120 --attach 3 --k 1 --seed 0") == 0;
  ok = ok && sh("train --data " + data.string() + " --config " + cfg.string() + " --out " +
                (dir / "r1").string()) == 0;
  ok = ok && sh("train --data " + data.string() + " --config " + cfg.string() + " --out " +
                (dir / "r2").string()) == 0;
  std::string t1, t2;
  if (ok) {
    auto slurp = [](const fs::path& p) {
      std::ifstream f(p, std::ios::binary);
      std::ostringstream ss;
      ss << f.rdbuf();
      return ss.str();
    };
    t1 = slurp(dir / "r1" / "trace.csv");
    t2 = slurp(dir / "r2" / "trace.csv");
  }
  bool pass = ok && !t1.empty() && t1 == t2;
  report(8, pass, pass ? "determinism: repeated cli training produced byte-identical trace.csv"
                       : "determinism: traces differ or a cli step failed");
  fs::remove_all(dir);
}

// ---------------------------------------------------------------- criterion 9
// Preferential-attachment graphs at n = 2000, m = 4 show a heavy-tailed
// degree distribution: fitted tail exponent within [1.5, 3.5].
void criterion_9() {
  double lo = 1e300, hi = -1e300;
  bool ok = true;
  for (uint64_t seed = 0; seed < 3; ++seed) {
    Graph g = generate_graph(2000, 4, seed);
    double gamma = fitted_degree_tail_exponent(g, 4);
    lo = std::min(lo, gamma);
    hi = std::max(hi, gamma);
    ok = ok && gamma >= 1.5 && gamma <= 3.5;
  }
  report(9, ok,
         "generator sanity: fitted degree tail exponents in [" + fmt(lo) + ", " + fmt(hi) +
             "] (required within [1.5, 3.5])");
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli = HYPERITE_CLI_PATH;
  if (argc > 1) cli = argv[1];

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criteria_5_and_6();
  criterion_7();
  criterion_8(cli);
  criterion_9();

  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criterion(s) failed\n", g_failures);
  return 1;
}
