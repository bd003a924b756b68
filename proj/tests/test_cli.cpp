#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const std::string kCli = HYPERITE_CLI_PATH;

int run(const std::string& args) {
  std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const char* name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_config(const fs::path& p, const std::string& variant, uint64_t seed) {
  std::ofstream f(p);
  f << "{\"curvature\":0.01,\"layers\":1,\"hidden_dim\":50,\"lr\":0.01,"
       "\"alpha\":0.01,\"beta\":0.0001,\"lambda\":0.00001,\"epochs\":30,"
       "\"patience\":10,\"sinkhorn\":{\"epsilon_scale\":0.1,\"max_iters\":100,"
       "\"tol\":1e-9},\"seed\":"
    << seed << ",\"variant\":\"" << variant << "\"}";
}

}  // namespace

TEST_CASE("argument errors exit with 2") {
  CHECK(run("generate") == 2);                       // missing required --out
  CHECK(run("generate --out /tmp/x --nodes -5") == 2);
  CHECK(run("nonsense-subcommand") == 2);
  CHECK(run("train --data /tmp/nope --config /tmp/nope.json --out /tmp/x2") != 0);
}

TEST_CASE("generate / train / evaluate round-trip and determinism") {
  fs::path dir = scratch("hyperite_cli_test");
  fs::path data = dir / "data";
  CHECK(run("generate --out " + data.string() + " --nodes 80 --attach 2 --k 1 --seed 5") == 0);
  CHECK(fs::exists(data / "meta.json"));
  CHECK(fs::exists(data / "edges.csv"));
  CHECK(fs::exists(data / "features.csv"));
  CHECK(fs::exists(data / "units.csv"));
  CHECK(fs::exists(data / "splits.csv"));

  fs::path cfg = dir / "cfg.json";
  write_config(cfg, "full", 5);

  fs::path run1 = dir / "run1", run2 = dir / "run2";
  CHECK(run("train --data " + data.string() + " --config " + cfg.string() + " --out " +
            run1.string()) == 0);
  CHECK(run("train --data " + data.string() + " --config " + cfg.string() + " --out " +
            run2.string()) == 0);
  CHECK(fs::exists(run1 / "best.ckpt"));
  CHECK(fs::exists(run1 / "final.ckpt"));
  // byte-identical reruns
  CHECK(slurp(run1 / "trace.csv") == slurp(run2 / "trace.csv"));
  CHECK(slurp(run1 / "best.ckpt") == slurp(run2 / "best.ckpt"));

  CHECK(run("evaluate --data " + data.string() + " --checkpoint " +
            (run1 / "best.ckpt").string() + " --out " + (dir / "metrics.json").string()) == 0);
  CHECK(fs::exists(dir / "metrics.json"));

  // evaluating against a dataset with a different feature dimension fails cleanly
  fs::path data2 = dir / "data2";
  CHECK(run("generate --out " + data2.string() +
            " --nodes 80 --attach 2 --k 1 --seed 5 --feature-dim 13") == 0);
  CHECK(run("evaluate --data " + data2.string() + " --checkpoint " +
            (run1 / "best.ckpt").string() + " --out " + (dir / "m2.json").string()) == 1);

  fs::remove_all(dir);
}

TEST_CASE("config file errors exit with 2") {
  fs::path dir = scratch("hyperite_cli_cfg_test");
  fs::path data = dir / "data";
  REQUIRE(run("generate --out " + data.string() + " --nodes 60 --attach 2 --seed 0") == 0);

  fs::path bad = dir / "bad.json";
  {
    std::ofstream f(bad);
    f << "{\"curvature\":0.01,\"unknown_knob\":3}";
  }
  CHECK(run("train --data " + data.string() + " --config " + bad.string() + " --out " +
            (dir / "r").string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("no-ta trace keeps loss_t at zero") {
  fs::path dir = scratch("hyperite_cli_nota_test");
  fs::path data = dir / "data";
  REQUIRE(run("generate --out " + data.string() + " --nodes 80 --attach 2 --seed 1") == 0);
  fs::path cfg = dir / "cfg.json";
  write_config(cfg, "no-ta", 1);
  REQUIRE(run("train --data " + data.string() + " --config " + cfg.string() + " --out " +
              (dir / "r").string()) == 0);
  std::ifstream f(dir / "r" / "trace.csv");
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    std::istringstream row(line);
    std::string field;
    std::getline(row, field, ',');  // epoch
    std::getline(row, field, ',');  // loss_y
    std::getline(row, field, ',');  // loss_t
    CHECK(field == "0");
  }
  fs::remove_all(dir);
}

TEST_CASE("seed precedence: flag over config over environment") {
  fs::path dir = scratch("hyperite_cli_seed_test");
  fs::path data = dir / "data";
  REQUIRE(run("generate --out " + data.string() + " --nodes 80 --attach 2 --seed 2") == 0);
  fs::path cfg = dir / "cfg.json";
  write_config(cfg, "full", 2);

  // --seed overrides the config seed: traces must differ
  REQUIRE(run("train --data " + data.string() + " --config " + cfg.string() + " --out " +
              (dir / "a").string()) == 0);
  REQUIRE(run("train --data " + data.string() + " --config " + cfg.string() + " --seed 99 --out " +
              (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "trace.csv") != slurp(dir / "b" / "trace.csv"));

  // HYPERITE_SEED fills in when the config omits the seed
  {
    std::ofstream f(dir / "noseed.json");
    f << "{\"epochs\":5,\"patience\":5,\"variant\":\"full\"}";
  }
  std::string env_cmd = "HYPERITE_SEED=99 " + kCli + " train --data " + data.string() +
                        " --config " + (dir / "noseed.json").string() + " --out " +
                        (dir / "c").string() + " > /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(env_cmd.c_str())) == 0);
  std::string env_cmd2 = "HYPERITE_SEED=7 " + kCli + " train --data " + data.string() +
                         " --config " + (dir / "noseed.json").string() + " --out " +
                         (dir / "d").string() + " > /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(env_cmd2.c_str())) == 0);
  CHECK(slurp(dir / "c" / "trace.csv") != slurp(dir / "d" / "trace.csv"));
  fs::remove_all(dir);
}

TEST_CASE("gradcheck subcommand guard and corruption flag") {
  fs::path dir = scratch("hyperite_cli_gc_test");
  fs::path big = dir / "big";
  REQUIRE(run("generate --out " + big.string() + " --nodes 80 --attach 2 --seed 0") == 0);
  CHECK(run("gradcheck --data " + big.string()) == 2);  // too many nodes

  fs::path small = dir / "small";
  REQUIRE(run("generate --out " + small.string() + " --nodes 12 --attach 2 --seed 0") == 0);
  CHECK(run("gradcheck --data " + small.string() + " --corrupt-gradients") == 1);
  fs::remove_all(dir);
}

TEST_CASE("ablate writes the result table and summary") {
  fs::path dir = scratch("hyperite_cli_ablate_test");
  fs::path data = dir / "data";
  REQUIRE(run("generate --out " + data.string() + " --nodes 80 --attach 2 --seed 3") == 0);
  fs::path cfg = dir / "cfg.json";
  write_config(cfg, "full", 3);
  REQUIRE(run("ablate --data " + data.string() + " --config " + cfg.string() +
              " --seeds 1 --jobs 2 --out " + (dir / "abl").string()) == 0);
  std::string csv = slurp(dir / "abl" / "results.csv");
  CHECK(csv.find("full") != std::string::npos);
  CHECK(csv.find("no-hb") != std::string::npos);
  CHECK(csv.find("no-ta") != std::string::npos);
  CHECK(csv.find("features-only") != std::string::npos);
  CHECK(fs::exists(dir / "abl" / "summary.json"));
  fs::remove_all(dir);
}
