#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cob/analysis.hpp"
#include "cob/metrics.hpp"
#include "cob/runner.hpp"

// Exit codes are part of the tool's interface: 0 success, 2 config error,
// 3 runtime error.

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
  const std::string cmd = std::string(COBTRAIN_BIN) + " " + args + " > cli_out.txt 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string cli_output() {
  std::ifstream is("cli_out.txt");
  std::string all, line;
  while (std::getline(is, line)) all += line + "\n";
  return all;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("cli_test") / name) {
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all("cli_test", ec);
  }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

}  // namespace

TEST_CASE("bad config file exits with code 2") {
  TempDir dir("badcfg");
  {
    std::ofstream os(dir / "bad.json");
    os << R"({"task": {"n_colors": 1}})";
  }
  CHECK(run_cli("train --config " + (dir / "bad.json")) == 2);
  CHECK(cli_output().find("task.n_colors") != std::string::npos);

  CHECK(run_cli("train --config " + (dir / "missing.json")) == 2);
  CHECK(run_cli("sweep --config " + (dir / "bad.json") + " --param gamma --values 0.1") == 2);
}

TEST_CASE("missing checkpoint exits with code 3") {
  TempDir dir("nockpt");
  CHECK(run_cli("eval --checkpoint " + (dir / "nope.bin") + " --data " + (dir / "nope.csv")) ==
        3);
}

TEST_CASE("gen-data, train, eval, pca round trip") {
  TempDir dir("flow");
  const std::string data = dir / "task.csv";
  REQUIRE(run_cli("gen-data --out " + data +
                  " --seed 3 --n-train 128 --n-val 64 --image-dim 16 --question-dim 8") == 0);

  // Matching dims; a short run keeps the test quick.
  {
    std::ofstream os(dir / "cfg.json");
    os << R"({"seed": 3, "task": {"seed": 3, "n_train": 128, "n_val": 64},
              "train": {"epochs": 2, "batch_size": 32},
              "out_dir": ")" +
              (dir / "run") + R"("})";
  }
  REQUIRE(run_cli("train --config " + (dir / "cfg.json")) == 0);
  CHECK(fs::exists(dir / "run/metrics.csv"));
  CHECK(fs::exists(dir / "run/resolved_config.json"));
  CHECK(fs::exists(dir / "run/checkpoint.bin"));
  CHECK(fs::exists(dir / "run/corr_m.csv"));
  CHECK(fs::exists(dir / "run/corr_m.pgm"));
  CHECK(fs::exists(dir / "run/run.log"));

  // Metrics parse with the repo's own reader and carry the exact header.
  {
    std::ifstream is(dir / "run/metrics.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == cob::kMetricsCsvHeader);
  }
  const auto records = cob::read_metrics_csv(dir / "run/metrics.csv");
  CHECK(records.size() == 2 * (128 / 32));

  // Exported correlation parses with the repo's own reader.
  const cob::Matrix corr = cob::read_matrix_csv(dir / "run/corr_m.csv");
  CHECK(corr.rows() == 32);
  CHECK(corr.cols() == 32);

  REQUIRE(run_cli("eval --checkpoint " + (dir / "run/checkpoint.bin") + " --data " + data +
                  " --split val --top-k 3 --top-k-out " + (dir / "topk.csv")) == 0);
  CHECK(cli_output().find("overall=") != std::string::npos);
  CHECK(fs::exists(dir / "topk.csv"));

  // Per-attribute accuracies weight-average to the overall accuracy, and a
  // repeated evaluation reproduces the report.
  const cob::EvalReport rep = cob::cmd_eval(dir / "run/checkpoint.bin", data, "val");
  const double weighted =
      (rep.acc_color * rep.n_color + rep.acc_shape * rep.n_shape) / rep.n;
  CHECK(std::fabs(rep.overall - weighted) <= 1e-12);
  const cob::EvalReport rep2 = cob::cmd_eval(dir / "run/checkpoint.bin", data, "val");
  CHECK(rep.overall == rep2.overall);
  CHECK(rep.acc_color == rep2.acc_color);

  REQUIRE(run_cli("pca --checkpoint " + (dir / "run/checkpoint.bin") + " --data " + data +
                  " --ks 1,8,32 --out " + (dir / "pca.csv")) == 0);
  CHECK(fs::exists(dir / "pca.csv"));
  CHECK(cli_output().find("k=32") != std::string::npos);

  // k at the full projector width captures all the energy; the table is
  // nondecreasing in k.
  const cob::PcaReport pca = cob::cmd_pca(dir / "run/checkpoint.bin", data, {1, 8, 32});
  CHECK(pca.k_table.back().second == doctest::Approx(1.0).epsilon(1e-9));
  for (size_t i = 1; i < pca.k_table.size(); ++i) {
    CHECK(pca.k_table[i].second >= pca.k_table[i - 1].second - 1e-15);
  }
}

TEST_CASE("eval rejects mismatched dimensions with exit 3") {
  TempDir dir("mismatch");
  const std::string data_a = dir / "a.csv";
  const std::string data_b = dir / "b.csv";
  REQUIRE(run_cli("gen-data --out " + data_a + " --seed 1 --n-train 64 --n-val 32") == 0);
  REQUIRE(run_cli("gen-data --out " + data_b +
                  " --seed 1 --n-train 64 --n-val 32 --image-dim 12") == 0);
  {
    std::ofstream os(dir / "cfg.json");
    os << R"({"seed": 1, "task": {"seed": 1, "n_train": 64, "n_val": 32},
              "train": {"epochs": 1, "batch_size": 32},
              "out_dir": ")" +
              (dir / "run") + R"("})";
  }
  REQUIRE(run_cli("train --config " + (dir / "cfg.json")) == 0);
  CHECK(run_cli("eval --checkpoint " + (dir / "run/checkpoint.bin") + " --data " + data_b) ==
        3);
}

TEST_CASE("sweep writes one summary row per value per seed") {
  TempDir dir("sweep");
  {
    std::ofstream os(dir / "cfg.json");
    os << R"({"task": {"n_train": 64, "n_val": 32}, "train": {"epochs": 1, "batch_size": 32},
              "out_dir": ")" +
              (dir / "sweep") + R"("})";
  }
  REQUIRE(run_cli("sweep --config " + (dir / "cfg.json") +
                  " --param atb_n --values 0,2 --seeds 1,2 --policy atb") == 0);
  std::ifstream is(dir / "sweep/sweep_atb_n.csv");
  REQUIRE(is.good());
  std::string line;
  std::getline(is, line);
  CHECK(line == "param,value,seed,val_accuracy,redundancy_m");
  int rows = 0;
  while (std::getline(is, line)) rows += !line.empty();
  CHECK(rows == 4);  // 2 values x 2 seeds

  CHECK(run_cli("sweep --config " + (dir / "cfg.json") +
                " --param nonsense --values 1 --seeds 1") == 2);
}

TEST_CASE("a one-value one-seed sweep reproduces a plain training run") {
  TempDir dir("sweep1");
  const std::string base = R"({"task": {"n_train": 64, "n_val": 32},
                               "train": {"epochs": 1, "batch_size": 32},
                               "policy": {"type": "atb", "atb_n": 2}, )";
  {
    std::ofstream os(dir / "sweep.json");
    os << base << R"("out_dir": ")" + (dir / "sw") + R"("})";
  }
  {
    std::ofstream os(dir / "train.json");
    os << base << R"("seed": 9, "out_dir": ")" + (dir / "tr") + R"("})";
  }
  REQUIRE(run_cli("sweep --config " + (dir / "sweep.json") +
                  " --param atb_n --values 2 --seeds 9") == 0);
  REQUIRE(run_cli("train --config " + (dir / "train.json")) == 0);

  const auto read = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string sweep_metrics = read(dir / "sw/atb_n_2_s9/metrics.csv");
  const std::string train_metrics = read(dir / "tr/metrics.csv");
  REQUIRE(!sweep_metrics.empty());
  CHECK(sweep_metrics == train_metrics);
}

TEST_CASE("unknown subcommand or flags exit with code 2") {
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("train --no-such-flag") == 2);
}
