#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "util.hpp"
#include "vecspec/embedding.hpp"
#include "vecspec/rng.hpp"
#include "vecspec/synthetic.hpp"

// Exercises the command-line surface end to end by spawning the binary;
// VECSPEC_CLI_PATH is injected by the build.

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VECSPEC_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

void write_synthetic_space(const std::string& path, std::size_t n, int dim,
                           std::uint64_t seed) {
  vecspec::SyntheticConfig cfg;
  cfg.dim = dim;
  vecspec::Rng rng(seed);
  const Eigen::MatrixXd m = vecspec::sample_directions(n, cfg, rng);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back("w" + std::to_string(i));
  vecspec::save_embeddings(vecspec::EmbeddingSpace::create(words, m), path);
}

}  // namespace

TEST_CASE("specialize pipeline is deterministic and writes its log") {
  testutil::TempDir tmp;
  write_synthetic_space(tmp.file("emb.vec"), 60, 8, 5);
  testutil::write_file(tmp.file("attract.txt"), "w0 w1\nw2 w3\nw4 w5\n");
  testutil::write_file(tmp.file("repel.txt"), "w6 w7\nw8 w9\n");

  const std::string args = "specialize --embeddings " + tmp.file("emb.vec") +
                           " --attract " + tmp.file("attract.txt") + " --repel " +
                           tmp.file("repel.txt") + " --epochs 3 --seed 11 --log " +
                           tmp.file("log.jsonl") + " --output ";
  REQUIRE(run_cli(args + tmp.file("out1.vec")) == 0);
  REQUIRE(run_cli(args + tmp.file("out2.vec")) == 0);

  // Identical seed and config: bitwise-identical artifacts.
  CHECK(testutil::read_file(tmp.file("out1.vec")) ==
        testutil::read_file(tmp.file("out2.vec")));

  // One log line per epoch.
  std::ifstream log(tmp.file("log.jsonl"));
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) ++lines;
  CHECK(lines == 3);
}

TEST_CASE("invalid hyperparameter exits with code 2 naming the field") {
  testutil::TempDir tmp;
  write_synthetic_space(tmp.file("emb.vec"), 20, 6, 6);
  testutil::write_file(tmp.file("attract.txt"), "w0 w1\n");
  testutil::write_file(tmp.file("repel.txt"), "w2 w3\n");

  const std::string cmd = std::string(VECSPEC_CLI_PATH) + " specialize --embeddings " +
                          tmp.file("emb.vec") + " --attract " + tmp.file("attract.txt") +
                          " --repel " + tmp.file("repel.txt") + " --output " +
                          tmp.file("out.vec") + " --delta-attract -1 2> " +
                          tmp.file("stderr.txt");
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 2);
  const std::string err = testutil::read_file(tmp.file("stderr.txt"));
  CHECK(err.find("delta_attract") != std::string::npos);
  // No partial artifact left behind.
  CHECK(testutil::read_file(tmp.file("out.vec")).empty());
}

TEST_CASE("missing input file exits with code 1") {
  testutil::TempDir tmp;
  const int code = run_cli("eval-sim --embeddings " + tmp.file("absent.vec") +
                           " --dataset " + tmp.file("absent.tsv") + " --output " +
                           tmp.file("out.json"));
  CHECK(code == 1);
}

TEST_CASE("eval-sim emits the module result as JSON") {
  testutil::TempDir tmp;
  // Fixture where cosine ordering equals gold ordering: rho = 1.
  std::ostringstream emb;
  emb << "anchor 1 0\n";
  std::ostringstream ds;
  for (int i = 0; i < 6; ++i) {
    const double angle = 0.1 + 0.2 * i;
    emb << "w" << i << ' ' << std::cos(angle) << ' ' << std::sin(angle) << "\n";
    ds << "anchor\tw" << i << '\t' << 10 - i << "\n";
  }
  testutil::write_file(tmp.file("emb.vec"), emb.str());
  testutil::write_file(tmp.file("sim.tsv"), ds.str());

  REQUIRE(run_cli("eval-sim --embeddings " + tmp.file("emb.vec") + " --dataset " +
                  tmp.file("sim.tsv") + " --output " + tmp.file("res.json")) == 0);
  const std::string res = testutil::read_file(tmp.file("res.json"));
  CHECK(res.find("\"rho\": 1.0") != std::string::npos);
  CHECK(res.find("\"pairs_evaluated\": 6") != std::string::npos);
}

TEST_CASE("eval-ls emits accuracy JSON") {
  testutil::TempDir tmp;
  testutil::write_file(tmp.file("emb.vec"),
                       "big 1 0 0\nlarge 0.9 0.43588989435406733 0\ntiny -1 0 0\n");
  testutil::write_file(tmp.file("ls.tsv"), "the big dog\t1\tlarge\nbig cat\t0\ttiny\n");
  REQUIRE(run_cli("eval-ls --embeddings " + tmp.file("emb.vec") + " --dataset " +
                  tmp.file("ls.tsv") + " --output " + tmp.file("res.json") +
                  " --candidates 1") == 0);
  const std::string res = testutil::read_file(tmp.file("res.json"));
  CHECK(res.find("\"accuracy\": 0.5") != std::string::npos);
}

TEST_CASE("postspec train/apply round trip through checkpoints") {
  testutil::TempDir tmp;
  // "Specialized" space = fixed coordinate rotation of the original, so a
  // perfect map exists and every vector changes.
  vecspec::SyntheticConfig cfg;
  cfg.dim = 8;
  vecspec::Rng rng(9);
  const Eigen::MatrixXd m = vecspec::sample_directions(300, cfg, rng);
  Eigen::MatrixXd rotated(m.rows(), m.cols());
  rotated << m.rightCols(4), m.leftCols(4);
  std::vector<std::string> words;
  for (int i = 0; i < 300; ++i) words.push_back("w" + std::to_string(i));
  vecspec::save_embeddings(vecspec::EmbeddingSpace::create(words, m), tmp.file("orig.vec"));
  vecspec::save_embeddings(vecspec::EmbeddingSpace::create(words, rotated),
                           tmp.file("spec.vec"));

  const std::string train = "postspec-train --original " + tmp.file("orig.vec") +
                            " --specialized " + tmp.file("spec.vec") +
                            " --hidden-size 16 --epochs 4 --iterations 50 --negatives 5"
                            " --seed 3 --output ";
  REQUIRE(run_cli(train + tmp.file("g.ckpt")) == 0);

  const std::string apply = "postspec-apply --checkpoint " + tmp.file("g.ckpt") +
                            " --embeddings " + tmp.file("orig.vec") + " --output ";
  REQUIRE(run_cli(apply + tmp.file("mapped1.vec")) == 0);
  REQUIRE(run_cli(apply + tmp.file("mapped2.vec")) == 0);
  CHECK(testutil::read_file(tmp.file("mapped1.vec")) ==
        testutil::read_file(tmp.file("mapped2.vec")));

  const auto mapped = vecspec::load_embeddings(tmp.file("mapped1.vec"));
  CHECK(mapped.size() == 300);  // full-vocabulary coverage
}

TEST_CASE("config file round trip reruns to identical artifacts") {
  testutil::TempDir tmp;
  write_synthetic_space(tmp.file("emb.vec"), 40, 6, 8);
  testutil::write_file(tmp.file("attract.txt"), "w0 w1\nw2 w3\n");
  testutil::write_file(tmp.file("repel.txt"), "w4 w5\n");

  REQUIRE(run_cli("specialize --embeddings " + tmp.file("emb.vec") + " --attract " +
                  tmp.file("attract.txt") + " --repel " + tmp.file("repel.txt") +
                  " --epochs 2 --seed 9 --output " + tmp.file("out1.vec")) == 0);

  // The emitted effective config is itself a valid config file.
  REQUIRE(run_cli("specialize --config " + tmp.file("out1.vec.config") +
                  " --output " + tmp.file("out2.vec")) == 0);
  CHECK(testutil::read_file(tmp.file("out1.vec")) ==
        testutil::read_file(tmp.file("out2.vec")));
}

TEST_CASE("unknown config keys are rejected") {
  testutil::TempDir tmp;
  testutil::write_file(tmp.file("bad.config"), "no_such_option=1\n");
  const int code = run_cli("eval-sim --config " + tmp.file("bad.config") +
                           " --embeddings x --dataset y --output z");
  CHECK(code == 2);
}
