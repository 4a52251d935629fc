#include "doctest.h"

#include <cmath>

#include "util.hpp"
#include "vecspec/embedding.hpp"
#include "vecspec/errors.hpp"
#include "vecspec/rng.hpp"

using namespace vecspec;

TEST_CASE("load_embeddings parses a minimal headerless file") {
  testutil::TempDir tmp;
  const auto path = tmp.file("tiny.vec");
  testutil::write_file(path, "a 1 0\nb 0 1\n");

  const auto space = load_embeddings(path);
  CHECK(space.size() == 2);
  CHECK(space.dim() == 2);
  CHECK(space.words[0] == "a");
  CHECK(space.matrix(0, 0) == 1.0);
  CHECK(space.matrix(1, 1) == 1.0);
}

TEST_CASE("load_embeddings keeps the first occurrence of a duplicate word") {
  testutil::TempDir tmp;
  const auto path = tmp.file("dup.vec");
  testutil::write_file(path, "a 1 0\na 0 1\n");

  const auto space = load_embeddings(path);
  CHECK(space.size() == 1);
  CHECK(space.matrix(0, 0) == 1.0);
  CHECK(space.matrix(0, 1) == 0.0);
}

TEST_CASE("load_embeddings header fixture round-trips through save") {
  testutil::TempDir tmp;
  Rng rng(7);
  const Eigen::Index d = 300;
  Eigen::MatrixXd m(3, d);
  for (Eigen::Index r = 0; r < 3; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) m(r, c) = rng.normal();
  }
  auto space = EmbeddingSpace::create({"alpha", "beta", "gamma"}, m);

  const auto path = tmp.file("wide.vec");
  save_embeddings(space, path);
  const auto loaded = load_embeddings(path);
  CHECK(loaded.dim() == 300);
  CHECK(loaded.size() == 3);
  CHECK(loaded.words == space.words);
  CHECK(loaded.matrix == space.matrix);  // bitwise
}

TEST_CASE("load_embeddings error paths") {
  testutil::TempDir tmp;

  SUBCASE("malformed float reports the line number") {
    const auto path = tmp.file("bad.vec");
    testutil::write_file(path, "a 1 0\nb 0 zzz\n");
    CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains(":2:"),
                         ParseError);
  }
  SUBCASE("inconsistent dimension rejected") {
    const auto path = tmp.file("dim.vec");
    testutil::write_file(path, "a 1 0\nb 0 1 2\n");
    CHECK_THROWS_AS(load_embeddings(path), ParseError);
  }
  SUBCASE("empty file rejected") {
    const auto path = tmp.file("empty.vec");
    testutil::write_file(path, "");
    CHECK_THROWS_AS(load_embeddings(path), Error);
  }
  SUBCASE("limit truncates the vocabulary") {
    const auto path = tmp.file("lim.vec");
    testutil::write_file(path, "a 1 0\nb 0 1\nc 1 1\n");
    CHECK(load_embeddings(path, 2).size() == 2);
  }
}

TEST_CASE("save_embeddings rejects an empty space and round-trips randomly") {
  testutil::TempDir tmp;
  EmbeddingSpace empty;
  empty.matrix.resize(0, 3);
  CHECK_THROWS_AS(save_embeddings(empty, tmp.file("x.vec")), Error);

  // 1000-word random space: value-identical after save/load.
  Rng rng(11);
  const Eigen::Index n = 1000, d = 17;
  Eigen::MatrixXd m(n, d);
  std::vector<std::string> words;
  for (Eigen::Index r = 0; r < n; ++r) {
    words.push_back("w" + std::to_string(r));
    for (Eigen::Index c = 0; c < d; ++c) {
      m(r, c) = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
    }
  }
  const auto space = EmbeddingSpace::create(words, m);
  const auto path = tmp.file("big.vec");
  save_embeddings(space, path);
  const auto loaded = load_embeddings(path);
  CHECK((loaded.matrix - space.matrix).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cosine basics") {
  Eigen::RowVectorXd u(2), v(2);
  u << 3, 4;
  CHECK(cosine(u, u) == 1.0);

  u << 1, 0;
  v << 0, 1;
  CHECK(cosine(u, v) == 0.0);

  u << 1, 1;
  v << 1, 0;
  CHECK(cosine(u, v) == doctest::Approx(0.70710678).epsilon(1e-8));

  v << 0, 0;
  CHECK_THROWS_AS(cosine(u, v), Error);
}

TEST_CASE("cosine is symmetric and self-cosine is 1") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    Eigen::RowVectorXd u(8), v(8);
    for (int k = 0; k < 8; ++k) {
      u(k) = rng.normal();
      v(k) = rng.normal();
    }
    CHECK(cosine(u, v) == doctest::Approx(cosine(v, u)).epsilon(1e-12));
    CHECK(cosine(u, u) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("unit_normalize") {
  SUBCASE("3-4-5 triangle") {
    Eigen::MatrixXd m(1, 2);
    m << 3, 4;
    const auto space = unit_normalize(EmbeddingSpace::create({"w"}, m));
    CHECK(space.matrix(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(space.matrix(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
  }
  SUBCASE("idempotent within 1e-12, norms within 1e-6") {
    Rng rng(5);
    Eigen::MatrixXd m(40, 6);
    std::vector<std::string> words;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      words.push_back("w" + std::to_string(r));
      for (Eigen::Index c = 0; c < 6; ++c) m(r, c) = rng.normal();
    }
    const auto once = unit_normalize(EmbeddingSpace::create(words, m));
    const auto twice = unit_normalize(once);
    CHECK((twice.matrix - once.matrix).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index r = 0; r < once.matrix.rows(); ++r) {
      CHECK(std::abs(once.matrix.row(r).norm() - 1.0) < 1e-6);
    }
  }
  SUBCASE("zero row names the word") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 0, 0, 0;
    CHECK_THROWS_WITH_AS(
        unit_normalize(EmbeddingSpace::create({"ok", "zilch"}, m)),
        doctest::Contains("zilch"), Error);
  }
}

TEST_CASE("EmbeddingSpace::create validates invariants") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 0, 0, 1;
  CHECK_THROWS_AS(EmbeddingSpace::create({"a", "a"}, m), Error);
  m(1, 1) = std::nan("");
  CHECK_THROWS_AS(EmbeddingSpace::create({"a", "b"}, m), Error);
  m(1, 1) = 1.0;
  CHECK_THROWS_AS(EmbeddingSpace::create({"a"}, m), Error);
}
