#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace vecspec {

// A vocabulary plus one dense row vector per word. Immutable after
// construction; concurrent reads are safe.
struct EmbeddingSpace {
  std::vector<std::string> words;
  Eigen::MatrixXd matrix;  // rows: words, cols: vector components
  std::unordered_map<std::string, std::size_t> index;

  std::size_t size() const { return words.size(); }
  Eigen::Index dim() const { return matrix.cols(); }

  bool contains(const std::string& w) const { return index.count(w) != 0; }

  std::size_t row_of(const std::string& w) const { return index.at(w); }

  Eigen::RowVectorXd row(const std::string& w) const {
    return matrix.row(static_cast<Eigen::Index>(index.at(w)));
  }

  // Validates invariants (unique words, matching row count, finite entries)
  // and builds the word index.
  static EmbeddingSpace create(std::vector<std::string> words,
                               Eigen::MatrixXd matrix);
};

// Whitespace-separated text format: optional "V d" header, then one line per
// word ("token c1 ... cd"). Duplicate words keep the first occurrence.
// limit == 0 means no limit.
EmbeddingSpace load_embeddings(const std::string& path, std::size_t limit = 0);

// Writes "V d" header plus one row per word, with round-trip-exact decimals:
// load(save(x)) == x bitwise on values.
void save_embeddings(const EmbeddingSpace& space, const std::string& path);

// dot(u,v)/(|u||v|), clamped to [-1,1]. Throws on zero-norm input.
double cosine(const Eigen::Ref<const Eigen::RowVectorXd>& u,
              const Eigen::Ref<const Eigen::RowVectorXd>& v);

// Every row divided by its L2 norm. Throws naming the word on a zero row.
EmbeddingSpace unit_normalize(const EmbeddingSpace& space);

}  // namespace vecspec
