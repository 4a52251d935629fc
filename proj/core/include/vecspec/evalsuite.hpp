#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "vecspec/embedding.hpp"

namespace vecspec {

struct SimilarityRecord {
  std::string word1;
  std::string word2;
  double gold;
};

struct SimilarityDataset {
  std::vector<SimilarityRecord> records;
};

// Tab-separated "word1 <TAB> word2 <TAB> score". Duplicate pairs
// (order-insensitive) keep the first occurrence.
SimilarityDataset load_similarity_dataset(const std::string& path);

struct SimplificationRecord {
  std::vector<std::string> sentence;
  std::size_t complex_index;
  std::vector<std::string> gold;  // annotator substitutes, multiset
};

struct SimplificationDataset {
  std::vector<SimplificationRecord> records;
};

// Tab-separated "sentence <TAB> index <TAB> sub1,sub2,...". The sentence is
// space-tokenized; the index must address a token and the gold list must be
// nonempty.
SimplificationDataset load_simplification_dataset(const std::string& path);

// Spearman's rho: Pearson correlation of the two rank vectors, average ranks
// for ties. Throws on length mismatch, fewer than two points, or a constant
// input (undefined correlation).
double spearman(const std::vector<double>& gold, const std::vector<double>& pred);

struct SimilarityResult {
  double rho = 0.0;
  double coverage = 0.0;  // fraction of pairs with both words in vocabulary
  std::size_t pairs_total = 0;
  std::size_t pairs_evaluated = 0;
};

// Cosine similarity as the predicted score; out-of-vocabulary pairs are
// skipped and reported through coverage.
SimilarityResult eval_similarity(const EmbeddingSpace& space,
                                 const SimilarityDataset& dataset);

// The n_candidates nearest vocabulary neighbours of the complex word by
// cosine, excluding the word itself and its case variants, best first.
std::vector<std::pair<std::string, double>> simplify_rank(
    const EmbeddingSpace& space, const std::vector<std::string>& sentence,
    std::size_t complex_index, std::size_t n_candidates);

struct LsResult {
  double accuracy = 0.0;
  std::size_t records_total = 0;
  std::size_t records_correct = 0;
  std::size_t records_skipped_oov = 0;  // count as incorrect in the denominator
};

// A record is correct iff the top-ranked candidate is one of the gold
// substitutes.
LsResult ls_accuracy(const EmbeddingSpace& space,
                     const SimplificationDataset& dataset,
                     std::size_t n_candidates);

}  // namespace vecspec
