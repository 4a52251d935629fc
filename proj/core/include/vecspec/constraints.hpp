#pragma once

#include <cstddef>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace vecspec {

using WordPair = std::pair<std::string, std::string>;
using WordSet = std::unordered_set<std::string>;

// ATTRACT (synonym-like) and REPEL (antonym-like) word pairs, restricted to
// a vocabulary. No (w, w) pairs, no pair present in both lists.
struct ConstraintSet {
  std::vector<WordPair> attract;
  std::vector<WordPair> repel;

  std::size_t conflicts_dropped = 0;  // pairs found in both input files
  std::size_t oov_dropped = 0;        // pairs with an out-of-vocabulary member

  bool empty() const { return attract.empty() && repel.empty(); }
};

struct VocabPartition {
  WordSet seen;    // words appearing in at least one constraint pair
  WordSet unseen;  // the rest of the vocabulary
};

// One pair per line, two whitespace-separated tokens. Pairs with an OOV
// member are dropped, duplicates (order-insensitive) are deduplicated,
// (w, w) pairs are dropped, and pairs occurring in both files are removed
// from both sides (counted in conflicts_dropped). strip_prefix, when
// nonempty, is removed from the front of every token before lookup
// (published constraint lists sometimes carry "en_"-style language tags).
ConstraintSet load_constraints(const std::string& attract_path,
                               const std::string& repel_path,
                               const WordSet& vocab,
                               const std::string& strip_prefix = "");

VocabPartition split_seen_unseen(const WordSet& vocab, const ConstraintSet& cs);

// Removes every pair with at least one member in test_words, from both sides.
ConstraintSet filter_disjoint(const ConstraintSet& cs, const WordSet& test_words);

}  // namespace vecspec
