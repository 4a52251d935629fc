#include "vecspec/constraints.hpp"

#include <fstream>
#include <sstream>

#include "vecspec/errors.hpp"

namespace vecspec {

namespace {

// Order-insensitive pair key (the losses are symmetric in the two members).
std::string pair_key(const std::string& a, const std::string& b) {
  return a < b ? a + '\t' + b : b + '\t' + a;
}

struct RawPairs {
  std::vector<WordPair> pairs;
  std::unordered_set<std::string> keys;
  std::size_t oov_dropped = 0;
};

RawPairs read_pair_file(const std::string& path, const WordSet& vocab,
                        const std::string& strip_prefix) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");

  RawPairs out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string a, b, extra;
    if (!(ss >> a)) continue;  // blank line
    if (!(ss >> b) || (ss >> extra)) {
      throw ParseError(path, lineno, "expected exactly two tokens");
    }
    if (!strip_prefix.empty()) {
      if (a.rfind(strip_prefix, 0) == 0) a.erase(0, strip_prefix.size());
      if (b.rfind(strip_prefix, 0) == 0) b.erase(0, strip_prefix.size());
    }
    if (a == b) continue;
    if (!vocab.count(a) || !vocab.count(b)) {
      ++out.oov_dropped;
      continue;
    }
    if (!out.keys.insert(pair_key(a, b)).second) continue;  // duplicate
    out.pairs.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

}  // namespace

ConstraintSet load_constraints(const std::string& attract_path,
                               const std::string& repel_path,
                               const WordSet& vocab,
                               const std::string& strip_prefix) {
  RawPairs att = read_pair_file(attract_path, vocab, strip_prefix);
  RawPairs rep = read_pair_file(repel_path, vocab, strip_prefix);

  ConstraintSet cs;
  cs.oov_dropped = att.oov_dropped + rep.oov_dropped;

  // A pair listed as both ATTRACT and REPEL is contradictory; drop it from
  // both sides (the source gives no precedence rule).
  for (const auto& [a, b] : att.pairs) {
    if (rep.keys.count(pair_key(a, b))) {
      ++cs.conflicts_dropped;
    } else {
      cs.attract.emplace_back(a, b);
    }
  }
  for (const auto& [a, b] : rep.pairs) {
    if (att.keys.count(pair_key(a, b))) continue;
    cs.repel.emplace_back(a, b);
  }
  return cs;
}

VocabPartition split_seen_unseen(const WordSet& vocab, const ConstraintSet& cs) {
  VocabPartition p;
  for (const auto& [a, b] : cs.attract) {
    p.seen.insert(a);
    p.seen.insert(b);
  }
  for (const auto& [a, b] : cs.repel) {
    p.seen.insert(a);
    p.seen.insert(b);
  }
  for (const auto& w : vocab) {
    if (!p.seen.count(w)) p.unseen.insert(w);
  }
  return p;
}

ConstraintSet filter_disjoint(const ConstraintSet& cs, const WordSet& test_words) {
  ConstraintSet out;
  out.conflicts_dropped = cs.conflicts_dropped;
  out.oov_dropped = cs.oov_dropped;
  for (const auto& p : cs.attract) {
    if (!test_words.count(p.first) && !test_words.count(p.second)) {
      out.attract.push_back(p);
    }
  }
  for (const auto& p : cs.repel) {
    if (!test_words.count(p.first) && !test_words.count(p.second)) {
      out.repel.push_back(p);
    }
  }
  return out;
}

}  // namespace vecspec
