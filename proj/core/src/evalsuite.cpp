#include "vecspec/evalsuite.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "vecspec/errors.hpp"
#include "vecspec/textnum.hpp"

namespace vecspec {

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string> space_tokens(const std::string& s) {
  std::vector<std::string> toks;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) toks.push_back(s.substr(i, j - i));
    i = j;
  }
  return toks;
}

std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

SimilarityDataset load_similarity_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");

  SimilarityDataset ds;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split_on(line, '\t');
    if (cols.size() != 3) {
      throw ParseError(path, lineno, "expected 3 tab-separated columns");
    }
    double score = 0.0;
    if (!parse_double(cols[2], score) || !std::isfinite(score)) {
      throw ParseError(path, lineno, "malformed gold score '" + cols[2] + "'");
    }
    const std::string key =
        cols[0] < cols[1] ? cols[0] + '\t' + cols[1] : cols[1] + '\t' + cols[0];
    if (!seen.insert(key).second) continue;
    ds.records.push_back({cols[0], cols[1], score});
  }
  return ds;
}

SimplificationDataset load_simplification_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");

  SimplificationDataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split_on(line, '\t');
    if (cols.size() != 3) {
      throw ParseError(path, lineno, "expected 3 tab-separated columns");
    }
    SimplificationRecord rec;
    rec.sentence = space_tokens(cols[0]);
    if (!parse_size(cols[1], rec.complex_index)) {
      throw ParseError(path, lineno, "malformed token index '" + cols[1] + "'");
    }
    if (rec.complex_index >= rec.sentence.size()) {
      throw ParseError(path, lineno, "complex-word index out of sentence bounds");
    }
    for (auto& sub : split_on(cols[2], ',')) {
      if (!sub.empty()) rec.gold.push_back(sub);
    }
    if (rec.gold.empty()) {
      throw ParseError(path, lineno, "empty gold substitute list");
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

namespace {

// Average ranks for ties, 1-based.
std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double num = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    num += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0) {
    throw Error("spearman: correlation undefined for constant input");
  }
  return num / std::sqrt(va * vb);
}

}  // namespace

double spearman(const std::vector<double>& gold, const std::vector<double>& pred) {
  if (gold.size() != pred.size()) {
    throw Error("spearman: input lengths differ");
  }
  if (gold.size() < 2) {
    throw Error("spearman: need at least two points");
  }
  return pearson(average_ranks(gold), average_ranks(pred));
}

SimilarityResult eval_similarity(const EmbeddingSpace& space,
                                 const SimilarityDataset& dataset) {
  SimilarityResult res;
  res.pairs_total = dataset.records.size();

  std::vector<double> gold, pred;
  for (const auto& rec : dataset.records) {
    if (!space.contains(rec.word1) || !space.contains(rec.word2)) continue;
    gold.push_back(rec.gold);
    pred.push_back(cosine(space.row(rec.word1), space.row(rec.word2)));
  }
  if (gold.empty()) {
    throw Error("eval_similarity: no dataset pair is covered by the vocabulary");
  }
  res.pairs_evaluated = gold.size();
  res.coverage = static_cast<double>(gold.size()) /
                 static_cast<double>(std::max<std::size_t>(1, res.pairs_total));
  res.rho = spearman(gold, pred);
  return res;
}

std::vector<std::pair<std::string, double>> simplify_rank(
    const EmbeddingSpace& space, const std::vector<std::string>& sentence,
    std::size_t complex_index, std::size_t n_candidates) {
  if (complex_index >= sentence.size()) {
    throw Error("simplify_rank: complex-word index out of bounds");
  }
  const std::string& word = sentence[complex_index];
  if (!space.contains(word)) {
    throw Error("simplify_rank: complex word '" + word + "' not in vocabulary");
  }
  const std::string folded = ascii_lower(word);
  const Eigen::RowVectorXd query = space.row(word);

  const Eigen::VectorXd sims = space.matrix * query.transpose();
  std::vector<std::size_t> order(space.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t want = std::min(n_candidates + 2, space.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(want),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      const double sa = sims(static_cast<Eigen::Index>(a));
                      const double sb = sims(static_cast<Eigen::Index>(b));
                      if (sa != sb) return sa > sb;
                      return a < b;
                    });

  std::vector<std::pair<std::string, double>> ranked;
  for (std::size_t idx : order) {
    if (ranked.size() == n_candidates) break;
    const std::string& cand = space.words[idx];
    if (ascii_lower(cand) == folded) continue;  // the word and case variants
    ranked.emplace_back(cand, sims(static_cast<Eigen::Index>(idx)));
  }
  // partial_sort margin of 2 covers the excluded self/case rows; fall back to
  // a full scan if case variants crowd the margin out.
  if (ranked.size() < n_candidates && want < space.size()) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double sa = sims(static_cast<Eigen::Index>(a));
      const double sb = sims(static_cast<Eigen::Index>(b));
      if (sa != sb) return sa > sb;
      return a < b;
    });
    ranked.clear();
    for (std::size_t idx : order) {
      if (ranked.size() == n_candidates) break;
      const std::string& cand = space.words[idx];
      if (ascii_lower(cand) == folded) continue;
      ranked.emplace_back(cand, sims(static_cast<Eigen::Index>(idx)));
    }
  }
  return ranked;
}

LsResult ls_accuracy(const EmbeddingSpace& space,
                     const SimplificationDataset& dataset,
                     std::size_t n_candidates) {
  if (dataset.records.empty()) {
    throw Error("ls_accuracy: empty dataset");
  }
  LsResult res;
  res.records_total = dataset.records.size();
  for (const auto& rec : dataset.records) {
    const std::string& word = rec.sentence[rec.complex_index];
    if (!space.contains(word)) {
      ++res.records_skipped_oov;
      continue;
    }
    const auto ranked = simplify_rank(space, rec.sentence, rec.complex_index, n_candidates);
    if (ranked.empty()) continue;
    if (std::find(rec.gold.begin(), rec.gold.end(), ranked.front().first) !=
        rec.gold.end()) {
      ++res.records_correct;
    }
  }
  res.accuracy = static_cast<double>(res.records_correct) /
                 static_cast<double>(res.records_total);
  return res;
}

}  // namespace vecspec
