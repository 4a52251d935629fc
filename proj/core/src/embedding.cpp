#include "vecspec/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "vecspec/errors.hpp"
#include "vecspec/textnum.hpp"

namespace vecspec {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> toks;
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < n && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) toks.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

}  // namespace

EmbeddingSpace EmbeddingSpace::create(std::vector<std::string> words,
                                      Eigen::MatrixXd matrix) {
  if (static_cast<Eigen::Index>(words.size()) != matrix.rows()) {
    throw Error("embedding space: " + std::to_string(words.size()) +
                " words but " + std::to_string(matrix.rows()) + " matrix rows");
  }
  if (!matrix.allFinite()) {
    throw Error("embedding space: matrix contains NaN or Inf");
  }
  EmbeddingSpace s;
  s.index.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto [it, inserted] = s.index.emplace(words[i], i);
    if (!inserted) {
      throw Error("embedding space: duplicate word '" + words[i] + "'");
    }
  }
  s.words = std::move(words);
  s.matrix = std::move(matrix);
  return s;
}

EmbeddingSpace load_embeddings(const std::string& path, std::size_t limit) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");

  std::vector<std::string> words;
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<std::vector<double>> rows;
  Eigen::Index dim = -1;

  std::string line;
  std::size_t lineno = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = split_ws(line);
    if (toks.empty()) continue;

    // Optional header "V d": exactly two integer tokens on the first line.
    if (first_content_line && toks.size() == 2) {
      std::size_t v = 0, d = 0;
      if (parse_size(toks[0], v) && parse_size(toks[1], d)) {
        first_content_line = false;
        continue;
      }
    }
    first_content_line = false;

    if (toks.size() < 2) {
      throw ParseError(path, lineno, "expected a token followed by vector components");
    }
    const Eigen::Index this_dim = static_cast<Eigen::Index>(toks.size()) - 1;
    if (dim < 0) {
      dim = this_dim;
    } else if (this_dim != dim) {
      throw ParseError(path, lineno,
                       "dimension mismatch: expected " + std::to_string(dim) +
                           " components, got " + std::to_string(this_dim));
    }

    if (seen.count(toks[0])) continue;  // keep first occurrence

    std::vector<double> vec(static_cast<std::size_t>(dim));
    for (Eigen::Index k = 0; k < dim; ++k) {
      double x = 0.0;
      if (!parse_double(toks[static_cast<std::size_t>(k) + 1], x)) {
        throw ParseError(path, lineno,
                         "malformed float '" + toks[static_cast<std::size_t>(k) + 1] + "'");
      }
      vec[static_cast<std::size_t>(k)] = x;
    }
    seen.emplace(toks[0], words.size());
    words.push_back(toks[0]);
    rows.push_back(std::move(vec));
    if (limit != 0 && words.size() >= limit) break;
  }

  if (words.empty()) throw Error(path + ": no embeddings found (empty input)");

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index k = 0; k < dim; ++k) {
      m(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
    }
  }
  return EmbeddingSpace::create(std::move(words), std::move(m));
}

void save_embeddings(const EmbeddingSpace& space, const std::string& path) {
  if (space.size() == 0) {
    throw Error("save_embeddings: refusing to write an empty space");
  }
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");

  out << space.size() << ' ' << space.dim() << '\n';
  std::string line;
  for (std::size_t i = 0; i < space.size(); ++i) {
    line.clear();
    line += space.words[i];
    for (Eigen::Index k = 0; k < space.dim(); ++k) {
      line += ' ';
      line += format_double(space.matrix(static_cast<Eigen::Index>(i), k));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError(path, "write failed");
}

double cosine(const Eigen::Ref<const Eigen::RowVectorXd>& u,
              const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  if (u.size() != v.size()) {
    throw Error("cosine: dimension mismatch " + std::to_string(u.size()) +
                " vs " + std::to_string(v.size()));
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw Error("cosine: zero-norm input");
  const double c = u.dot(v) / (nu * nv);
  return std::min(1.0, std::max(-1.0, c));
}

EmbeddingSpace unit_normalize(const EmbeddingSpace& space) {
  Eigen::MatrixXd m = space.matrix;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n == 0.0) {
      throw Error("unit_normalize: zero vector for word '" +
                  space.words[static_cast<std::size_t>(i)] + "'");
    }
    m.row(i) /= n;
  }
  return EmbeddingSpace::create(space.words, std::move(m));
}

}  // namespace vecspec
