#include "emodiff/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "emodiff/errors.hpp"
#include "emodiff/text_table.hpp"

namespace emodiff {

namespace {

// Queries per block; bounds the V x B similarity panel to tens of MB.
constexpr int kQueryBlock = 256;

}  // namespace

bool EmbeddingStore::contains(std::string_view word) const {
  return index_.find(std::string(word)) != index_.end();
}

int EmbeddingStore::id_of(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end())
    throw MissingWord("word not in embedding store: '" + std::string(word) + "'");
  return it->second;
}

Eigen::VectorXd EmbeddingStore::vector_of(std::string_view word) const {
  return mat_.col(id_of(word));
}

void EmbeddingStore::add(const std::string& word, const Eigen::VectorXd& vec) {
  if (word.empty()) throw InvalidInput("embedding word must be non-empty");
  if (index_.count(word))
    throw InvalidInput("duplicate embedding word: '" + word + "'");
  if (n_ == 0 && mat_.rows() == 0) {
    if (vec.size() == 0) throw InvalidInput("embedding vector must be non-empty");
    mat_.resize(vec.size(), 16);
  }
  if (vec.size() != mat_.rows())
    throw InvalidInput("embedding dimension mismatch for '" + word + "': expected " +
                       std::to_string(mat_.rows()) + ", got " + std::to_string(vec.size()));
  if (!vec.allFinite())
    throw InvalidInput("embedding vector for '" + word + "' has non-finite entries");
  if (vec.norm() == 0.0)
    throw InvalidInput("embedding vector for '" + word + "' has zero norm");
  if (n_ == mat_.cols()) mat_.conservativeResize(Eigen::NoChange, mat_.cols() * 2);
  mat_.col(n_) = vec;
  index_.emplace(word, n_);
  words_.push_back(word);
  ++n_;
  normalized_valid_ = false;
}

const Eigen::MatrixXd& EmbeddingStore::normalized() const {
  if (!normalized_valid_) {
    normalized_ = mat_.leftCols(n_);
    for (int j = 0; j < n_; ++j) normalized_.col(j).normalize();
    normalized_valid_ = true;
  }
  return normalized_;
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
  std::string content = read_text_file(path);
  std::istringstream in(content);
  std::string line;
  EmbeddingStore store;
  std::size_t lineno = 0;
  bool first_data = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (first_data && tokens.size() == 2) {
      // Count line "V D"; both fields must be integers.
      bool header = true;
      for (const auto& t : tokens)
        if (t.find_first_not_of("0123456789") != std::string::npos) header = false;
      if (header) {
        first_data = false;
        continue;
      }
    }
    first_data = false;
    if (tokens.size() < 2)
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) +
                         ": embedding row needs a word and at least one value");
    Eigen::VectorXd vec(tokens.size() - 1);
    for (std::size_t i = 1; i < tokens.size(); ++i)
      vec[static_cast<Eigen::Index>(i - 1)] = parse_double(tokens[i], "embedding value");
    store.add(tokens[0], vec);
  }
  if (store.size() == 0) throw InvalidInput("embedding file has no vectors: " + path.string());
  return store;
}

void EmbeddingStore::save(const std::filesystem::path& path) const {
  std::string out = std::to_string(n_) + " " + std::to_string(mat_.rows()) + "\n";
  for (int j = 0; j < n_; ++j) {
    out += words_[static_cast<std::size_t>(j)];
    for (Eigen::Index r = 0; r < mat_.rows(); ++r) {
      out += ' ';
      out += format_exact(mat_(r, j));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw InvalidInput("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                       " vs " + std::to_string(b.size()) + ")");
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0)
    throw DegenerateVector("cosine_similarity: zero-norm vector");
  return a.dot(b) / (na * nb);
}

std::vector<std::vector<IdSim>> topk_neighbors(const EmbeddingStore& store,
                                               const std::vector<int>& query_ids, int k) {
  const int V = store.size();
  if (k < 1 || k > V - 1)
    throw InvalidInput("neighbor count must lie in [1, vocabulary size - 1]");
  for (int id : query_ids)
    if (id < 0 || id >= V) throw InvalidInput("query id out of range");

  const Eigen::MatrixXd& N = store.normalized();
  const auto& words = store.words();
  std::vector<std::vector<IdSim>> out(query_ids.size());

  std::vector<int> order(static_cast<std::size_t>(V));
  Eigen::MatrixXd block(N.rows(), kQueryBlock);
  Eigen::MatrixXd sims(V, kQueryBlock);

  for (std::size_t begin = 0; begin < query_ids.size(); begin += kQueryBlock) {
    const int b = static_cast<int>(std::min<std::size_t>(kQueryBlock, query_ids.size() - begin));
    for (int j = 0; j < b; ++j) block.col(j) = N.col(query_ids[begin + static_cast<std::size_t>(j)]);
    sims.leftCols(b).noalias() = N.transpose() * block.leftCols(b);

    for (int j = 0; j < b; ++j) {
      const int self = query_ids[begin + static_cast<std::size_t>(j)];
      const double* s = sims.col(j).data();
      int m = 0;
      for (int i = 0; i < V; ++i)
        if (i != self) order[static_cast<std::size_t>(m++)] = i;
      auto better = [s, &words](int a, int c) {
        if (s[a] != s[c]) return s[a] > s[c];
        return words[static_cast<std::size_t>(a)] < words[static_cast<std::size_t>(c)];
      };
      std::nth_element(order.begin(), order.begin() + (k - 1), order.begin() + m, better);
      std::sort(order.begin(), order.begin() + k, better);
      auto& dst = out[begin + static_cast<std::size_t>(j)];
      dst.resize(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i)
        dst[static_cast<std::size_t>(i)] = {order[static_cast<std::size_t>(i)],
                                            s[order[static_cast<std::size_t>(i)]]};
    }
  }
  return out;
}

std::vector<Neighbor> nearest_words(const EmbeddingStore& store, std::string_view word, int n) {
  int id = store.id_of(word);
  auto lists = topk_neighbors(store, {id}, n);
  std::vector<Neighbor> out;
  out.reserve(lists[0].size());
  for (const auto& [nid, sim] : lists[0]) out.push_back({store.word_of(nid), sim});
  return out;
}

void NeighborCache::prefetch(const std::vector<int>& ids) {
  std::vector<int> missing;
  for (int id : ids)
    if (!map_.count(id)) missing.push_back(id);
  if (missing.empty()) return;
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  auto lists = topk_neighbors(*store_, missing, k_);
  for (std::size_t i = 0; i < missing.size(); ++i)
    map_.emplace(missing[i], std::move(lists[i]));
}

const std::vector<IdSim>& NeighborCache::get(int id) {
  auto it = map_.find(id);
  if (it != map_.end()) return it->second;
  auto lists = topk_neighbors(*store_, {id}, k_);
  return map_.emplace(id, std::move(lists[0])).first->second;
}

}  // namespace emodiff
