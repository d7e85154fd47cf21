#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace emodiff {

// Word embedding store. Vectors are kept as columns of a D x V matrix so a
// whole block of similarity queries is one matrix product. Every stored
// vector is finite with nonzero norm and every word is unique and non-empty.
class EmbeddingStore {
 public:
  int dim() const { return static_cast<int>(mat_.rows()); }
  int size() const { return n_; }

  bool contains(std::string_view word) const;
  // Index of a word; throws MissingWord when absent.
  int id_of(std::string_view word) const;
  const std::string& word_of(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& words() const { return words_; }

  Eigen::VectorXd vector_of(std::string_view word) const;
  // Adds a word; the first insertion fixes the dimension D.
  void add(const std::string& word, const Eigen::VectorXd& vec);

  // Unit-norm view of the stored vectors, built on first use.
  const Eigen::MatrixXd& normalized() const;

  // Text format: optional "V D" count line, then one "word x1 ... xD" row
  // per word, whitespace separated.
  static EmbeddingStore load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  Eigen::MatrixXd mat_;  // D x V
  int n_ = 0;            // columns in use; mat_ grows geometrically
  mutable Eigen::MatrixXd normalized_;
  mutable bool normalized_valid_ = false;
};

struct Neighbor {
  std::string word;
  double similarity;
};

struct IdSim {
  int id;
  double similarity;
};

// Cosine similarity of two raw vectors. Throws DegenerateVector when either
// norm is zero and InvalidInput on dimension mismatch.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// The n most similar words to a stored word, most similar first. The query
// word itself is excluded; distinct words with identical vectors are not.
// Ties are broken lexicographically. Requires 1 <= n <= size - 1.
std::vector<Neighbor> nearest_words(const EmbeddingStore& store, std::string_view word, int n);

// Top-k neighbor ids for many stored queries at once, computed with blocked
// matrix products. Same ordering rules as nearest_words.
std::vector<std::vector<IdSim>> topk_neighbors(const EmbeddingStore& store,
                                               const std::vector<int>& query_ids, int k);

// Memoized top-k lists keyed by word id; k is fixed per cache. prefetch
// batches all missing queries into one blocked computation.
class NeighborCache {
 public:
  NeighborCache(const EmbeddingStore& store, int k) : store_(&store), k_(k) {}

  int k() const { return k_; }
  void prefetch(const std::vector<int>& ids);
  const std::vector<IdSim>& get(int id);

 private:
  const EmbeddingStore* store_;
  int k_;
  std::unordered_map<int, std::vector<IdSim>> map_;
};

}  // namespace emodiff
