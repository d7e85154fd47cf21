#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emodiff/lexicon.hpp"

namespace emodiff {

// Bag-of-ids corpus after filtering. Documents that lost every token keep
// their slot and are flagged.
struct Corpus {
  std::vector<std::vector<int>> docs;
  std::vector<std::string> vocab;
  std::unordered_map<std::string, int> vocab_index;
  std::vector<std::int64_t> doc_freq;  // documents containing each vocab id
  std::vector<char> empty_flags;

  std::int64_t total_tokens() const;
  // Same vocabulary, subset of documents.
  Corpus subset(const std::vector<std::size_t>& doc_indices) const;
};

// Drops lexicon words and words present in fewer than min_doc_freq of the
// documents, then assigns vocabulary ids in first-appearance order.
Corpus preprocess(const std::vector<std::vector<std::string>>& documents, const Lexicon& lexicon,
                  double min_doc_freq = 0.001);

struct TopicModel {
  int K = 0;
  double alpha = 0.0;  // symmetric document-topic prior
  double beta = 0.0;   // symmetric topic-word prior
  std::uint64_t seed = 0;
  std::vector<std::string> vocab;
  std::unordered_map<std::string, int> vocab_index;
  Eigen::MatrixXd phi;  // K x V, each row sums to 1
  std::vector<std::vector<int>> assignments;   // final topic of every training token
  std::vector<std::vector<std::int64_t>> doc_topic_counts;  // per training doc

  // Topic distribution of training document d from its final counts.
  Eigen::VectorXd training_doc_topics(std::size_t d) const;

  void save(const std::filesystem::path& dir) const;
  static TopicModel load(const std::filesystem::path& dir);
};

// Collapsed Gibbs sampler. alpha < 0 selects the 50/K default. Identical
// (corpus, K, iterations, seed, priors) give identical output.
TopicModel fit_lda(const Corpus& corpus, int K, int iterations, std::uint64_t seed,
                   double alpha = -1.0, double beta = 0.01);

// Document-completion perplexity: per document, fold in the even-position
// tokens to infer theta, score the odd-position tokens, and return
// exp(-LL / scored tokens). Tokens outside the model vocabulary are skipped.
double perplexity(const TopicModel& model, const Corpus& heldout);

struct KSelection {
  int best_k = 0;
  std::vector<std::pair<int, double>> curve;  // (K, validation perplexity)
};

// Fits every candidate on a seeded train split and picks the K with the
// lowest validation perplexity; exact ties go to the smaller K.
KSelection select_k(const Corpus& corpus, const std::vector<int>& ks, std::uint64_t seed,
                    int iterations = 800, double train_fraction = 0.8);

// Fold-in inference for one tokenized document; deterministic given the
// model and the token sequence. All-out-of-vocabulary documents fall back
// to the prior mean.
Eigen::VectorXd doc_topics(const TopicModel& model, const std::vector<std::string>& tokens);

}  // namespace emodiff
