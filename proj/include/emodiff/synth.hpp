#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emodiff/cascade.hpp"
#include "emodiff/embedding.hpp"
#include "emodiff/emotions.hpp"
#include "emodiff/lexicon.hpp"
#include "emodiff/scorer.hpp"

namespace emodiff {

// Generator settings for a fully synthetic dataset with known ground truth.
// Every generated quantity is a deterministic function of `seed`.
struct SynthConfig {
  std::uint64_t seed = 20260815;

  // Embeddings and planted lexicon clusters. Clusters take emotions in
  // round-robin order; each cluster carries one intensity drawn uniformly
  // from [intensity_min, intensity_max] and assigns it to every member.
  int embedding_dim = 50;
  int clusters = 16;
  int seeds_per_cluster = 3;    // curated entries per cluster
  int members_per_cluster = 8;  // cluster words including the seeds
  double cluster_radius = 0.12; // member noise scale before renormalization
  double intensity_min = 0.55;
  double intensity_max = 0.95;
  int vocab_size = 2000;        // cluster words plus quasi-orthogonal fillers

  // Corpus.
  int publishers = 20;
  int articles_per_publisher = 30;
  int topics = 5;
  int topic_vocab = 40;            // disjoint words per topic
  int topic_tokens_per_doc = 60;
  double segments_per_doc = 2.0;   // Poisson mean of emotion insertions
  double negation_prob = 0.3;      // per slot; up to two slots per insertion
  double degree_prob = 0.4;
  int negation_words = 4;
  int degree_words = 6;
  int comments_per_article = 8;
  int comment_emotion_words = 4;
  double comment_align_prob = 0.9; // comment follows the article's top emotion

  // Cascade branching: per-article offspring mean is
  // exp(beta0 + beta' z + beta_log_followers ln(followers) + u_p + eps)
  // scaled by root_scale at the root and node_scale below it.
  double beta0 = 0.4;
  std::array<double, kNumEmotions> beta{};
  double beta_log_followers = 0.0;
  double sigma_mu = 0.4;   // publisher intercept sd
  double sigma_eps = 0.2;  // per-article noise sd
  double root_scale = 3.0;
  double node_scale = 0.55;
  double weak_tie_prob = 0.35;
  double delay_mean = 0.5; // hours between a share and each reshare
  std::int64_t node_cap = 10000;

  // Sharer attributes.
  double age_min = 18.0;
  double age_max = 60.0;
  double male_prob = 0.5;
  double friend_count_mean = 80.0;
  double seed_friend_prob = 0.25; // link prob among first-level sharers

  int cluster_words() const { return clusters * members_per_cluster; }

  void validate() const;
  static SynthConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct SynthEmbeddings {
  EmbeddingStore store;
  Lexicon basic;  // the curated seeds, what expansion starts from
  Lexicon full;   // every planted cluster member, what expansion should find
  std::vector<Emotion> cluster_emotion;
  std::vector<double> cluster_intensity;
};

// Plants one direction per cluster, members within cluster_radius of it and
// fillers drawn uniformly on the sphere.
SynthEmbeddings gen_embeddings(const SynthConfig& config);

struct SynthCorpus {
  std::vector<Document> articles;
  std::vector<Document> comments;
  std::vector<std::string> negations;
  std::vector<std::pair<std::string, double>> degrees;
  ModifierDictionaries modifiers;
  Eigen::MatrixXd article_truth;  // articles x emotions, exact raw scores
  Eigen::MatrixXd comment_truth;  // comments x emotions
  Eigen::MatrixXd article_z;      // article_truth standardized per column
  std::vector<int> article_topic;         // planted topic per article
  std::vector<Emotion> article_dominant;  // argmax of article_z per article
  std::vector<std::vector<std::string>> topic_words;  // disjoint per topic
};

// Documents interleave topic words with emotion insertions whose negation
// and degree modifiers sit inside the scoring window, separated by enough
// topic tokens that windows never overlap. The recorded truth is therefore
// exactly what the scorer computes.
SynthCorpus gen_corpus(const SynthConfig& config, const Lexicon& lexicon);

struct CascadeTruth {
  std::string article_id;
  double log_mean = 0.0;  // the exponent of the offspring mean
  std::int64_t size = 0;
  bool truncated = false;
};

struct SynthCascades {
  std::vector<ShareEvent> events;
  std::vector<std::pair<std::string, double>> publish_times;
  std::vector<UserProfile> profiles;
  FriendshipStore friendships;
  std::vector<CascadeTruth> truth;
  std::vector<std::string> publisher_ids;
  std::vector<double> publisher_intercept;
  std::vector<double> publisher_followers;
};

// Galton-Watson trees per article, seeded per article id so streams are
// independent of generation order. scores must be the standardized emotion
// matrix of the articles.
SynthCascades gen_cascades(const SynthConfig& config, const std::vector<Document>& articles,
                           const EmotionMatrix& scores);

// Generates everything and writes the dataset plus a truth/ directory.
void synth_all(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace emodiff
