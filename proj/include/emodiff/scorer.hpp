#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "emodiff/emotions.hpp"
#include "emodiff/lexicon.hpp"

namespace emodiff {

struct Document {
  std::string id;
  std::string publisher_id;
  std::vector<std::string> tokens;
  std::int64_t n_images = 0;
  std::int64_t n_videos = 0;
  bool posted_weekend = false;
  std::int64_t n_comments = 0;
  bool original = true;
  std::int64_t char_length = 0;
  // Set on comment documents only: the article the comment belongs to.
  std::string article_id;
};

// JSON Lines, one document per line; tokens as an array of strings.
std::vector<Document> load_documents(const std::filesystem::path& path);
void save_documents(const std::vector<Document>& docs, const std::filesystem::path& path);

struct ModifierDictionaries {
  std::unordered_set<std::string> negations;
  std::unordered_map<std::string, double> degrees;  // values > 0

  // Negations: one word per line. Degrees: tab-separated word, value.
  // The two sets must be disjoint.
  static ModifierDictionaries load(const std::filesystem::path& negations_path,
                                   const std::filesystem::path& degrees_path);
};

// Words that are both lexicon entries and modifiers, sorted. During scoring
// such words count as emotion words, so callers should treat a non-empty
// result as a data error.
std::vector<std::string> modifier_lexicon_conflicts(const Lexicon& lexicon,
                                                    const ModifierDictionaries& modifiers);

// Per-document emotion score: every lexicon token contributes its intensity
// vector scaled by (-1)^(negations in window) times the mean degree value in
// the window (1.0 when none). The window is the `window` tokens immediately
// before the emotion word. Documents without emotion words score zero.
EmotionVector score_document(const Document& doc, const Lexicon& lexicon,
                             const ModifierDictionaries& modifiers, int window = 3);

struct EmotionMatrix {
  std::vector<std::string> doc_ids;
  Eigen::MatrixXd values;  // one row per document, one column per emotion
  bool standardized = false;
};

EmotionMatrix score_corpus(const std::vector<Document>& docs, const Lexicon& lexicon,
                           const ModifierDictionaries& modifiers, int window = 3);

// Column-wise z-scores with population standard deviation. Requires >= 2
// rows; constant columns raise DegenerateColumn naming the emotion.
EmotionMatrix standardize(const EmotionMatrix& raw);

// Row sums of the raw matrix, z-scored the same way.
std::vector<double> degree_of_emotion(const EmotionMatrix& raw);

// Pearson correlations between emotion columns; symmetric with unit
// diagonal and positive semidefinite up to rounding.
Eigen::MatrixXd correlation_matrix(const EmotionMatrix& matrix);

}  // namespace emodiff
