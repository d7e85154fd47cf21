#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emodiff/embedding.hpp"
#include "emodiff/emotions.hpp"

namespace emodiff {

struct LexiconEntry {
  std::string word;
  EmotionVector intensities;  // each in [0, 1]
  bool mined = false;
  int iteration = 0;  // 0 for curated entries, the admitting iteration otherwise
};

// Word -> per-emotion intensity table. Entries keep insertion order so a
// saved lexicon reproduces byte for byte.
class Lexicon {
 public:
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(std::string_view word) const;
  const LexiconEntry& entry(std::string_view word) const;  // throws MissingWord
  const std::vector<LexiconEntry>& entries() const { return entries_; }

  void add(LexiconEntry entry);

  // Tab-separated: word, eight intensity columns in canonical emotion order,
  // provenance ("basic" or "mined@<iteration>").
  static Lexicon load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ExpansionParams {
  int mining_neighbors = 100;   // neighbor list mined per lexicon word
  int class_neighbors = 12;     // neighbors scored for class membership
  int intensity_neighbors = 10; // neighbors averaged for intensity
  double alpha = 1.2;           // class score threshold
  int max_iterations = 50;

  void validate() const;
};

// Embedding-weighted class score: for each emotion, the sum of
// similarity * intensity over the class_neighbors nearest stored words that
// are in the lexicon; sums below alpha are zeroed. Requires the word in the
// store and a non-empty lexicon.
EmotionVector eo_sd(const EmbeddingStore& store, const Lexicon& lexicon,
                    std::string_view word, const ExpansionParams& params);

// For each emotion with a nonzero class score, the mean of the strictly
// positive intensities among the intensity_neighbors nearest lexicon words;
// zero when no such neighbor exists.
EmotionVector estimate_intensities(const EmbeddingStore& store, const Lexicon& lexicon,
                                   std::string_view word, const ExpansionParams& params);

struct IterationLog {
  int iteration;
  std::int64_t candidates;
  std::int64_t added;
};

struct ExpansionResult {
  Lexicon lexicon;
  std::vector<IterationLog> iterations;
  std::vector<std::string> skipped_seed_words;  // curated words absent from the store
  bool hit_iteration_cap = false;
};

// Iterative expansion: mine neighbor candidates of every lexicon word, admit
// candidates whose class score clears alpha and whose estimated intensities
// are not all zero, repeat until a fixed point or the iteration cap. Within
// an iteration all candidates are scored against the same lexicon state and
// admissions are merged afterwards in lexicographic order, so the result is
// deterministic.
ExpansionResult expand_lexicon(const EmbeddingStore& store, const Lexicon& basic,
                               const ExpansionParams& params);

struct HoldoutReport {
  double mae = 0.0;      // mean absolute intensity error over 8 emotions
  std::size_t holdout_size = 0;
  std::size_t evaluated = 0;  // holdout words present in the store
};

// Removes a seeded random holdout (capped at 1000 words), re-estimates each
// held-out word from the remaining lexicon, and reports the mean absolute
// error across all eight intensities.
HoldoutReport validate_holdout(const EmbeddingStore& store, const Lexicon& lexicon,
                               double holdout_fraction, std::uint64_t seed,
                               const ExpansionParams& params);

}  // namespace emodiff
