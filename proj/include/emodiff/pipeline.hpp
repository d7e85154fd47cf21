#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emodiff/emotions.hpp"
#include "emodiff/lexicon.hpp"
#include "emodiff/scorer.hpp"
#include "emodiff/stats.hpp"

namespace emodiff {

// Name of the environment variable that relocates the stage cache.
inline constexpr const char* kCacheDirEnv = "EMODIFF_CACHE_DIR";

// Declarative description of one end-to-end run. Relative paths are
// resolved against the manifest file's directory on load.
struct PipelineManifest {
  std::filesystem::path embeddings;
  std::filesystem::path basic_lexicon;
  std::filesystem::path negations;
  std::filesystem::path degrees;
  std::filesystem::path articles;
  std::filesystem::path comments;       // optional
  std::filesystem::path events;         // optional unless regressions run
  std::filesystem::path publish_times;  // required with events
  std::filesystem::path profiles;       // optional
  std::filesystem::path friendships;    // optional
  std::filesystem::path publishers;     // optional publisher covariates
  std::filesystem::path truth_dir;      // optional, enables the recovery report
  std::filesystem::path out_dir;
  std::uint64_t seed = 1;

  ExpansionParams expansion;
  int window = 3;
  double min_doc_freq = 0.001;
  std::vector<int> topic_ks{2, 5, 10};
  int topic_iterations = 800;
  FitMethod method = FitMethod::REML;
  bool run_regressions = true;
  std::string mediator = "log1p_comments";
  double z_threshold = 1.96;

  static PipelineManifest load(const std::filesystem::path& path);
  void validate() const;
};

struct StageReport {
  std::string name;
  bool cached = false;
  bool skipped = false;
  std::string key;  // content hash of the stage inputs and parameters
  std::vector<std::string> outputs;
};

struct RunReport {
  std::vector<StageReport> stages;
};

// Runs every applicable stage in dependency order. Stage outputs are reused
// from the cache when the stage key is unchanged, which never alters the
// bytes a cold run would produce. Errors carry the failing stage's name.
RunReport run_pipeline(const PipelineManifest& manifest);

// One line per stage of the last run, with cache keys and whether each
// output currently exists.
std::string pipeline_status(const PipelineManifest& manifest);

struct ConsistencyRow {
  Emotion emotion = Emotion::Anger;
  std::int64_t n_articles = 0;  // articles whose only extreme emotion is this one
  std::int64_t n_comments = 0;
  std::array<double, kNumEmotions> mean_comment_z{};
  bool matched = false;  // this emotion has the highest mean comment z
  bool empty = true;
};

// Reader-reaction check: group articles by their single extreme emotion
// (z above the threshold for exactly one emotion) and test whether the
// comments on each group score highest on the matching emotion.
std::vector<ConsistencyRow> comment_consistency(const EmotionMatrix& article_z,
                                                const EmotionMatrix& comment_z,
                                                const std::vector<std::string>& comment_article_ids,
                                                double z_threshold = 1.96);

}  // namespace emodiff
