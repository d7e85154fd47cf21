#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "emodiff/errors.hpp"
#include "emodiff/synth.hpp"
#include "emodiff/text_table.hpp"
#include "test_util.hpp"

using namespace emodiff;
using emodiff_test::TempDir;
namespace fs = std::filesystem;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.seed = 7;
  c.embedding_dim = 12;
  c.clusters = 8;
  c.seeds_per_cluster = 2;
  c.members_per_cluster = 4;
  c.vocab_size = 120;
  c.publishers = 4;
  c.articles_per_publisher = 5;
  c.topics = 3;
  c.topic_vocab = 15;
  c.topic_tokens_per_doc = 40;
  c.comments_per_article = 4;
  c.comment_emotion_words = 3;
  return c;
}

}  // namespace

TEST_CASE("generator settings are validated") {
  SynthConfig c = small_config();
  CHECK_NOTHROW(c.validate());

  c.embedding_dim = 1;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = small_config();
  c.members_per_cluster = 1;  // fewer members than seeds
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = small_config();
  c.vocab_size = 10;
  try {
    c.validate();
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("vocab too small") != std::string::npos);
  }
  c = small_config();
  c.negation_prob = 1.5;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = small_config();
  c.delay_mean = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = small_config();
  c.node_cap = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = small_config();
  c.intensity_min = 0.9;
  c.intensity_max = 0.5;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("settings round-trip through their json file") {
  TempDir tmp;
  SynthConfig c = small_config();
  c.beta[1] = 0.25;
  c.beta[5] = -0.1;
  c.node_cap = 500;
  c.save(tmp / "config.json");
  SynthConfig loaded = SynthConfig::load(tmp / "config.json");
  CHECK(loaded.seed == c.seed);
  CHECK(loaded.beta == c.beta);
  CHECK(loaded.node_cap == 500);
  CHECK(loaded.cluster_radius == c.cluster_radius);

  // Saving the loaded settings reproduces the file byte for byte.
  loaded.save(tmp / "config2.json");
  CHECK(read_text_file(tmp / "config.json") == read_text_file(tmp / "config2.json"));
}

TEST_CASE("planted embeddings have the promised geometry") {
  TempDir tmp;
  SynthConfig c = small_config();
  SynthEmbeddings emb = gen_embeddings(c);

  CHECK(emb.store.size() == static_cast<std::size_t>(c.vocab_size));
  CHECK(emb.basic.size() == static_cast<std::size_t>(c.clusters * c.seeds_per_cluster));
  CHECK(emb.full.size() == static_cast<std::size_t>(c.cluster_words()));
  REQUIRE(emb.cluster_emotion.size() == 8);
  CHECK(emb.cluster_emotion[0] == Emotion::Anger);
  CHECK(emb.cluster_emotion[4] == Emotion::Joy);
  CHECK(emb.store.contains("e0000w00"));
  CHECK(emb.store.contains("f000000"));
  CHECK(emb.basic.contains("e0000w01"));
  CHECK_FALSE(emb.basic.contains("e0000w02"));
  CHECK_FALSE(emb.full.entry("e0000w01").mined);
  CHECK(emb.full.entry("e0000w02").mined);

  for (int cl = 0; cl < c.clusters; ++cl) {
    const double intensity = emb.cluster_intensity[static_cast<std::size_t>(cl)];
    CHECK(intensity >= c.intensity_min);
    CHECK(intensity <= c.intensity_max);
    for (int m = 0; m < c.members_per_cluster; ++m) {
      char word[32];
      std::snprintf(word, sizeof word, "e%04dw%02d", cl, m);
      const auto& iv = emb.full.entry(word).intensities;
      CHECK(iv[emb.cluster_emotion[static_cast<std::size_t>(cl)]] == intensity);
      CHECK(iv.sum() == intensity);  // single nonzero emotion
    }
  }

  // Identical settings give byte-identical stores.
  SynthEmbeddings again = gen_embeddings(c);
  emb.store.save(tmp / "a.txt");
  again.store.save(tmp / "b.txt");
  CHECK(read_text_file(tmp / "a.txt") == read_text_file(tmp / "b.txt"));

  // Zero radius collapses members onto the cluster center.
  SynthConfig tight = small_config();
  tight.cluster_radius = 0.0;
  SynthEmbeddings point = gen_embeddings(tight);
  CHECK(cosine_similarity(point.store.vector_of("e0000w00"),
                          point.store.vector_of("e0000w03")) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lexicon expansion recovers the planted clusters") {
  // Realistic embedding dimensionality matters here: at low dimensions the
  // cosine extremes between random filler vectors are large enough that one
  // false admission snowballs through the filler cloud.
  SynthConfig c;
  c.seed = 11;
  c.embedding_dim = 200;
  c.clusters = 6;
  c.seeds_per_cluster = 3;
  c.members_per_cluster = 8;
  c.cluster_radius = 0.08;
  c.vocab_size = 300;
  SynthEmbeddings emb = gen_embeddings(c);

  ExpansionParams params;
  params.mining_neighbors = 30;
  ExpansionResult res = expand_lexicon(emb.store, emb.basic, params);

  std::int64_t recovered = 0;
  std::int64_t mined_total = 0;
  double err = 0.0;
  for (const auto& entry : res.lexicon.entries()) {
    if (!entry.mined) continue;
    ++mined_total;
    if (!emb.full.contains(entry.word)) continue;
    ++recovered;
    const auto& truth = emb.full.entry(entry.word).intensities;
    for (std::size_t k = 0; k < kNumEmotions; ++k)
      err += std::abs(entry.intensities[k] - truth[k]);
  }
  const std::int64_t hidden =
      static_cast<std::int64_t>(c.clusters) * (c.members_per_cluster - c.seeds_per_cluster);
  CHECK(recovered >= static_cast<std::int64_t>(0.95 * static_cast<double>(hidden)));
  REQUIRE(mined_total > 0);
  CHECK(static_cast<double>(recovered) / static_cast<double>(mined_total) >= 0.9);
  CHECK(err / (8.0 * static_cast<double>(recovered)) <= 0.05);
}

TEST_CASE("documents score exactly to the recorded truth") {
  SynthConfig c = small_config();
  SynthEmbeddings emb = gen_embeddings(c);
  SynthCorpus corpus = gen_corpus(c, emb.full);

  REQUIRE(corpus.articles.size() == 20);
  CHECK(corpus.articles[0].id == "a00000");
  CHECK(corpus.articles[0].publisher_id == "p000");
  CHECK(corpus.articles[5].publisher_id == "p001");

  EmotionMatrix scored = score_corpus(corpus.articles, emb.full, corpus.modifiers);
  REQUIRE(scored.values.rows() == corpus.article_truth.rows());
  CHECK((scored.values - corpus.article_truth).cwiseAbs().maxCoeff() == 0.0);

  REQUIRE_FALSE(corpus.comments.empty());
  EmotionMatrix cscored = score_corpus(corpus.comments, emb.full, corpus.modifiers);
  CHECK((cscored.values - corpus.comment_truth).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("corpus metadata is internally consistent") {
  SynthConfig c = small_config();
  SynthEmbeddings emb = gen_embeddings(c);
  SynthCorpus corpus = gen_corpus(c, emb.full);

  REQUIRE(corpus.negations.size() == 4);
  REQUIRE(corpus.degrees.size() == 6);
  CHECK(corpus.degrees.front().second == 0.5);
  CHECK(corpus.degrees.back().second == 2.0);
  for (const auto& [w, v] : corpus.degrees) CHECK(corpus.modifiers.degrees.at(w) == v);

  // Comment ids extend their article id; volume matches the metadata field.
  std::unordered_map<std::string, std::int64_t> per_article;
  for (const auto& cm : corpus.comments) {
    REQUIRE_FALSE(cm.article_id.empty());
    CHECK(cm.id.rfind(cm.article_id + "c", 0) == 0);
    ++per_article[cm.article_id];
  }
  for (const auto& a : corpus.articles) {
    CHECK(a.n_comments <= 99);
    const auto it = per_article.find(a.id);
    CHECK((it == per_article.end() ? 0 : it->second) == a.n_comments);
  }

  // Planted topics cycle through articles; tokens draw from the right pool.
  std::unordered_set<std::string> t0(corpus.topic_words[0].begin(), corpus.topic_words[0].end());
  CHECK(corpus.article_topic[0] == 0);
  CHECK(corpus.article_topic[1] == 1);
  CHECK(corpus.article_topic[3] == 0);
  bool saw_topic_word = false;
  for (const auto& tok : corpus.articles[0].tokens) saw_topic_word |= t0.count(tok) > 0;
  CHECK(saw_topic_word);

  // Dominant emotion is the arg max of the standardized row.
  for (std::size_t a = 0; a < corpus.articles.size(); ++a) {
    Eigen::Index top = 0;
    corpus.article_z.row(static_cast<Eigen::Index>(a)).maxCoeff(&top);
    CHECK(corpus.article_dominant[a] == static_cast<Emotion>(top));
  }
}

TEST_CASE("generated cascades honour their own bookkeeping") {
  SynthConfig c = small_config();
  c.node_cap = 60;
  SynthEmbeddings emb = gen_embeddings(c);
  SynthCorpus corpus = gen_corpus(c, emb.full);

  EmotionMatrix z;
  z.values = corpus.article_z;
  z.standardized = true;
  for (const auto& d : corpus.articles) z.doc_ids.push_back(d.id);
  SynthCascades cas = gen_cascades(c, corpus.articles, z);

  REQUIRE(cas.truth.size() == corpus.articles.size());
  REQUIRE(cas.publish_times.size() == corpus.articles.size());
  CHECK(cas.publish_times[0].second == 0.0);
  CHECK(cas.publish_times[1].second == 24.0);
  CHECK(cas.publisher_ids.size() == 4);
  for (double f : cas.publisher_followers) CHECK(f >= 1.0);

  auto grouped = group_events_by_article(cas.events);
  std::unordered_map<std::string, double> publish(cas.publish_times.begin(),
                                                  cas.publish_times.end());
  std::int64_t total_size = 0;
  for (const auto& t : cas.truth) {
    CHECK(t.size <= c.node_cap);
    if (t.truncated) CHECK(t.size == c.node_cap);
    total_size += t.size;
    auto it = grouped.find(t.article_id);
    const std::int64_t observed =
        it == grouped.end() ? 0 : static_cast<std::int64_t>(it->second.size());
    CHECK(observed == t.size);
    if (observed > 0) {
      CascadeTree tree = build_cascade(it->second, publish.at(t.article_id));
      CHECK(tree.size() == t.size);
    }
  }
  CHECK(static_cast<std::int64_t>(cas.events.size()) == total_size);
  CHECK(cas.profiles.size() == cas.events.size());

  std::unordered_set<std::string> profiled;
  for (const auto& p : cas.profiles) {
    profiled.insert(p.user_id);
    CHECK(p.age >= c.age_min);
    CHECK(p.age <= c.age_max);
    CHECK(p.friend_count >= 0);
  }
  for (const auto& e : cas.events) CHECK(profiled.count(e.receiver_id) == 1);

  // The unscaled branching exponent centers on beta0 when all coefficients
  // are zero.
  SynthConfig wide = small_config();
  wide.publishers = 30;
  wide.articles_per_publisher = 15;
  wide.node_cap = 50;
  SynthEmbeddings wemb = gen_embeddings(wide);
  SynthCorpus wcorpus = gen_corpus(wide, wemb.full);
  EmotionMatrix wz;
  wz.values = wcorpus.article_z;
  wz.standardized = true;
  for (const auto& d : wcorpus.articles) wz.doc_ids.push_back(d.id);
  SynthCascades wcas = gen_cascades(wide, wcorpus.articles, wz);
  double mean_log = 0.0;
  for (const auto& t : wcas.truth) mean_log += t.log_mean;
  mean_log /= static_cast<double>(wcas.truth.size());
  CHECK(std::abs(mean_log - wide.beta0) < 0.25);
}

TEST_CASE("the full dataset writes deterministically") {
  TempDir tmp;
  SynthConfig c = small_config();
  c.node_cap = 40;
  synth_all(c, tmp / "one");
  synth_all(c, tmp / "two");

  const std::vector<std::string> expected = {
      "embeddings.txt",    "lexicon_basic.tsv", "articles.jsonl",
      "comments.jsonl",    "negations.txt",     "degrees.tsv",
      "events.jsonl",      "publish_times.tsv", "profiles.tsv",
      "friendships.tsv",   "publishers.tsv",    "synth_config.json",
      "truth/lexicon_full.tsv", "truth/article_emotions.tsv",
      "truth/cascades.tsv",     "truth/publishers.tsv", "truth/params.json",
  };
  for (const auto& rel : expected) {
    CAPTURE(rel);
    REQUIRE(fs::exists(tmp / "one" / rel));
    CHECK(read_text_file(tmp / "one" / rel) == read_text_file(tmp / "two" / rel));
  }

  // The events file round-trips through the cascade loader.
  auto events = load_events(tmp / "one" / "events.jsonl");
  auto times = load_publish_times(tmp / "one" / "publish_times.tsv");
  auto grouped = group_events_by_article(events);
  for (auto& [article, group] : grouped) {
    CascadeTree tree = build_cascade(group, times.at(article));
    CHECK(tree.size() == static_cast<std::int64_t>(group.size()));
  }
}
