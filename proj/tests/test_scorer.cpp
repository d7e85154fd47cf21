#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "emodiff/errors.hpp"
#include "emodiff/scorer.hpp"
#include "emodiff/text_table.hpp"
#include "test_util.hpp"

using namespace emodiff;
using emodiff_test::TempDir;

namespace {

Lexicon make_lexicon(std::vector<std::pair<std::string, std::pair<Emotion, double>>> rows) {
  Lexicon lex;
  for (auto& [word, spec] : rows) {
    LexiconEntry e;
    e.word = word;
    e.intensities[spec.first] = spec.second;
    lex.add(e);
  }
  return lex;
}

Document doc_with(std::vector<std::string> tokens) {
  Document d;
  d.id = "doc";
  d.tokens = std::move(tokens);
  return d;
}

}  // namespace

TEST_CASE("negation and degree combine multiplicatively inside the window") {
  Lexicon lex = make_lexicon({{"w", {Emotion::Joy, 0.8}}});
  ModifierDictionaries mods;
  mods.negations = {"neg"};
  mods.degrees = {{"deg", 1.5}};

  CHECK(score_document(doc_with({"neg", "deg", "w"}), lex, mods)[Emotion::Joy] ==
        doctest::Approx(-1.2).epsilon(1e-15));
  CHECK(score_document(doc_with({"w"}), lex, mods)[Emotion::Joy] == 0.8);
  CHECK(score_document(doc_with({"neg", "neg", "w"}), lex, mods)[Emotion::Joy] == 0.8);
  CHECK(score_document(doc_with({"deg", "w"}), lex, mods)[Emotion::Joy] ==
        doctest::Approx(1.2).epsilon(1e-15));

  // The mean of the degree values in the window, not their product.
  mods.degrees = {{"half", 0.5}, {"dbl", 1.5}};
  CHECK(score_document(doc_with({"half", "dbl", "w"}), lex, mods)[Emotion::Joy] ==
        doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("the window covers exactly the preceding tokens") {
  Lexicon lex = make_lexicon({{"w", {Emotion::Joy, 0.8}}});
  ModifierDictionaries mods;
  mods.negations = {"neg"};

  // Three back is in a window of 3, four back is not.
  CHECK(score_document(doc_with({"neg", "x", "x", "w"}), lex, mods)[Emotion::Joy] == -0.8);
  CHECK(score_document(doc_with({"neg", "x", "x", "x", "w"}), lex, mods)[Emotion::Joy] == 0.8);
  // A narrower window shifts the boundary the same way.
  CHECK(score_document(doc_with({"neg", "x", "w"}), lex, mods, 2)[Emotion::Joy] == -0.8);
  CHECK(score_document(doc_with({"neg", "x", "x", "w"}), lex, mods, 2)[Emotion::Joy] == 0.8);
}

TEST_CASE("lexicon words in a window do not act as modifiers") {
  Lexicon lex = make_lexicon({{"w1", {Emotion::Joy, 0.25}}, {"w2", {Emotion::Joy, 0.5}}});
  ModifierDictionaries mods;
  mods.negations = {"neg"};

  // The negation reaches both emotion words; w1 occupies a window slot of w2
  // without contributing a modifier.
  EmotionVector s = score_document(doc_with({"neg", "w1", "w2"}), lex, mods);
  CHECK(s[Emotion::Joy] == -0.75);
}

TEST_CASE("documents without emotion words score zero") {
  Lexicon lex = make_lexicon({{"w", {Emotion::Joy, 0.8}}});
  ModifierDictionaries mods;
  CHECK(score_document(doc_with({}), lex, mods) == EmotionVector{});
  CHECK(score_document(doc_with({"plain", "words", "only"}), lex, mods) == EmotionVector{});
}

TEST_CASE("a word may carry several emotions at once") {
  Lexicon lex;
  LexiconEntry e;
  e.word = "bittersweet";
  e.intensities[Emotion::Joy] = 0.5;
  e.intensities[Emotion::Sadness] = 0.25;
  lex.add(e);
  ModifierDictionaries mods;
  mods.negations = {"neg"};

  EmotionVector s = score_document(doc_with({"neg", "bittersweet"}), lex, mods);
  CHECK(s[Emotion::Joy] == -0.5);
  CHECK(s[Emotion::Sadness] == -0.25);
  CHECK(s[Emotion::Anger] == 0.0);
}

TEST_CASE("splitting a document across an inert gap splits its score") {
  // All intensities and degree values are dyadic rationals and every degree
  // word shares one value, so contributions add exactly and the concatenated
  // document must score the componentwise sum.
  Lexicon lex = make_lexicon({{"wa", {Emotion::Anger, 0.25}},
                              {"wb", {Emotion::Joy, 0.5}},
                              {"wc", {Emotion::Love, 0.75}}});
  ModifierDictionaries mods;
  mods.negations = {"no", "never"};
  mods.degrees = {{"very", 1.5}, {"so", 1.5}};

  std::vector<std::string> pool = {"wa", "wb", "wc", "no",  "never", "very",
                                   "so", "x",  "y",  "z",   "p",     "q"};
  std::mt19937 rng(99);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_int_distribution<int> len(0, 12);

  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> a, b;
    for (int i = len(rng); i > 0; --i) a.push_back(pool[pick(rng)]);
    for (int i = len(rng); i > 0; --i) b.push_back(pool[pick(rng)]);

    std::vector<std::string> joined = a;
    joined.insert(joined.end(), {"x", "x", "x"});
    joined.insert(joined.end(), b.begin(), b.end());

    EmotionVector sa = score_document(doc_with(a), lex, mods);
    EmotionVector sb = score_document(doc_with(b), lex, mods);
    sa += sb;
    CHECK(score_document(doc_with(joined), lex, mods) == sa);
  }
}

TEST_CASE("corpus scoring keeps document order") {
  Lexicon lex = make_lexicon({{"w", {Emotion::Joy, 0.5}}});
  ModifierDictionaries mods;
  std::vector<Document> docs;
  for (int i = 0; i < 3; ++i) {
    Document d;
    d.id = "d" + std::to_string(i);
    for (int j = 0; j <= i; ++j) d.tokens.push_back("w");
    docs.push_back(d);
  }
  EmotionMatrix m = score_corpus(docs, lex, mods);
  REQUIRE(m.doc_ids == std::vector<std::string>{"d0", "d1", "d2"});
  CHECK_FALSE(m.standardized);
  CHECK(m.values(0, static_cast<int>(Emotion::Joy)) == 0.5);
  CHECK(m.values(1, static_cast<int>(Emotion::Joy)) == 1.0);
  CHECK(m.values(2, static_cast<int>(Emotion::Joy)) == 1.5);
}

TEST_CASE("standardization uses the population standard deviation") {
  EmotionMatrix raw;
  raw.doc_ids = {"a", "b", "c"};
  raw.values = Eigen::MatrixXd::Zero(3, static_cast<int>(kNumEmotions));
  raw.values.col(0) << 1.0, 2.0, 3.0;
  for (int k = 1; k < static_cast<int>(kNumEmotions); ++k) raw.values.col(k) << 2.0, 7.0, 3.0;

  EmotionMatrix z = standardize(raw);
  CHECK(z.standardized);
  // sd = sqrt(2/3), so the endpoints sit at +-sqrt(3/2).
  CHECK(z.values(0, 0) == doctest::Approx(-1.224744871391589).epsilon(1e-12));
  CHECK(z.values(1, 0) == doctest::Approx(0.0));
  CHECK(z.values(2, 0) == doctest::Approx(1.224744871391589).epsilon(1e-12));

  EmotionMatrix constant = raw;
  constant.values.col(3).setConstant(4.2);
  try {
    standardize(constant);
    FAIL("expected DegenerateColumn");
  } catch (const DegenerateColumn& e) {
    CHECK(std::string(e.what()).find("disgust") != std::string::npos);
  }

  EmotionMatrix single;
  single.doc_ids = {"a"};
  single.values = Eigen::MatrixXd::Ones(1, static_cast<int>(kNumEmotions));
  CHECK_THROWS_AS(standardize(single), InvalidInput);
}

TEST_CASE("overall emotion degree is the z-scored row sum") {
  EmotionMatrix raw;
  raw.doc_ids = {"a", "b", "c"};
  raw.values = Eigen::MatrixXd::Zero(3, static_cast<int>(kNumEmotions));
  raw.values(0, 0) = 1.0;
  raw.values(1, 0) = 0.5;
  raw.values(1, 4) = 1.5;
  raw.values(2, 7) = 3.0;
  // Row sums 1, 2, 3.
  std::vector<double> deg = degree_of_emotion(raw);
  REQUIRE(deg.size() == 3);
  CHECK(deg[0] == doctest::Approx(-1.224744871391589).epsilon(1e-12));
  CHECK(deg[1] == doctest::Approx(0.0));
  CHECK(deg[2] == doctest::Approx(1.224744871391589).epsilon(1e-12));
}

TEST_CASE("correlation matrix matches the hand-computed pair") {
  EmotionMatrix m;
  m.doc_ids = {"a", "b", "c"};
  m.values = Eigen::MatrixXd::Zero(3, static_cast<int>(kNumEmotions));
  m.values.col(0) << 1.0, 2.0, 3.0;
  m.values.col(1) << 1.0, 2.0, 4.0;
  for (int k = 2; k < static_cast<int>(kNumEmotions); ++k) m.values.col(k) << 5.0, 1.0, 3.0;

  Eigen::MatrixXd r = correlation_matrix(m);
  // cov = 1, sd_x = sqrt(2/3), sd_y = sqrt(14/9), r = sqrt(27/28).
  CHECK(r(0, 1) == doctest::Approx(0.9819805060619657).epsilon(1e-12));
  for (int i = 0; i < r.rows(); ++i) {
    CHECK(r(i, i) == 1.0);
    for (int j = 0; j < r.cols(); ++j) CHECK(r(i, j) == doctest::Approx(r(j, i)));
  }
}

TEST_CASE("modifier dictionaries load and reject inconsistent data") {
  TempDir tmp;
  write_text_file(tmp / "neg.txt", "not\nnever\n");
  write_text_file(tmp / "deg.tsv", "word\tvalue\nvery\t1.5\nslightly\t0.6\n");
  ModifierDictionaries mods = ModifierDictionaries::load(tmp / "neg.txt", tmp / "deg.tsv");
  CHECK(mods.negations.count("never") == 1);
  CHECK(mods.degrees.at("very") == 1.5);
  CHECK(mods.degrees.size() == 2);

  // The header row is optional.
  write_text_file(tmp / "deg2.tsv", "very\t1.5\n");
  CHECK(ModifierDictionaries::load(tmp / "neg.txt", tmp / "deg2.tsv").degrees.at("very") == 1.5);

  write_text_file(tmp / "deg_zero.tsv", "very\t0\n");
  CHECK_THROWS_AS(ModifierDictionaries::load(tmp / "neg.txt", tmp / "deg_zero.tsv"),
                  InvalidInput);
  write_text_file(tmp / "deg_dup.tsv", "very\t1.5\nvery\t2.0\n");
  CHECK_THROWS_AS(ModifierDictionaries::load(tmp / "neg.txt", tmp / "deg_dup.tsv"),
                  InvalidInput);
  write_text_file(tmp / "neg_overlap.txt", "very\n");
  CHECK_THROWS_AS(ModifierDictionaries::load(tmp / "neg_overlap.txt", tmp / "deg.tsv"),
                  InvalidInput);
}

TEST_CASE("modifier and lexicon overlap is reported sorted") {
  Lexicon lex = make_lexicon({{"very", {Emotion::Joy, 0.1}},
                              {"calm", {Emotion::Joy, 0.2}},
                              {"not", {Emotion::Anger, 0.3}}});
  ModifierDictionaries mods;
  mods.negations = {"not"};
  mods.degrees = {{"very", 1.5}};
  CHECK(modifier_lexicon_conflicts(lex, mods) == std::vector<std::string>{"not", "very"});
  CHECK(modifier_lexicon_conflicts(Lexicon{}, mods).empty());
}

TEST_CASE("documents round-trip through json lines") {
  TempDir tmp;
  std::vector<Document> docs(2);
  docs[0].id = "a1";
  docs[0].publisher_id = "p1";
  docs[0].tokens = {"hello", "world"};
  docs[0].n_images = 3;
  docs[0].n_videos = 1;
  docs[0].posted_weekend = true;
  docs[0].n_comments = 12;
  docs[0].original = false;
  docs[0].char_length = 44;
  docs[1].id = "a1c00";
  docs[1].tokens = {"nice"};
  docs[1].article_id = "a1";

  save_documents(docs, tmp / "docs.jsonl");
  std::vector<Document> loaded = load_documents(tmp / "docs.jsonl");
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == "a1");
  CHECK(loaded[0].publisher_id == "p1");
  CHECK(loaded[0].tokens == docs[0].tokens);
  CHECK(loaded[0].n_images == 3);
  CHECK(loaded[0].n_videos == 1);
  CHECK(loaded[0].posted_weekend);
  CHECK(loaded[0].n_comments == 12);
  CHECK_FALSE(loaded[0].original);
  CHECK(loaded[0].char_length == 44);
  CHECK(loaded[0].article_id.empty());
  CHECK(loaded[1].article_id == "a1");

  write_text_file(tmp / "bad.jsonl", "{\"id\": \"x\"\n");
  CHECK_THROWS_AS(load_documents(tmp / "bad.jsonl"), InvalidInput);
  write_text_file(tmp / "noid.jsonl", "{\"tokens\": []}\n");
  CHECK_THROWS_AS(load_documents(tmp / "noid.jsonl"), InvalidInput);
}
