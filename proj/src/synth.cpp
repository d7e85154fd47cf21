#include "emodiff/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>

#include <nlohmann/json.hpp>

#include "emodiff/errors.hpp"
#include "emodiff/rng.hpp"
#include "emodiff/text_table.hpp"

namespace emodiff {

namespace {

using nlohmann::json;

std::string tag(const char* fmt, int a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, a);
  return buf;
}

std::string tag2(const char* fmt, int a, int b) {
  char buf[48];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

Eigen::VectorXd random_unit(Rng& rng, int dim) {
  Eigen::VectorXd v(dim);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v[i] = rng_normal(rng);
    norm2 = v.squaredNorm();
  } while (norm2 <= 0.0);
  return v / std::sqrt(norm2);
}

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0))
    throw InvalidInput(std::string("synth config: ") + name + " must be in [0, 1]");
}

}  // namespace

void SynthConfig::validate() const {
  if (embedding_dim < 2) throw InvalidInput("synth config: embedding_dim must be >= 2");
  if (clusters < 1) throw InvalidInput("synth config: need at least one cluster");
  if (seeds_per_cluster < 1) throw InvalidInput("synth config: need at least one seed per cluster");
  if (members_per_cluster < seeds_per_cluster)
    throw InvalidInput("synth config: members_per_cluster must cover the seeds");
  if (!(cluster_radius >= 0.0)) throw InvalidInput("synth config: cluster_radius must be >= 0");
  if (!(intensity_min >= 0.0 && intensity_max <= 1.0 && intensity_min <= intensity_max))
    throw InvalidInput("synth config: intensity range must satisfy 0 <= min <= max <= 1");
  if (vocab_size < cluster_words())
    throw InvalidInput("synth config: vocab too small for the planted clusters");
  if (publishers < 1 || articles_per_publisher < 1)
    throw InvalidInput("synth config: need at least one publisher and article");
  if (topics < 1 || topic_vocab < 1)
    throw InvalidInput("synth config: need at least one topic with vocabulary");
  if (topic_tokens_per_doc < 0 || !(segments_per_doc >= 0.0))
    throw InvalidInput("synth config: document sizes must be non-negative");
  if (negation_words < 1 || degree_words < 1)
    throw InvalidInput("synth config: need modifier vocabularies");
  if (comments_per_article < 0 || comment_emotion_words < 0)
    throw InvalidInput("synth config: comment counts must be non-negative");
  check_prob(negation_prob, "negation_prob");
  check_prob(degree_prob, "degree_prob");
  check_prob(comment_align_prob, "comment_align_prob");
  check_prob(weak_tie_prob, "weak_tie_prob");
  check_prob(male_prob, "male_prob");
  check_prob(seed_friend_prob, "seed_friend_prob");
  double acc = beta0 + beta_log_followers;
  for (double b : beta) acc += b;
  if (!std::isfinite(acc)) throw InvalidInput("synth config: offspring coefficients must be finite");
  if (!(sigma_mu >= 0.0) || !(sigma_eps >= 0.0))
    throw InvalidInput("synth config: variance components must be >= 0");
  if (!(root_scale >= 0.0) || !(node_scale >= 0.0) || !std::isfinite(root_scale) ||
      !std::isfinite(node_scale))
    throw InvalidInput("synth config: branching scales must be finite and >= 0");
  if (!(delay_mean > 0.0)) throw InvalidInput("synth config: delay_mean must be > 0");
  if (node_cap < 1) throw InvalidInput("synth config: node_cap must be >= 1");
  if (!(age_min <= age_max)) throw InvalidInput("synth config: age range is inverted");
  if (!(friend_count_mean >= 0.0))
    throw InvalidInput("synth config: friend_count_mean must be >= 0");
}

SynthEmbeddings gen_embeddings(const SynthConfig& config) {
  config.validate();
  SynthEmbeddings out;

  Rng center_rng = make_rng(derive_seed(config.seed, "emb:centers"));
  Rng intensity_rng = make_rng(derive_seed(config.seed, "emb:intensity"));
  for (int c = 0; c < config.clusters; ++c) {
    Eigen::VectorXd center = random_unit(center_rng, config.embedding_dim);
    const auto emotion = static_cast<Emotion>(c % static_cast<int>(kNumEmotions));
    const double intensity =
        config.intensity_min +
        rng_uniform01(intensity_rng) * (config.intensity_max - config.intensity_min);
    out.cluster_emotion.push_back(emotion);
    out.cluster_intensity.push_back(intensity);

    EmotionVector iv;
    iv[emotion] = intensity;
    Rng member_rng = make_rng(derive_seed(config.seed, "emb:cluster:" + tag("%d", c)));
    for (int m = 0; m < config.members_per_cluster; ++m) {
      Eigen::VectorXd v = center;
      if (config.cluster_radius > 0.0)
        v += config.cluster_radius * random_unit(member_rng, config.embedding_dim);
      v /= v.norm();
      std::string word = tag2("e%04dw%02d", c, m);
      out.store.add(word, v);
      const bool hidden = m >= config.seeds_per_cluster;
      out.full.add({word, iv, hidden, hidden ? 1 : 0});
      if (!hidden) out.basic.add({word, iv, false, 0});
    }
  }

  Rng filler_rng = make_rng(derive_seed(config.seed, "emb:fillers"));
  const int fillers = config.vocab_size - config.cluster_words();
  for (int i = 0; i < fillers; ++i) {
    Eigen::VectorXd v = random_unit(filler_rng, config.embedding_dim);
    out.store.add(tag("f%06d", i), v);
  }
  return out;
}

namespace {

// Column z-scores for picking dominant emotions; a constant column carries
// no signal and maps to zero instead of raising.
Eigen::MatrixXd safe_standardize(const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(raw.rows(), raw.cols());
  if (raw.rows() == 0) return z;
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const double mean = raw.col(c).mean();
    const double var = (raw.col(c).array() - mean).square().sum() /
                       static_cast<double>(raw.rows());
    if (var > 0.0) z.col(c) = (raw.col(c).array() - mean) / std::sqrt(var);
  }
  return z;
}

const std::string& pick(Rng& rng, const std::vector<std::string>& items) {
  return items[static_cast<std::size_t>(rng_uniform01(rng) * static_cast<double>(items.size()))];
}

}  // namespace

SynthCorpus gen_corpus(const SynthConfig& config, const Lexicon& lexicon) {
  config.validate();
  if (lexicon.empty()) throw InvalidInput("gen_corpus: lexicon is empty");
  SynthCorpus out;

  for (int i = 0; i < config.negation_words; ++i) out.negations.push_back(tag("neg%02d", i));
  for (int i = 0; i < config.degree_words; ++i) {
    const double value = config.degree_words == 1
                             ? 1.5
                             : 0.5 + 1.5 * static_cast<double>(i) /
                                         static_cast<double>(config.degree_words - 1);
    out.degrees.emplace_back(tag("deg%02d", i), value);
  }
  for (const auto& n : out.negations) out.modifiers.negations.insert(n);
  for (const auto& [w, v] : out.degrees) out.modifiers.degrees.emplace(w, v);

  out.topic_words.resize(static_cast<std::size_t>(config.topics));
  for (int k = 0; k < config.topics; ++k)
    for (int j = 0; j < config.topic_vocab; ++j)
      out.topic_words[static_cast<std::size_t>(k)].push_back(tag2("t%02dw%03d", k, j));

  std::vector<std::string> lexicon_words;
  std::array<std::vector<std::string>, kNumEmotions> emotion_pools;
  for (const auto& e : lexicon.entries()) {
    lexicon_words.push_back(e.word);
    std::size_t top = 0;
    for (std::size_t k = 1; k < kNumEmotions; ++k)
      if (e.intensities[k] > e.intensities[top]) top = k;
    if (e.intensities[top] > 0.0) emotion_pools[top].push_back(e.word);
  }

  const int n_articles = config.publishers * config.articles_per_publisher;
  out.article_truth = Eigen::MatrixXd::Zero(n_articles, static_cast<Eigen::Index>(kNumEmotions));

  for (int a = 0; a < n_articles; ++a) {
    Document doc;
    doc.id = tag("a%05d", a);
    doc.publisher_id = tag("p%03d", a / config.articles_per_publisher);
    const int topic = a % config.topics;
    out.article_topic.push_back(topic);
    const auto& tvocab = out.topic_words[static_cast<std::size_t>(topic)];

    Rng rng = make_rng(derive_seed(config.seed, "doc:" + doc.id));
    const std::int64_t n_seg = rng_poisson(rng, config.segments_per_doc);
    // Topic padding around every insertion keeps scoring windows disjoint.
    const int chunk = std::max(
        3, config.topic_tokens_per_doc / static_cast<int>(n_seg + 1));
    auto pad = [&] {
      for (int i = 0; i < chunk; ++i) doc.tokens.push_back(pick(rng, tvocab));
    };
    pad();
    for (std::int64_t s = 0; s < n_seg; ++s) {
      int n_neg = 0;
      if (rng_bernoulli(rng, config.negation_prob)) ++n_neg;
      if (rng_bernoulli(rng, config.negation_prob)) ++n_neg;
      const bool with_degree = rng_bernoulli(rng, config.degree_prob);
      for (int i = 0; i < n_neg; ++i) doc.tokens.push_back(pick(rng, out.negations));
      double degree = 1.0;
      if (with_degree) {
        const auto& [w, v] =
            out.degrees[static_cast<std::size_t>(rng_uniform01(rng) *
                                                 static_cast<double>(out.degrees.size()))];
        doc.tokens.push_back(w);
        degree = v;
      }
      const std::string& word = pick(rng, lexicon_words);
      doc.tokens.push_back(word);
      const double sign = n_neg % 2 == 0 ? 1.0 : -1.0;
      const auto& iv = lexicon.entry(word).intensities;
      for (std::size_t k = 0; k < kNumEmotions; ++k)
        out.article_truth(a, static_cast<Eigen::Index>(k)) += sign * degree * iv[k];
      pad();
    }

    doc.n_images = rng_poisson(rng, 1.5);
    doc.n_videos = rng_poisson(rng, 0.3);
    doc.posted_weekend = rng_bernoulli(rng, 2.0 / 7.0);
    doc.original = rng_bernoulli(rng, 0.7);
    doc.char_length = static_cast<std::int64_t>(doc.tokens.size()) * 4 + rng_poisson(rng, 50.0);
    out.articles.push_back(std::move(doc));
  }

  out.article_z = safe_standardize(out.article_truth);
  for (int a = 0; a < n_articles; ++a) {
    Eigen::Index top = 0;
    const double z_top = out.article_z.row(a).maxCoeff(&top);
    out.article_dominant.push_back(static_cast<Emotion>(top));
    // Comment volume grows with emotional extremity, so engagement can act
    // as a mediator downstream.
    Rng rng = make_rng(derive_seed(config.seed, "ncomments:" + out.articles[static_cast<std::size_t>(a)].id));
    const double mean = static_cast<double>(config.comments_per_article) *
                        std::exp(0.25 * std::max(0.0, z_top));
    out.articles[static_cast<std::size_t>(a)].n_comments =
        std::min<std::int64_t>(rng_poisson(rng, mean), 99);
  }

  std::vector<std::array<double, kNumEmotions>> comment_rows;
  for (std::size_t a = 0; a < out.articles.size(); ++a) {
    const auto& article = out.articles[a];
    const auto& tvocab = out.topic_words[static_cast<std::size_t>(out.article_topic[a])];
    for (int c = 0; c < static_cast<int>(article.n_comments); ++c) {
      Document doc;
      doc.id = article.id + tag("c%02d", c);
      doc.publisher_id = article.publisher_id;
      doc.article_id = article.id;
      Rng rng = make_rng(derive_seed(config.seed, "comment:" + doc.id));
      auto target = static_cast<std::size_t>(out.article_dominant[a]);
      if (!rng_bernoulli(rng, config.comment_align_prob))
        target = static_cast<std::size_t>(rng_uniform01(rng) *
                                          static_cast<double>(kNumEmotions));
      const auto& pool =
          emotion_pools[target].empty() ? lexicon_words : emotion_pools[target];
      std::array<double, kNumEmotions> truth{};
      for (int w = 0; w < config.comment_emotion_words; ++w) {
        for (int i = 0; i < 3; ++i) doc.tokens.push_back(pick(rng, tvocab));
        const std::string& word = pick(rng, pool);
        doc.tokens.push_back(word);
        const auto& iv = lexicon.entry(word).intensities;
        for (std::size_t k = 0; k < kNumEmotions; ++k) truth[k] += iv[k];
      }
      for (int i = 0; i < 3; ++i) doc.tokens.push_back(pick(rng, tvocab));
      doc.char_length = static_cast<std::int64_t>(doc.tokens.size()) * 4;
      doc.posted_weekend = article.posted_weekend;
      out.comments.push_back(std::move(doc));
      comment_rows.push_back(truth);
    }
  }
  out.comment_truth.resize(static_cast<Eigen::Index>(comment_rows.size()),
                           static_cast<Eigen::Index>(kNumEmotions));
  for (std::size_t r = 0; r < comment_rows.size(); ++r)
    for (std::size_t k = 0; k < kNumEmotions; ++k)
      out.comment_truth(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          comment_rows[r][k];
  return out;
}

SynthCascades gen_cascades(const SynthConfig& config, const std::vector<Document>& articles,
                           const EmotionMatrix& scores) {
  config.validate();
  if (!scores.standardized)
    throw InvalidInput("gen_cascades: scores must be standardized");
  std::unordered_map<std::string, Eigen::Index> score_row;
  for (std::size_t i = 0; i < scores.doc_ids.size(); ++i)
    score_row.emplace(scores.doc_ids[i], static_cast<Eigen::Index>(i));

  SynthCascades out;
  std::unordered_map<std::string, std::size_t> pub_index;
  for (const auto& article : articles) {
    if (pub_index.count(article.publisher_id)) continue;
    pub_index.emplace(article.publisher_id, out.publisher_ids.size());
    Rng rng = make_rng(derive_seed(config.seed, "pub:" + article.publisher_id));
    out.publisher_ids.push_back(article.publisher_id);
    out.publisher_intercept.push_back(config.sigma_mu * rng_normal(rng));
    out.publisher_followers.push_back(std::floor(std::exp(7.6 + 0.8 * rng_normal(rng))));
  }

  for (std::size_t a = 0; a < articles.size(); ++a) {
    const auto& article = articles[a];
    auto it = score_row.find(article.id);
    if (it == score_row.end())
      throw InvalidInput("gen_cascades: article '" + article.id + "' has no score row");
    const std::size_t p = pub_index.at(article.publisher_id);

    Rng rng = make_rng(derive_seed(config.seed, "cascade:" + article.id));
    double log_mean = config.beta0 + out.publisher_intercept[p] +
                      config.beta_log_followers * std::log(out.publisher_followers[p]) +
                      config.sigma_eps * rng_normal(rng);
    for (std::size_t k = 0; k < kNumEmotions; ++k)
      log_mean += config.beta[k] * scores.values(it->second, static_cast<Eigen::Index>(k));
    // Keeps the Poisson draws bounded; the node cap flags the explosion.
    log_mean = std::min(log_mean, 8.0);
    const double mean = std::exp(log_mean);

    const double publish_time = 24.0 * static_cast<double>(a);
    out.publish_times.emplace_back(article.id, publish_time);

    CascadeTruth truth{article.id, log_mean, 0, false};
    struct Pending {
      std::string user;
      double time;
    };
    std::deque<Pending> queue;
    std::vector<std::string> first_level;
    std::int64_t placed = 0;
    int counter = 0;

    auto spawn = [&](const std::string& sender, double at, double offspring_mean,
                     bool from_root) {
      std::int64_t n = rng_poisson(rng, offspring_mean);
      for (std::int64_t i = 0; i < n; ++i) {
        if (placed >= config.node_cap) {
          truth.truncated = true;
          return;
        }
        std::string user = "u_" + article.id + "_" + std::to_string(counter++);
        const double t = at + rng_exponential(rng, config.delay_mean) + 1e-6;
        Tie tie = Tie::Publisher;
        if (!from_root)
          tie = rng_bernoulli(rng, config.weak_tie_prob) ? Tie::Weak : Tie::Strong;
        out.events.push_back({article.id, sender, user, t, tie});
        UserProfile profile;
        profile.user_id = user;
        profile.age = config.age_min + rng_uniform01(rng) * (config.age_max - config.age_min);
        profile.gender = rng_bernoulli(rng, config.male_prob)
                             ? UserProfile::Gender::Male
                             : UserProfile::Gender::Female;
        profile.friend_count = rng_poisson(rng, config.friend_count_mean);
        out.profiles.push_back(std::move(profile));
        if (from_root) first_level.push_back(user);
        queue.push_back({user, t});
        ++placed;
      }
    };

    spawn(std::string(kPublisherSentinel), publish_time, config.root_scale * mean, true);
    while (!queue.empty() && !truth.truncated) {
      Pending node = queue.front();
      queue.pop_front();
      spawn(node.user, node.time, config.node_scale * mean, false);
    }

    const std::size_t linkable = std::min<std::size_t>(first_level.size(), 200);
    for (std::size_t i = 0; i < linkable; ++i)
      for (std::size_t j = i + 1; j < linkable; ++j)
        if (rng_bernoulli(rng, config.seed_friend_prob))
          out.friendships.add(first_level[i], first_level[j]);

    truth.size = placed;
    out.truth.push_back(std::move(truth));
  }
  return out;
}

namespace {

json config_to_json(const SynthConfig& c) {
  return json{{"seed", c.seed},
              {"embedding_dim", c.embedding_dim},
              {"clusters", c.clusters},
              {"seeds_per_cluster", c.seeds_per_cluster},
              {"members_per_cluster", c.members_per_cluster},
              {"cluster_radius", c.cluster_radius},
              {"intensity_min", c.intensity_min},
              {"intensity_max", c.intensity_max},
              {"vocab_size", c.vocab_size},
              {"publishers", c.publishers},
              {"articles_per_publisher", c.articles_per_publisher},
              {"topics", c.topics},
              {"topic_vocab", c.topic_vocab},
              {"topic_tokens_per_doc", c.topic_tokens_per_doc},
              {"segments_per_doc", c.segments_per_doc},
              {"negation_prob", c.negation_prob},
              {"degree_prob", c.degree_prob},
              {"negation_words", c.negation_words},
              {"degree_words", c.degree_words},
              {"comments_per_article", c.comments_per_article},
              {"comment_emotion_words", c.comment_emotion_words},
              {"comment_align_prob", c.comment_align_prob},
              {"beta0", c.beta0},
              {"beta", c.beta},
              {"beta_log_followers", c.beta_log_followers},
              {"sigma_mu", c.sigma_mu},
              {"sigma_eps", c.sigma_eps},
              {"root_scale", c.root_scale},
              {"node_scale", c.node_scale},
              {"weak_tie_prob", c.weak_tie_prob},
              {"delay_mean", c.delay_mean},
              {"node_cap", c.node_cap},
              {"age_min", c.age_min},
              {"age_max", c.age_max},
              {"male_prob", c.male_prob},
              {"friend_count_mean", c.friend_count_mean},
              {"seed_friend_prob", c.seed_friend_prob}};
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

SynthConfig SynthConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw InvalidInput("synth config " + path.string() + ": " + e.what());
  }
  SynthConfig c;
  try {
    maybe(j, "seed", c.seed);
    maybe(j, "embedding_dim", c.embedding_dim);
    maybe(j, "clusters", c.clusters);
    maybe(j, "seeds_per_cluster", c.seeds_per_cluster);
    maybe(j, "members_per_cluster", c.members_per_cluster);
    maybe(j, "cluster_radius", c.cluster_radius);
    maybe(j, "intensity_min", c.intensity_min);
    maybe(j, "intensity_max", c.intensity_max);
    maybe(j, "vocab_size", c.vocab_size);
    maybe(j, "publishers", c.publishers);
    maybe(j, "articles_per_publisher", c.articles_per_publisher);
    maybe(j, "topics", c.topics);
    maybe(j, "topic_vocab", c.topic_vocab);
    maybe(j, "topic_tokens_per_doc", c.topic_tokens_per_doc);
    maybe(j, "segments_per_doc", c.segments_per_doc);
    maybe(j, "negation_prob", c.negation_prob);
    maybe(j, "degree_prob", c.degree_prob);
    maybe(j, "negation_words", c.negation_words);
    maybe(j, "degree_words", c.degree_words);
    maybe(j, "comments_per_article", c.comments_per_article);
    maybe(j, "comment_emotion_words", c.comment_emotion_words);
    maybe(j, "comment_align_prob", c.comment_align_prob);
    maybe(j, "beta0", c.beta0);
    maybe(j, "beta", c.beta);
    maybe(j, "beta_log_followers", c.beta_log_followers);
    maybe(j, "sigma_mu", c.sigma_mu);
    maybe(j, "sigma_eps", c.sigma_eps);
    maybe(j, "root_scale", c.root_scale);
    maybe(j, "node_scale", c.node_scale);
    maybe(j, "weak_tie_prob", c.weak_tie_prob);
    maybe(j, "delay_mean", c.delay_mean);
    maybe(j, "node_cap", c.node_cap);
    maybe(j, "age_min", c.age_min);
    maybe(j, "age_max", c.age_max);
    maybe(j, "male_prob", c.male_prob);
    maybe(j, "friend_count_mean", c.friend_count_mean);
    maybe(j, "seed_friend_prob", c.seed_friend_prob);
  } catch (const json::exception& e) {
    throw InvalidInput("synth config " + path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

void SynthConfig::save(const std::filesystem::path& path) const {
  write_text_file(path, config_to_json(*this).dump(2) + "\n");
}

void synth_all(const SynthConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "truth");

  SynthEmbeddings emb = gen_embeddings(config);
  emb.store.save(out_dir / "embeddings.txt");
  emb.basic.save(out_dir / "lexicon_basic.tsv");
  emb.full.save(out_dir / "truth" / "lexicon_full.tsv");

  SynthCorpus corpus = gen_corpus(config, emb.full);
  save_documents(corpus.articles, out_dir / "articles.jsonl");
  save_documents(corpus.comments, out_dir / "comments.jsonl");
  {
    std::string text;
    for (const auto& n : corpus.negations) text += n + "\n";
    write_text_file(out_dir / "negations.txt", text);
    TextTable degrees({"word", "value"});
    for (const auto& [w, v] : corpus.degrees) degrees.add_row({w, format_exact(v)});
    degrees.write_file(out_dir / "degrees.tsv");
  }

  EmotionMatrix z;
  z.values = corpus.article_z;
  z.standardized = true;
  for (const auto& d : corpus.articles) z.doc_ids.push_back(d.id);
  SynthCascades cascades = gen_cascades(config, corpus.articles, z);

  save_events(cascades.events, out_dir / "events.jsonl");
  save_publish_times(cascades.publish_times, out_dir / "publish_times.tsv");
  save_profiles(cascades.profiles, out_dir / "profiles.tsv");
  cascades.friendships.save(out_dir / "friendships.tsv");
  {
    TextTable pubs({"publisher_id", "followers"});
    for (std::size_t i = 0; i < cascades.publisher_ids.size(); ++i)
      pubs.add_row({cascades.publisher_ids[i], format_exact(cascades.publisher_followers[i])});
    pubs.write_file(out_dir / "publishers.tsv");
  }

  {
    std::vector<std::string> cols{"article_id"};
    for (auto name : kEmotionNames) cols.emplace_back(name);
    cols.emplace_back("topic");
    cols.emplace_back("dominant_emotion");
    TextTable truth(cols);
    for (std::size_t a = 0; a < corpus.articles.size(); ++a) {
      std::vector<std::string> row{corpus.articles[a].id};
      for (std::size_t k = 0; k < kNumEmotions; ++k)
        row.push_back(format_exact(corpus.article_truth(static_cast<Eigen::Index>(a),
                                                        static_cast<Eigen::Index>(k))));
      row.push_back(format_int(corpus.article_topic[a]));
      row.emplace_back(emotion_name(corpus.article_dominant[a]));
      truth.add_row(std::move(row));
    }
    truth.write_file(out_dir / "truth" / "article_emotions.tsv");
  }
  {
    TextTable truth({"article_id", "log_mean", "size", "truncated"});
    for (const auto& t : cascades.truth)
      truth.add_row({t.article_id, format_exact(t.log_mean), format_int(t.size),
                     t.truncated ? "1" : "0"});
    truth.write_file(out_dir / "truth" / "cascades.tsv");
  }
  {
    TextTable truth({"publisher_id", "intercept", "followers"});
    for (std::size_t i = 0; i < cascades.publisher_ids.size(); ++i)
      truth.add_row({cascades.publisher_ids[i], format_exact(cascades.publisher_intercept[i]),
                     format_exact(cascades.publisher_followers[i])});
    truth.write_file(out_dir / "truth" / "publishers.tsv");
  }
  {
    std::vector<std::string> emotion_names;
    for (auto n : kEmotionNames) emotion_names.emplace_back(n);
    json params{{"beta0", config.beta0},
                {"beta", config.beta},
                {"beta_log_followers", config.beta_log_followers},
                {"sigma_mu", config.sigma_mu},
                {"sigma_eps", config.sigma_eps},
                {"topics", config.topics},
                {"emotions", emotion_names}};
    write_text_file(out_dir / "truth" / "params.json", params.dump(2) + "\n");
  }
  config.save(out_dir / "synth_config.json");
}

}  // namespace emodiff
