// Release gate for the whole library. Each criterion prints one PASS or
// FAIL line with its measured numbers; the process exits nonzero when any
// criterion fails. Tolerances are written next to the checks they guard.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "emodiff/cascade.hpp"
#include "emodiff/errors.hpp"
#include "emodiff/lexicon.hpp"
#include "emodiff/pipeline.hpp"
#include "emodiff/scorer.hpp"
#include "emodiff/stats.hpp"
#include "emodiff/synth.hpp"
#include "emodiff/text_table.hpp"
#include "emodiff/topics.hpp"

using namespace emodiff;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int number, const char* title, bool ok, const std::string& detail) {
  if (!ok) ++g_failures;
  std::printf("%s %d. %s (%s)\n", ok ? "PASS" : "FAIL", number, title, detail.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------- criterion 1

CascadeTree chain_tree(int sharers) {
  CascadeTree t;
  t.article_id = "chain";
  t.nodes.push_back({"PUBLISHER", -1, 0, 0.0, Tie::Publisher});
  for (int i = 1; i <= sharers; ++i)
    t.nodes.push_back({"u" + std::to_string(i), i - 1, i, static_cast<double>(i), Tie::Strong});
  return t;
}

CascadeTree star_tree(int sharers) {
  CascadeTree t;
  t.article_id = "star";
  t.nodes.push_back({"PUBLISHER", -1, 0, 0.0, Tie::Publisher});
  for (int i = 1; i <= sharers; ++i)
    t.nodes.push_back({"u" + std::to_string(i), 0, 1, static_cast<double>(i), Tie::Strong});
  return t;
}

CascadeTree random_tree(std::mt19937_64& rng, int node_count) {
  CascadeTree t;
  t.article_id = "rand";
  t.nodes.push_back({"PUBLISHER", -1, 0, 0.0, Tie::Publisher});
  for (int i = 1; i < node_count; ++i) {
    const int parent = static_cast<int>(rng() % static_cast<std::uint64_t>(i));
    t.nodes.push_back({"u" + std::to_string(i), parent, t.nodes[parent].depth + 1,
                       static_cast<double>(i), Tie::Strong});
  }
  return t;
}

// All-pairs BFS reference, O(n^2).
double brute_virality(const CascadeTree& t) {
  const int n = static_cast<int>(t.nodes.size());
  if (n < 2) return 0.0;
  std::vector<std::vector<int>> adj(t.nodes.size());
  for (int i = 1; i < n; ++i) {
    adj[static_cast<std::size_t>(t.nodes[i].parent)].push_back(i);
    adj[static_cast<std::size_t>(i)].push_back(t.nodes[i].parent);
  }
  double total = 0.0;
  std::vector<int> dist(t.nodes.size());
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[static_cast<std::size_t>(s)] = 0;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      total += dist[static_cast<std::size_t>(v)];
      for (int w : adj[static_cast<std::size_t>(v)])
        if (dist[static_cast<std::size_t>(w)] < 0) {
          dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
          q.push(w);
        }
    }
  }
  return total / (static_cast<double>(n) * (n - 1.0));
}

void criterion_virality() {
  bool ok = true;
  std::ostringstream detail;

  // Closed forms must match to the last bit.
  if (structural_virality(chain_tree(2)) != 4.0 / 3.0) ok = false;
  for (int k = 1; k <= 50 && ok; ++k) {
    const double want = 2.0 * k / (k + 1.0);
    if (structural_virality(star_tree(k)) != want) ok = false;
  }
  detail << (ok ? "closed forms exact" : "closed form mismatch");

  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 2 + static_cast<int>(rng() % 199);
    CascadeTree t = random_tree(rng, n);
    worst = std::max(worst, std::abs(structural_virality(t) - brute_virality(t)));
  }
  if (worst > 1e-9) ok = false;
  detail << ", oracle max err " << worst;

  CascadeTree big = random_tree(rng, 100000);
  const auto t0 = Clock::now();
  volatile double sink = structural_virality(big);
  (void)sink;
  const double secs = seconds_since(t0);
  if (secs >= 1.0) ok = false;
  detail << ", 100k nodes in " << secs << " s";

  report(1, "structural virality closed forms, oracle, speed", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 2

void criterion_scoring() {
  SynthConfig c;
  c.seed = 4242;
  c.embedding_dim = 16;
  c.clusters = 8;
  c.seeds_per_cluster = 2;
  c.members_per_cluster = 4;
  c.vocab_size = 200;
  c.publishers = 50;
  c.articles_per_publisher = 200;
  c.topics = 4;
  c.topic_vocab = 20;
  c.topic_tokens_per_doc = 30;
  c.comments_per_article = 1;
  c.comment_emotion_words = 2;

  SynthEmbeddings emb = gen_embeddings(c);
  SynthCorpus corpus = gen_corpus(c, emb.full);

  EmotionMatrix articles = score_corpus(corpus.articles, emb.full, corpus.modifiers);
  EmotionMatrix comments = score_corpus(corpus.comments, emb.full, corpus.modifiers);
  const double art_gap = (articles.values - corpus.article_truth).cwiseAbs().maxCoeff();
  const double com_gap = (comments.values - corpus.comment_truth).cwiseAbs().maxCoeff();
  bool ok = corpus.articles.size() == 10000 && art_gap == 0.0 && com_gap == 0.0;

  // Metamorphic sweeps: negation count flips the sign, a lone degree word
  // scales the vector, both bit for bit.
  std::vector<const LexiconEntry*> words;
  for (const auto& e : emb.full.entries()) words.push_back(&e);
  std::mt19937_64 rng(515);
  int parity_bad = 0, scale_bad = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const LexiconEntry& w = *words[rng() % words.size()];
    Document base;
    base.id = "m";
    base.tokens = {"padx", "pady", "padz", w.word};
    const EmotionVector s0 = score_document(base, emb.full, corpus.modifiers);

    const int m = static_cast<int>(rng() % 4);
    Document negated = base;
    for (int j = 0; j < m; ++j)
      negated.tokens[static_cast<std::size_t>(2 - j)] = corpus.negations[rng() % corpus.negations.size()];
    const EmotionVector sn = score_document(negated, emb.full, corpus.modifiers);
    for (std::size_t k = 0; k < kNumEmotions; ++k)
      if (sn[k] != (m % 2 == 1 ? -s0[k] : s0[k])) ++parity_bad;

    const auto& deg = corpus.degrees[rng() % corpus.degrees.size()];
    Document scaled = base;
    scaled.tokens[2] = deg.first;
    const EmotionVector sd = score_document(scaled, emb.full, corpus.modifiers);
    for (std::size_t k = 0; k < kNumEmotions; ++k)
      if (sd[k] != deg.second * s0[k]) ++scale_bad;
  }
  ok = ok && parity_bad == 0 && scale_bad == 0;

  std::ostringstream detail;
  detail << corpus.articles.size() << " articles gap " << art_gap << ", " << corpus.comments.size()
         << " comments gap " << com_gap << ", parity misses " << parity_bad << ", scale misses "
         << scale_bad;
  report(2, "emotion scoring equals generated truth", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 3

void criterion_expansion() {
  // Word-embedding dimensionality: at 50k vocabulary the cosine extremes
  // between unrelated vectors shrink as 1/sqrt(dim), and the admission
  // threshold relies on unrelated words staying below the cluster cores.
  SynthConfig c;
  c.seed = 99;
  c.embedding_dim = 200;
  c.clusters = 500;
  c.seeds_per_cluster = 3;
  c.members_per_cluster = 8;
  c.vocab_size = 50000;

  const auto t0 = Clock::now();
  SynthEmbeddings emb = gen_embeddings(c);
  ExpansionParams params;
  ExpansionResult res = expand_lexicon(emb.store, emb.basic, params);
  const double secs = seconds_since(t0);

  std::int64_t hidden = 0, hit = 0;
  double abs_err = 0.0;
  std::int64_t found = 0;
  for (const auto& e : emb.full.entries()) {
    if (e.mined) {
      ++hidden;
      if (res.lexicon.contains(e.word)) ++hit;
    }
    if (!res.lexicon.contains(e.word)) continue;
    ++found;
    const auto& got = res.lexicon.entry(e.word).intensities;
    for (std::size_t k = 0; k < kNumEmotions; ++k) abs_err += std::abs(got[k] - e.intensities[k]);
  }
  const double recall = static_cast<double>(hit) / static_cast<double>(hidden);
  const double mae = abs_err / (static_cast<double>(found) * kNumEmotions);

  bool monotone = true;
  for (const auto& log : res.iterations)
    if (log.added < 0) monotone = false;
  std::int64_t total_added = 0;
  for (const auto& log : res.iterations) total_added += log.added;
  monotone = monotone &&
             res.lexicon.size() == emb.basic.size() + static_cast<std::size_t>(total_added);

  const bool ok = recall >= 0.95 && mae <= 0.06 && monotone && !res.hit_iteration_cap &&
                  secs < 300.0;
  std::ostringstream detail;
  detail << "recall " << recall << " of " << hidden << ", mae " << mae << ", "
         << res.iterations.size() << " iterations, lexicon " << res.lexicon.size() << ", " << secs
         << " s";
  report(3, "lexicon expansion recall and intensity error", ok, detail.str());
}

// ------------------------------------------------------- criteria 4, 5 and 6

struct GroupedSim {
  int groups = 500;
  int per_group = 20;
  double beta0 = 1.0;
  double beta_x1 = 0.5;
  double beta_x2 = -0.3;
  double sigma_mu = 1.0;
  double sigma_eps = 1.0;
  double slope_sd = 0.0;     // random slope on x1
  double endogeneity = 0.0;  // leaks the group intercept into x1
};

DesignMatrix simulate_grouped(const GroupedSim& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const int N = s.groups * s.per_group;
  DesignMatrix d;
  d.y.resize(N);
  d.X.resize(N, 2);
  d.x_names = {"x1", "x2"};
  d.Z_pub.resize(N, 0);
  for (int g = 0; g < s.groups; ++g) {
    const double u = s.sigma_mu * nd(rng);
    const double b1 = s.beta_x1 + s.slope_sd * nd(rng);
    for (int i = 0; i < s.per_group; ++i) {
      const int r = g * s.per_group + i;
      d.group.push_back("g" + std::to_string(g));
      d.X(r, 0) = nd(rng) + s.endogeneity * u;
      d.X(r, 1) = nd(rng);
      d.y(r) = s.beta0 + b1 * d.X(r, 0) + s.beta_x2 * d.X(r, 1) + u + s.sigma_eps * nd(rng);
    }
  }
  return d;
}

// Plain least squares on [1 X], the reference the pinned-variance fit must
// reproduce.
void ols_reference(const DesignMatrix& d, Eigen::VectorXd& coef, Eigen::VectorXd& se) {
  const auto N = d.X.rows();
  Eigen::MatrixXd W(N, d.X.cols() + 1);
  W.col(0).setOnes();
  W.rightCols(d.X.cols()) = d.X;
  const Eigen::MatrixXd xtx = W.transpose() * W;
  const Eigen::MatrixXd xtx_inv = xtx.ldlt().solve(Eigen::MatrixXd::Identity(W.cols(), W.cols()));
  coef = xtx_inv * (W.transpose() * d.y);
  const double rss = (d.y - W * coef).squaredNorm();
  const double sigma2 = rss / static_cast<double>(N - W.cols());
  se = (sigma2 * xtx_inv.diagonal()).cwiseSqrt();
}

void criterion_random_intercept() {
  const std::array<double, 3> truth = {1.0, 0.5, -0.3};
  int beta_good = 0, sigma_good = 0;
  GroupedSim spec;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    FitResult fit = fit_random_intercept(simulate_grouped(spec, seed));
    bool all_in = true;
    for (int j = 0; j < 3; ++j)
      if (std::abs(fit.coef[j] - truth[static_cast<std::size_t>(j)]) > 3.0 * fit.se[j])
        all_in = false;
    if (all_in) ++beta_good;
    if (std::abs(fit.sigma_mu - 1.0) <= 0.1) ++sigma_good;
  }

  GroupedSim flat = spec;
  flat.sigma_mu = 0.0;
  DesignMatrix d0 = simulate_grouped(flat, 7);
  RandomInterceptOptions pinned;
  pinned.fixed_lambda = 0.0;
  FitResult collapsed = fit_random_intercept(d0, pinned);
  Eigen::VectorXd ols_coef, ols_se;
  ols_reference(d0, ols_coef, ols_se);
  double rel = 0.0;
  for (int j = 0; j < 3; ++j) {
    rel = std::max(rel, std::abs(collapsed.coef[j] - ols_coef[j]) / (1.0 + std::abs(ols_coef[j])));
    rel = std::max(rel, std::abs(collapsed.se[j] - ols_se[j]) / (1.0 + std::abs(ols_se[j])));
  }

  GroupedSim sloped;
  sloped.groups = 300;
  sloped.per_group = 50;
  sloped.sigma_mu = 0.5;
  sloped.slope_sd = 0.4;
  FitResult slopes = fit_random_slopes(simulate_grouped(sloped, 17), {"x1"});
  const double slope_sd_hat = slopes.re_sd[1];

  const bool ok = beta_good >= 95 && sigma_good >= 95 && rel <= 1e-6 &&
                  std::abs(slope_sd_hat - 0.4) <= 0.08;
  std::ostringstream detail;
  detail << "beta in 3 se " << beta_good << "/100, sigma_mu in 10% " << sigma_good
         << "/100, ols collapse rel " << rel << ", slope sd " << slope_sd_hat;
  report(4, "random intercept recovery and OLS collapse", ok, detail.str());
}

void criterion_fixed_effects() {
  GroupedSim spec;
  spec.groups = 50;
  spec.per_group = 10;
  spec.sigma_mu = 0.8;
  DesignMatrix d = simulate_grouped(spec, 3);
  FitResult fe = fit_fixed_effects(d);

  // Dummy-variable reference: one indicator column per group, no intercept.
  const auto N = d.X.rows();
  Eigen::MatrixXd W(N, 2 + spec.groups);
  W.setZero();
  W.leftCols(2) = d.X;
  for (int g = 0; g < spec.groups; ++g)
    for (int i = 0; i < spec.per_group; ++i) W(g * spec.per_group + i, 2 + g) = 1.0;
  const Eigen::VectorXd dummy =
      (W.transpose() * W).ldlt().solve(W.transpose() * d.y);
  const double gap =
      std::max(std::abs(fe.coef[0] - dummy[0]), std::abs(fe.coef[1] - dummy[1]));

  GroupedSim haus;
  haus.groups = 50;
  haus.per_group = 20;
  haus.sigma_mu = 0.7;
  int size_rejections = 0, power_rejections = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    DesignMatrix exo = simulate_grouped(haus, 1000 + seed);
    HausmanResult h = hausman_test(fit_fixed_effects(exo), fit_random_intercept(exo));
    if (h.p_value < 0.05) ++size_rejections;

    GroupedSim endo = haus;
    endo.endogeneity = 0.8;
    DesignMatrix bad = simulate_grouped(endo, 2000 + seed);
    HausmanResult hb = hausman_test(fit_fixed_effects(bad), fit_random_intercept(bad));
    if (hb.p_value < 0.05) ++power_rejections;
  }

  const bool ok = gap <= 1e-8 && size_rejections <= 20 && power_rejections >= 160;
  std::ostringstream detail;
  detail << "dummy gap " << gap << ", size " << size_rejections << "/200, power "
         << power_rejections << "/200";
  report(5, "fixed effects identity and Hausman calibration", ok, detail.str());
}

enum class Scenario { Complete, Partial, None };

DesignMatrix simulate_mediation(Scenario sc, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const int groups = 30, per = 20, N = groups * per;
  DesignMatrix d;
  d.y.resize(N);
  d.X.resize(N, 2);
  d.x_names = {"e", "m"};
  d.Z_pub.resize(N, 0);
  for (int g = 0; g < groups; ++g) {
    const double u = 0.2 * nd(rng);
    for (int i = 0; i < per; ++i) {
      const int r = g * per + i;
      d.group.push_back("g" + std::to_string(g));
      const double e = nd(rng);
      const double m =
          (sc == Scenario::None ? 0.5 * nd(rng) : 2.0 * e + 0.5 * nd(rng));
      double y = u + 0.5 * nd(rng);
      switch (sc) {
        case Scenario::Complete: y += m; break;
        case Scenario::Partial: y += m + e; break;
        case Scenario::None: y += e; break;
      }
      d.X(r, 0) = e;
      d.X(r, 1) = m;
      d.y(r) = y;
    }
  }
  return d;
}

void criterion_mediation() {
  const std::array<std::pair<Scenario, MediationClass>, 3> cases = {
      {{Scenario::Complete, MediationClass::Complete},
       {Scenario::Partial, MediationClass::Partial},
       {Scenario::None, MediationClass::None}}};
  std::array<int, 3> correct = {0, 0, 0};
  for (std::size_t c = 0; c < cases.size(); ++c) {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      DesignMatrix d = simulate_mediation(cases[c].first, 100 * c + seed);
      MediationReport rep = mediation_analysis(d, "m", {"e"});
      if (rep.entries.size() == 1 && rep.entries[0].classification == cases[c].second)
        ++correct[c];
    }
  }

  RandomInterceptOptions pinned;
  pinned.fixed_lambda = 0.0;
  MediationReport flat =
      mediation_analysis(simulate_mediation(Scenario::Partial, 9), "m", {"e"}, pinned);
  const double gap = flat.entries[0].identity_gap;

  const bool ok = correct[0] >= 90 && correct[1] >= 90 && correct[2] >= 90 && gap <= 1e-8;
  std::ostringstream detail;
  detail << "complete " << correct[0] << "/100, partial " << correct[1] << "/100, none "
         << correct[2] << "/100, identity gap " << gap;
  report(6, "mediation classification and identity", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 7

void criterion_topics() {
  const int planted_k = 5, words_per_topic = 40, docs = 400, tokens = 60;
  std::vector<std::vector<std::string>> raw;
  std::vector<int> planted;
  std::mt19937_64 rng(900);
  for (int d = 0; d < docs; ++d) {
    const int topic = d % planted_k;
    planted.push_back(topic);
    std::vector<std::string> doc;
    for (int i = 0; i < tokens; ++i) {
      const int w = static_cast<int>(rng() % words_per_topic);
      doc.push_back("t" + std::to_string(topic) + "w" + std::to_string(w));
    }
    raw.push_back(std::move(doc));
  }
  Corpus corpus = preprocess(raw, Lexicon{}, 0.0);

  KSelection sel = select_k(corpus, {1, 2, 5, 10}, 5, 150);

  TopicModel model = fit_lda(corpus, planted_k, 300, 11);
  std::array<int, 5> perm = {0, 1, 2, 3, 4};
  std::int64_t best = 0, total = 0;
  for (const auto& doc : model.assignments) total += static_cast<std::int64_t>(doc.size());
  do {
    std::int64_t agree = 0;
    for (std::size_t d = 0; d < model.assignments.size(); ++d)
      for (int z : model.assignments[d])
        if (perm[static_cast<std::size_t>(z)] == planted[d]) ++agree;
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double accuracy = static_cast<double>(best) / static_cast<double>(total);

  TopicModel uniform;
  uniform.K = 3;
  uniform.alpha = 50.0 / 3;
  uniform.beta = 0.01;
  uniform.seed = 1;
  uniform.vocab = {"w0", "w1", "w2", "w3", "w4", "w5", "w6"};
  for (int i = 0; i < 7; ++i) uniform.vocab_index[uniform.vocab[static_cast<std::size_t>(i)]] = i;
  uniform.phi = Eigen::MatrixXd::Constant(3, 7, 1.0 / 7.0);
  Corpus flat = preprocess({{"w0", "w1", "w2", "w3"}, {"w4", "w5", "w6", "w0", "w1"}},
                           Lexicon{}, 0.0);
  const double ppl = perplexity(uniform, flat);
  const double ppl_rel = std::abs(ppl - 7.0) / 7.0;

  const bool ok = sel.best_k == 5 && accuracy >= 0.9 && ppl_rel <= 1e-12;
  std::ostringstream detail;
  detail << "selected k " << sel.best_k << ", token accuracy " << accuracy
         << ", uniform perplexity rel err " << ppl_rel;
  report(7, "topic count selection and token accuracy", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 8

void criterion_cascade_bookkeeping() {
  SynthConfig c;
  c.seed = 31337;
  c.publishers = 100;
  c.articles_per_publisher = 100;
  c.sigma_mu = 0.25;
  c.sigma_eps = 0.15;
  c.node_scale = 0.45;
  c.node_cap = 400;

  const int n_articles = c.publishers * c.articles_per_publisher;
  std::vector<Document> articles(static_cast<std::size_t>(n_articles));
  EmotionMatrix z;
  z.standardized = true;
  z.values.resize(n_articles, static_cast<int>(kNumEmotions));
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (int i = 0; i < n_articles; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "a%05d", i);
    articles[static_cast<std::size_t>(i)].id = buf;
    std::snprintf(buf, sizeof buf, "p%03d", i / c.articles_per_publisher);
    articles[static_cast<std::size_t>(i)].publisher_id = buf;
    z.doc_ids.push_back(articles[static_cast<std::size_t>(i)].id);
    for (int k = 0; k < static_cast<int>(kNumEmotions); ++k) z.values(i, k) = nd(rng);
  }

  SynthCascades casc = gen_cascades(c, articles, z);
  auto grouped = group_events_by_article(casc.events);
  std::unordered_map<std::string, double> publish(casc.publish_times.begin(),
                                                  casc.publish_times.end());

  std::int64_t built = 0, nonempty_truth = 0, errors = 0, duplicates = 0;
  std::int64_t breadth_bad = 0, depth_bad = 0, sv_bad = 0, size_bad = 0;
  for (const auto& truth : casc.truth) {
    if (truth.size == 0) {
      if (grouped.count(truth.article_id) != 0) ++errors;
      continue;
    }
    ++nonempty_truth;
    try {
      BuildStats stats;
      CascadeTree tree =
          build_cascade(grouped.at(truth.article_id), publish.at(truth.article_id), &stats);
      ++built;
      duplicates += stats.duplicate_shares;
      if (tree.size() != truth.size) ++size_bad;
      auto breadths = level_breadths(tree);
      if (std::accumulate(breadths.begin(), breadths.end(), std::int64_t{0}) != tree.size())
        ++breadth_bad;
      const int depth = cascade_depth(tree);
      if (depth > tree.size()) ++depth_bad;
      if (structural_virality(tree) > 2.0 * depth + 1e-12) ++sv_bad;
    } catch (const Error&) {
      ++errors;
    }
  }

  const bool ok = casc.truth.size() == static_cast<std::size_t>(n_articles) &&
                  built == nonempty_truth && errors == 0 && duplicates == 0 && size_bad == 0 &&
                  breadth_bad == 0 && depth_bad == 0 && sv_bad == 0;
  std::ostringstream detail;
  detail << built << " of " << casc.truth.size() << " cascades built, errors " << errors
         << ", duplicates " << duplicates << ", invariant misses "
         << (size_bad + breadth_bad + depth_bad + sv_bad);
  report(8, "cascade bookkeeping invariants", ok, detail.str());
}

// ---------------------------------------------------------------- criterion 9

void criterion_pipeline() {
  const fs::path root = fs::temp_directory_path() / "emodiff_acceptance_run";
  fs::remove_all(root);
  fs::create_directories(root);

  SynthConfig c;
  c.seed = 77;
  c.embedding_dim = 128;
  c.clusters = 8;
  c.seeds_per_cluster = 2;
  c.members_per_cluster = 5;
  c.cluster_radius = 0.1;
  c.intensity_min = 0.65;
  c.vocab_size = 400;
  c.publishers = 40;
  c.articles_per_publisher = 40;
  c.topics = 3;
  c.topic_vocab = 20;
  c.topic_tokens_per_doc = 50;
  c.comments_per_article = 4;
  c.comment_emotion_words = 3;
  c.comment_align_prob = 0.8;
  c.beta[static_cast<std::size_t>(Emotion::Anxiety)] = 0.25;
  c.beta[static_cast<std::size_t>(Emotion::Sadness)] = -0.25;
  c.beta[static_cast<std::size_t>(Emotion::Love)] = 0.25;
  c.node_scale = 0.5;
  c.node_cap = 300;

  const auto t0 = Clock::now();
  synth_all(c, root / "data");

  PipelineManifest m;
  const fs::path data = root / "data";
  m.embeddings = data / "embeddings.txt";
  m.basic_lexicon = data / "lexicon_basic.tsv";
  m.negations = data / "negations.txt";
  m.degrees = data / "degrees.tsv";
  m.articles = data / "articles.jsonl";
  m.comments = data / "comments.jsonl";
  m.events = data / "events.jsonl";
  m.publish_times = data / "publish_times.tsv";
  m.profiles = data / "profiles.tsv";
  m.friendships = data / "friendships.tsv";
  m.publishers = data / "publishers.tsv";
  m.truth_dir = data / "truth";
  m.out_dir = root / "out";
  m.expansion.mining_neighbors = 40;
  m.topic_ks = {2, 3};
  m.topic_iterations = 60;

  bool ok = true;
  std::ostringstream detail;
  try {
    run_pipeline(m);
    const double secs = seconds_since(t0);

    nlohmann::json recovery =
        nlohmann::json::parse(read_text_file(m.out_dir / "recovery.json"));
    std::unordered_map<std::string, std::pair<bool, double>> got;
    for (const auto& e : recovery.at("regression").at("emotions"))
      got[e.at("emotion").get<std::string>()] = {e.at("recovered").get<bool>(),
                                                 e.at("estimate").get<double>()};
    const bool anxiety = got.at("anxiety").first && got.at("anxiety").second > 0;
    const bool sadness = got.at("sadness").first && got.at("sadness").second < 0;
    const bool love = got.at("love").first && got.at("love").second > 0;
    ok = anxiety && sadness && love && secs < 600.0;
    detail << "anxiety " << got.at("anxiety").second << ", sadness " << got.at("sadness").second
           << ", love " << got.at("love").second << ", " << secs << " s";
  } catch (const std::exception& e) {
    ok = false;
    detail << "exception: " << e.what();
  }
  fs::remove_all(root);
  report(9, "end to end pipeline sign recovery", ok, detail.str());
}

}  // namespace

int main() {
  criterion_virality();
  criterion_scoring();
  criterion_expansion();
  criterion_random_intercept();
  criterion_fixed_effects();
  criterion_mediation();
  criterion_topics();
  criterion_cascade_bookkeeping();
  criterion_pipeline();
  std::printf("%s\n", g_failures == 0 ? "ALL CRITERIA PASSED" : "CRITERIA FAILED");
  return g_failures == 0 ? 0 : 1;
}
