#include "emodiff/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "emodiff/cascade.hpp"
#include "emodiff/errors.hpp"
#include "emodiff/rng.hpp"
#include "emodiff/text_table.hpp"
#include "emodiff/topics.hpp"

namespace emodiff {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void copy_path(const fs::path& from, const fs::path& to) {
  if (to.has_parent_path()) fs::create_directories(to.parent_path());
  if (fs::is_directory(from)) {
    fs::remove_all(to);
    fs::copy(from, to, fs::copy_options::recursive);
  } else {
    fs::copy_file(from, to, fs::copy_options::overwrite_existing);
  }
}

std::uint64_t hash_path(const fs::path& p, std::uint64_t h) {
  if (fs::is_directory(p)) {
    std::vector<fs::path> entries;
    for (const auto& e : fs::recursive_directory_iterator(p))
      if (e.is_regular_file()) entries.push_back(e.path());
    std::sort(entries.begin(), entries.end());
    for (const auto& e : entries) {
      h = fnv1a64(e.lexically_relative(p).generic_string(), h);
      h = fnv1a64(read_text_file(e), h);
    }
    return h;
  }
  return fnv1a64(read_text_file(p), h);
}

// Runs stages with content-addressed caching: a stage whose name, parameter
// string, and input bytes are unchanged is replayed from the cache, which is
// byte-identical to rerunning it.
struct StageRunner {
  fs::path out_dir;
  fs::path cache_dir;
  RunReport* report;

  void skip(const std::string& name) {
    StageReport sr;
    sr.name = name;
    sr.skipped = true;
    report->stages.push_back(std::move(sr));
  }

  void run(const std::string& name, const std::vector<fs::path>& inputs,
           const std::string& params, const std::vector<std::string>& outputs,
           const std::function<void()>& body) {
    StageReport sr;
    sr.name = name;
    sr.outputs = outputs;
    std::uint64_t h = fnv1a64(name);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(params, h);
    for (const auto& in : inputs) {
      if (!fs::exists(in))
        throw InvalidInput("stage '" + name + "': missing input " + in.string());
      h = hash_path(in, h);
    }
    sr.key = hash_hex(h);

    const fs::path entry = cache_dir / (name + "-" + sr.key);
    bool hit = fs::exists(entry / ".ok");
    for (const auto& o : outputs)
      if (hit && !fs::exists(entry / o)) hit = false;
    if (hit) {
      for (const auto& o : outputs) copy_path(entry / o, out_dir / o);
      sr.cached = true;
    } else {
      try {
        body();
      } catch (const std::exception& e) {
        throw Error("stage '" + name + "' failed: " + e.what());
      }
      fs::remove_all(entry);
      fs::create_directories(entry);
      for (const auto& o : outputs) {
        if (!fs::exists(out_dir / o))
          throw Error("stage '" + name + "' did not produce " + o);
        copy_path(out_dir / o, entry / o);
      }
      write_text_file(entry / ".ok", "ok\n");
    }
    report->stages.push_back(std::move(sr));
  }
};

std::string opt6(const std::optional<double>& v) {
  return v ? format_sig6(*v) : std::string("NA");
}

std::vector<std::string> emotion_z_columns() {
  std::vector<std::string> cols;
  for (auto name : kEmotionNames) cols.push_back("z_" + std::string(name));
  return cols;
}

const std::vector<std::string> kControlColumns = {"n_images", "n_videos", "posted_weekend",
                                                  "original", "log1p_chars"};
const std::vector<std::string> kOutcomeColumns = {"log1p_size", "depth", "structural_virality",
                                                  "log1p_max_breadth"};

// Reads a scored table back into an EmotionMatrix; id_column names the
// document id, emotion columns carry the canonical names.
EmotionMatrix matrix_from_table(const TextTable& t, const std::string& id_column,
                                bool standardized) {
  EmotionMatrix m;
  m.standardized = standardized;
  m.values.resize(static_cast<Eigen::Index>(t.n_rows()), static_cast<Eigen::Index>(kNumEmotions));
  const std::size_t id_col = t.column_index(id_column);
  std::array<std::size_t, kNumEmotions> cols{};
  for (std::size_t k = 0; k < kNumEmotions; ++k) cols[k] = t.column_index(kEmotionNames[k]);
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    m.doc_ids.push_back(t.cell(r, id_col));
    for (std::size_t k = 0; k < kNumEmotions; ++k) {
      auto v = t.numeric(r, cols[k]);
      if (!v) throw InvalidInput("score table row " + std::to_string(r + 2) + ": missing value");
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = *v;
    }
  }
  return m;
}

void write_score_table(const EmotionMatrix& m, const std::string& id_column,
                       const std::vector<std::string>& extra_cols,
                       const std::vector<std::vector<std::string>>& extra_cells,
                       const fs::path& path) {
  std::vector<std::string> cols{id_column};
  cols.insert(cols.end(), extra_cols.begin(), extra_cols.end());
  for (auto name : kEmotionNames) cols.emplace_back(name);
  TextTable t(cols);
  for (std::size_t r = 0; r < m.doc_ids.size(); ++r) {
    std::vector<std::string> row{m.doc_ids[r]};
    if (!extra_cells.empty()) {
      const auto& extras = extra_cells[r];
      row.insert(row.end(), extras.begin(), extras.end());
    }
    for (std::size_t k = 0; k < kNumEmotions; ++k)
      row.push_back(format_sig6(m.values(static_cast<Eigen::Index>(r),
                                         static_cast<Eigen::Index>(k))));
    t.add_row(std::move(row));
  }
  t.write_file(path);
}

void write_ccdf(const std::vector<double>& values, const fs::path& path) {
  TextTable t({"value", "fraction_at_least"});
  for (const auto& [v, f] : ccdf(values)) t.add_row({format_sig6(v), format_sig6(f)});
  t.write_file(path);
}

struct FitTables {
  FitResult re;
  FitResult fe;
  HausmanResult hausman;
};

void write_fit_table(const FitResult& fit, const fs::path& path) {
  TextTable t({"term", "estimate", "std_error", "z_value", "p_value"});
  for (Eigen::Index i = 0; i < fit.coef.size(); ++i) {
    const double z = fit.se[i] > 0.0 ? fit.coef[i] / fit.se[i] : 0.0;
    t.add_row({fit.names[static_cast<std::size_t>(i)], format_sig6(fit.coef[i]),
               format_sig6(fit.se[i]), format_sig6(z),
               format_sig6(wald_p(fit.coef[i], fit.se[i]))});
  }
  for (const auto& name : fit.absorbed) t.add_row({name, "NA", "NA", "NA", "NA"});
  auto scalar = [&](const char* name, double v) {
    t.add_row({name, format_sig6(v), "NA", "NA", "NA"});
  };
  if (fit.method != FitMethod::FE) {
    scalar("sigma_mu", fit.sigma_mu);
    scalar("lambda", fit.lambda);
  }
  scalar("sigma_eps", fit.sigma_eps);
  scalar("loglik", fit.loglik);
  scalar("n_obs", static_cast<double>(fit.n_obs));
  scalar("n_groups", static_cast<double>(fit.n_groups));
  t.write_file(path);
}

DesignMatrix design_from_table(const TextTable& t, const std::string& y_col,
                               const std::vector<std::string>& x_cols,
                               const std::vector<std::string>& z_cols,
                               const std::string& group_col) {
  DesignMatrix d;
  const auto n = static_cast<Eigen::Index>(t.n_rows());
  d.y.resize(n);
  d.X.resize(n, static_cast<Eigen::Index>(x_cols.size()));
  d.Z_pub.resize(n, static_cast<Eigen::Index>(z_cols.size()));
  d.x_names = x_cols;
  d.z_names = z_cols;
  const std::size_t yc = t.column_index(y_col);
  const std::size_t gc = t.column_index(group_col);
  std::vector<std::size_t> xc, zc;
  for (const auto& c : x_cols) xc.push_back(t.column_index(c));
  for (const auto& c : z_cols) zc.push_back(t.column_index(c));
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    d.y[i] = t.numeric(r, yc).value_or(kNaN);
    d.group.push_back(t.cell(r, gc));
    for (std::size_t j = 0; j < xc.size(); ++j)
      d.X(i, static_cast<Eigen::Index>(j)) = t.numeric(r, xc[j]).value_or(kNaN);
    for (std::size_t j = 0; j < zc.size(); ++j)
      d.Z_pub(i, static_cast<Eigen::Index>(j)) = t.numeric(r, zc[j]).value_or(kNaN);
  }
  return d;
}

std::string method_tag(FitMethod m) { return m == FitMethod::ML ? "ML" : "REML"; }

}  // namespace

PipelineManifest PipelineManifest::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw InvalidInput("manifest " + path.string() + ": " + e.what());
  }
  PipelineManifest m;
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  auto get_path = [&](const char* key) -> fs::path {
    if (!j.contains(key)) return {};
    const auto s = j.at(key).get<std::string>();
    if (s.empty()) return {};
    fs::path p = s;
    return p.is_absolute() ? p : base / p;
  };
  try {
    m.embeddings = get_path("embeddings");
    m.basic_lexicon = get_path("basic_lexicon");
    m.negations = get_path("negations");
    m.degrees = get_path("degrees");
    m.articles = get_path("articles");
    m.comments = get_path("comments");
    m.events = get_path("events");
    m.publish_times = get_path("publish_times");
    m.profiles = get_path("profiles");
    m.friendships = get_path("friendships");
    m.publishers = get_path("publishers");
    m.truth_dir = get_path("truth_dir");
    m.out_dir = get_path("out_dir");
    if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("window")) m.window = j.at("window").get<int>();
    if (j.contains("min_doc_freq")) m.min_doc_freq = j.at("min_doc_freq").get<double>();
    if (j.contains("topic_ks")) m.topic_ks = j.at("topic_ks").get<std::vector<int>>();
    if (j.contains("topic_iterations")) m.topic_iterations = j.at("topic_iterations").get<int>();
    if (j.contains("run_regressions")) m.run_regressions = j.at("run_regressions").get<bool>();
    if (j.contains("mediator")) m.mediator = j.at("mediator").get<std::string>();
    if (j.contains("z_threshold")) m.z_threshold = j.at("z_threshold").get<double>();
    if (j.contains("method")) {
      const auto s = j.at("method").get<std::string>();
      if (s == "ML")
        m.method = FitMethod::ML;
      else if (s == "REML")
        m.method = FitMethod::REML;
      else
        throw InvalidInput("manifest: method must be ML or REML");
    }
    if (j.contains("expansion")) {
      const json& e = j.at("expansion");
      if (e.contains("mining_neighbors"))
        m.expansion.mining_neighbors = e.at("mining_neighbors").get<int>();
      if (e.contains("class_neighbors"))
        m.expansion.class_neighbors = e.at("class_neighbors").get<int>();
      if (e.contains("intensity_neighbors"))
        m.expansion.intensity_neighbors = e.at("intensity_neighbors").get<int>();
      if (e.contains("alpha")) m.expansion.alpha = e.at("alpha").get<double>();
      if (e.contains("max_iterations"))
        m.expansion.max_iterations = e.at("max_iterations").get<int>();
    }
  } catch (const json::exception& e) {
    throw InvalidInput("manifest " + path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

void PipelineManifest::validate() const {
  auto require = [](const fs::path& p, const char* field) {
    if (p.empty()) throw InvalidInput(std::string("manifest: missing required field '") + field + "'");
  };
  require(embeddings, "embeddings");
  require(basic_lexicon, "basic_lexicon");
  require(negations, "negations");
  require(degrees, "degrees");
  require(articles, "articles");
  require(out_dir, "out_dir");
  if (run_regressions && events.empty())
    throw InvalidInput("manifest: regressions request cascade outcomes but 'events' is not set");
  if (!events.empty() && publish_times.empty())
    throw InvalidInput("manifest: 'events' needs 'publish_times'");
  for (const auto* p : {&embeddings, &basic_lexicon, &negations, &degrees, &articles, &comments,
                        &events, &publish_times, &profiles, &friendships, &publishers, &truth_dir})
    if (!p->empty() && !fs::exists(*p))
      throw InvalidInput("manifest: referenced path does not exist: " + p->string());
  if (topic_ks.empty()) throw InvalidInput("manifest: topic_ks must not be empty");
  for (int k : topic_ks)
    if (k < 1) throw InvalidInput("manifest: topic_ks entries must be >= 1");
  if (topic_iterations < 1) throw InvalidInput("manifest: topic_iterations must be >= 1");
  if (window < 1) throw InvalidInput("manifest: window must be >= 1");
  if (!(min_doc_freq >= 0.0 && min_doc_freq < 1.0))
    throw InvalidInput("manifest: min_doc_freq must be in [0, 1)");
  if (!std::isfinite(z_threshold)) throw InvalidInput("manifest: z_threshold must be finite");
  if (mediator.empty()) throw InvalidInput("manifest: mediator must be named");
  expansion.validate();
}

std::vector<ConsistencyRow> comment_consistency(const EmotionMatrix& article_z,
                                                const EmotionMatrix& comment_z,
                                                const std::vector<std::string>& comment_article_ids,
                                                double z_threshold) {
  if (!article_z.standardized || !comment_z.standardized)
    throw InvalidInput("comment_consistency: both matrices must be standardized");
  if (comment_article_ids.size() != comment_z.doc_ids.size())
    throw InvalidInput("comment_consistency: one article id per comment required");

  // Article -> its single extreme emotion, when exactly one clears the bar.
  std::unordered_map<std::string, std::size_t> extreme;
  std::array<std::int64_t, kNumEmotions> n_articles{};
  for (std::size_t r = 0; r < article_z.doc_ids.size(); ++r) {
    int above = 0;
    std::size_t which = 0;
    for (std::size_t k = 0; k < kNumEmotions; ++k) {
      if (article_z.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) >
          z_threshold) {
        ++above;
        which = k;
      }
    }
    if (above == 1) {
      extreme.emplace(article_z.doc_ids[r], which);
      ++n_articles[which];
    }
  }

  std::array<std::array<double, kNumEmotions>, kNumEmotions> sums{};
  std::array<std::int64_t, kNumEmotions> n_comments{};
  for (std::size_t r = 0; r < comment_article_ids.size(); ++r) {
    auto it = extreme.find(comment_article_ids[r]);
    if (it == extreme.end()) continue;
    ++n_comments[it->second];
    for (std::size_t k = 0; k < kNumEmotions; ++k)
      sums[it->second][k] +=
          comment_z.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
  }

  std::vector<ConsistencyRow> rows;
  for (std::size_t g = 0; g < kNumEmotions; ++g) {
    ConsistencyRow row;
    row.emotion = static_cast<Emotion>(g);
    row.n_articles = n_articles[g];
    row.n_comments = n_comments[g];
    row.empty = n_articles[g] == 0;
    if (n_comments[g] > 0) {
      std::size_t best = 0;
      for (std::size_t k = 0; k < kNumEmotions; ++k) {
        row.mean_comment_z[k] = sums[g][k] / static_cast<double>(n_comments[g]);
        if (row.mean_comment_z[k] > row.mean_comment_z[best]) best = k;
      }
      row.matched = best == g;
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

void stage_lexicon(const PipelineManifest& m, StageRunner& runner) {
  char params[160];
  std::snprintf(params, sizeof params, "n=%d k=%d m=%d alpha=%.17g cap=%d",
                m.expansion.mining_neighbors, m.expansion.class_neighbors,
                m.expansion.intensity_neighbors, m.expansion.alpha,
                m.expansion.max_iterations);
  runner.run("lexicon", {m.embeddings, m.basic_lexicon}, params,
             {"lexicon_expanded.tsv", "expansion_log.tsv"}, [&] {
               EmbeddingStore store = EmbeddingStore::load(m.embeddings);
               Lexicon basic = Lexicon::load(m.basic_lexicon);
               ExpansionResult res = expand_lexicon(store, basic, m.expansion);
               res.lexicon.save(m.out_dir / "lexicon_expanded.tsv");
               TextTable log({"iteration", "candidates", "added"});
               for (const auto& it : res.iterations)
                 log.add_row({format_int(it.iteration), format_int(it.candidates),
                              format_int(it.added)});
               log.write_file(m.out_dir / "expansion_log.tsv");
             });
}

void stage_score_articles(const PipelineManifest& m, StageRunner& runner) {
  runner.run("score_articles",
             {m.out_dir / "lexicon_expanded.tsv", m.articles, m.negations, m.degrees},
             "window=" + std::to_string(m.window),
             {"article_scores_raw.tsv", "article_scores_z.tsv", "degree_of_emotion.tsv"}, [&] {
               Lexicon lex = Lexicon::load(m.out_dir / "lexicon_expanded.tsv");
               ModifierDictionaries mods = ModifierDictionaries::load(m.negations, m.degrees);
               std::vector<Document> docs = load_documents(m.articles);
               EmotionMatrix raw = score_corpus(docs, lex, mods, m.window);
               write_score_table(raw, "article_id", {}, {}, m.out_dir / "article_scores_raw.tsv");
               write_score_table(standardize(raw), "article_id", {}, {},
                                 m.out_dir / "article_scores_z.tsv");
               std::vector<double> deg = degree_of_emotion(raw);
               TextTable t({"article_id", "degree_of_emotion"});
               for (std::size_t i = 0; i < deg.size(); ++i)
                 t.add_row({raw.doc_ids[i], format_sig6(deg[i])});
               t.write_file(m.out_dir / "degree_of_emotion.tsv");
             });
}

void stage_correlations(const PipelineManifest& m, StageRunner& runner) {
  runner.run("correlations", {m.out_dir / "article_scores_raw.tsv"}, "",
             {"emotion_correlations.tsv"}, [&] {
               TextTable raw_t = TextTable::read_file(m.out_dir / "article_scores_raw.tsv");
               EmotionMatrix raw = matrix_from_table(raw_t, "article_id", false);
               Eigen::MatrixXd R = correlation_matrix(raw);
               std::vector<std::string> cols{"emotion"};
               for (auto name : kEmotionNames) cols.emplace_back(name);
               TextTable t(cols);
               for (std::size_t i = 0; i < kNumEmotions; ++i) {
                 std::vector<std::string> row{std::string(kEmotionNames[i])};
                 for (std::size_t k = 0; k < kNumEmotions; ++k)
                   row.push_back(format_sig6(
                       R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))));
                 t.add_row(std::move(row));
               }
               t.write_file(m.out_dir / "emotion_correlations.tsv");
             });
}

void stage_score_comments(const PipelineManifest& m, StageRunner& runner) {
  runner.run("score_comments",
             {m.out_dir / "lexicon_expanded.tsv", m.comments, m.negations, m.degrees},
             "window=" + std::to_string(m.window),
             {"comment_scores_raw.tsv", "comment_scores_z.tsv"}, [&] {
               Lexicon lex = Lexicon::load(m.out_dir / "lexicon_expanded.tsv");
               ModifierDictionaries mods = ModifierDictionaries::load(m.negations, m.degrees);
               std::vector<Document> docs = load_documents(m.comments);
               std::vector<std::vector<std::string>> extras;
               for (const auto& d : docs) extras.push_back({d.article_id});
               EmotionMatrix raw = score_corpus(docs, lex, mods, m.window);
               write_score_table(raw, "comment_id", {"article_id"}, extras,
                                 m.out_dir / "comment_scores_raw.tsv");
               write_score_table(standardize(raw), "comment_id", {"article_id"}, extras,
                                 m.out_dir / "comment_scores_z.tsv");
             });
}

void stage_consistency(const PipelineManifest& m, StageRunner& runner) {
  runner.run("comment_consistency",
             {m.out_dir / "article_scores_z.tsv", m.out_dir / "comment_scores_z.tsv"},
             "threshold=" + format_exact(m.z_threshold), {"comment_consistency.tsv"}, [&] {
               TextTable at = TextTable::read_file(m.out_dir / "article_scores_z.tsv");
               TextTable ct = TextTable::read_file(m.out_dir / "comment_scores_z.tsv");
               EmotionMatrix az = matrix_from_table(at, "article_id", true);
               EmotionMatrix cz = matrix_from_table(ct, "comment_id", true);
               std::vector<std::string> owners;
               const std::size_t owner_col = ct.column_index("article_id");
               for (std::size_t r = 0; r < ct.n_rows(); ++r)
                 owners.push_back(ct.cell(r, owner_col));
               auto rows = comment_consistency(az, cz, owners, m.z_threshold);
               std::vector<std::string> cols{"emotion", "n_articles", "n_comments"};
               for (auto name : kEmotionNames) cols.push_back("mean_z_" + std::string(name));
               cols.emplace_back("matched");
               TextTable t(cols);
               for (const auto& row : rows) {
                 std::vector<std::string> cells{std::string(emotion_name(row.emotion)),
                                                format_int(row.n_articles),
                                                format_int(row.n_comments)};
                 for (std::size_t k = 0; k < kNumEmotions; ++k)
                   cells.push_back(row.n_comments > 0 ? format_sig6(row.mean_comment_z[k])
                                                      : std::string("NA"));
                 cells.emplace_back(row.empty ? "NA" : (row.matched ? "1" : "0"));
                 t.add_row(std::move(cells));
               }
               t.write_file(m.out_dir / "comment_consistency.tsv");
             });
}

void stage_topics(const PipelineManifest& m, StageRunner& runner) {
  std::string params = "iters=" + std::to_string(m.topic_iterations) +
                       " seed=" + std::to_string(m.seed) +
                       " mdf=" + format_exact(m.min_doc_freq) + " ks=";
  for (int k : m.topic_ks) params += std::to_string(k) + ",";
  runner.run("topics", {m.articles, m.out_dir / "lexicon_expanded.tsv"}, params,
             {"topic_selection.tsv", "topic_shares.tsv", "topic_model"}, [&] {
               Lexicon lex = Lexicon::load(m.out_dir / "lexicon_expanded.tsv");
               std::vector<Document> docs = load_documents(m.articles);
               std::vector<std::vector<std::string>> tokens;
               for (const auto& d : docs) tokens.push_back(d.tokens);
               Corpus corpus = preprocess(tokens, lex, m.min_doc_freq);

               KSelection sel;
               if (m.topic_ks.size() > 1) {
                 sel = select_k(corpus, m.topic_ks, derive_seed(m.seed, "select_k"),
                                m.topic_iterations);
               } else {
                 sel.best_k = m.topic_ks[0];
               }
               TextTable selt({"k", "validation_perplexity", "chosen"});
               for (const auto& [k, px] : sel.curve)
                 selt.add_row({format_int(k), format_sig6(px), k == sel.best_k ? "1" : "0"});
               if (sel.curve.empty())
                 selt.add_row({format_int(sel.best_k), "NA", "1"});
               selt.write_file(m.out_dir / "topic_selection.tsv");

               TopicModel model = fit_lda(corpus, sel.best_k, m.topic_iterations,
                                          derive_seed(m.seed, "lda"));
               fs::remove_all(m.out_dir / "topic_model");
               model.save(m.out_dir / "topic_model");

               std::vector<std::string> cols{"article_id"};
               for (int k = 0; k < model.K; ++k) cols.push_back("topic_" + std::to_string(k));
               TextTable shares(cols);
               for (std::size_t d = 0; d < docs.size(); ++d) {
                 Eigen::VectorXd theta = model.training_doc_topics(d);
                 std::vector<std::string> row{docs[d].id};
                 for (Eigen::Index k = 0; k < theta.size(); ++k)
                   row.push_back(format_sig6(theta[k]));
                 shares.add_row(std::move(row));
               }
               shares.write_file(m.out_dir / "topic_shares.tsv");
             });
}

void stage_cascades(const PipelineManifest& m, StageRunner& runner) {
  std::vector<fs::path> inputs{m.events, m.publish_times};
  if (!m.profiles.empty()) inputs.push_back(m.profiles);
  if (!m.friendships.empty()) inputs.push_back(m.friendships);
  runner.run(
      "cascades", inputs, "",
      {"cascade_metrics.tsv", "ccdf_size.tsv", "ccdf_depth.tsv", "ccdf_max_breadth.tsv",
       "ccdf_structural_virality.tsv"},
      [&] {
        auto by_article = group_events_by_article(load_events(m.events));
        std::unordered_map<std::string, UserProfile> profiles;
        if (!m.profiles.empty()) profiles = load_profiles(m.profiles);
        FriendshipStore friends;
        if (!m.friendships.empty()) friends = FriendshipStore::load(m.friendships);

        TextTable times = TextTable::read_file(m.publish_times);
        const std::size_t id_col = times.column_index("article_id");
        const std::size_t time_col = times.column_index("publish_time");

        TextTable t({"article_id", "size", "node_count", "depth", "max_breadth",
                     "structural_virality", "time_per_level", "weak_tie_proportion",
                     "seed_clusterness", "avg_age", "avg_friend_count", "female_share",
                     "profiled_sharers", "duplicate_shares"});
        std::vector<double> sizes, depths, breadths, sv;
        std::unordered_set<std::string> seen;
        for (std::size_t r = 0; r < times.n_rows(); ++r) {
          const std::string article = times.cell(r, id_col);
          if (!seen.insert(article).second)
            throw InvalidInput("duplicate publish time for article '" + article + "'");
          auto v = times.numeric(r, time_col);
          if (!v) throw InvalidInput("missing publish time for article '" + article + "'");
          auto it = by_article.find(article);
          if (it == by_article.end()) {
            t.add_row({article, "0", "1", "0", "0", "0", "NA", "NA", "NA", "NA", "NA", "NA",
                       "0", "0"});
            continue;
          }
          BuildStats stats;
          CascadeTree tree = build_cascade(it->second, *v, &stats);
          CascadeMetrics mm = compute_metrics(tree, m.profiles.empty() ? nullptr : &profiles,
                                              m.friendships.empty() ? nullptr : &friends);
          t.add_row({article, format_int(mm.size), format_int(mm.node_count),
                     format_int(mm.depth), format_int(mm.max_breadth),
                     format_sig6(mm.structural_virality), format_sig6(mm.time_per_level),
                     opt6(mm.weak_tie_proportion), opt6(mm.seed_clusterness), opt6(mm.avg_age),
                     opt6(mm.avg_friend_count), opt6(mm.female_share),
                     format_int(mm.profiled_sharers), format_int(stats.duplicate_shares)});
          sizes.push_back(static_cast<double>(mm.size));
          depths.push_back(static_cast<double>(mm.depth));
          breadths.push_back(static_cast<double>(mm.max_breadth));
          sv.push_back(mm.structural_virality);
          by_article.erase(it);
        }
        if (!by_article.empty()) {
          std::vector<std::string> missing;
          for (const auto& [id, _] : by_article) missing.push_back(id);
          std::sort(missing.begin(), missing.end());
          throw InvalidInput("events reference articles without publish times, first: " +
                             missing.front());
        }
        t.write_file(m.out_dir / "cascade_metrics.tsv");
        write_ccdf(sizes, m.out_dir / "ccdf_size.tsv");
        write_ccdf(depths, m.out_dir / "ccdf_depth.tsv");
        write_ccdf(breadths, m.out_dir / "ccdf_max_breadth.tsv");
        write_ccdf(sv, m.out_dir / "ccdf_structural_virality.tsv");
      });
}

void stage_join(const PipelineManifest& m, StageRunner& runner) {
  std::vector<fs::path> inputs{m.articles, m.out_dir / "article_scores_z.tsv",
                               m.out_dir / "degree_of_emotion.tsv",
                               m.out_dir / "topic_shares.tsv",
                               m.out_dir / "cascade_metrics.tsv"};
  if (!m.publishers.empty()) inputs.push_back(m.publishers);
  runner.run("join", inputs, "", {"analysis_table.tsv"}, [&] {
    std::vector<Document> docs = load_documents(m.articles);
    TextTable zt = TextTable::read_file(m.out_dir / "article_scores_z.tsv");
    TextTable dt = TextTable::read_file(m.out_dir / "degree_of_emotion.tsv");
    TextTable st = TextTable::read_file(m.out_dir / "topic_shares.tsv");
    TextTable ct = TextTable::read_file(m.out_dir / "cascade_metrics.tsv");

    auto index_by = [](const TextTable& t, const char* col) {
      std::unordered_map<std::string, std::size_t> idx;
      const std::size_t c = t.column_index(col);
      for (std::size_t r = 0; r < t.n_rows(); ++r) idx.emplace(t.cell(r, c), r);
      return idx;
    };
    auto z_idx = index_by(zt, "article_id");
    auto d_idx = index_by(dt, "article_id");
    auto s_idx = index_by(st, "article_id");
    auto c_idx = index_by(ct, "article_id");

    std::unordered_map<std::string, double> followers;
    if (!m.publishers.empty()) {
      TextTable pt = TextTable::read_file(m.publishers);
      const std::size_t pc = pt.column_index("publisher_id");
      const std::size_t fc = pt.column_index("followers");
      for (std::size_t r = 0; r < pt.n_rows(); ++r) {
        auto v = pt.numeric(r, fc);
        if (!v || !(*v > 0.0))
          throw InvalidInput("publishers table: followers must be positive");
        followers.emplace(pt.cell(r, pc), *v);
      }
    }

    std::vector<std::string> share_cols;
    for (const auto& col : st.columns())
      if (col != "article_id") share_cols.push_back(col);

    std::vector<std::string> cols{"article_id", "publisher_id"};
    for (const auto& c : kControlColumns) cols.push_back(c);
    cols.emplace_back("log1p_comments");
    for (const auto& c : emotion_z_columns()) cols.push_back(c);
    cols.emplace_back("degree_of_emotion");
    for (const auto& c : share_cols) cols.push_back(c);
    if (!followers.empty()) cols.emplace_back("ln_followers");
    cols.emplace_back("size");
    for (const auto& c : kOutcomeColumns) cols.push_back(c);
    TextTable t(cols);

    for (const auto& doc : docs) {
      auto need = [&](const std::unordered_map<std::string, std::size_t>& idx,
                      const char* what) {
        auto it = idx.find(doc.id);
        if (it == idx.end())
          throw InvalidInput("article '" + doc.id + "' missing from " + what);
        return it->second;
      };
      const std::size_t zr = need(z_idx, "article scores");
      const std::size_t dr = need(d_idx, "degree of emotion");
      const std::size_t sr = need(s_idx, "topic shares");
      const std::size_t cr = need(c_idx, "cascade metrics");

      std::vector<std::string> row{doc.id, doc.publisher_id};
      row.push_back(format_int(doc.n_images));
      row.push_back(format_int(doc.n_videos));
      row.push_back(doc.posted_weekend ? "1" : "0");
      row.push_back(doc.original ? "1" : "0");
      row.push_back(format_sig6(std::log1p(static_cast<double>(doc.char_length))));
      row.push_back(format_sig6(std::log1p(static_cast<double>(doc.n_comments))));
      for (std::size_t k = 0; k < kNumEmotions; ++k)
        row.push_back(zt.cell(zr, zt.column_index(kEmotionNames[k])));
      row.push_back(dt.cell(dr, dt.column_index("degree_of_emotion")));
      for (const auto& c : share_cols) row.push_back(st.cell(sr, st.column_index(c)));
      if (!followers.empty()) {
        auto it = followers.find(doc.publisher_id);
        if (it == followers.end())
          throw InvalidInput("publisher '" + doc.publisher_id + "' missing from publishers");
        row.push_back(format_sig6(std::log(it->second)));
      }
      const double size = ct.numeric(cr, ct.column_index("size")).value_or(0.0);
      const double depth = ct.numeric(cr, ct.column_index("depth")).value_or(0.0);
      const double breadth = ct.numeric(cr, ct.column_index("max_breadth")).value_or(0.0);
      const double virality =
          ct.numeric(cr, ct.column_index("structural_virality")).value_or(0.0);
      row.push_back(format_int(static_cast<std::int64_t>(size)));
      row.push_back(format_sig6(std::log1p(size)));
      row.push_back(format_sig6(depth));
      row.push_back(format_sig6(virality));
      row.push_back(format_sig6(std::log1p(breadth)));
      t.add_row(std::move(row));
    }
    t.write_file(m.out_dir / "analysis_table.tsv");
  });
}

std::vector<std::string> regression_x_columns(const TextTable& t) {
  std::vector<std::string> x = emotion_z_columns();
  x.insert(x.end(), kControlColumns.begin(), kControlColumns.end());
  std::vector<std::string> shares;
  for (const auto& col : t.columns())
    if (col.rfind("topic_", 0) == 0) shares.push_back(col);
  // Shares sum to one; the last column is redundant given the intercept.
  for (std::size_t i = 0; i + 1 < shares.size(); ++i) x.push_back(shares[i]);
  return x;
}

void stage_regress(const PipelineManifest& m, StageRunner& runner) {
  std::vector<std::string> outputs{"hausman.tsv"};
  for (const auto& outcome : kOutcomeColumns) {
    outputs.push_back("regression_" + outcome + ".tsv");
    outputs.push_back("regression_" + outcome + "_fe.tsv");
    outputs.push_back("fits/" + outcome + "_re.json");
    outputs.push_back("fits/" + outcome + "_fe.json");
  }
  runner.run("regress", {m.out_dir / "analysis_table.tsv"}, "method=" + method_tag(m.method),
             outputs, [&] {
               TextTable t = TextTable::read_file(m.out_dir / "analysis_table.tsv");
               const std::vector<std::string> x = regression_x_columns(t);
               const std::vector<std::string> z =
                   t.has_column("ln_followers") ? std::vector<std::string>{"ln_followers"}
                                                : std::vector<std::string>{};
               fs::create_directories(m.out_dir / "fits");
               TextTable ht({"outcome", "statistic", "dof", "p_value"});
               for (const auto& outcome : kOutcomeColumns) {
                 DesignMatrix d = design_from_table(t, outcome, x, z, "publisher_id");
                 RandomInterceptOptions opt;
                 opt.method = m.method;
                 FitResult re = fit_random_intercept(d, opt);
                 FitResult fe = fit_fixed_effects(d);
                 HausmanResult h = hausman_test(fe, re);
                 write_fit_table(re, m.out_dir / ("regression_" + outcome + ".tsv"));
                 write_fit_table(fe, m.out_dir / ("regression_" + outcome + "_fe.tsv"));
                 re.save(m.out_dir / "fits" / (outcome + "_re.json"));
                 fe.save(m.out_dir / "fits" / (outcome + "_fe.json"));
                 ht.add_row({outcome, format_sig6(h.statistic), format_int(h.dof),
                             format_sig6(h.p_value)});
               }
               ht.write_file(m.out_dir / "hausman.tsv");
             });
}

void stage_mediate(const PipelineManifest& m, StageRunner& runner) {
  runner.run("mediate", {m.out_dir / "analysis_table.tsv"},
             "method=" + method_tag(m.method) + " mediator=" + m.mediator, {"mediation.tsv"},
             [&] {
               TextTable t = TextTable::read_file(m.out_dir / "analysis_table.tsv");
               std::vector<std::string> x = regression_x_columns(t);
               if (std::find(x.begin(), x.end(), m.mediator) == x.end())
                 x.push_back(m.mediator);
               const std::vector<std::string> z =
                   t.has_column("ln_followers") ? std::vector<std::string>{"ln_followers"}
                                                : std::vector<std::string>{};
               DesignMatrix d = design_from_table(t, "log1p_size", x, z, "publisher_id");
               RandomInterceptOptions opt;
               opt.method = m.method;
               MediationReport report =
                   mediation_analysis(d, m.mediator, emotion_z_columns(), opt);
               TextTable mt({"emotion", "path_a", "path_a_p", "total", "total_p", "direct",
                             "direct_p", "mediator_coef", "mediator_p", "classification",
                             "identity_gap", "dropped_rows"});
               for (const auto& e : report.entries)
                 mt.add_row({e.emotion, format_sig6(e.path_a), format_sig6(e.path_a_p),
                             format_sig6(e.total), format_sig6(e.total_p),
                             format_sig6(e.direct), format_sig6(e.direct_p),
                             format_sig6(e.mediator_coef), format_sig6(e.mediator_p),
                             std::string(mediation_class_name(e.classification)),
                             format_sig6(e.identity_gap), format_int(report.dropped_rows)});
               mt.write_file(m.out_dir / "mediation.tsv");
             });
}

void write_recovery(const PipelineManifest& m) {
  json recovery;

  Lexicon truth = Lexicon::load(m.truth_dir / "lexicon_full.tsv");
  Lexicon expanded = Lexicon::load(m.out_dir / "lexicon_expanded.tsv");
  std::int64_t found = 0;
  double abs_err = 0.0;
  for (const auto& e : truth.entries()) {
    if (!expanded.contains(e.word)) continue;
    ++found;
    const auto& got = expanded.entry(e.word).intensities;
    for (std::size_t k = 0; k < kNumEmotions; ++k)
      abs_err += std::abs(got[k] - e.intensities[k]);
  }
  recovery["lexicon"] = {
      {"truth_size", truth.size()},
      {"expanded_size", expanded.size()},
      {"recall", truth.empty() ? 0.0
                               : static_cast<double>(found) / static_cast<double>(truth.size())},
      {"precision", expanded.empty() ? 0.0
                                     : static_cast<double>(found) /
                                           static_cast<double>(expanded.size())},
      {"intensity_mae",
       found == 0 ? 0.0 : abs_err / (static_cast<double>(found) * kNumEmotions)}};

  const fs::path fit_path = m.out_dir / "fits" / "log1p_size_re.json";
  if (fs::exists(fit_path) && fs::exists(m.truth_dir / "params.json")) {
    json params = json::parse(read_text_file(m.truth_dir / "params.json"));
    auto beta = params.at("beta").get<std::array<double, kNumEmotions>>();
    FitResult fit = FitResult::load(fit_path);
    json per_emotion = json::array();
    const auto zcols = emotion_z_columns();
    for (std::size_t k = 0; k < kNumEmotions; ++k) {
      auto it = std::find(fit.names.begin(), fit.names.end(), zcols[k]);
      if (it == fit.names.end()) continue;
      const auto i = static_cast<Eigen::Index>(it - fit.names.begin());
      const double p = wald_p(fit.coef[i], fit.se[i]);
      const bool significant = p < 0.05;
      bool recovered;
      if (beta[k] == 0.0)
        recovered = !significant;
      else
        recovered = significant && (fit.coef[i] > 0) == (beta[k] > 0);
      per_emotion.push_back({{"emotion", std::string(kEmotionNames[k])},
                             {"true_beta", beta[k]},
                             {"estimate", fit.coef[i]},
                             {"p_value", p},
                             {"recovered", recovered}});
    }
    recovery["regression"] = {{"outcome", "log1p_size"}, {"emotions", per_emotion}};
  }

  const fs::path consistency = m.out_dir / "comment_consistency.tsv";
  if (fs::exists(consistency)) {
    TextTable t = TextTable::read_file(consistency);
    const std::size_t matched_col = t.column_index("matched");
    std::int64_t groups = 0, matched = 0;
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
      if (t.cell(r, matched_col) == "NA") continue;
      ++groups;
      if (t.cell(r, matched_col) == "1") ++matched;
    }
    recovery["comment_consistency"] = {{"non_empty_groups", groups}, {"matched", matched}};
  }

  write_text_file(m.out_dir / "recovery.json", recovery.dump(2) + "\n");
}

}  // namespace

RunReport run_pipeline(const PipelineManifest& m) {
  m.validate();
  fs::create_directories(m.out_dir);
  const char* env = std::getenv(kCacheDirEnv);
  const fs::path cache_dir = env && *env ? fs::path(env) : m.out_dir / ".cache";
  fs::create_directories(cache_dir);

  RunReport report;
  StageRunner runner{m.out_dir, cache_dir, &report};

  stage_lexicon(m, runner);
  stage_score_articles(m, runner);
  stage_correlations(m, runner);
  if (!m.comments.empty()) {
    stage_score_comments(m, runner);
    stage_consistency(m, runner);
  } else {
    runner.skip("score_comments");
    runner.skip("comment_consistency");
  }
  stage_topics(m, runner);
  if (!m.events.empty()) {
    stage_cascades(m, runner);
    stage_join(m, runner);
  } else {
    runner.skip("cascades");
    runner.skip("join");
  }
  if (!m.events.empty() && m.run_regressions) {
    stage_regress(m, runner);
    stage_mediate(m, runner);
  } else {
    runner.skip("regress");
    runner.skip("mediate");
  }

  if (!m.truth_dir.empty()) write_recovery(m);

  json stages = json::array();
  for (const auto& s : report.stages) {
    if (s.skipped) {
      stages.push_back({{"name", s.name}, {"skipped", true}});
    } else {
      stages.push_back({{"name", s.name}, {"key", s.key}, {"outputs", s.outputs}});
    }
  }
  write_text_file(m.out_dir / "run_report.json", json{{"stages", stages}}.dump(2) + "\n");
  return report;
}

std::string pipeline_status(const PipelineManifest& m) {
  const fs::path report_path = m.out_dir / "run_report.json";
  if (!fs::exists(report_path)) return "no recorded run in " + m.out_dir.string() + "\n";
  json j = json::parse(read_text_file(report_path));
  std::string out;
  for (const auto& s : j.at("stages")) {
    const auto name = s.at("name").get<std::string>();
    if (s.contains("skipped") && s.at("skipped").get<bool>()) {
      out += name + ": skipped\n";
      continue;
    }
    out += name + " [" + s.at("key").get<std::string>() + "]";
    bool all = true;
    for (const auto& o : s.at("outputs"))
      if (!fs::exists(m.out_dir / o.get<std::string>())) all = false;
    out += all ? " outputs present\n" : " outputs missing\n";
  }
  return out;
}

}  // namespace emodiff
