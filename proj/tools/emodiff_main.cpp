#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "emodiff/cascade.hpp"
#include "emodiff/embedding.hpp"
#include "emodiff/errors.hpp"
#include "emodiff/lexicon.hpp"
#include "emodiff/pipeline.hpp"
#include "emodiff/scorer.hpp"
#include "emodiff/stats.hpp"
#include "emodiff/synth.hpp"
#include "emodiff/text_table.hpp"
#include "emodiff/topics.hpp"

namespace fs = std::filesystem;
using namespace emodiff;

namespace {

std::vector<std::string> comma_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& item : split(s, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void write_scores(const EmotionMatrix& m, const std::vector<Document>& docs,
                  const fs::path& path) {
  bool with_article = false;
  for (const auto& d : docs)
    if (!d.article_id.empty()) with_article = true;
  std::vector<std::string> cols{"doc_id"};
  if (with_article) cols.emplace_back("article_id");
  for (auto name : kEmotionNames) cols.emplace_back(name);
  TextTable t(cols);
  for (std::size_t r = 0; r < m.doc_ids.size(); ++r) {
    std::vector<std::string> row{m.doc_ids[r]};
    if (with_article) row.push_back(docs[r].article_id);
    for (std::size_t k = 0; k < kNumEmotions; ++k)
      row.push_back(format_sig6(
          m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k))));
    t.add_row(std::move(row));
  }
  t.write_file(path);
}

void write_fit(const FitResult& fit, const fs::path& path) {
  TextTable t({"term", "estimate", "std_error", "z_value", "p_value"});
  for (Eigen::Index i = 0; i < fit.coef.size(); ++i)
    t.add_row({fit.names[static_cast<std::size_t>(i)], format_sig6(fit.coef[i]),
               format_sig6(fit.se[i]),
               format_sig6(fit.se[i] > 0.0 ? fit.coef[i] / fit.se[i] : 0.0),
               format_sig6(wald_p(fit.coef[i], fit.se[i]))});
  for (const auto& name : fit.absorbed) t.add_row({name, "NA", "NA", "NA", "NA"});
  auto scalar = [&](const char* name, double v) {
    t.add_row({name, format_sig6(v), "NA", "NA", "NA"});
  };
  if (fit.method != FitMethod::FE) {
    scalar("sigma_mu", fit.sigma_mu);
    scalar("lambda", fit.lambda);
  }
  for (std::size_t i = 0; i < fit.re_names.size(); ++i)
    t.add_row({"re_sd:" + fit.re_names[i], format_sig6(fit.re_sd[static_cast<Eigen::Index>(i)]),
               "NA", "NA", "NA"});
  scalar("sigma_eps", fit.sigma_eps);
  scalar("loglik", fit.loglik);
  scalar("n_obs", static_cast<double>(fit.n_obs));
  scalar("n_groups", static_cast<double>(fit.n_groups));
  t.write_file(path);
}

DesignMatrix table_design(const fs::path& table, const std::string& outcome,
                          const std::string& x, const std::string& z,
                          const std::string& group) {
  TextTable t = TextTable::read_file(table);
  DesignMatrix d;
  const auto n = static_cast<Eigen::Index>(t.n_rows());
  d.x_names = comma_list(x);
  d.z_names = comma_list(z);
  d.y.resize(n);
  d.X.resize(n, static_cast<Eigen::Index>(d.x_names.size()));
  d.Z_pub.resize(n, static_cast<Eigen::Index>(d.z_names.size()));
  const std::size_t yc = t.column_index(outcome);
  const std::size_t gc = t.column_index(group);
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    d.y[i] = t.numeric(r, yc).value_or(kNaN);
    d.group.push_back(t.cell(r, gc));
    for (std::size_t j = 0; j < d.x_names.size(); ++j)
      d.X(i, static_cast<Eigen::Index>(j)) = t.numeric(r, d.x_names[j]).value_or(kNaN);
    for (std::size_t j = 0; j < d.z_names.size(); ++j)
      d.Z_pub(i, static_cast<Eigen::Index>(j)) = t.numeric(r, d.z_names[j]).value_or(kNaN);
  }
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emotion-aware diffusion analysis toolkit"};
  app.require_subcommand(1);

  // lexicon
  auto* lexicon_cmd = app.add_subcommand("lexicon", "lexicon expansion and validation");
  lexicon_cmd->require_subcommand(1);
  struct {
    std::string embeddings, lexicon, out, log;
    ExpansionParams params;
    double fraction = 0.1;
    std::uint64_t seed = 1;
  } lex;
  auto add_expansion_options = [&](CLI::App* cmd) {
    cmd->add_option("--mining-neighbors", lex.params.mining_neighbors);
    cmd->add_option("--class-neighbors", lex.params.class_neighbors);
    cmd->add_option("--intensity-neighbors", lex.params.intensity_neighbors);
    cmd->add_option("--alpha", lex.params.alpha);
    cmd->add_option("--max-iterations", lex.params.max_iterations);
  };
  auto* lex_expand = lexicon_cmd->add_subcommand("expand", "grow a lexicon from seed words");
  lex_expand->add_option("--embeddings", lex.embeddings)->required();
  lex_expand->add_option("--basic", lex.lexicon)->required();
  lex_expand->add_option("--out", lex.out)->required();
  lex_expand->add_option("--log", lex.log);
  add_expansion_options(lex_expand);
  lex_expand->callback([&] {
    EmbeddingStore store = EmbeddingStore::load(lex.embeddings);
    Lexicon basic = Lexicon::load(lex.lexicon);
    ExpansionResult res = expand_lexicon(store, basic, lex.params);
    res.lexicon.save(lex.out);
    if (!lex.log.empty()) {
      TextTable t({"iteration", "candidates", "added"});
      for (const auto& it : res.iterations)
        t.add_row({format_int(it.iteration), format_int(it.candidates), format_int(it.added)});
      t.write_file(lex.log);
    }
    std::cout << "entries " << res.lexicon.size() << " iterations " << res.iterations.size()
              << (res.hit_iteration_cap ? " (iteration cap hit)" : "") << "\n";
  });
  auto* lex_validate = lexicon_cmd->add_subcommand("validate", "holdout re-estimation error");
  lex_validate->add_option("--embeddings", lex.embeddings)->required();
  lex_validate->add_option("--lexicon", lex.lexicon)->required();
  lex_validate->add_option("--fraction", lex.fraction);
  lex_validate->add_option("--seed", lex.seed);
  add_expansion_options(lex_validate);
  lex_validate->callback([&] {
    EmbeddingStore store = EmbeddingStore::load(lex.embeddings);
    Lexicon lexicon = Lexicon::load(lex.lexicon);
    HoldoutReport r = validate_holdout(store, lexicon, lex.fraction, lex.seed, lex.params);
    std::cout << "mae " << format_sig6(r.mae) << " holdout " << r.holdout_size << " evaluated "
              << r.evaluated << "\n";
  });

  // score
  struct {
    std::string lexicon, documents, negations, degrees;
    std::string out_raw, out_z, out_degree, out_correlations;
    int window = 3;
  } sc;
  auto* score_cmd = app.add_subcommand("score", "per-document emotion scores");
  score_cmd->add_option("--lexicon", sc.lexicon)->required();
  score_cmd->add_option("--documents", sc.documents)->required();
  score_cmd->add_option("--negations", sc.negations)->required();
  score_cmd->add_option("--degrees", sc.degrees)->required();
  score_cmd->add_option("--out-raw", sc.out_raw)->required();
  score_cmd->add_option("--out-z", sc.out_z);
  score_cmd->add_option("--out-degree", sc.out_degree);
  score_cmd->add_option("--out-correlations", sc.out_correlations);
  score_cmd->add_option("--window", sc.window);
  score_cmd->callback([&] {
    Lexicon lexicon = Lexicon::load(sc.lexicon);
    ModifierDictionaries mods = ModifierDictionaries::load(sc.negations, sc.degrees);
    auto conflicts = modifier_lexicon_conflicts(lexicon, mods);
    if (!conflicts.empty())
      std::cerr << "warning: " << conflicts.size()
                << " words are both lexicon entries and modifiers, first '" << conflicts.front()
                << "'\n";
    std::vector<Document> docs = load_documents(sc.documents);
    EmotionMatrix raw = score_corpus(docs, lexicon, mods, sc.window);
    write_scores(raw, docs, sc.out_raw);
    if (!sc.out_z.empty()) write_scores(standardize(raw), docs, sc.out_z);
    if (!sc.out_degree.empty()) {
      std::vector<double> deg = degree_of_emotion(raw);
      TextTable t({"doc_id", "degree_of_emotion"});
      for (std::size_t i = 0; i < deg.size(); ++i)
        t.add_row({raw.doc_ids[i], format_sig6(deg[i])});
      t.write_file(sc.out_degree);
    }
    if (!sc.out_correlations.empty()) {
      Eigen::MatrixXd R = correlation_matrix(raw);
      std::vector<std::string> cols{"emotion"};
      for (auto name : kEmotionNames) cols.emplace_back(name);
      TextTable t(cols);
      for (std::size_t i = 0; i < kNumEmotions; ++i) {
        std::vector<std::string> row{std::string(kEmotionNames[i])};
        for (std::size_t k = 0; k < kNumEmotions; ++k)
          row.push_back(format_sig6(R(static_cast<Eigen::Index>(i),
                                      static_cast<Eigen::Index>(k))));
        t.add_row(std::move(row));
      }
      t.write_file(sc.out_correlations);
    }
  });

  // cascade
  auto* cascade_cmd = app.add_subcommand("cascade", "share cascade metrics");
  cascade_cmd->require_subcommand(1);
  struct {
    std::string events, publish_times, profiles, friendships, out;
    std::string metrics, column;
  } ca;
  auto* cascade_metrics = cascade_cmd->add_subcommand("metrics", "per-article cascade metrics");
  cascade_metrics->add_option("--events", ca.events)->required();
  cascade_metrics->add_option("--publish-times", ca.publish_times)->required();
  cascade_metrics->add_option("--profiles", ca.profiles);
  cascade_metrics->add_option("--friendships", ca.friendships);
  cascade_metrics->add_option("--out", ca.out)->required();
  cascade_metrics->callback([&] {
    auto by_article = group_events_by_article(load_events(ca.events));
    std::unordered_map<std::string, UserProfile> profiles;
    if (!ca.profiles.empty()) profiles = load_profiles(ca.profiles);
    FriendshipStore friends;
    if (!ca.friendships.empty()) friends = FriendshipStore::load(ca.friendships);
    TextTable times = TextTable::read_file(ca.publish_times);
    const std::size_t id_col = times.column_index("article_id");
    const std::size_t time_col = times.column_index("publish_time");
    TextTable t({"article_id", "size", "node_count", "depth", "max_breadth",
                 "structural_virality", "time_per_level", "weak_tie_proportion",
                 "seed_clusterness", "avg_age", "avg_friend_count", "female_share",
                 "profiled_sharers", "duplicate_shares"});
    auto opt6 = [](const std::optional<double>& v) {
      return v ? format_sig6(*v) : std::string("NA");
    };
    for (std::size_t r = 0; r < times.n_rows(); ++r) {
      const std::string article = times.cell(r, id_col);
      auto it = by_article.find(article);
      if (it == by_article.end()) continue;
      auto v = times.numeric(r, time_col);
      if (!v) throw InvalidInput("missing publish time for article '" + article + "'");
      BuildStats stats;
      CascadeTree tree = build_cascade(it->second, *v, &stats);
      CascadeMetrics mm = compute_metrics(tree, ca.profiles.empty() ? nullptr : &profiles,
                                          ca.friendships.empty() ? nullptr : &friends);
      t.add_row({article, format_int(mm.size), format_int(mm.node_count), format_int(mm.depth),
                 format_int(mm.max_breadth), format_sig6(mm.structural_virality),
                 format_sig6(mm.time_per_level), opt6(mm.weak_tie_proportion),
                 opt6(mm.seed_clusterness), opt6(mm.avg_age), opt6(mm.avg_friend_count),
                 opt6(mm.female_share), format_int(mm.profiled_sharers),
                 format_int(stats.duplicate_shares)});
    }
    t.write_file(ca.out);
    std::cout << "cascades " << t.n_rows() << "\n";
  });
  auto* cascade_ccdf = cascade_cmd->add_subcommand("ccdf", "ccdf of one metrics column");
  cascade_ccdf->add_option("--metrics", ca.metrics)->required();
  cascade_ccdf->add_option("--column", ca.column)->required();
  cascade_ccdf->add_option("--out", ca.out)->required();
  cascade_ccdf->callback([&] {
    TextTable t = TextTable::read_file(ca.metrics);
    const std::size_t c = t.column_index(ca.column);
    std::vector<double> values;
    for (std::size_t r = 0; r < t.n_rows(); ++r)
      if (auto v = t.numeric(r, c)) values.push_back(*v);
    TextTable out({"value", "fraction_at_least"});
    for (const auto& [v, f] : ccdf(values)) out.add_row({format_sig6(v), format_sig6(f)});
    out.write_file(ca.out);
  });

  // topics
  auto* topics_cmd = app.add_subcommand("topics", "latent topic modeling");
  topics_cmd->require_subcommand(1);
  struct {
    std::string documents, lexicon, model_dir, out, shares;
    std::vector<int> ks;
    int k = 10;
    int iterations = 800;
    std::uint64_t seed = 1;
    double min_doc_freq = 0.001;
  } tp;
  auto load_corpus = [&]() {
    Lexicon lexicon = tp.lexicon.empty() ? Lexicon() : Lexicon::load(tp.lexicon);
    std::vector<Document> docs = load_documents(tp.documents);
    std::vector<std::vector<std::string>> tokens;
    for (const auto& d : docs) tokens.push_back(d.tokens);
    return std::pair{preprocess(tokens, lexicon, tp.min_doc_freq), docs};
  };
  auto* topics_fit = topics_cmd->add_subcommand("fit", "fit one topic model");
  topics_fit->add_option("--documents", tp.documents)->required();
  topics_fit->add_option("--lexicon", tp.lexicon);
  topics_fit->add_option("--k", tp.k)->required();
  topics_fit->add_option("--iterations", tp.iterations);
  topics_fit->add_option("--seed", tp.seed);
  topics_fit->add_option("--min-doc-freq", tp.min_doc_freq);
  topics_fit->add_option("--model-dir", tp.model_dir)->required();
  topics_fit->add_option("--shares", tp.shares);
  topics_fit->callback([&] {
    auto [corpus, docs] = load_corpus();
    TopicModel model = fit_lda(corpus, tp.k, tp.iterations, tp.seed);
    fs::remove_all(tp.model_dir);
    model.save(tp.model_dir);
    if (!tp.shares.empty()) {
      std::vector<std::string> cols{"doc_id"};
      for (int k = 0; k < model.K; ++k) cols.push_back("topic_" + std::to_string(k));
      TextTable t(cols);
      for (std::size_t d = 0; d < docs.size(); ++d) {
        Eigen::VectorXd theta = model.training_doc_topics(d);
        std::vector<std::string> row{docs[d].id};
        for (Eigen::Index i = 0; i < theta.size(); ++i) row.push_back(format_sig6(theta[i]));
        t.add_row(std::move(row));
      }
      t.write_file(tp.shares);
    }
    std::cout << "k " << model.K << " vocabulary " << model.vocab.size() << "\n";
  });
  auto* topics_select = topics_cmd->add_subcommand("select", "choose K by held-out perplexity");
  topics_select->add_option("--documents", tp.documents)->required();
  topics_select->add_option("--lexicon", tp.lexicon);
  topics_select->add_option("--ks", tp.ks)->required()->delimiter(',');
  topics_select->add_option("--iterations", tp.iterations);
  topics_select->add_option("--seed", tp.seed);
  topics_select->add_option("--min-doc-freq", tp.min_doc_freq);
  topics_select->add_option("--out", tp.out);
  topics_select->callback([&] {
    auto [corpus, docs] = load_corpus();
    KSelection sel = select_k(corpus, tp.ks, tp.seed, tp.iterations);
    if (!tp.out.empty()) {
      TextTable t({"k", "validation_perplexity", "chosen"});
      for (const auto& [k, px] : sel.curve)
        t.add_row({format_int(k), format_sig6(px), k == sel.best_k ? "1" : "0"});
      t.write_file(tp.out);
    }
    std::cout << "best_k " << sel.best_k << "\n";
  });
  auto* topics_infer = topics_cmd->add_subcommand("infer", "topic shares for new documents");
  topics_infer->add_option("--model-dir", tp.model_dir)->required();
  topics_infer->add_option("--documents", tp.documents)->required();
  topics_infer->add_option("--out", tp.out)->required();
  topics_infer->callback([&] {
    TopicModel model = TopicModel::load(tp.model_dir);
    std::vector<Document> docs = load_documents(tp.documents);
    std::vector<std::string> cols{"doc_id"};
    for (int k = 0; k < model.K; ++k) cols.push_back("topic_" + std::to_string(k));
    TextTable t(cols);
    for (const auto& d : docs) {
      Eigen::VectorXd theta = doc_topics(model, d.tokens);
      std::vector<std::string> row{d.id};
      for (Eigen::Index i = 0; i < theta.size(); ++i) row.push_back(format_sig6(theta[i]));
      t.add_row(std::move(row));
    }
    t.write_file(tp.out);
  });

  // regress
  struct {
    std::string table, outcome, x, z, group = "publisher_id", method = "REML";
    std::string slopes, out, save_fit;
    double fixed_lambda = -1.0;
    double profile_lambda = -1.0;
    int em_max_iterations = 2000;
    double em_tol = 1e-6;
  } rg;
  auto* regress_cmd = app.add_subcommand("regress", "grouped regressions");
  regress_cmd->add_option("--table", rg.table)->required();
  regress_cmd->add_option("--outcome", rg.outcome)->required();
  regress_cmd->add_option("--x", rg.x)->required();
  regress_cmd->add_option("--z", rg.z);
  regress_cmd->add_option("--group", rg.group);
  regress_cmd->add_option("--method", rg.method)->check(CLI::IsMember({"ML", "REML", "FE"}));
  regress_cmd->add_option("--slopes", rg.slopes);
  regress_cmd->add_option("--fixed-lambda", rg.fixed_lambda);
  regress_cmd->add_option("--profile-lambda", rg.profile_lambda);
  regress_cmd->add_option("--em-max-iterations", rg.em_max_iterations);
  regress_cmd->add_option("--em-tol", rg.em_tol);
  regress_cmd->add_option("--out", rg.out);
  regress_cmd->add_option("--save-fit", rg.save_fit);
  regress_cmd->callback([&] {
    DesignMatrix d = table_design(rg.table, rg.outcome, rg.x, rg.z, rg.group);
    const FitMethod method = rg.method == "ML"   ? FitMethod::ML
                             : rg.method == "FE" ? FitMethod::FE
                                                 : FitMethod::REML;
    if (rg.profile_lambda >= 0.0) {
      if (method == FitMethod::FE)
        throw InvalidInput("profiling needs a random-intercept method");
      std::cout << "loglik " << format_sig6(profile_loglik(d, method, rg.profile_lambda))
                << " score " << format_sig6(profile_score(d, method, rg.profile_lambda))
                << "\n";
      return;
    }
    FitResult fit;
    if (!rg.slopes.empty()) {
      fit = fit_random_slopes(d, comma_list(rg.slopes), rg.em_max_iterations, rg.em_tol);
    } else if (method == FitMethod::FE) {
      fit = fit_fixed_effects(d);
    } else {
      RandomInterceptOptions opt;
      opt.method = method;
      if (rg.fixed_lambda >= 0.0) opt.fixed_lambda = rg.fixed_lambda;
      fit = fit_random_intercept(d, opt);
    }
    if (!rg.out.empty()) write_fit(fit, rg.out);
    if (!rg.save_fit.empty()) fit.save(rg.save_fit);
    std::cout << "loglik " << format_sig6(fit.loglik) << " groups " << fit.n_groups << "\n";
  });

  // hausman
  struct {
    std::string fe, re;
  } hm;
  auto* hausman_cmd = app.add_subcommand("hausman", "fixed-versus-random specification test");
  hausman_cmd->add_option("--fe", hm.fe)->required();
  hausman_cmd->add_option("--re", hm.re)->required();
  hausman_cmd->callback([&] {
    HausmanResult h = hausman_test(FitResult::load(hm.fe), FitResult::load(hm.re));
    std::cout << "statistic " << format_sig6(h.statistic) << " dof " << h.dof << " p "
              << format_sig6(h.p_value) << "\n";
  });

  // mediate
  struct {
    std::string table, outcome = "log1p_size", mediator, emotions, x, z;
    std::string group = "publisher_id", method = "REML", out;
  } md;
  auto* mediate_cmd = app.add_subcommand("mediate", "three-step mediation analysis");
  mediate_cmd->add_option("--table", md.table)->required();
  mediate_cmd->add_option("--outcome", md.outcome);
  mediate_cmd->add_option("--mediator", md.mediator)->required();
  mediate_cmd->add_option("--emotions", md.emotions)->required();
  mediate_cmd->add_option("--x", md.x)->required();
  mediate_cmd->add_option("--z", md.z);
  mediate_cmd->add_option("--group", md.group);
  mediate_cmd->add_option("--method", md.method)->check(CLI::IsMember({"ML", "REML"}));
  mediate_cmd->add_option("--out", md.out)->required();
  mediate_cmd->callback([&] {
    std::string x = md.x;
    auto xs = comma_list(x);
    if (std::find(xs.begin(), xs.end(), md.mediator) == xs.end()) x += "," + md.mediator;
    DesignMatrix d = table_design(md.table, md.outcome, x, md.z, md.group);
    RandomInterceptOptions opt;
    opt.method = md.method == "ML" ? FitMethod::ML : FitMethod::REML;
    MediationReport report = mediation_analysis(d, md.mediator, comma_list(md.emotions), opt);
    TextTable t({"emotion", "path_a", "path_a_p", "total", "total_p", "direct", "direct_p",
                 "mediator_coef", "mediator_p", "classification", "identity_gap",
                 "dropped_rows"});
    for (const auto& e : report.entries)
      t.add_row({e.emotion, format_sig6(e.path_a), format_sig6(e.path_a_p),
                 format_sig6(e.total), format_sig6(e.total_p), format_sig6(e.direct),
                 format_sig6(e.direct_p), format_sig6(e.mediator_coef),
                 format_sig6(e.mediator_p), std::string(mediation_class_name(e.classification)),
                 format_sig6(e.identity_gap), format_int(report.dropped_rows)});
    t.write_file(md.out);
  });

  // ttest
  struct {
    std::string table, value, by;
  } tt;
  auto* ttest_cmd = app.add_subcommand("ttest", "Welch two-sample comparison");
  ttest_cmd->add_option("--table", tt.table)->required();
  ttest_cmd->add_option("--value", tt.value)->required();
  ttest_cmd->add_option("--by", tt.by)->required();
  ttest_cmd->callback([&] {
    TextTable t = TextTable::read_file(tt.table);
    const std::size_t vc = t.column_index(tt.value);
    const std::size_t bc = t.column_index(tt.by);
    std::map<std::string, std::vector<double>> groups;
    for (std::size_t r = 0; r < t.n_rows(); ++r)
      if (auto v = t.numeric(r, vc)) groups[t.cell(r, bc)].push_back(*v);
    if (groups.size() != 2)
      throw InvalidInput("ttest: grouping column must have exactly 2 levels, found " +
                         std::to_string(groups.size()));
    auto it = groups.begin();
    const auto& [name_a, a] = *it;
    const auto& [name_b, b] = *std::next(it);
    TTestResult r = welch_t_test(a, b);
    std::cout << name_a << " vs " << name_b << ": t " << format_sig6(r.t) << " dof "
              << format_sig6(r.dof) << " p " << format_sig6(r.p) << "\n";
  });

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "ground-truth synthetic data");
  synth_cmd->require_subcommand(1);
  struct {
    std::string config, out_dir;
  } sy;
  auto* synth_all_cmd = synth_cmd->add_subcommand("all", "generate a full dataset");
  synth_all_cmd->add_option("--config", sy.config)->required();
  synth_all_cmd->add_option("--out-dir", sy.out_dir)->required();
  synth_all_cmd->callback([&] {
    synth_all(SynthConfig::load(sy.config), sy.out_dir);
    std::cout << "wrote " << sy.out_dir << "\n";
  });

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "end-to-end orchestration");
  pipeline_cmd->require_subcommand(1);
  struct {
    std::string manifest;
  } pl;
  auto* pipeline_run = pipeline_cmd->add_subcommand("run", "run every stage");
  pipeline_run->add_option("--manifest", pl.manifest)->required();
  pipeline_run->callback([&] {
    PipelineManifest manifest = PipelineManifest::load(pl.manifest);
    RunReport report = run_pipeline(manifest);
    for (const auto& s : report.stages)
      std::cout << s.name << (s.skipped ? ": skipped" : s.cached ? ": cached" : ": ran") << "\n";
  });
  auto* pipeline_stat = pipeline_cmd->add_subcommand("status", "inspect the last run");
  pipeline_stat->add_option("--manifest", pl.manifest)->required();
  pipeline_stat->callback([&] {
    std::cout << pipeline_status(PipelineManifest::load(pl.manifest));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
