#include "emodiff/topics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emodiff/errors.hpp"
#include "emodiff/rng.hpp"
#include "emodiff/text_table.hpp"

namespace emodiff {

namespace {

using nlohmann::json;

// Uniform double in [0, 1) straight from the generator's bits, so sampling
// does not depend on library distribution internals.
double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int sample_categorical(const std::vector<double>& cumulative, double total, Rng& rng) {
  double u = uniform01(rng) * total;
  for (std::size_t k = 0; k < cumulative.size(); ++k)
    if (u < cumulative[k]) return static_cast<int>(k);
  return static_cast<int>(cumulative.size()) - 1;
}

std::vector<int> map_tokens(const TopicModel& model, const std::vector<std::string>& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto it = model.vocab_index.find(t);
    if (it != model.vocab_index.end()) ids.push_back(it->second);
  }
  return ids;
}

// Gibbs fold-in against fixed phi; returns smoothed theta.
Eigen::VectorXd fold_theta(const TopicModel& model, const std::vector<int>& ids,
                           std::uint64_t seed, int sweeps) {
  const int K = model.K;
  Eigen::VectorXd theta(K);
  if (ids.empty()) {
    theta.setConstant(1.0 / static_cast<double>(K));
    return theta;
  }
  Rng rng = make_rng(seed);
  std::vector<int> z(ids.size());
  std::vector<std::int64_t> n_k(static_cast<std::size_t>(K), 0);
  std::vector<double> cum(static_cast<std::size_t>(K));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    int k = static_cast<int>(uniform01(rng) * K);
    if (k >= K) k = K - 1;
    z[i] = k;
    ++n_k[static_cast<std::size_t>(k)];
  }
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      --n_k[static_cast<std::size_t>(z[i])];
      double total = 0.0;
      for (int k = 0; k < K; ++k) {
        double p = (static_cast<double>(n_k[static_cast<std::size_t>(k)]) + model.alpha) *
                   model.phi(k, ids[i]);
        total += p;
        cum[static_cast<std::size_t>(k)] = total;
      }
      z[i] = sample_categorical(cum, total, rng);
      ++n_k[static_cast<std::size_t>(z[i])];
    }
  }
  const double denom = static_cast<double>(ids.size()) + static_cast<double>(K) * model.alpha;
  for (int k = 0; k < K; ++k)
    theta[k] = (static_cast<double>(n_k[static_cast<std::size_t>(k)]) + model.alpha) / denom;
  return theta;
}

constexpr int kFoldSweeps = 100;

std::uint64_t ids_digest(const std::vector<int>& ids) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int id : ids) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(id));
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::int64_t Corpus::total_tokens() const {
  std::int64_t n = 0;
  for (const auto& d : docs) n += static_cast<std::int64_t>(d.size());
  return n;
}

Corpus Corpus::subset(const std::vector<std::size_t>& doc_indices) const {
  Corpus out;
  out.vocab = vocab;
  out.vocab_index = vocab_index;
  out.doc_freq = doc_freq;
  out.docs.reserve(doc_indices.size());
  out.empty_flags.reserve(doc_indices.size());
  for (std::size_t i : doc_indices) {
    out.docs.push_back(docs.at(i));
    out.empty_flags.push_back(empty_flags.at(i));
  }
  return out;
}

Corpus preprocess(const std::vector<std::vector<std::string>>& documents, const Lexicon& lexicon,
                  double min_doc_freq) {
  if (min_doc_freq < 0.0 || min_doc_freq > 1.0)
    throw InvalidInput("min_doc_freq must lie in [0, 1]");
  const double n_docs = static_cast<double>(documents.size());

  // Document frequency over non-emotion tokens.
  std::unordered_map<std::string, std::int64_t> freq;
  for (const auto& doc : documents) {
    std::unordered_map<std::string, bool> seen;
    for (const auto& tok : doc) {
      if (lexicon.contains(tok)) continue;
      if (seen.emplace(tok, true).second) ++freq[tok];
    }
  }

  Corpus corpus;
  for (const auto& doc : documents) {
    std::vector<int> ids;
    for (const auto& tok : doc) {
      if (lexicon.contains(tok)) continue;
      auto f = freq.find(tok);
      if (f == freq.end() || static_cast<double>(f->second) < min_doc_freq * n_docs) continue;
      auto it = corpus.vocab_index.find(tok);
      int id;
      if (it == corpus.vocab_index.end()) {
        id = static_cast<int>(corpus.vocab.size());
        corpus.vocab_index.emplace(tok, id);
        corpus.vocab.push_back(tok);
        corpus.doc_freq.push_back(f->second);
      } else {
        id = it->second;
      }
      ids.push_back(id);
    }
    corpus.empty_flags.push_back(ids.empty() ? 1 : 0);
    corpus.docs.push_back(std::move(ids));
  }
  if (corpus.vocab.empty())
    throw InvalidInput("preprocessing removed every token; no vocabulary left");
  return corpus;
}

Eigen::VectorXd TopicModel::training_doc_topics(std::size_t d) const {
  const auto& counts = doc_topic_counts.at(d);
  Eigen::VectorXd theta(K);
  std::int64_t n = 0;
  for (std::int64_t c : counts) n += c;
  const double denom = static_cast<double>(n) + static_cast<double>(K) * alpha;
  for (int k = 0; k < K; ++k)
    theta[k] = (static_cast<double>(counts[static_cast<std::size_t>(k)]) + alpha) / denom;
  return theta;
}

TopicModel fit_lda(const Corpus& corpus, int K, int iterations, std::uint64_t seed,
                   double alpha, double beta) {
  if (K < 1) throw InvalidInput("fit_lda: K must be >= 1");
  if (iterations < 1) throw InvalidInput("fit_lda: iterations must be >= 1");
  if (!(beta > 0.0)) throw InvalidInput("fit_lda: beta must be positive");
  const std::int64_t total = corpus.total_tokens();
  if (static_cast<std::int64_t>(K) > total)
    throw InvalidInput("fit_lda: K exceeds the total token count");
  if (alpha < 0.0) alpha = 50.0 / static_cast<double>(K);
  if (!(alpha > 0.0)) throw InvalidInput("fit_lda: alpha must be positive");

  const int V = static_cast<int>(corpus.vocab.size());
  const std::size_t D = corpus.docs.size();

  TopicModel model;
  model.K = K;
  model.alpha = alpha;
  model.beta = beta;
  model.seed = seed;
  model.vocab = corpus.vocab;
  model.vocab_index = corpus.vocab_index;

  std::vector<std::vector<std::int64_t>> n_dk(D, std::vector<std::int64_t>(static_cast<std::size_t>(K), 0));
  std::vector<std::vector<std::int64_t>> n_kw(static_cast<std::size_t>(K),
                                              std::vector<std::int64_t>(static_cast<std::size_t>(V), 0));
  std::vector<std::int64_t> n_k(static_cast<std::size_t>(K), 0);
  model.assignments.resize(D);

  Rng rng = make_rng(seed);
  for (std::size_t d = 0; d < D; ++d) {
    model.assignments[d].resize(corpus.docs[d].size());
    for (std::size_t i = 0; i < corpus.docs[d].size(); ++i) {
      int k = static_cast<int>(uniform01(rng) * K);
      if (k >= K) k = K - 1;
      model.assignments[d][i] = k;
      ++n_dk[d][static_cast<std::size_t>(k)];
      ++n_kw[static_cast<std::size_t>(k)][static_cast<std::size_t>(corpus.docs[d][i])];
      ++n_k[static_cast<std::size_t>(k)];
    }
  }

  const double v_beta = static_cast<double>(V) * beta;
  std::vector<double> cum(static_cast<std::size_t>(K));
  for (int sweep = 0; sweep < iterations; ++sweep) {
    for (std::size_t d = 0; d < D; ++d) {
      auto& doc = corpus.docs[d];
      auto& zs = model.assignments[d];
      for (std::size_t i = 0; i < doc.size(); ++i) {
        const int w = doc[i];
        const int old = zs[i];
        --n_dk[d][static_cast<std::size_t>(old)];
        --n_kw[static_cast<std::size_t>(old)][static_cast<std::size_t>(w)];
        --n_k[static_cast<std::size_t>(old)];
        double totalp = 0.0;
        for (int k = 0; k < K; ++k) {
          const auto ku = static_cast<std::size_t>(k);
          double p = (static_cast<double>(n_dk[d][ku]) + alpha) *
                     (static_cast<double>(n_kw[ku][static_cast<std::size_t>(w)]) + beta) /
                     (static_cast<double>(n_k[ku]) + v_beta);
          totalp += p;
          cum[ku] = totalp;
        }
        const int next = sample_categorical(cum, totalp, rng);
        zs[i] = next;
        ++n_dk[d][static_cast<std::size_t>(next)];
        ++n_kw[static_cast<std::size_t>(next)][static_cast<std::size_t>(w)];
        ++n_k[static_cast<std::size_t>(next)];
      }
    }
  }

  model.phi.resize(K, V);
  for (int k = 0; k < K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double denom = static_cast<double>(n_k[ku]) + v_beta;
    for (int w = 0; w < V; ++w)
      model.phi(k, w) = (static_cast<double>(n_kw[ku][static_cast<std::size_t>(w)]) + beta) / denom;
  }
  model.doc_topic_counts = std::move(n_dk);
  return model;
}

double perplexity(const TopicModel& model, const Corpus& heldout) {
  double ll = 0.0;
  std::int64_t scored = 0;
  for (std::size_t d = 0; d < heldout.docs.size(); ++d) {
    std::vector<int> ids;
    ids.reserve(heldout.docs[d].size());
    for (int id : heldout.docs[d]) {
      auto it = model.vocab_index.find(heldout.vocab.at(static_cast<std::size_t>(id)));
      if (it != model.vocab_index.end()) ids.push_back(it->second);
    }
    std::vector<int> fold, eval;
    for (std::size_t i = 0; i < ids.size(); ++i)
      (i % 2 == 0 ? fold : eval).push_back(ids[i]);
    if (eval.empty()) continue;
    Eigen::VectorXd theta =
        fold_theta(model, fold, derive_seed(model.seed, "perplexity:" + std::to_string(d)),
                   kFoldSweeps);
    for (int w : eval) {
      double p = theta.dot(model.phi.col(w));
      ll += std::log(p);
      ++scored;
    }
  }
  if (scored == 0)
    throw InvalidInput("perplexity: held-out corpus has no scorable tokens");
  return std::exp(-ll / static_cast<double>(scored));
}

KSelection select_k(const Corpus& corpus, const std::vector<int>& ks, std::uint64_t seed,
                    int iterations, double train_fraction) {
  if (ks.empty()) throw InvalidInput("select_k: candidate list is empty");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidInput("select_k: train_fraction must lie in (0, 1)");
  const std::size_t n = corpus.docs.size();
  if (n < 2) throw InvalidInput("select_k: need at least 2 documents");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = make_rng(derive_seed(seed, "select_k:split"));
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(n));
  n_train = std::min(std::max<std::size_t>(n_train, 1), n - 1);

  Corpus train = corpus.subset({order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train)});
  Corpus val = corpus.subset({order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end()});

  KSelection sel;
  double best = std::numeric_limits<double>::infinity();
  for (int k : ks) {
    TopicModel m = fit_lda(train, k, iterations, derive_seed(seed, "select_k:" + std::to_string(k)));
    double p = perplexity(m, val);
    sel.curve.emplace_back(k, p);
    if (p < best || (p == best && k < sel.best_k)) {
      best = p;
      sel.best_k = k;
    }
  }
  return sel;
}

Eigen::VectorXd doc_topics(const TopicModel& model, const std::vector<std::string>& tokens) {
  if (model.K < 1) throw InvalidInput("doc_topics: model is not fitted");
  std::vector<int> ids = map_tokens(model, tokens);
  return fold_theta(model, ids, derive_seed(model.seed, derive_seed(0xd0c70b1c5ULL, ids_digest(ids))),
                    kFoldSweeps);
}

void TopicModel::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  json meta{{"k", K}, {"alpha", alpha}, {"beta", beta}, {"seed", seed}};
  write_text_file(dir / "meta.json", meta.dump(2) + "\n");

  std::string vocab_out;
  for (const auto& w : vocab) {
    vocab_out += w;
    vocab_out += '\n';
  }
  write_text_file(dir / "vocab.txt", vocab_out);

  std::string phi_out;
  for (int k = 0; k < K; ++k) {
    for (Eigen::Index w = 0; w < phi.cols(); ++w) {
      if (w) phi_out += '\t';
      phi_out += format_exact(phi(k, w));
    }
    phi_out += '\n';
  }
  write_text_file(dir / "phi.tsv", phi_out);

  std::string assign_out;
  for (const auto& doc : assignments) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (i) assign_out += ' ';
      assign_out += std::to_string(doc[i]);
    }
    assign_out += '\n';
  }
  write_text_file(dir / "assignments.txt", assign_out);
}

TopicModel TopicModel::load(const std::filesystem::path& dir) {
  TopicModel model;
  json meta = json::parse(read_text_file(dir / "meta.json"));
  model.K = meta.at("k").get<int>();
  model.alpha = meta.at("alpha").get<double>();
  model.beta = meta.at("beta").get<double>();
  model.seed = meta.at("seed").get<std::uint64_t>();

  {
    std::istringstream in(read_text_file(dir / "vocab.txt"));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      model.vocab_index.emplace(line, static_cast<int>(model.vocab.size()));
      model.vocab.push_back(line);
    }
  }

  const int V = static_cast<int>(model.vocab.size());
  model.phi.resize(model.K, V);
  {
    std::istringstream in(read_text_file(dir / "phi.tsv"));
    std::string line;
    int k = 0;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (k >= model.K) throw InvalidInput("phi.tsv has more rows than topics");
      auto cells = split(line, '\t');
      if (static_cast<int>(cells.size()) != V)
        throw InvalidInput("phi.tsv row width does not match vocabulary");
      for (int w = 0; w < V; ++w) model.phi(k, w) = parse_double(cells[static_cast<std::size_t>(w)], "phi");
      ++k;
    }
    if (k != model.K) throw InvalidInput("phi.tsv has fewer rows than topics");
  }

  {
    std::istringstream in(read_text_file(dir / "assignments.txt"));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::vector<int> doc;
      for (const auto& tok : split_ws(line))
        doc.push_back(static_cast<int>(parse_int(tok, "assignment")));
      model.assignments.push_back(std::move(doc));
    }
  }

  // Per-document counts follow from the assignments.
  model.doc_topic_counts.resize(model.assignments.size());
  for (std::size_t d = 0; d < model.assignments.size(); ++d) {
    model.doc_topic_counts[d].assign(static_cast<std::size_t>(model.K), 0);
    for (int z : model.assignments[d]) {
      if (z < 0 || z >= model.K) throw InvalidInput("assignment topic out of range");
      ++model.doc_topic_counts[d][static_cast<std::size_t>(z)];
    }
  }
  return model;
}

}  // namespace emodiff
