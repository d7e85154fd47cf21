#include "emodiff/lexicon.hpp"

#include <algorithm>
#include <random>

#include "emodiff/errors.hpp"
#include "emodiff/rng.hpp"
#include "emodiff/text_table.hpp"

namespace emodiff {

namespace {

void check_intensities(const LexiconEntry& e) {
  for (double x : e.intensities.v)
    if (!(x >= 0.0 && x <= 1.0))
      throw InvalidInput("intensity out of [0, 1] for word '" + e.word + "'");
}

// Intensities of lexicon words keyed by their store id, for fast
// intersection of neighbor lists with the lexicon. Values are copies; the
// lexicon's entry vector may reallocate while the index is alive.
using StoreIdIndex = std::unordered_map<int, EmotionVector>;

StoreIdIndex index_by_store_id(const EmbeddingStore& store, const Lexicon& lexicon) {
  StoreIdIndex idx;
  idx.reserve(lexicon.size());
  for (const auto& e : lexicon.entries())
    if (store.contains(e.word)) idx.emplace(store.id_of(e.word), e.intensities);
  return idx;
}

EmotionVector sdi_from_list(const std::vector<IdSim>& nn, int n, const StoreIdIndex& idx,
                            double alpha) {
  EmotionVector sdi;
  const int limit = std::min<int>(n, static_cast<int>(nn.size()));
  for (int i = 0; i < limit; ++i) {
    auto it = idx.find(nn[static_cast<std::size_t>(i)].id);
    if (it == idx.end()) continue;
    sdi.add_scaled(nn[static_cast<std::size_t>(i)].similarity, it->second);
  }
  for (double& x : sdi.v)
    if (x < alpha) x = 0.0;
  return sdi;
}

EmotionVector intensities_from_list(const std::vector<IdSim>& nn, int m, const StoreIdIndex& idx,
                                    const EmotionVector& sdi) {
  EmotionVector out;
  const int limit = std::min<int>(m, static_cast<int>(nn.size()));
  for (std::size_t k = 0; k < kNumEmotions; ++k) {
    if (sdi[k] <= 0.0) continue;
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < limit; ++i) {
      auto it = idx.find(nn[static_cast<std::size_t>(i)].id);
      if (it == idx.end()) continue;
      double v = it->second[k];
      if (v > 0.0) {
        sum += v;
        ++count;
      }
    }
    out[k] = count ? sum / count : 0.0;
  }
  return out;
}

int clamp_k(int requested, const EmbeddingStore& store) {
  return std::min(requested, store.size() - 1);
}

}  // namespace

bool Lexicon::contains(std::string_view word) const {
  return index_.find(std::string(word)) != index_.end();
}

const LexiconEntry& Lexicon::entry(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end())
    throw MissingWord("word not in lexicon: '" + std::string(word) + "'");
  return entries_[it->second];
}

void Lexicon::add(LexiconEntry entry) {
  if (entry.word.empty()) throw InvalidInput("lexicon word must be non-empty");
  if (index_.count(entry.word))
    throw InvalidInput("duplicate lexicon word: '" + entry.word + "'");
  check_intensities(entry);
  index_.emplace(entry.word, entries_.size());
  entries_.push_back(std::move(entry));
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  TextTable t = TextTable::read_file(path);
  std::size_t word_col = t.column_index("word");
  std::size_t prov_col = t.column_index("provenance");
  std::array<std::size_t, kNumEmotions> emo_cols;
  for (std::size_t k = 0; k < kNumEmotions; ++k)
    emo_cols[k] = t.column_index(kEmotionNames[k]);

  Lexicon lex;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    LexiconEntry e;
    e.word = t.cell(r, word_col);
    for (std::size_t k = 0; k < kNumEmotions; ++k)
      e.intensities[k] = parse_double(t.cell(r, emo_cols[k]), "intensity");
    const std::string& prov = t.cell(r, prov_col);
    if (prov == "basic") {
      e.mined = false;
      e.iteration = 0;
    } else if (prov.rfind("mined@", 0) == 0) {
      e.mined = true;
      e.iteration = static_cast<int>(parse_int(prov.substr(6), "provenance iteration"));
      if (e.iteration < 1) throw InvalidInput("mined iteration must be >= 1");
    } else {
      throw InvalidInput("unknown provenance '" + prov + "' for word '" + e.word + "'");
    }
    lex.add(std::move(e));
  }
  return lex;
}

void Lexicon::save(const std::filesystem::path& path) const {
  std::vector<std::string> cols = {"word"};
  for (auto name : kEmotionNames) cols.emplace_back(name);
  cols.emplace_back("provenance");
  TextTable t(cols);
  for (const auto& e : entries_) {
    std::vector<std::string> row;
    row.reserve(cols.size());
    row.push_back(e.word);
    for (std::size_t k = 0; k < kNumEmotions; ++k) row.push_back(format_exact(e.intensities[k]));
    row.push_back(e.mined ? "mined@" + std::to_string(e.iteration) : "basic");
    t.add_row(std::move(row));
  }
  t.write_file(path);
}

void ExpansionParams::validate() const {
  if (mining_neighbors < 1) throw InvalidInput("mining_neighbors must be >= 1");
  if (class_neighbors < 1) throw InvalidInput("class_neighbors must be >= 1");
  if (intensity_neighbors < 1) throw InvalidInput("intensity_neighbors must be >= 1");
  if (!(alpha > 0.0)) throw InvalidInput("alpha must be positive");
  if (max_iterations < 1) throw InvalidInput("max_iterations must be >= 1");
}

EmotionVector eo_sd(const EmbeddingStore& store, const Lexicon& lexicon,
                    std::string_view word, const ExpansionParams& params) {
  params.validate();
  if (lexicon.empty()) throw InvalidInput("eo_sd: lexicon is empty");
  int id = store.id_of(word);
  int k = clamp_k(std::max(params.class_neighbors, params.intensity_neighbors), store);
  if (k < 1) throw InvalidInput("eo_sd: store too small for neighbor search");
  auto nn = topk_neighbors(store, {id}, k);
  auto idx = index_by_store_id(store, lexicon);
  return sdi_from_list(nn[0], params.class_neighbors, idx, params.alpha);
}

EmotionVector estimate_intensities(const EmbeddingStore& store, const Lexicon& lexicon,
                                   std::string_view word, const ExpansionParams& params) {
  params.validate();
  if (lexicon.empty()) throw InvalidInput("estimate_intensities: lexicon is empty");
  int id = store.id_of(word);
  int k = clamp_k(std::max(params.class_neighbors, params.intensity_neighbors), store);
  if (k < 1) throw InvalidInput("estimate_intensities: store too small for neighbor search");
  auto nn = topk_neighbors(store, {id}, k);
  auto idx = index_by_store_id(store, lexicon);
  EmotionVector sdi = sdi_from_list(nn[0], params.class_neighbors, idx, params.alpha);
  return intensities_from_list(nn[0], params.intensity_neighbors, idx, sdi);
}

ExpansionResult expand_lexicon(const EmbeddingStore& store, const Lexicon& basic,
                               const ExpansionParams& params) {
  params.validate();
  if (basic.empty()) throw InvalidInput("expand_lexicon: basic lexicon is empty");

  ExpansionResult result;
  result.lexicon = basic;

  const int k_score = clamp_k(std::max(params.class_neighbors, params.intensity_neighbors), store);
  const int k_mine = clamp_k(params.mining_neighbors, store);
  if (k_score < 1 || k_mine < 1)
    throw InvalidInput("expand_lexicon: store too small for neighbor search");

  NeighborCache mine_cache(store, k_mine);
  NeighborCache score_cache(store, k_score);

  StoreIdIndex lex_idx;
  std::vector<int> frontier;  // lexicon words whose neighbor lists are not mined yet
  for (const auto& e : basic.entries()) {
    if (!store.contains(e.word)) {
      result.skipped_seed_words.push_back(e.word);
      continue;
    }
    int id = store.id_of(e.word);
    lex_idx.emplace(id, e.intensities);
    frontier.push_back(id);
  }
  if (lex_idx.empty())
    throw InvalidInput("expand_lexicon: no basic lexicon word is in the embedding store");

  std::unordered_map<int, bool> pool;  // candidate ids seen so far

  for (int iter = 1; iter <= params.max_iterations; ++iter) {
    mine_cache.prefetch(frontier);
    for (int wid : frontier)
      for (const auto& nb : mine_cache.get(wid))
        if (!lex_idx.count(nb.id)) pool.emplace(nb.id, true);
    frontier.clear();

    std::vector<int> candidates;
    candidates.reserve(pool.size());
    for (const auto& [cid, _] : pool) candidates.push_back(cid);
    std::sort(candidates.begin(), candidates.end(),
              [&](int a, int b) { return store.word_of(a) < store.word_of(b); });
    score_cache.prefetch(candidates);

    std::vector<LexiconEntry> admitted;
    for (int cid : candidates) {
      const auto& nn = score_cache.get(cid);
      EmotionVector sdi = sdi_from_list(nn, params.class_neighbors, lex_idx, params.alpha);
      if (!sdi.any_positive()) continue;
      EmotionVector intens = intensities_from_list(nn, params.intensity_neighbors, lex_idx, sdi);
      if (!intens.any_positive()) continue;
      admitted.push_back({store.word_of(cid), intens, true, iter});
    }

    result.iterations.push_back({iter, static_cast<std::int64_t>(candidates.size()),
                                 static_cast<std::int64_t>(admitted.size())});
    if (admitted.empty()) break;

    for (auto& e : admitted) {
      int id = store.id_of(e.word);
      lex_idx[id] = e.intensities;
      result.lexicon.add(std::move(e));
      pool.erase(id);
      frontier.push_back(id);
    }
    if (iter == params.max_iterations) result.hit_iteration_cap = true;
  }
  return result;
}

HoldoutReport validate_holdout(const EmbeddingStore& store, const Lexicon& lexicon,
                               double holdout_fraction, std::uint64_t seed,
                               const ExpansionParams& params) {
  params.validate();
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw InvalidInput("holdout fraction must lie in (0, 1)");
  const std::size_t n = lexicon.size();
  if (n < 2) throw InvalidInput("lexicon too small for holdout validation");
  std::size_t count = static_cast<std::size_t>(holdout_fraction * static_cast<double>(n));
  count = std::min<std::size_t>(count, 1000);
  if (count < 1) throw InvalidInput("holdout set is empty; raise the fraction");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<char> held(n, 0);
  for (std::size_t i = 0; i < count; ++i) held[order[i]] = 1;

  Lexicon training;
  for (std::size_t i = 0; i < n; ++i)
    if (!held[i]) training.add(lexicon.entries()[i]);

  HoldoutReport report;
  report.holdout_size = count;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!held[i]) continue;
    const auto& truth = lexicon.entries()[i];
    if (!store.contains(truth.word)) continue;
    EmotionVector pred = estimate_intensities(store, training, truth.word, params);
    for (std::size_t k = 0; k < kNumEmotions; ++k)
      total += std::abs(truth.intensities[k] - pred[k]);
    ++report.evaluated;
  }
  if (report.evaluated == 0)
    throw InvalidInput("no holdout word is present in the embedding store");
  report.mae = total / (static_cast<double>(kNumEmotions) * static_cast<double>(report.evaluated));
  return report;
}

}  // namespace emodiff
