#include "emodiff/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emodiff/errors.hpp"
#include "emodiff/numeric.hpp"
#include "emodiff/text_table.hpp"

namespace emodiff {

namespace {

using nlohmann::json;

Document document_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + ": document line is not a JSON object");
  Document d;
  try {
    d.id = j.at("id").get<std::string>();
    if (j.contains("publisher_id")) d.publisher_id = j.at("publisher_id").get<std::string>();
    if (j.contains("tokens"))
      d.tokens = j.at("tokens").get<std::vector<std::string>>();
    if (j.contains("n_images")) d.n_images = j.at("n_images").get<std::int64_t>();
    if (j.contains("n_videos")) d.n_videos = j.at("n_videos").get<std::int64_t>();
    if (j.contains("posted_weekend")) d.posted_weekend = j.at("posted_weekend").get<bool>();
    if (j.contains("n_comments")) d.n_comments = j.at("n_comments").get<std::int64_t>();
    if (j.contains("original")) d.original = j.at("original").get<bool>();
    if (j.contains("char_length")) d.char_length = j.at("char_length").get<std::int64_t>();
    if (j.contains("article_id")) d.article_id = j.at("article_id").get<std::string>();
  } catch (const json::exception& e) {
    throw InvalidInput(where + ": " + e.what());
  }
  if (d.id.empty()) throw InvalidInput(where + ": document id must be non-empty");
  if (d.n_images < 0 || d.n_videos < 0 || d.n_comments < 0 || d.char_length < 0)
    throw InvalidInput(where + ": counts must be >= 0");
  return d;
}

}  // namespace

std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::string content = read_text_file(path);
  std::istringstream in(content);
  std::string line;
  std::vector<Document> docs;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string where = path.string() + ":" + std::to_string(lineno);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw InvalidInput(where + ": malformed JSON");
    docs.push_back(document_from_json(j, where));
  }
  return docs;
}

void save_documents(const std::vector<Document>& docs, const std::filesystem::path& path) {
  std::string out;
  for (const auto& d : docs) {
    json j{{"id", d.id},
           {"publisher_id", d.publisher_id},
           {"tokens", d.tokens},
           {"n_images", d.n_images},
           {"n_videos", d.n_videos},
           {"posted_weekend", d.posted_weekend},
           {"n_comments", d.n_comments},
           {"original", d.original},
           {"char_length", d.char_length}};
    if (!d.article_id.empty()) j["article_id"] = d.article_id;
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

ModifierDictionaries ModifierDictionaries::load(const std::filesystem::path& negations_path,
                                                const std::filesystem::path& degrees_path) {
  ModifierDictionaries m;
  {
    std::istringstream in(read_text_file(negations_path));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto fields = split_ws(line);
      if (fields.empty()) continue;
      if (fields.size() != 1)
        throw InvalidInput(negations_path.string() + ": negation lines hold a single word");
      m.negations.insert(fields[0]);
    }
  }
  {
    std::istringstream in(read_text_file(degrees_path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto fields = split(line, '\t');
      if (fields.size() != 2)
        throw InvalidInput(degrees_path.string() + ":" + std::to_string(lineno) +
                           ": degree lines are word<TAB>value");
      if (lineno == 1 && fields[0] == "word") continue;  // optional header
      double value = parse_double(fields[1], "degree value");
      if (!(value > 0.0))
        throw InvalidInput(degrees_path.string() + ": degree value for '" + fields[0] +
                           "' must be positive");
      if (!m.degrees.emplace(fields[0], value).second)
        throw InvalidInput(degrees_path.string() + ": duplicate degree word '" + fields[0] + "'");
    }
  }
  for (const auto& w : m.negations)
    if (m.degrees.count(w))
      throw InvalidInput("word '" + w + "' appears in both the negation and degree dictionaries");
  return m;
}

std::vector<std::string> modifier_lexicon_conflicts(const Lexicon& lexicon,
                                                    const ModifierDictionaries& modifiers) {
  std::vector<std::string> out;
  for (const auto& w : modifiers.negations)
    if (lexicon.contains(w)) out.push_back(w);
  for (const auto& [w, _] : modifiers.degrees)
    if (lexicon.contains(w)) out.push_back(w);
  std::sort(out.begin(), out.end());
  return out;
}

EmotionVector score_document(const Document& doc, const Lexicon& lexicon,
                             const ModifierDictionaries& modifiers, int window) {
  if (window < 0) throw InvalidInput("window must be >= 0");
  EmotionVector score;
  const auto& tokens = doc.tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!lexicon.contains(tokens[i])) continue;
    const EmotionVector& intensities = lexicon.entry(tokens[i]).intensities;
    int negations = 0;
    double degree_sum = 0.0;
    int degree_count = 0;
    std::size_t begin = i >= static_cast<std::size_t>(window) ? i - static_cast<std::size_t>(window) : 0;
    for (std::size_t j = begin; j < i; ++j) {
      // Emotion words in the window are occurrences of their own, never
      // modifiers, even if they also appear in a modifier dictionary.
      if (lexicon.contains(tokens[j])) continue;
      if (modifiers.negations.count(tokens[j])) {
        ++negations;
        continue;
      }
      auto it = modifiers.degrees.find(tokens[j]);
      if (it != modifiers.degrees.end()) {
        degree_sum += it->second;
        ++degree_count;
      }
    }
    double degree = degree_count ? degree_sum / degree_count : 1.0;
    double sign = (negations % 2 == 0) ? 1.0 : -1.0;
    score.add_scaled(sign * degree, intensities);
  }
  return score;
}

EmotionMatrix score_corpus(const std::vector<Document>& docs, const Lexicon& lexicon,
                           const ModifierDictionaries& modifiers, int window) {
  EmotionMatrix m;
  m.doc_ids.reserve(docs.size());
  m.values.resize(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(kNumEmotions));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    m.doc_ids.push_back(docs[i].id);
    EmotionVector s = score_document(docs[i], lexicon, modifiers, window);
    for (std::size_t k = 0; k < kNumEmotions; ++k)
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s[k];
  }
  return m;
}

namespace {

// Population mean and SD with compensated sums; split-independent.
std::pair<double, double> column_stats(const Eigen::VectorXd& col) {
  const auto n = static_cast<double>(col.size());
  CompensatedSum sum;
  for (Eigen::Index i = 0; i < col.size(); ++i) sum.add(col[i]);
  double mean = sum.value() / n;
  CompensatedSum sq;
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    double d = col[i] - mean;
    sq.add(d * d);
  }
  return {mean, std::sqrt(sq.value() / n)};
}

}  // namespace

EmotionMatrix standardize(const EmotionMatrix& raw) {
  if (raw.values.rows() < 2)
    throw InvalidInput("standardize: need at least 2 rows");
  EmotionMatrix z = raw;
  z.standardized = true;
  for (Eigen::Index k = 0; k < raw.values.cols(); ++k) {
    auto [mean, sd] = column_stats(raw.values.col(k));
    if (sd == 0.0)
      throw DegenerateColumn("column '" + std::string(kEmotionNames[static_cast<std::size_t>(k)]) +
                             "' is constant");
    z.values.col(k) = (raw.values.col(k).array() - mean) / sd;
  }
  return z;
}

std::vector<double> degree_of_emotion(const EmotionMatrix& raw) {
  if (raw.values.rows() < 2)
    throw InvalidInput("degree_of_emotion: need at least 2 rows");
  Eigen::VectorXd sums = raw.values.rowwise().sum();
  auto [mean, sd] = column_stats(sums);
  if (sd == 0.0) throw DegenerateColumn("summed emotion score is constant");
  std::vector<double> out(static_cast<std::size_t>(sums.size()));
  for (Eigen::Index i = 0; i < sums.size(); ++i)
    out[static_cast<std::size_t>(i)] = (sums[i] - mean) / sd;
  return out;
}

Eigen::MatrixXd correlation_matrix(const EmotionMatrix& matrix) {
  if (matrix.values.rows() < 2)
    throw InvalidInput("correlation_matrix: need at least 2 rows");
  const Eigen::Index n = matrix.values.rows();
  const Eigen::Index p = matrix.values.cols();
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    auto [mean, sd] = column_stats(matrix.values.col(k));
    if (sd == 0.0)
      throw DegenerateColumn("column '" + std::string(kEmotionNames[static_cast<std::size_t>(k)]) +
                             "' is constant");
    z.col(k) = (matrix.values.col(k).array() - mean) / sd;
  }
  // Gram form keeps the result symmetric positive semidefinite.
  Eigen::MatrixXd r = (z.transpose() * z) / static_cast<double>(n);
  for (Eigen::Index k = 0; k < p; ++k) r(k, k) = 1.0;
  return r;
}

}  // namespace emodiff
