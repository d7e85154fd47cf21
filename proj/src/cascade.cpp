#include "emodiff/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "emodiff/errors.hpp"
#include "emodiff/text_table.hpp"

namespace emodiff {

namespace {
using nlohmann::json;
}

std::string_view tie_name(Tie t) {
  switch (t) {
    case Tie::Publisher: return "publisher";
    case Tie::Strong: return "strong";
    case Tie::Weak: return "weak";
  }
  throw InvalidInput("unknown tie value");
}

Tie tie_from_name(std::string_view name) {
  if (name == "publisher") return Tie::Publisher;
  if (name == "strong") return Tie::Strong;
  if (name == "weak") return Tie::Weak;
  throw InvalidInput("unknown tie name: '" + std::string(name) + "'");
}

std::vector<ShareEvent> load_events(const std::filesystem::path& path) {
  std::string content = read_text_file(path);
  std::istringstream in(content);
  std::string line;
  std::vector<ShareEvent> events;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string where = path.string() + ":" + std::to_string(lineno);
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw InvalidInput(where + ": malformed JSON");
    ShareEvent e;
    try {
      e.article_id = j.at("article_id").get<std::string>();
      e.sender_id = j.at("sender_id").get<std::string>();
      e.receiver_id = j.at("receiver_id").get<std::string>();
      e.timestamp = j.at("timestamp").get<double>();
      e.tie = tie_from_name(j.at("tie").get<std::string>());
    } catch (const json::exception& ex) {
      throw InvalidInput(where + ": " + ex.what());
    }
    events.push_back(std::move(e));
  }
  return events;
}

void save_events(const std::vector<ShareEvent>& events, const std::filesystem::path& path) {
  std::string out;
  for (const auto& e : events) {
    json j{{"article_id", e.article_id},
           {"sender_id", e.sender_id},
           {"receiver_id", e.receiver_id},
           {"timestamp", e.timestamp},
           {"tie", std::string(tie_name(e.tie))}};
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

std::unordered_map<std::string, std::vector<ShareEvent>> group_events_by_article(
    std::vector<ShareEvent> events) {
  std::unordered_map<std::string, std::vector<ShareEvent>> out;
  for (auto& e : events) {
    std::string key = e.article_id;
    out[key].push_back(std::move(e));
  }
  return out;
}

std::unordered_map<std::string, double> load_publish_times(const std::filesystem::path& path) {
  TextTable t = TextTable::read_file(path);
  std::size_t id_col = t.column_index("article_id");
  std::size_t time_col = t.column_index("publish_time");
  std::unordered_map<std::string, double> out;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const std::string& id = t.cell(r, id_col);
    double time = parse_double(t.cell(r, time_col), "publish_time");
    if (!out.emplace(id, time).second)
      throw InvalidInput("duplicate publish time for article '" + id + "'");
  }
  return out;
}

void save_publish_times(const std::vector<std::pair<std::string, double>>& times,
                        const std::filesystem::path& path) {
  TextTable t({"article_id", "publish_time"});
  for (const auto& [id, time] : times) t.add_row({id, format_exact(time)});
  t.write_file(path);
}

CascadeTree build_cascade(const std::vector<ShareEvent>& events, double publish_time,
                          BuildStats* stats) {
  if (events.empty()) throw EmptyCascade("cannot build a cascade from zero share events");

  std::vector<const ShareEvent*> order;
  order.reserve(events.size());
  for (const auto& e : events) {
    if (e.article_id != events.front().article_id)
      throw InvalidInput("events mix articles '" + events.front().article_id + "' and '" +
                         e.article_id + "'");
    if (!std::isfinite(e.timestamp))
      throw InvalidInput("share event for '" + e.receiver_id + "' has a non-finite timestamp");
    if (e.receiver_id == e.sender_id)
      throw InvalidInput("share event where '" + e.receiver_id + "' received from itself");
    if (e.receiver_id == kPublisherSentinel)
      throw InvalidInput("the publisher cannot appear as a receiver");
    order.push_back(&e);
  }
  std::stable_sort(order.begin(), order.end(), [](const ShareEvent* a, const ShareEvent* b) {
    if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
    if (a->receiver_id != b->receiver_id) return a->receiver_id < b->receiver_id;
    return a->sender_id < b->sender_id;
  });

  CascadeTree tree;
  tree.article_id = events.front().article_id;
  tree.publish_time = publish_time;
  tree.nodes.push_back({std::string(kPublisherSentinel), -1, 0, publish_time, Tie::Publisher});

  std::unordered_map<std::string, int> placed;
  placed.emplace(std::string(kPublisherSentinel), 0);

  for (const ShareEvent* e : order) {
    if (placed.count(e->receiver_id)) {
      if (stats) ++stats->duplicate_shares;
      continue;
    }
    auto parent_it = placed.find(e->sender_id);
    if (parent_it == placed.end())
      throw OrphanEvent("share by '" + e->receiver_id + "' credits unknown sender '" +
                        e->sender_id + "'");
    const CascadeNode& parent = tree.nodes[static_cast<std::size_t>(parent_it->second)];
    if (e->timestamp < parent.share_time)
      throw ClockSkew("share by '" + e->receiver_id + "' at " + format_exact(e->timestamp) +
                      " predates its source at " + format_exact(parent.share_time));
    int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({e->receiver_id, parent_it->second, parent.depth + 1, e->timestamp, e->tie});
    placed.emplace(e->receiver_id, idx);
  }
  return tree;
}

std::vector<ShareEvent> tree_to_events(const CascadeTree& tree) {
  std::vector<ShareEvent> out;
  out.reserve(tree.nodes.size() - 1);
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
    const CascadeNode& n = tree.nodes[i];
    out.push_back({tree.article_id, tree.nodes[static_cast<std::size_t>(n.parent)].user, n.user,
                   n.share_time, n.tie});
  }
  return out;
}

int cascade_depth(const CascadeTree& tree) {
  int depth = 0;
  for (const auto& n : tree.nodes) depth = std::max(depth, n.depth);
  return depth;
}

std::vector<std::int64_t> level_breadths(const CascadeTree& tree) {
  std::vector<std::int64_t> breadths(static_cast<std::size_t>(cascade_depth(tree)), 0);
  for (const auto& n : tree.nodes)
    if (n.depth >= 1) ++breadths[static_cast<std::size_t>(n.depth - 1)];
  return breadths;
}

std::int64_t max_breadth(const CascadeTree& tree) {
  std::int64_t best = 0;
  for (std::int64_t b : level_breadths(tree)) best = std::max(best, b);
  return best;
}

double structural_virality(const CascadeTree& tree) {
  const std::size_t n = tree.nodes.size();
  if (n < 2) return 0.0;
  // Parents precede children, so a reverse sweep accumulates subtree sizes.
  std::vector<std::int64_t> subtree(n, 1);
  for (std::size_t i = n - 1; i >= 1; --i)
    subtree[static_cast<std::size_t>(tree.nodes[i].parent)] += subtree[i];
  // Every edge (i, parent) separates subtree[i] nodes from the rest; it is
  // crossed by 2 * s * (n - s) ordered pairs.
  double total = 0.0;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 1; i < n; ++i) {
    const double s = static_cast<double>(subtree[i]);
    total += 2.0 * s * (dn - s);
  }
  return total / (dn * (dn - 1.0));
}

double time_per_level(const CascadeTree& tree) {
  int depth = cascade_depth(tree);
  if (depth == 0) throw InvalidInput("time_per_level needs at least one share");
  double earliest = std::numeric_limits<double>::infinity();
  for (const auto& n : tree.nodes)
    if (n.depth == depth) earliest = std::min(earliest, n.share_time);
  return (earliest - tree.publish_time) / static_cast<double>(depth);
}

std::optional<double> weak_tie_proportion(const CascadeTree& tree) {
  std::int64_t user_edges = 0;
  std::int64_t weak = 0;
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].tie == Tie::Publisher) continue;
    ++user_edges;
    if (tree.nodes[i].tie == Tie::Weak) ++weak;
  }
  if (user_edges == 0) return std::nullopt;
  return static_cast<double>(weak) / static_cast<double>(user_edges);
}

std::unordered_map<std::string, UserProfile> load_profiles(const std::filesystem::path& path) {
  TextTable t = TextTable::read_file(path);
  std::size_t id_col = t.column_index("user_id");
  std::size_t age_col = t.column_index("age");
  std::size_t gender_col = t.column_index("gender");
  std::size_t friends_col = t.column_index("friend_count");
  std::unordered_map<std::string, UserProfile> out;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    UserProfile p;
    p.user_id = t.cell(r, id_col);
    p.age = parse_double(t.cell(r, age_col), "age");
    const std::string& g = t.cell(r, gender_col);
    if (g == "female")
      p.gender = UserProfile::Gender::Female;
    else if (g == "male")
      p.gender = UserProfile::Gender::Male;
    else if (g == "unknown")
      p.gender = UserProfile::Gender::Unknown;
    else
      throw InvalidInput("unknown gender '" + g + "' for user '" + p.user_id + "'");
    p.friend_count = parse_int(t.cell(r, friends_col), "friend_count");
    if (p.friend_count < 0) throw InvalidInput("negative friend count for '" + p.user_id + "'");
    std::string key = p.user_id;
    if (!out.emplace(key, std::move(p)).second)
      throw InvalidInput("duplicate profile for user '" + key + "'");
  }
  return out;
}

void save_profiles(const std::vector<UserProfile>& profiles, const std::filesystem::path& path) {
  TextTable t({"user_id", "age", "gender", "friend_count"});
  for (const auto& p : profiles) {
    std::string gender = p.gender == UserProfile::Gender::Female  ? "female"
                         : p.gender == UserProfile::Gender::Male ? "male"
                                                                 : "unknown";
    t.add_row({p.user_id, format_exact(p.age), gender, format_int(p.friend_count)});
  }
  t.write_file(path);
}

std::string FriendshipStore::key(std::string_view a, std::string_view b) {
  std::string out;
  if (b < a) std::swap(a, b);
  out.reserve(a.size() + b.size() + 1);
  out.append(a);
  out.push_back('\x1f');
  out.append(b);
  return out;
}

void FriendshipStore::add(std::string_view a, std::string_view b) {
  if (a == b) throw InvalidInput("a friendship pair needs two distinct users");
  pairs_.insert(key(a, b));
}

bool FriendshipStore::are_friends(std::string_view a, std::string_view b) const {
  if (a == b) return false;
  return pairs_.count(key(a, b)) > 0;
}

FriendshipStore FriendshipStore::load(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  FriendshipStore out;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != 2)
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) +
                         ": friendship lines are two user ids");
    out.add(fields[0], fields[1]);
  }
  return out;
}

void FriendshipStore::save(const std::filesystem::path& path) const {
  std::vector<std::string> lines(pairs_.begin(), pairs_.end());
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (auto& l : lines) {
    std::size_t sep = l.find('\x1f');
    out += l.substr(0, sep);
    out += '\t';
    out += l.substr(sep + 1);
    out += '\n';
  }
  write_text_file(path, out);
}

double seed_clusterness(const std::vector<std::string>& seed_users,
                        const FriendshipStore& friends) {
  const std::size_t n = seed_users.size();
  if (n <= 1) return 0.0;
  std::int64_t linked = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (friends.are_friends(seed_users[i], seed_users[j])) ++linked;
  double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return static_cast<double>(linked) / pairs;
}

CascadeMetrics compute_metrics(const CascadeTree& tree,
                               const std::unordered_map<std::string, UserProfile>* profiles,
                               const FriendshipStore* friends) {
  CascadeMetrics m;
  m.article_id = tree.article_id;
  m.size = tree.size();
  m.node_count = tree.node_count();
  m.depth = cascade_depth(tree);
  m.max_breadth = max_breadth(tree);
  m.structural_virality = structural_virality(tree);
  m.time_per_level = time_per_level(tree);
  m.weak_tie_proportion = weak_tie_proportion(tree);

  if (friends) {
    std::vector<std::string> seeds;
    for (const auto& n : tree.nodes)
      if (n.depth == 1) seeds.push_back(n.user);
    m.seed_clusterness = seed_clusterness(seeds, *friends);
  }

  if (profiles) {
    double age_sum = 0.0;
    double friend_sum = 0.0;
    std::int64_t known_gender = 0;
    std::int64_t female = 0;
    for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
      auto it = profiles->find(tree.nodes[i].user);
      if (it == profiles->end()) continue;
      ++m.profiled_sharers;
      age_sum += it->second.age;
      friend_sum += static_cast<double>(it->second.friend_count);
      if (it->second.gender != UserProfile::Gender::Unknown) {
        ++known_gender;
        if (it->second.gender == UserProfile::Gender::Female) ++female;
      }
    }
    if (m.profiled_sharers > 0) {
      m.avg_age = age_sum / static_cast<double>(m.profiled_sharers);
      m.avg_friend_count = friend_sum / static_cast<double>(m.profiled_sharers);
    }
    if (known_gender > 0)
      m.female_share = static_cast<double>(female) / static_cast<double>(known_gender);
  }
  return m;
}

std::vector<std::pair<double, double>> ccdf(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("ccdf needs at least one value");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  std::vector<std::pair<double, double>> out;
  std::size_t i = 0;
  while (i < values.size()) {
    double v = values[i];
    // Observations >= v are everything from the first occurrence of v on.
    out.emplace_back(v, static_cast<double>(values.size() - i) / n);
    while (i < values.size() && values[i] == v) ++i;
  }
  return out;
}

}  // namespace emodiff
