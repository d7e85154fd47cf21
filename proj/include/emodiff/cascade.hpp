#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace emodiff {

// Sender id marking a share taken directly from the publisher account.
inline constexpr std::string_view kPublisherSentinel = "PUBLISHER";

enum class Tie { Publisher, Strong, Weak };

std::string_view tie_name(Tie t);
Tie tie_from_name(std::string_view name);

struct ShareEvent {
  std::string article_id;
  std::string sender_id;    // kPublisherSentinel or an earlier sharer
  std::string receiver_id;  // the user performing this share
  double timestamp = 0.0;
  Tie tie = Tie::Strong;
};

// JSON Lines with fields article_id, sender_id, receiver_id, timestamp, tie.
std::vector<ShareEvent> load_events(const std::filesystem::path& path);
void save_events(const std::vector<ShareEvent>& events, const std::filesystem::path& path);

std::unordered_map<std::string, std::vector<ShareEvent>> group_events_by_article(
    std::vector<ShareEvent> events);

// Tab-separated article_id, publish_time with a header row.
std::unordered_map<std::string, double> load_publish_times(const std::filesystem::path& path);
void save_publish_times(const std::vector<std::pair<std::string, double>>& times,
                        const std::filesystem::path& path);

struct CascadeNode {
  std::string user;
  int parent = -1;  // index into CascadeTree::nodes; -1 for the root
  int depth = 0;
  double share_time = 0.0;
  Tie tie = Tie::Publisher;
};

// Share tree of one article. nodes[0] is the publisher root at depth 0;
// every other node is one user's first share. Parents precede children.
struct CascadeTree {
  std::string article_id;
  double publish_time = 0.0;
  std::vector<CascadeNode> nodes;

  // Sharers only; the publisher root is not a share.
  std::int64_t size() const { return static_cast<std::int64_t>(nodes.size()) - 1; }
  std::int64_t node_count() const { return static_cast<std::int64_t>(nodes.size()); }
};

struct BuildStats {
  std::int64_t duplicate_shares = 0;  // re-shares by an already-placed user, ignored
};

// Builds the tree from share events. Events are processed in (timestamp,
// receiver, sender) order; a user's first share fixes their position and
// later shares by the same user are ignored. Raises EmptyCascade on zero
// events, OrphanEvent when a sender is neither the publisher nor a placed
// sharer, and ClockSkew when a share predates the share it descends from.
CascadeTree build_cascade(const std::vector<ShareEvent>& events, double publish_time,
                          BuildStats* stats = nullptr);

// Round trip back to one event per sharer, in node order.
std::vector<ShareEvent> tree_to_events(const CascadeTree& tree);

int cascade_depth(const CascadeTree& tree);
// Sharer count per depth level 1..depth; sums to size().
std::vector<std::int64_t> level_breadths(const CascadeTree& tree);
std::int64_t max_breadth(const CascadeTree& tree);

// Mean pairwise distance over all nodes including the root, computed in
// linear time from subtree sizes. Trees with fewer than 2 nodes score 0.
double structural_virality(const CascadeTree& tree);

// (earliest time the deepest level is reached - publish time) / depth.
double time_per_level(const CascadeTree& tree);

// Share of weak ties among user-to-user edges; publisher edges are not
// user-to-user. No user-to-user edges -> nullopt.
std::optional<double> weak_tie_proportion(const CascadeTree& tree);

struct UserProfile {
  std::string user_id;
  double age = 0.0;
  enum class Gender { Female, Male, Unknown } gender = Gender::Unknown;
  std::int64_t friend_count = 0;
};

// Tab-separated user_id, age, gender (female|male|unknown), friend_count.
std::unordered_map<std::string, UserProfile> load_profiles(const std::filesystem::path& path);
void save_profiles(const std::vector<UserProfile>& profiles, const std::filesystem::path& path);

// Unordered friendship pairs; one "user_a<TAB>user_b" line per pair.
class FriendshipStore {
 public:
  void add(std::string_view a, std::string_view b);
  bool are_friends(std::string_view a, std::string_view b) const;
  std::size_t size() const { return pairs_.size(); }

  static FriendshipStore load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  static std::string key(std::string_view a, std::string_view b);
  std::unordered_set<std::string> pairs_;
};

// Friend pairs among the seed users divided by all seed pairs; 0 when there
// are fewer than two seeds.
double seed_clusterness(const std::vector<std::string>& seed_users,
                        const FriendshipStore& friends);

struct CascadeMetrics {
  std::string article_id;
  std::int64_t size = 0;
  std::int64_t node_count = 0;
  int depth = 0;
  std::int64_t max_breadth = 0;
  double structural_virality = 0.0;
  double time_per_level = 0.0;
  std::optional<double> weak_tie_proportion;
  std::optional<double> seed_clusterness;  // set when friendships are supplied
  std::optional<double> avg_age;           // over sharers with known profiles
  std::optional<double> avg_friend_count;
  std::optional<double> female_share;      // among sharers with known gender
  std::int64_t profiled_sharers = 0;
};

CascadeMetrics compute_metrics(const CascadeTree& tree,
                               const std::unordered_map<std::string, UserProfile>* profiles,
                               const FriendshipStore* friends);

// Complementary cumulative distribution: for each distinct value v in
// ascending order, the fraction of observations >= v.
std::vector<std::pair<double, double>> ccdf(std::vector<double> values);

}  // namespace emodiff
