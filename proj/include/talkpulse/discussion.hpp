#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "talkpulse/ingest.hpp"
#include "talkpulse/time.hpp"

namespace talkpulse {

/// Tree level of a comment: thread starters sit at level 1 below the
/// article, replies one level below their parent.
inline int level_of(const CommentEvent& c) { return c.depth + 1; }

/// Comment forest of one talk page, nodes in document order.
class DiscussionTree {
 public:
  /// Validates the forest (unique ids and doc_order, parents present,
  /// earlier in document order and exactly one level up). Throws InputError
  /// on the first violation.
  static DiscussionTree build(std::string article_id, std::vector<CommentEvent> nodes);

  const std::string& article_id() const { return article_id_; }
  std::span<const CommentEvent> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  /// level_counts()[L] = number of comments at level L; index 0 is unused.
  const std::vector<std::uint64_t>& level_counts() const { return level_counts_; }
  int max_level() const { return static_cast<int>(level_counts_.size()) - 1; }

 private:
  std::string article_id_;
  std::vector<CommentEvent> nodes_;
  std::vector<std::uint64_t> level_counts_{0};
};

/// Largest theta with at least theta comments at level theta (0 if none).
int h_index(std::span<const std::uint64_t> level_counts);
int h_index(const DiscussionTree& tree);

/// h-index maintained under comment insertion. Counts only grow, so only
/// the level just incremented can become the new maximum.
class HIndexCounter {
 public:
  int add(int level);
  int value() const { return h_; }

 private:
  std::vector<std::uint64_t> counts_{0};
  int h_ = 0;
};

struct HStep {
  Timestamp at;
  int h = 0;

  bool operator==(const HStep&) const = default;
};

/// Time trace of a discussion's h-index. The first step carries h0, the
/// value once every comment effective-dated at the earliest timestamp is
/// in; each further step raises h by exactly one. A jump of several levels
/// in one insertion yields several steps sharing a timestamp.
struct HTrace {
  std::string article_id;
  std::vector<HStep> steps;
  int h0 = 0;
  std::size_t n_comments = 0;

  int final_h() const { return steps.empty() ? 0 : steps.back().h; }
};

/// Undated comments inherit the timestamp of the nearest preceding dated
/// comment in document order; those before any dated comment take the
/// timestamp of the first dated one. Throws std::invalid_argument when
/// nothing is dated.
HTrace h_trace(const DiscussionTree& tree);

class NoGrowth : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DeltaH {
  double value = 0.0;  ///< days per unit increase of h
  Timestamp first_increase;
  Timestamp last_increase;
  int final_h = 0;
  int intervals_used = 0;
};

/// (t_last - t_first) / (h_last - h_first) in fractional days, averaging
/// only over the increases the trace observed. Throws NoGrowth when the
/// trace holds a single h value.
DeltaH delta_h(const HTrace& trace);

struct MaturityStatus {
  bool mature = false;
  double time_since_last_increase = 0.0;  ///< days
  double threshold_multiple = 3.0;
  double delta_h = 0.0;
  /// k == 0 makes every discussion mature.
  bool degenerate_multiple = false;
};

inline constexpr double kDefaultMaturityMultiple = 3.0;

/// Mature once at least k * delta_h days passed since the last increase.
/// Heuristic: no principled choice of k is known. Throws ConfigError for
/// k < 0 and propagates NoGrowth.
MaturityStatus maturity(const HTrace& trace, Timestamp now,
                        double k = kDefaultMaturityMultiple);

struct SpeedRow {
  std::string article_id;
  double delta_h = 0.0;
  Day start_day{};  ///< earliest dated comment
  Day end_day{};    ///< day the final h was first reached
  long duration_days = 0;
  int final_h = 0;
  std::size_t n_comments = 0;
};

inline constexpr std::size_t kDefaultMinComments = 1000;

/// Discussions with more than `min_comments` comments and an observed
/// increase, fastest (smallest delta h) first.
std::vector<SpeedRow> rank_by_speed(std::span<const HTrace> traces,
                                    std::size_t min_comments = kDefaultMinComments);

}  // namespace talkpulse
