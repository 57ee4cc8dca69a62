#include "talkpulse/discussion.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "talkpulse/errors.hpp"

namespace talkpulse {

DiscussionTree DiscussionTree::build(std::string article_id, std::vector<CommentEvent> nodes) {
  std::sort(nodes.begin(), nodes.end(), [](const CommentEvent& a, const CommentEvent& b) {
    return a.doc_order < b.doc_order;
  });

  const auto fail = [&](const CommentEvent& c, const std::string& what) {
    throw InputError(article_id + ": comment " + c.comment_id + ": " + what);
  };

  std::unordered_map<std::string_view, const CommentEvent*> by_id;
  by_id.reserve(nodes.size());
  DiscussionTree tree;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& c = nodes[i];
    if (c.article_id != article_id) fail(c, "belongs to article " + c.article_id);
    if (i > 0 && nodes[i - 1].doc_order == c.doc_order) fail(c, "duplicate doc_order");
    if (c.depth < 0) fail(c, "negative depth");
    if ((c.depth == 0) != !c.parent_id) fail(c, "depth 0 must coincide with an absent parent");
    if (c.parent_id) {
      // Parents precede children, so a parent seen later is not in the map yet.
      auto it = by_id.find(*c.parent_id);
      if (it == by_id.end()) fail(c, "parent " + *c.parent_id + " missing or not earlier");
      if (it->second->depth + 1 != c.depth) fail(c, "depth is not parent depth + 1");
    }
    if (!by_id.emplace(c.comment_id, &c).second) fail(c, "duplicate id");

    const auto level = static_cast<std::size_t>(level_of(c));
    if (tree.level_counts_.size() <= level) tree.level_counts_.resize(level + 1, 0);
    ++tree.level_counts_[level];
  }
  tree.article_id_ = std::move(article_id);
  tree.nodes_ = std::move(nodes);
  return tree;
}

int h_index(std::span<const std::uint64_t> level_counts) {
  for (std::size_t theta = level_counts.size(); theta-- > 1;) {
    if (level_counts[theta] >= theta) return static_cast<int>(theta);
  }
  return 0;
}

int h_index(const DiscussionTree& tree) { return h_index(tree.level_counts()); }

int HIndexCounter::add(int level) {
  const auto l = static_cast<std::size_t>(level);
  if (counts_.size() <= l) counts_.resize(l + 1, 0);
  if (++counts_[l] >= l && level > h_) h_ = level;
  return h_;
}

HTrace h_trace(const DiscussionTree& tree) {
  const auto nodes = tree.nodes();
  const auto first_dated =
      std::find_if(nodes.begin(), nodes.end(), [](const CommentEvent& c) { return c.timestamp; });
  if (first_dated == nodes.end()) {
    throw std::invalid_argument(tree.article_id() + ": no dated comments");
  }

  std::vector<Timestamp> effective(nodes.size());
  Timestamp carry = *first_dated->timestamp;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].timestamp) carry = *nodes[i].timestamp;
    effective[i] = carry;
  }

  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return effective[a] < effective[b]; });

  HTrace trace;
  trace.article_id = tree.article_id();
  trace.n_comments = nodes.size();
  HIndexCounter counter;
  const Timestamp start = effective[order.front()];
  std::size_t i = 0;
  for (; i < order.size() && effective[order[i]] == start; ++i) counter.add(level_of(nodes[order[i]]));
  trace.h0 = counter.value();
  trace.steps.push_back({start, trace.h0});

  for (; i < order.size(); ++i) {
    const int before = counter.value();
    const int after = counter.add(level_of(nodes[order[i]]));
    for (int h = before + 1; h <= after; ++h) trace.steps.push_back({effective[order[i]], h});
  }
  return trace;
}

DeltaH delta_h(const HTrace& trace) {
  if (trace.steps.size() < 2) {
    throw NoGrowth(trace.article_id + ": no growth observed (single h value)");
  }
  const auto& first = trace.steps.front();
  const auto& last = trace.steps.back();
  DeltaH out;
  out.first_increase = first.at;
  out.last_increase = last.at;
  out.final_h = last.h;
  out.intervals_used = last.h - first.h;
  out.value = days_between(first.at, last.at) / out.intervals_used;
  return out;
}

MaturityStatus maturity(const HTrace& trace, Timestamp now, double k) {
  if (!(k >= 0.0)) throw ConfigError("maturity multiple k must be >= 0");
  const DeltaH dh = delta_h(trace);
  MaturityStatus status;
  status.threshold_multiple = k;
  status.delta_h = dh.value;
  status.time_since_last_increase = days_between(dh.last_increase, now);
  status.degenerate_multiple = k == 0.0;
  status.mature = status.degenerate_multiple || status.time_since_last_increase >= k * dh.value;
  return status;
}

std::vector<SpeedRow> rank_by_speed(std::span<const HTrace> traces, std::size_t min_comments) {
  std::vector<SpeedRow> rows;
  for (const auto& trace : traces) {
    if (trace.n_comments <= min_comments || trace.steps.size() < 2) continue;
    const DeltaH dh = delta_h(trace);
    SpeedRow row;
    row.article_id = trace.article_id;
    row.delta_h = dh.value;
    row.start_day = day_of(trace.steps.front().at);
    row.end_day = day_of(dh.last_increase);
    row.duration_days = days_between(row.start_day, row.end_day);
    row.final_h = dh.final_h;
    row.n_comments = trace.n_comments;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const SpeedRow& a, const SpeedRow& b) {
    if (a.delta_h != b.delta_h) return a.delta_h < b.delta_h;
    return a.article_id < b.article_id;
  });
  return rows;
}

}  // namespace talkpulse
