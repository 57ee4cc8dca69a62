#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "talkpulse/ingest.hpp"
#include "talkpulse/time.hpp"

namespace talkpulse {

/// A day t peaks when n(t) > c * max(m(t), n_min), m(t) being the median of
/// the counts in [t - window_halfwidth, t + window_halfwidth].
struct PeakParams {
  double c = 5.0;
  std::uint32_t n_min = 10;
  std::uint32_t window_halfwidth = 14;

  /// Throws ConfigError unless c > 1, n_min >= 1 and window_halfwidth >= 1.
  void validate() const;
};

/// Maximal run of consecutive peak days.
struct PeakRun {
  std::string article_id;
  ActivityKind kind = ActivityKind::edit;
  Day start_day{};
  std::uint32_t length = 0;
  /// n(t) / max(m(t), n_min) for every day of the run.
  std::vector<double> day_ratios;

  Day end_day() const { return start_day + std::chrono::days{length - 1}; }
  double max_ratio() const;

  bool operator==(const PeakRun&) const = default;
};

/// Median of a multiset of counts under sliding insert/erase. Windows here
/// hold a few dozen values, so a sorted vector beats tree-based structures.
class SlidingWindowMedian {
 public:
  void insert(std::uint32_t value);
  /// Removes one occurrence of `value`, which must be present.
  void erase(std::uint32_t value);
  /// Mean of the two central values for even sizes; 0 when empty.
  double median() const;
  std::size_t size() const { return sorted_.size(); }
  void clear() { sorted_.clear(); }

 private:
  std::vector<std::uint32_t> sorted_;
};

/// Centred median, window truncated at the ends of the series, day t included.
std::vector<double> sliding_median(std::span<const std::uint32_t> counts,
                                   std::uint32_t halfwidth);
std::vector<double> sliding_median(const ActivitySeries& series, std::uint32_t halfwidth);

/// One flag per day of the series.
std::vector<bool> peak_flags(const ActivitySeries& series, const PeakParams& params);

/// Peak runs in chronological order.
std::vector<PeakRun> detect_peaks(const ActivitySeries& series, const PeakParams& params);
/// Same, reusing medians from sliding_median(series, params.window_halfwidth).
std::vector<PeakRun> detect_peaks(const ActivitySeries& series, std::span<const double> medians,
                                  const PeakParams& params);

/// Days between start days of consecutive runs; a run counts once.
std::vector<long> inter_peak_intervals(std::span<const PeakRun> runs);

/// Total number of peak days covered by the runs.
std::uint64_t peak_day_total(std::span<const PeakRun> runs);

class OutOfOrderFeed : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct StreamStep {
  Day day{};
  double median = 0.0;
  double ratio = 0.0;
  bool is_peak = false;
};

/// Real-time detector state: counts of the days preceding the current one.
/// The median uses only past days, so results match a trailing window and
/// legitimately differ from the centred batch detector.
class StreamState {
 public:
  std::optional<Day> current_day() const { return current_day_; }
  const std::deque<std::uint32_t>& buffer() const { return buffer_; }

  /// Evaluates `count` for `day` against the buffered past, then appends it.
  /// Skipped days are filled with zero counts. The buffer keeps the last
  /// params.window_halfwidth days. Throws OutOfOrderFeed if `day` is not
  /// after the current day.
  StreamStep step(Day day, std::uint32_t count, const PeakParams& params);

 private:
  std::deque<std::uint32_t> buffer_;
  std::optional<Day> current_day_;
};

inline StreamStep stream_step(StreamState& state, Day day, std::uint32_t count,
                              const PeakParams& params) {
  return state.step(day, count, params);
}

/// Batch evaluation with the trailing window [t - window_halfwidth, t - 1];
/// the reference the streaming detector must agree with.
std::vector<StreamStep> trailing_detection(const ActivitySeries& series,
                                           const PeakParams& params);

}  // namespace talkpulse
