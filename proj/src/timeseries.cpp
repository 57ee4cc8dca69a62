#include "talkpulse/timeseries.hpp"

#include <algorithm>
#include <cassert>

#include "talkpulse/errors.hpp"

namespace talkpulse {

namespace {

double floored(double median, std::uint32_t n_min) {
  return std::max(median, static_cast<double>(n_min));
}

bool exceeds(std::uint32_t count, double floor_value, double c) {
  return static_cast<double>(count) > c * floor_value;
}

}  // namespace

void PeakParams::validate() const {
  if (!(c > 1.0)) throw ConfigError("peak factor c must be > 1");
  if (n_min < 1) throw ConfigError("n_min must be >= 1");
  if (window_halfwidth < 1) throw ConfigError("window half-width must be >= 1");
}

double PeakRun::max_ratio() const {
  return day_ratios.empty() ? 0.0 : *std::max_element(day_ratios.begin(), day_ratios.end());
}

void SlidingWindowMedian::insert(std::uint32_t value) {
  sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), value), value);
}

void SlidingWindowMedian::erase(std::uint32_t value) {
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), value);
  assert(it != sorted_.end() && *it == value);
  sorted_.erase(it);
}

double SlidingWindowMedian::median() const {
  const auto n = sorted_.size();
  if (n == 0) return 0.0;
  if (n % 2 == 1) return sorted_[n / 2];
  return (static_cast<double>(sorted_[n / 2 - 1]) + static_cast<double>(sorted_[n / 2])) / 2.0;
}

std::vector<double> sliding_median(std::span<const std::uint32_t> counts,
                                   std::uint32_t halfwidth) {
  const std::size_t n = counts.size();
  const std::size_t h = halfwidth;
  std::vector<double> out(n);
  SlidingWindowMedian window;
  for (std::size_t i = 0; i < std::min(n, h + 1); ++i) window.insert(counts[i]);
  for (std::size_t t = 0; t < n; ++t) {
    out[t] = window.median();
    if (t + h + 1 < n) window.insert(counts[t + h + 1]);
    if (t >= h) window.erase(counts[t - h]);
  }
  return out;
}

std::vector<double> sliding_median(const ActivitySeries& series, std::uint32_t halfwidth) {
  return sliding_median(std::span<const std::uint32_t>(series.counts), halfwidth);
}

std::vector<bool> peak_flags(const ActivitySeries& series, const PeakParams& params) {
  const auto medians = sliding_median(series, params.window_halfwidth);
  std::vector<bool> flags(series.counts.size());
  for (std::size_t t = 0; t < flags.size(); ++t) {
    flags[t] = exceeds(series.counts[t], floored(medians[t], params.n_min), params.c);
  }
  return flags;
}

std::vector<PeakRun> detect_peaks(const ActivitySeries& series, const PeakParams& params) {
  return detect_peaks(series, sliding_median(series, params.window_halfwidth), params);
}

std::vector<PeakRun> detect_peaks(const ActivitySeries& series, std::span<const double> medians,
                                  const PeakParams& params) {
  if (medians.size() != series.counts.size()) {
    throw std::invalid_argument("detect_peaks: one median per day required");
  }
  std::vector<PeakRun> runs;
  PeakRun* open = nullptr;
  for (std::size_t t = 0; t < series.counts.size(); ++t) {
    const double floor_value = floored(medians[t], params.n_min);
    if (!exceeds(series.counts[t], floor_value, params.c)) {
      open = nullptr;
      continue;
    }
    if (open == nullptr) {
      runs.push_back({series.article_id, series.kind,
                      series.start_day + std::chrono::days{static_cast<long>(t)}, 0, {}});
      open = &runs.back();
    }
    ++open->length;
    open->day_ratios.push_back(series.counts[t] / floor_value);
  }
  return runs;
}

std::vector<long> inter_peak_intervals(std::span<const PeakRun> runs) {
  std::vector<long> out;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    out.push_back(days_between(runs[i - 1].start_day, runs[i].start_day));
  }
  return out;
}

std::uint64_t peak_day_total(std::span<const PeakRun> runs) {
  std::uint64_t total = 0;
  for (const auto& r : runs) total += r.length;
  return total;
}

StreamStep StreamState::step(Day day, std::uint32_t count, const PeakParams& params) {
  if (current_day_) {
    if (day <= *current_day_) {
      throw OutOfOrderFeed("day " + format_day(day) + " does not follow " +
                           format_day(*current_day_));
    }
    const long gap = days_between(*current_day_, day) - 1;
    for (long i = 0; i < std::min<long>(gap, params.window_halfwidth); ++i) buffer_.push_back(0);
    while (buffer_.size() > params.window_halfwidth) buffer_.pop_front();
  }

  std::vector<std::uint32_t> past(buffer_.begin(), buffer_.end());
  double median = 0.0;
  if (!past.empty()) {
    std::sort(past.begin(), past.end());
    const auto n = past.size();
    median = n % 2 == 1 ? past[n / 2]
                        : (static_cast<double>(past[n / 2 - 1]) + static_cast<double>(past[n / 2])) / 2.0;
  }
  const double floor_value = floored(median, params.n_min);
  StreamStep result{day, median, count / floor_value, exceeds(count, floor_value, params.c)};

  buffer_.push_back(count);
  while (buffer_.size() > params.window_halfwidth) buffer_.pop_front();
  current_day_ = day;
  return result;
}

std::vector<StreamStep> trailing_detection(const ActivitySeries& series,
                                           const PeakParams& params) {
  std::vector<StreamStep> out;
  out.reserve(series.counts.size());
  SlidingWindowMedian window;
  const std::size_t w = params.window_halfwidth;
  for (std::size_t t = 0; t < series.counts.size(); ++t) {
    const double median = window.median();
    const double floor_value = floored(median, params.n_min);
    const auto count = series.counts[t];
    out.push_back({series.start_day + std::chrono::days{static_cast<long>(t)}, median,
                   count / floor_value, exceeds(count, floor_value, params.c)});
    window.insert(count);
    if (t >= w) window.erase(series.counts[t - w]);
  }
  return out;
}

}  // namespace talkpulse
