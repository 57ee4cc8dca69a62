#include "talkpulse/peakstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>

namespace talkpulse {

std::map<std::string, std::vector<PeakRun>> group_by_article(std::span<const PeakRun> runs) {
  std::map<std::string, std::vector<PeakRun>> grouped;
  for (const auto& r : runs) grouped[r.article_id].push_back(r);
  for (auto& [_, list] : grouped) {
    std::sort(list.begin(), list.end(),
              [](const PeakRun& a, const PeakRun& b) { return a.start_day < b.start_day; });
  }
  return grouped;
}

OverlapReport overlap(std::span<const PeakRun> comment_runs, std::span<const PeakRun> edit_runs,
                      int tolerance) {
  if (tolerance < 0) throw std::invalid_argument("overlap tolerance must be >= 0");
  std::unordered_map<std::string_view, std::vector<Day>> edit_days;
  for (const auto& r : edit_runs) {
    auto& days = edit_days[r.article_id];
    for (std::uint32_t i = 0; i < r.length; ++i) days.push_back(r.start_day + std::chrono::days{i});
  }
  for (auto& [_, days] : edit_days) std::sort(days.begin(), days.end());

  OverlapReport report;
  report.tolerance_days = tolerance;
  std::set<std::string_view> articles;
  for (const auto& run : comment_runs) {
    ++report.n_comment_runs;
    auto it = edit_days.find(run.article_id);
    if (it == edit_days.end()) continue;
    const auto& days = it->second;
    bool hit = false;
    for (std::uint32_t i = 0; i < run.length && !hit; ++i) {
      const Day d = run.start_day + std::chrono::days{i};
      auto lo = std::lower_bound(days.begin(), days.end(), d - std::chrono::days{tolerance});
      hit = lo != days.end() && *lo <= d + std::chrono::days{tolerance};
    }
    if (hit) {
      ++report.n_overlapping_comment_peaks;
      articles.insert(run.article_id);
    }
  }
  report.n_articles_with_overlap = articles.size();
  return report;
}

std::map<std::string, int> anniversaries(std::span<const PeakRun> runs) {
  std::map<std::string, int> out;
  for (const auto& [article, list] : group_by_article(runs)) {
    int count = 0;
    for (long gap : inter_peak_intervals(list)) {
      if (std::find(std::begin(kAnniversaryGaps), std::end(kAnniversaryGaps), gap) !=
          std::end(kAnniversaryGaps)) {
        ++count;
      }
    }
    out.emplace(article, count);
  }
  return out;
}

PowerLawFit fit_power_law(std::span<const std::int64_t> samples, std::int64_t x_min) {
  if (x_min < 1) throw std::invalid_argument("x_min must be >= 1");
  const double shift = static_cast<double>(x_min) - 0.5;
  double log_sum = 0.0;
  std::size_t n = 0;
  bool all_at_min = true;
  for (auto x : samples) {
    if (x < x_min) continue;
    ++n;
    log_sum += std::log(static_cast<double>(x) / shift);
    all_at_min = all_at_min && x == x_min;
  }
  if (n < kMinPowerLawSamples) {
    throw std::invalid_argument("power-law fit needs at least 10 samples >= x_min, got " +
                                std::to_string(n));
  }
  PowerLawFit fit{0.0, x_min, n, all_at_min};
  fit.alpha = all_at_min ? std::numeric_limits<double>::infinity()
                         : 1.0 + static_cast<double>(n) / log_sum;
  return fit;
}

std::uint64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::vector<double> Histogram::densities() const {
  std::vector<double> out(counts.size(), 0.0);
  const double n = static_cast<double>(total());
  if (n == 0) return out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double width = scheme == BinScheme::logarithmic
                             ? std::log10(bin_edges[i + 1]) - std::log10(bin_edges[i])
                             : bin_edges[i + 1] - bin_edges[i];
    out[i] = static_cast<double>(counts[i]) / (n * width);
  }
  return out;
}

Histogram log_binned_histogram(std::span<const double> samples, int bins_per_decade) {
  if (bins_per_decade < 1) throw std::invalid_argument("bins_per_decade must be >= 1");
  Histogram hist;
  hist.scheme = BinScheme::logarithmic;
  if (samples.empty()) return hist;
  for (double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument("log binning needs positive finite samples");
    }
  }
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double b = bins_per_decade;
  const auto edge = [b](long k) { return std::pow(10.0, static_cast<double>(k) / b); };

  long k_lo = static_cast<long>(std::floor(std::log10(*lo_it) * b));
  while (edge(k_lo) > *lo_it) --k_lo;
  while (edge(k_lo + 1) <= *lo_it) ++k_lo;
  long k_hi = static_cast<long>(std::floor(std::log10(*hi_it) * b)) + 1;
  while (edge(k_hi) <= *hi_it) ++k_hi;
  while (k_hi - 1 > k_lo && edge(k_hi - 1) > *hi_it) --k_hi;

  for (long k = k_lo; k <= k_hi; ++k) hist.bin_edges.push_back(edge(k));
  hist.counts.assign(hist.bin_edges.size() - 1, 0);
  for (double x : samples) {
    // Last edge <= x; the edge table is authoritative, not log10 rounding.
    auto it = std::upper_bound(hist.bin_edges.begin(), hist.bin_edges.end(), x);
    ++hist.counts[static_cast<std::size_t>(it - hist.bin_edges.begin()) - 1];
  }
  return hist;
}

Histogram integer_histogram(std::span<const std::int64_t> values) {
  Histogram hist;
  if (values.empty()) return hist;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  for (std::int64_t v = *lo; v <= *hi + 1; ++v) hist.bin_edges.push_back(static_cast<double>(v));
  hist.counts.assign(static_cast<std::size_t>(*hi - *lo + 1), 0);
  for (auto v : values) ++hist.counts[static_cast<std::size_t>(v - *lo)];
  return hist;
}

Correlation pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = xs.size();
  if (n < 3) throw std::invalid_argument("pearson: need at least 3 pairs");
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson: zero variance");

  Correlation out;
  out.n = n;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  const double one_minus_r2 = 1.0 - out.r * out.r;
  if (one_minus_r2 <= 0.0) {
    out.p = 0.0;
  } else {
    const double t = out.r * std::sqrt(df / one_minus_r2);
    boost::math::students_t dist(df);
    out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
  }
  return out;
}

Histogram peaks_per_article(std::span<const PeakRun> runs) {
  std::map<std::string_view, std::int64_t> per_article;
  for (const auto& r : runs) ++per_article[r.article_id];
  std::vector<std::int64_t> values;
  values.reserve(per_article.size());
  for (const auto& [_, n] : per_article) values.push_back(n);
  return integer_histogram(values);
}

Histogram run_lengths(std::span<const PeakRun> runs) {
  std::vector<std::int64_t> values;
  values.reserve(runs.size());
  for (const auto& r : runs) values.push_back(r.length);
  return integer_histogram(values);
}

}  // namespace talkpulse
