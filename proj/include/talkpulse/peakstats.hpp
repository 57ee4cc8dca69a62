#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "talkpulse/timeseries.hpp"

namespace talkpulse {

struct OverlapReport {
  int tolerance_days = 0;
  std::uint64_t n_comment_runs = 0;
  std::uint64_t n_overlapping_comment_peaks = 0;
  std::uint64_t n_articles_with_overlap = 0;
};

/// A comment run overlaps when one of its days lies within +-tolerance days
/// of an edit peak day of the same article.
OverlapReport overlap(std::span<const PeakRun> comment_runs, std::span<const PeakRun> edit_runs,
                      int tolerance);

/// Gap sizes (days between consecutive run starts) that count as anniversaries.
inline constexpr long kAnniversaryGaps[] = {364, 365, 366};

/// Per article, the number of consecutive-run gaps of 364-366 days. Every
/// article present in `runs` gets an entry. Runs may arrive in any order.
std::map<std::string, int> anniversaries(std::span<const PeakRun> runs);

struct PowerLawFit {
  /// Exponent magnitude: density ~ x^-alpha. +infinity when degenerate.
  double alpha = 0.0;
  std::int64_t x_min = 1;
  std::size_t n_samples = 0;
  /// Every sample equals x_min; the likelihood grows without bound in alpha.
  bool degenerate = false;
};

/// Discrete power-law exponent via the continuous approximation
/// alpha = 1 + n / sum ln(x_i / (x_min - 0.5)) over samples >= x_min.
/// Throws std::invalid_argument when fewer than 10 samples reach x_min.
PowerLawFit fit_power_law(std::span<const std::int64_t> samples, std::int64_t x_min = 1);

inline constexpr std::size_t kMinPowerLawSamples = 10;

enum class BinScheme { linear, logarithmic };

struct Histogram {
  std::vector<double> bin_edges;
  std::vector<std::uint64_t> counts;
  BinScheme scheme = BinScheme::linear;

  std::uint64_t total() const;
  /// Counts divided by (total * bin width); the width is measured in
  /// decades for logarithmic bins.
  std::vector<double> densities() const;
};

/// Edges 10^(k / bins_per_decade) spanning [min, max]; bins are [lo, hi).
/// Throws std::invalid_argument on a non-positive sample or bins_per_decade < 1.
Histogram log_binned_histogram(std::span<const double> samples, int bins_per_decade = 5);

/// Unit-width bins [v, v+1) for every integer v from min to max.
Histogram integer_histogram(std::span<const std::int64_t> values);

struct Correlation {
  double r = 0.0;
  /// Two-sided, Student t with n - 2 degrees of freedom.
  double p = 1.0;
  std::size_t n = 0;
};

/// Throws std::invalid_argument on length mismatch, n < 3 or zero variance.
Correlation pearson(std::span<const double> xs, std::span<const double> ys);

/// Histogram of the number of runs per article (articles without runs absent).
Histogram peaks_per_article(std::span<const PeakRun> runs);
/// Histogram of run lengths in days.
Histogram run_lengths(std::span<const PeakRun> runs);

/// Runs per article, keyed by article, each list sorted by start day.
std::map<std::string, std::vector<PeakRun>> group_by_article(std::span<const PeakRun> runs);

}  // namespace talkpulse
