#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string_view>
#include <utility>
#include <optional>
#include <string>
#include <vector>

#include "talkpulse/discussion.hpp"
#include "talkpulse/ingest.hpp"
#include "talkpulse/table.hpp"
#include "talkpulse/timeseries.hpp"

namespace talkpulse {

struct RunConfig {
  std::vector<std::filesystem::path> edit_paths;
  std::vector<std::filesystem::path> comment_paths;
  /// Input format; chosen per file from its extension when unset.
  std::optional<InputFormat> input_format;
  PeakParams params;
  /// Extra peak factors reported next to params.c (peak and overlap tables).
  std::vector<double> c_sweep{5.0, 10.0, 20.0};
  std::vector<int> tolerances{0, 1, 2};
  std::size_t min_comments = kDefaultMinComments;
  double k = kDefaultMaturityMultiple;
  /// Reference time for maturity; defaults to the latest input timestamp.
  std::optional<Timestamp> as_of;
  std::filesystem::path out_dir = ".";
  OutputFormat format = OutputFormat::csv;
  std::size_t speed_rows = 15;
  std::size_t top_rows = 10;
  int bins_per_decade = 5;
  std::int64_t x_min = 1;
  /// Worker threads for the per-article stage; 0 = hardware concurrency.
  unsigned threads = 0;

  /// Throws ConfigError.
  void validate() const;
};

/// Per-article aggregate. Optional fields stay empty when the quantity is
/// undefined for the article.
struct ArticleReport {
  std::string article_id;
  std::uint64_t n_edits = 0;
  std::uint64_t n_comments = 0;
  std::uint64_t n_dated_comments = 0;
  std::vector<PeakRun> comment_runs;
  std::vector<PeakRun> edit_runs;
  std::optional<std::uint32_t> max_comment_run;
  std::optional<std::uint32_t> max_edit_run;
  std::optional<int> final_h;
  std::optional<int> max_level;
  std::optional<HTrace> trace;
  std::optional<DeltaH> delta_h;
  std::optional<MaturityStatus> maturity;
};

struct ReportOutcome {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> diagnostics;
  std::size_t articles = 0;
};

/// Runs the whole pipeline and writes every table into config.out_dir.
/// Output is a pure function of config and input contents (line order
/// included only through diagnostics). Throws InputError / ConfigError.
ReportOutcome run_report(const RunConfig& config);

/// Per-article stage of run_report, exposed for tests and the CLI.
std::vector<ArticleReport> analyze_articles(const RunConfig& config,
                                            const SeriesMap& edit_series,
                                            const SeriesMap& comment_series,
                                            std::vector<CommentEvent> comments,
                                            Timestamp as_of,
                                            std::vector<std::string>& diagnostics);

/// Reads a peaks table (article, kind, start_day, length, max_ratio) as
/// written by run_report. Per-day ratios are not part of the table, so
/// day_ratios is left empty. Throws InputError.
std::vector<PeakRun> read_peak_table(const std::filesystem::path& path);

/// Size tier of a streaming alert: "c", "2c" or "4c".
std::string alert_tier(double ratio, double c);

struct Alert {
  Day day{};
  std::string article_id;
  ActivityKind kind = ActivityKind::edit;
  std::uint32_t count = 0;
  double median = 0.0;
  double ratio = 0.0;
  std::string tier;
};

Table alert_table(const std::vector<Alert>& alerts);

/// Streaming detectors keyed by (article, kind), fed one finished day at a time.
class WatchSession {
 public:
  explicit WatchSession(PeakParams params);
  /// Throws OutOfOrderFeed when `day` does not advance that feed.
  std::optional<Alert> feed(const std::string& article, ActivityKind kind, Day day,
                            std::uint32_t count);

 private:
  PeakParams params_;
  std::map<std::pair<std::string, ActivityKind>, StreamState> states_;
};

/// Parses one "article,kind,date,count" line. Throws InputError.
struct WatchRecord {
  std::string article_id;
  ActivityKind kind = ActivityKind::edit;
  Day day{};
  std::uint32_t count = 0;
};
WatchRecord parse_watch_line(std::string_view line);
/// "day,article,kind,count,median,ratio,tier"
std::string format_alert(const Alert& alert);

/// Replays an event file through the streaming detector, one state per
/// article. Undated comments are ignored. Timestamps must be
/// non-decreasing in file order unless `sort` is set; otherwise throws
/// InputError. Alerts come back ordered by day, then article.
std::vector<Alert> simulate_watch(const std::filesystem::path& events, ActivityKind kind,
                                  InputFormat format, const PeakParams& params, bool sort,
                                  std::vector<std::string>& diagnostics);

}  // namespace talkpulse
