#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "talkpulse/time.hpp"

namespace talkpulse {

enum class ActivityKind { edit, comment };

std::string_view to_string(ActivityKind kind);
std::optional<ActivityKind> parse_kind(std::string_view text);

enum class InputFormat { jsonl, csv };

/// ".csv" selects CSV, anything else JSONL.
InputFormat format_from_extension(const std::filesystem::path& path);

struct EditEvent {
  std::string article_id;
  Timestamp timestamp;

  bool operator==(const EditEvent&) const = default;
};

/// One comment of a threaded discussion. depth 0 is a thread root and has
/// no parent; a reply sits one level below its parent.
struct CommentEvent {
  std::string article_id;
  std::string comment_id;
  std::optional<std::string> parent_id;
  int depth = 0;
  std::optional<Timestamp> timestamp;
  std::optional<std::string> author;
  std::int64_t doc_order = 0;

  bool operator==(const CommentEvent&) const = default;
};

struct Diagnostic {
  std::string source;
  std::size_t line = 0;
  std::string message;
};

std::string to_string(const Diagnostic& diag);

/// Result of reading one event file. Records are kept in file order.
struct LoadedEvents {
  ActivityKind kind = ActivityKind::edit;
  std::vector<EditEvent> edits;
  std::vector<CommentEvent> comments;
  /// Per-line problems; only the first kMaxStoredDiagnostics are kept.
  std::vector<Diagnostic> diagnostics;
  std::size_t records_read = 0;
  std::size_t records_rejected = 0;
  /// Comments accepted with an absent or unusable timestamp.
  std::size_t undated_comments = 0;

  static constexpr std::size_t kMaxStoredDiagnostics = 1000;
};

/// Reads an event file. Throws InputError if the file cannot be opened.
/// Malformed records produce a diagnostic and are skipped.
LoadedEvents load_events(const std::filesystem::path& path, ActivityKind kind,
                         InputFormat format);
LoadedEvents load_events(std::istream& in, ActivityKind kind, InputFormat format,
                         std::string source_name);

/// RFC 4180 field split of one CSV line; false on an unterminated quote.
bool split_csv_line(std::string_view line, std::vector<std::string>& fields);

/// Canonical JSONL encodings (key order: article, id, parent, depth, ts,
/// author, ord for comments; article, ts for edits). No trailing newline.
std::string to_jsonl(const CommentEvent& event);
std::string to_jsonl(const EditEvent& event);

/// Dense per-day event counts for one article, trimmed to the active span.
struct ActivitySeries {
  std::string article_id;
  ActivityKind kind = ActivityKind::edit;
  Day start_day{};
  std::vector<std::uint32_t> counts;

  Day end_day() const { return start_day + std::chrono::days{counts.size() - 1}; }
  std::uint64_t total() const;
  std::uint32_t at(Day day) const;

  bool operator==(const ActivitySeries&) const = default;
};

using SeriesMap = std::map<std::string, ActivitySeries, std::less<>>;

/// Bins dated events per UTC day. Undated comments are skipped.
SeriesMap build_series(std::span<const EditEvent> events);
SeriesMap build_series(std::span<const CommentEvent> events);

/// Builds a series from raw day stamps of one article. `days` need not be sorted.
ActivitySeries series_from_days(std::string article_id, ActivityKind kind,
                                std::vector<Day> days);

}  // namespace talkpulse
