#pragma once

#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "talkpulse/ingest.hpp"
#include "talkpulse/time.hpp"

namespace talkpulse {

struct RawTalkPage {
  std::string article_id;
  std::string text;
};

/// A candidate comment: a run of consecutive lines at one indentation level.
struct CommentBlock {
  int depth = 0;
  std::string body;
  /// First block after a section heading.
  bool section_start = false;

  bool operator==(const CommentBlock&) const = default;
};

struct DateMatch {
  std::size_t begin = 0;
  std::size_t end = 0;
  /// Absent when the text has the shape of a date but the fields are
  /// invalid (31 February, 25:10, year before 2001, ...).
  std::optional<Timestamp> timestamp;
};

/// Date patterns accepted in signatures.
///
/// A pattern is literal text with the placeholders {HH} {MM} {SS} {D}
/// {Month} {YYYY}; a space matches any run of blanks. {D}, {Month} and
/// {YYYY} are mandatory, missing time fields default to zero. Month names
/// match full English names and the usual abbreviations, case-insensitively.
class SignatureRegistry {
 public:
  /// The standard "HH:MM, D Month YYYY (UTC)" form and its common variants.
  static SignatureRegistry defaults();
  /// defaults() plus every non-empty, non-'#' line of `path`.
  static SignatureRegistry with_file(const std::filesystem::path& path);

  /// Throws ConfigError on a pattern that lacks a date field or repeats one.
  void add_pattern(std::string_view pattern);

  /// The match ending last in `text`; ties go to the longest match.
  std::optional<DateMatch> last_date(std::string_view text) const;

  std::size_t size() const { return patterns_.size(); }

 private:
  enum class Field { hour, minute, second, day, month, year };
  struct Compiled {
    std::string source;
    std::regex regex;
    std::vector<Field> groups;
  };
  std::vector<Compiled> patterns_;
};

const SignatureRegistry& default_registry();

struct SignatureMatch {
  std::optional<std::string> author;
  std::optional<Timestamp> timestamp;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Splits wikitext into indentation blocks. Headings ("== x ==") and blank
/// lines separate blocks and are not emitted; a line carrying a signature
/// closes its block.
std::vector<CommentBlock> split_comments(const RawTalkPage& page,
                                         const SignatureRegistry& registry = default_registry());

/// Finds the last signature of a comment body: a date and/or the
/// [[User:...]] / [[User talk:...]] link right before it.
std::optional<SignatureMatch> extract_signature(
    std::string_view body, const SignatureRegistry& registry = default_registry());

struct TalkParse {
  std::vector<CommentEvent> events;
  std::vector<std::string> diagnostics;
  /// Blocks without an identifiable author folded into the next comment.
  std::size_t merged_blocks = 0;
  /// Trailing author-less blocks with nothing to fold into.
  std::size_t dropped_blocks = 0;
};

/// Turns a page into comment events. Only blocks with an identified author
/// become events; ids are "c<ord>" with ord counting events from 0.
TalkParse to_events(const RawTalkPage& page,
                    const SignatureRegistry& registry = default_registry());

/// Loads a page from a file; the article id is the file stem.
RawTalkPage read_talk_page(const std::filesystem::path& path);

}  // namespace talkpulse
