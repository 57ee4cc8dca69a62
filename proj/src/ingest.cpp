#include "talkpulse/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <unordered_map>

#include <json.hpp>

#include "talkpulse/errors.hpp"

namespace talkpulse {

namespace {

using nlohmann::json;

/// Field accessor shared by the JSONL and CSV record readers. A missing
/// optional field and an explicit null are both "absent".
class Record {
 public:
  virtual ~Record() = default;
  virtual bool has(std::string_view key) const = 0;
  virtual std::optional<std::string> string_field(std::string_view key, bool& type_ok) const = 0;
  virtual std::optional<long long> int_field(std::string_view key, bool& type_ok) const = 0;
};

class JsonRecord final : public Record {
 public:
  explicit JsonRecord(const json& obj) : obj_(obj) {}

  bool has(std::string_view key) const override { return obj_.contains(key); }

  std::optional<std::string> string_field(std::string_view key, bool& type_ok) const override {
    auto it = obj_.find(key);
    type_ok = true;
    if (it == obj_.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
      type_ok = false;
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  std::optional<long long> int_field(std::string_view key, bool& type_ok) const override {
    auto it = obj_.find(key);
    type_ok = true;
    if (it == obj_.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) {
      type_ok = false;
      return std::nullopt;
    }
    return it->get<long long>();
  }

 private:
  const json& obj_;
};

/// Splits one CSV line (RFC 4180 quoting, no embedded newlines).
bool split_csv(std::string_view line, std::vector<std::string>& out) {
  out.clear();
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) return false;
  out.push_back(std::move(field));
  return true;
}

class CsvRecord final : public Record {
 public:
  CsvRecord(const std::unordered_map<std::string, std::size_t>& columns,
            const std::vector<std::string>& cells)
      : columns_(columns), cells_(cells) {}

  bool has(std::string_view key) const override {
    return columns_.find(std::string(key)) != columns_.end();
  }

  std::optional<std::string> string_field(std::string_view key, bool& type_ok) const override {
    type_ok = true;
    const std::string* cell = lookup(key);
    if (cell == nullptr || cell->empty()) return std::nullopt;
    return *cell;
  }

  std::optional<long long> int_field(std::string_view key, bool& type_ok) const override {
    type_ok = true;
    const std::string* cell = lookup(key);
    if (cell == nullptr || cell->empty()) return std::nullopt;
    long long value = 0;
    auto [ptr, ec] = std::from_chars(cell->data(), cell->data() + cell->size(), value);
    if (ec != std::errc{} || ptr != cell->data() + cell->size()) {
      type_ok = false;
      return std::nullopt;
    }
    return value;
  }

 private:
  const std::string* lookup(std::string_view key) const {
    auto it = columns_.find(std::string(key));
    if (it == columns_.end() || it->second >= cells_.size()) return nullptr;
    return &cells_[it->second];
  }

  const std::unordered_map<std::string, std::size_t>& columns_;
  const std::vector<std::string>& cells_;
};

struct Bounds {
  Timestamp lo = earliest_valid_timestamp();
  Timestamp hi = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());

  bool contains(Timestamp ts) const { return ts >= lo && ts <= hi; }
};

/// Returns an error message, or an empty string on success.
std::string decode_edit(const Record& rec, const Bounds& bounds, EditEvent& out) {
  bool ok = true;
  auto article = rec.string_field("article", ok);
  if (!ok || !article || article->empty()) return "missing or non-string \"article\"";
  auto ts_text = rec.string_field("ts", ok);
  if (!ok || !ts_text) return "missing or non-string \"ts\"";
  auto ts = parse_timestamp(*ts_text);
  if (!ts) return "malformed timestamp \"" + *ts_text + "\"";
  if (!bounds.contains(*ts)) return "timestamp out of range \"" + *ts_text + "\"";
  out.article_id = std::move(*article);
  out.timestamp = *ts;
  return {};
}

std::string decode_comment(const Record& rec, const Bounds& bounds, CommentEvent& out,
                           bool& dated) {
  bool ok = true;
  auto article = rec.string_field("article", ok);
  if (!ok || !article || article->empty()) return "missing or non-string \"article\"";
  auto id = rec.string_field("id", ok);
  if (!ok || !id || id->empty()) return "missing or non-string \"id\"";
  auto parent = rec.string_field("parent", ok);
  if (!ok) return "non-string \"parent\"";
  auto depth = rec.int_field("depth", ok);
  if (!ok || !depth || *depth < 0) return "missing or negative \"depth\"";
  auto ord = rec.int_field("ord", ok);
  if (!ok || !ord || *ord < 0) return "missing or negative \"ord\"";
  auto author = rec.string_field("author", ok);
  if (!ok) return "non-string \"author\"";
  if ((*depth == 0) != !parent.has_value()) {
    return "depth 0 must coincide with an absent parent";
  }

  out.timestamp.reset();
  auto ts_text = rec.string_field("ts", ok);
  if (ok && ts_text) {
    if (auto ts = parse_timestamp(*ts_text); ts && bounds.contains(*ts)) out.timestamp = *ts;
  }
  dated = out.timestamp.has_value();
  out.article_id = std::move(*article);
  out.comment_id = std::move(*id);
  out.parent_id = std::move(parent);
  out.depth = static_cast<int>(*depth);
  out.author = std::move(author);
  out.doc_order = *ord;
  return {};
}

class Loader {
 public:
  Loader(ActivityKind kind, std::string source) : source_(std::move(source)) {
    result_.kind = kind;
  }

  void reject(std::size_t line, std::string message) {
    ++result_.records_rejected;
    if (result_.diagnostics.size() < LoadedEvents::kMaxStoredDiagnostics) {
      result_.diagnostics.push_back({source_, line, std::move(message)});
    }
  }

  void accept(const Record& rec, std::size_t line) {
    ++result_.records_read;
    if (result_.kind == ActivityKind::edit) {
      EditEvent ev;
      if (auto err = decode_edit(rec, bounds_, ev); !err.empty()) return reject(line, err);
      result_.edits.push_back(std::move(ev));
    } else {
      CommentEvent ev;
      bool dated = false;
      if (auto err = decode_comment(rec, bounds_, ev, dated); !err.empty()) {
        return reject(line, err);
      }
      if (!dated) ++result_.undated_comments;
      result_.comments.push_back(std::move(ev));
    }
  }

  void malformed(std::size_t line, std::string message) {
    ++result_.records_read;
    reject(line, std::move(message));
  }

  LoadedEvents take() { return std::move(result_); }

 private:
  std::string source_;
  Bounds bounds_;
  LoadedEvents result_;
};

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return c == ' ' || c == '\t'; });
}

}  // namespace

std::string_view to_string(ActivityKind kind) {
  return kind == ActivityKind::edit ? "edit" : "comment";
}

std::optional<ActivityKind> parse_kind(std::string_view text) {
  if (text == "edit" || text == "edits") return ActivityKind::edit;
  if (text == "comment" || text == "comments") return ActivityKind::comment;
  return std::nullopt;
}

InputFormat format_from_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv" ? InputFormat::csv : InputFormat::jsonl;
}

std::string to_string(const Diagnostic& diag) {
  return diag.source + ":" + std::to_string(diag.line) + ": " + diag.message;
}

LoadedEvents load_events(const std::filesystem::path& path, ActivityKind kind,
                         InputFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return load_events(in, kind, format, path.string());
}

LoadedEvents load_events(std::istream& in, ActivityKind kind, InputFormat format,
                         std::string source_name) {
  Loader loader(kind, std::move(source_name));
  std::string line;
  std::size_t line_no = 0;

  if (format == InputFormat::jsonl) {
    while (std::getline(in, line)) {
      ++line_no;
      strip_cr(line);
      if (blank(line)) continue;
      json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (obj.is_discarded() || !obj.is_object()) {
        loader.malformed(line_no, "not a JSON object");
        continue;
      }
      loader.accept(JsonRecord(obj), line_no);
    }
  } else {
    std::unordered_map<std::string, std::size_t> columns;
    std::vector<std::string> cells;
    bool have_header = false;
    while (std::getline(in, line)) {
      ++line_no;
      strip_cr(line);
      if (blank(line)) continue;
      if (!split_csv(line, cells)) {
        if (!have_header) throw InputError("unterminated quote in CSV header");
        loader.malformed(line_no, "unterminated quoted field");
        continue;
      }
      if (!have_header) {
        for (std::size_t i = 0; i < cells.size(); ++i) columns.emplace(cells[i], i);
        have_header = true;
        continue;
      }
      if (cells.size() != columns.size()) {
        loader.malformed(line_no, "expected " + std::to_string(columns.size()) + " fields, got " +
                                      std::to_string(cells.size()));
        continue;
      }
      loader.accept(CsvRecord(columns, cells), line_no);
    }
  }
  if (in.bad()) throw InputError("read error");
  return loader.take();
}

std::string to_jsonl(const CommentEvent& event) {
  nlohmann::ordered_json obj;
  obj["article"] = event.article_id;
  obj["id"] = event.comment_id;
  obj["parent"] = event.parent_id ? nlohmann::ordered_json(*event.parent_id) : nullptr;
  obj["depth"] = event.depth;
  obj["ts"] = event.timestamp ? nlohmann::ordered_json(format_timestamp(*event.timestamp))
                              : nullptr;
  obj["author"] = event.author ? nlohmann::ordered_json(*event.author) : nullptr;
  obj["ord"] = event.doc_order;
  return obj.dump();
}

std::string to_jsonl(const EditEvent& event) {
  nlohmann::ordered_json obj;
  obj["article"] = event.article_id;
  obj["ts"] = format_timestamp(event.timestamp);
  return obj.dump();
}

std::uint64_t ActivitySeries::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

std::uint32_t ActivitySeries::at(Day day) const {
  if (counts.empty() || day < start_day || day > end_day()) return 0;
  return counts[static_cast<std::size_t>((day - start_day).count())];
}

ActivitySeries series_from_days(std::string article_id, ActivityKind kind,
                                std::vector<Day> days) {
  ActivitySeries series{std::move(article_id), kind, Day{}, {}};
  if (days.empty()) return series;
  std::sort(days.begin(), days.end());
  series.start_day = days.front();
  series.counts.assign(static_cast<std::size_t>((days.back() - days.front()).count()) + 1, 0);
  for (Day d : days) ++series.counts[static_cast<std::size_t>((d - series.start_day).count())];
  return series;
}

namespace {

template <typename Event, typename DayOf>
SeriesMap bin_by_article(std::span<const Event> events, ActivityKind kind, DayOf day_of_event) {
  std::unordered_map<std::string_view, std::vector<Day>> days;
  for (const auto& ev : events) {
    if (auto d = day_of_event(ev)) days[ev.article_id].push_back(*d);
  }
  SeriesMap out;
  for (auto& [article, stamps] : days) {
    std::string id(article);
    out.emplace(id, series_from_days(id, kind, std::move(stamps)));
  }
  return out;
}

}  // namespace

SeriesMap build_series(std::span<const EditEvent> events) {
  return bin_by_article(events, ActivityKind::edit,
                        [](const EditEvent& e) -> std::optional<Day> { return day_of(e.timestamp); });
}

SeriesMap build_series(std::span<const CommentEvent> events) {
  return bin_by_article(events, ActivityKind::comment,
                        [](const CommentEvent& e) -> std::optional<Day> {
                          if (!e.timestamp) return std::nullopt;
                          return day_of(*e.timestamp);
                        });
}

bool split_csv_line(std::string_view line, std::vector<std::string>& fields) {
  return split_csv(line, fields);
}

}  // namespace talkpulse
