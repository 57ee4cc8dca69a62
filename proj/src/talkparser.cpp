#include "talkpulse/talkparser.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "talkpulse/errors.hpp"

namespace talkpulse {

namespace {

// Longest names first: ECMAScript alternation takes the first branch that fits.
constexpr std::string_view kMonthAlternation =
    "(January|February|March|April|May|June|July|August|September|October|November|December|"
    "Sept|Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sep|Oct|Nov|Dec)";

constexpr std::array<std::string_view, 9> kDefaultPatterns = {
    "{HH}:{MM}, {D} {Month} {YYYY} (UTC)",
    "{HH}:{MM} {D} {Month} {YYYY} (UTC)",
    "{HH}:{MM}, {D} {Month}, {YYYY} (UTC)",
    "{HH}:{MM}:{SS}, {D} {Month} {YYYY} (UTC)",
    "{D} {Month} {YYYY} {HH}:{MM} (UTC)",
    "{D} {Month} {YYYY}, {HH}:{MM} (UTC)",
    "{D} {Month} {YYYY} (UTC)",
    "{HH}:{MM}, {D} {Month} {YYYY} (GMT)",
    "{HH}:{MM}, {D} {Month} {YYYY}",
};

// A signature's user link may be followed by talk/contribs links before the date.
constexpr std::size_t kMaxLinkToDateGap = 80;
// Text allowed after a signature that still ends its line or body.
constexpr std::size_t kMaxSignatureTail = 80;

const std::regex& user_link_regex() {
  static const std::regex re(
      R"(\[\[[ \t]*[Uu]ser(?:[ _]+[Tt]alk)?[ \t]*:[ \t]*([^|\]\[/#\n]+?)[ \t]*(?:[/#][^|\]\n]*)?(?:\|[^\]\n]*)?\]\])");
  return re;
}

std::optional<unsigned> month_number(std::string name) {
  static constexpr std::array<std::string_view, 12> kPrefixes = {
      "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};
  if (name.size() < 3) return std::nullopt;
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (unsigned i = 0; i < kPrefixes.size(); ++i) {
    if (name.compare(0, 3, kPrefixes[i]) == 0) return i + 1;
  }
  return std::nullopt;
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool is_heading(std::string_view line) {
  if (line.size() < 3 || line.front() != '=' || line.back() != '=') return false;
  return line.find_first_not_of('=') != std::string_view::npos;
}

bool is_rule(std::string_view line) {
  return line.size() >= 4 && line.find_first_not_of('-') == std::string_view::npos;
}

bool in_bounds(Timestamp ts) {
  return ts >= earliest_valid_timestamp() &&
         ts <= std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

struct Link {
  std::size_t begin;
  std::size_t end;
  std::string author;
};

std::vector<Link> user_links(std::string_view text) {
  std::vector<Link> links;
  using It = std::regex_iterator<std::string_view::const_iterator>;
  for (It it(text.begin(), text.end(), user_link_regex()), last; it != last; ++it) {
    std::string author((*it)[1].str());
    if (author.empty()) continue;
    const auto begin = static_cast<std::size_t>(it->position(0));
    links.push_back({begin, begin + static_cast<std::size_t>(it->length(0)), std::move(author)});
  }
  return links;
}

bool ends_with_signature(std::string_view line, const SignatureRegistry& registry) {
  auto sig = extract_signature(line, registry);
  return sig && trim(line.substr(sig->end)).size() <= kMaxSignatureTail;
}

}  // namespace

SignatureRegistry SignatureRegistry::defaults() {
  SignatureRegistry reg;
  for (auto p : kDefaultPatterns) reg.add_pattern(p);
  return reg;
}

SignatureRegistry SignatureRegistry::with_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pattern file " + path.string());
  SignatureRegistry reg = defaults();
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    reg.add_pattern(t);
  }
  return reg;
}

void SignatureRegistry::add_pattern(std::string_view pattern) {
  std::string re;
  std::vector<Field> groups;
  bool pending_space = false;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const char ch = pattern[i];
    if (ch == ' ') {
      pending_space = true;
      continue;
    }
    if (pending_space) {
      re += "[ \\t]+";
      pending_space = false;
    }
    if (ch == '{') {
      const auto close = pattern.find('}', i);
      if (close == std::string_view::npos) {
        throw ConfigError("unterminated placeholder in pattern: " + std::string(pattern));
      }
      const auto token = pattern.substr(i + 1, close - i - 1);
      const bool first = re.empty();
      Field field;
      std::string piece;
      if (token == "HH") {
        field = Field::hour, piece = "(\\d{1,2})";
      } else if (token == "MM") {
        field = Field::minute, piece = "(\\d{2})";
      } else if (token == "SS") {
        field = Field::second, piece = "(\\d{2})";
      } else if (token == "D") {
        field = Field::day, piece = "(\\d{1,2})";
      } else if (token == "YYYY") {
        field = Field::year, piece = "(\\d{4})(?![0-9])";
      } else if (token == "Month") {
        field = Field::month, piece = std::string(kMonthAlternation) + "(?![A-Za-z])";
      } else {
        throw ConfigError("unknown placeholder {" + std::string(token) + "}");
      }
      if (std::find(groups.begin(), groups.end(), field) != groups.end()) {
        throw ConfigError("repeated placeholder {" + std::string(token) + "}");
      }
      if (first) re += "\\b";
      re += piece;
      groups.push_back(field);
      i = close;
      continue;
    }
    if (std::string_view("\\^$.|?*+()[]{}/").find(ch) != std::string_view::npos) re += '\\';
    re += ch;
  }
  for (Field required : {Field::day, Field::month, Field::year}) {
    if (std::find(groups.begin(), groups.end(), required) == groups.end()) {
      throw ConfigError("pattern needs {D}, {Month} and {YYYY}: " + std::string(pattern));
    }
  }
  patterns_.push_back({std::string(pattern),
                       std::regex(re, std::regex::ECMAScript | std::regex::icase), groups});
}

std::optional<DateMatch> SignatureRegistry::last_date(std::string_view text) const {
  std::optional<DateMatch> best;
  using It = std::regex_iterator<std::string_view::const_iterator>;
  for (const auto& pattern : patterns_) {
    for (It it(text.begin(), text.end(), pattern.regex), last; it != last; ++it) {
      const auto& m = *it;
      DateMatch cand;
      cand.begin = static_cast<std::size_t>(m.position(0));
      cand.end = cand.begin + static_cast<std::size_t>(m.length(0));
      if (best && (cand.end < best->end || (cand.end == best->end && cand.begin >= best->begin))) {
        continue;
      }
      int year = 0;
      unsigned month = 0, day = 0, hour = 0, minute = 0, second = 0;
      bool ok = true;
      for (std::size_t g = 0; g < pattern.groups.size(); ++g) {
        const std::string s = m[g + 1].str();
        switch (pattern.groups[g]) {
          case Field::hour: hour = static_cast<unsigned>(std::stoul(s)); break;
          case Field::minute: minute = static_cast<unsigned>(std::stoul(s)); break;
          case Field::second: second = static_cast<unsigned>(std::stoul(s)); break;
          case Field::day: day = static_cast<unsigned>(std::stoul(s)); break;
          case Field::year: year = std::stoi(s); break;
          case Field::month:
            if (auto mo = month_number(s)) month = *mo;
            else ok = false;
            break;
        }
      }
      if (ok) {
        if (auto ts = make_timestamp(year, month, day, hour, minute, second); ts && in_bounds(*ts)) {
          cand.timestamp = *ts;
        }
      }
      best = cand;
    }
  }
  return best;
}

const SignatureRegistry& default_registry() {
  static const SignatureRegistry reg = SignatureRegistry::defaults();
  return reg;
}

std::optional<SignatureMatch> extract_signature(std::string_view body,
                                                const SignatureRegistry& registry) {
  const auto date = registry.last_date(body);
  const auto links = user_links(body);

  // A trailing user link after the last date is an undated signature.
  if (!links.empty() && (!date || links.back().begin >= date->end)) {
    const auto& link = links.back();
    const auto tail = body.substr(link.end);
    if (tail.find('\n') == std::string_view::npos && trim(tail).size() <= kMaxSignatureTail) {
      return SignatureMatch{link.author, std::nullopt, link.begin, link.end};
    }
  }
  if (!date) return std::nullopt;

  SignatureMatch sig{std::nullopt, date->timestamp, date->begin, date->end};
  for (auto it = links.rbegin(); it != links.rend(); ++it) {
    if (it->end > date->begin) continue;
    const auto gap = body.substr(it->end, date->begin - it->end);
    if (gap.size() <= kMaxLinkToDateGap && gap.find('\n') == std::string_view::npos) {
      sig.author = it->author;
      sig.begin = it->begin;
    }
    break;
  }
  return sig;
}

std::vector<CommentBlock> split_comments(const RawTalkPage& page,
                                         const SignatureRegistry& registry) {
  std::vector<CommentBlock> blocks;
  std::optional<CommentBlock> current;
  bool section_pending = false;

  const auto flush = [&] {
    if (current) blocks.push_back(std::move(*current));
    current.reset();
  };

  std::istringstream in(page.text);
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string_view line(raw);
    const auto trimmed = trim(line);
    if (is_heading(trimmed)) {
      flush();
      section_pending = true;
      continue;
    }
    if (trimmed.empty() || is_rule(trimmed)) {
      flush();
      continue;
    }
    const auto depth = std::min(line.find_first_not_of(":*#"), line.size());
    const auto text = trim(line.substr(depth));
    if (text.empty()) {
      flush();
      continue;
    }
    if (current && current->depth == static_cast<int>(depth)) {
      current->body += '\n';
      current->body += text;
    } else {
      flush();
      current = CommentBlock{static_cast<int>(depth), std::string(text), section_pending};
      section_pending = false;
    }
    if (ends_with_signature(text, registry)) flush();
  }
  flush();
  return blocks;
}

TalkParse to_events(const RawTalkPage& page, const SignatureRegistry& registry) {
  TalkParse out;
  struct Open {
    int raw_depth;
    std::size_t index;
  };
  std::vector<Open> thread;
  std::size_t pending = 0;

  const auto note = [&](std::size_t block, const std::string& msg) {
    out.diagnostics.push_back(page.article_id + ": block " + std::to_string(block) + ": " + msg);
  };

  const auto blocks = split_comments(page, registry);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& block = blocks[b];
    if (block.section_start) {
      thread.clear();
      if (pending > 0) {
        out.dropped_blocks += pending;
        note(b, "unsigned text before heading dropped");
        pending = 0;
      }
    }
    const auto sig = extract_signature(block.body, registry);
    if (!sig || !sig->author) {
      ++pending;
      continue;
    }
    out.merged_blocks += pending;
    pending = 0;

    CommentEvent ev;
    ev.article_id = page.article_id;
    ev.doc_order = static_cast<std::int64_t>(out.events.size());
    ev.comment_id = "c" + std::to_string(ev.doc_order);
    ev.author = sig->author;
    ev.timestamp = sig->timestamp;

    const int d = block.depth;
    while (!thread.empty() && thread.back().raw_depth >= d) thread.pop_back();
    if (d == 0) {
      ev.depth = 0;
    } else if (thread.empty()) {
      ev.depth = 0;
      note(b, "indented comment (depth " + std::to_string(d) +
                  ") without a shallower comment in its thread; treated as thread root");
    } else {
      const auto& parent = out.events[thread.back().index];
      if (thread.back().raw_depth != d - 1) {
        note(b, "depth jump " + std::to_string(thread.back().raw_depth) + " -> " +
                    std::to_string(d) + "; attached to nearest shallower comment " +
                    parent.comment_id);
      }
      ev.parent_id = parent.comment_id;
      ev.depth = parent.depth + 1;
    }
    thread.push_back({d, out.events.size()});
    out.events.push_back(std::move(ev));
  }
  if (pending > 0) {
    out.dropped_blocks += pending;
    note(blocks.size(), "trailing unsigned text dropped");
  }
  return out;
}

RawTalkPage read_talk_page(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return {path.stem().string(), buf.str()};
}

}  // namespace talkpulse
