// talkpulse: activity peaks and discussion growth for wiki articles.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "talkpulse/discussion.hpp"
#include "talkpulse/errors.hpp"
#include "talkpulse/ingest.hpp"
#include "talkpulse/peakstats.hpp"
#include "talkpulse/report.hpp"
#include "talkpulse/table.hpp"
#include "talkpulse/talkparser.hpp"
#include "talkpulse/timeseries.hpp"

namespace fs = std::filesystem;
using namespace talkpulse;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string format = "auto";
  std::string out;
  double c = 5.0;
  std::uint32_t n_min = 10;
  std::uint32_t window = 14;
  std::size_t min_comments = kDefaultMinComments;
  double k = kDefaultMaturityMultiple;
  std::string report_format = "csv";

  PeakParams params() const {
    PeakParams p{c, n_min, window};
    p.validate();
    return p;
  }

  InputFormat input_format(const fs::path& path) const {
    if (format == "jsonl") return InputFormat::jsonl;
    if (format == "csv") return InputFormat::csv;
    return format_from_extension(path);
  }
};

void add_common(CLI::App* app, Common& common, bool peaks, bool discussion) {
  app->add_option("--format", common.format, "input format")
      ->check(CLI::IsMember({"auto", "jsonl", "csv"}))
      ->capture_default_str();
  app->add_option("--out", common.out, "output file (stdout when omitted)");
  app->add_option("--report-format", common.report_format, "table format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  if (peaks) {
    app->add_option("-c", common.c, "peak factor")->capture_default_str();
    app->add_option("--nmin", common.n_min, "minimum activity floor")->capture_default_str();
    app->add_option("--window", common.window, "median window half-width in days")
        ->capture_default_str();
  }
  if (discussion) {
    app->add_option("--min-comments", common.min_comments,
                    "rank only discussions with more comments than this")
        ->capture_default_str();
    app->add_option("-k", common.k, "maturity multiple of delta h")->capture_default_str();
  }
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw ConfigError("cannot write " + path);
  return file;
}

void emit(const Table& table, const Common& common) {
  std::ofstream file;
  auto& out = open_out(common.out, file);
  const bool json = common.report_format == "json" ||
                    (common.out.size() > 5 && common.out.ends_with(".json"));
  if (json) {
    table.write_json(out);
  } else {
    table.write_csv(out);
  }
}

void report_diagnostics(const std::vector<Diagnostic>& diags, std::size_t rejected) {
  for (const auto& d : diags) std::cerr << to_string(d) << '\n';
  if (rejected > diags.size()) {
    std::cerr << (rejected - diags.size()) << " further rejected records not listed\n";
  }
}

std::vector<EditEvent> load_edits(const std::vector<std::string>& paths, const Common& common) {
  std::vector<EditEvent> out;
  for (const auto& p : paths) {
    auto loaded = load_events(p, ActivityKind::edit, common.input_format(p));
    report_diagnostics(loaded.diagnostics, loaded.records_rejected);
    std::move(loaded.edits.begin(), loaded.edits.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<CommentEvent> load_comments(const std::vector<std::string>& paths,
                                        const Common& common) {
  std::vector<CommentEvent> out;
  for (const auto& p : paths) {
    auto loaded = load_events(p, ActivityKind::comment, common.input_format(p));
    report_diagnostics(loaded.diagnostics, loaded.records_rejected);
    std::move(loaded.comments.begin(), loaded.comments.end(), std::back_inserter(out));
  }
  return out;
}

std::map<std::string, std::vector<CommentEvent>> by_article(std::vector<CommentEvent> comments) {
  std::map<std::string, std::vector<CommentEvent>> out;
  for (auto& c : comments) out[c.article_id].push_back(std::move(c));
  return out;
}

struct Discussion {
  DiscussionTree tree;
  std::optional<HTrace> trace;
};

std::vector<Discussion> build_discussions(std::vector<CommentEvent> comments) {
  std::vector<Discussion> out;
  for (auto& [article, nodes] : by_article(std::move(comments))) {
    try {
      auto tree = DiscussionTree::build(article, std::move(nodes));
      std::optional<HTrace> trace;
      const auto nodes_view = tree.nodes();
      if (std::any_of(nodes_view.begin(), nodes_view.end(),
                      [](const CommentEvent& c) { return c.timestamp.has_value(); })) {
        trace = h_trace(tree);
      }
      out.push_back({std::move(tree), std::move(trace)});
    } catch (const InputError& e) {
      std::cerr << "skipping discussion: " << e.what() << '\n';
    }
  }
  return out;
}

Timestamp parse_as_of(const std::string& text) {
  if (auto ts = parse_timestamp(text)) return *ts;
  if (auto day = parse_day(text)) return Timestamp{*day};
  throw ConfigError("--as-of expects YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ: " + text);
}

// parse-talk --------------------------------------------------------------

int run_parse_talk(const std::string& in, const std::string& patterns, const Common& common) {
  const auto registry =
      patterns.empty() ? SignatureRegistry::defaults() : SignatureRegistry::with_file(patterns);
  std::vector<fs::path> files;
  if (fs::is_directory(in)) {
    for (const auto& entry : fs::directory_iterator(in)) {
      const auto ext = entry.path().extension();
      if (entry.is_regular_file() && (ext == ".wiki" || ext == ".txt")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.emplace_back(in);
  }
  std::ofstream file;
  auto& out = open_out(common.out, file);
  for (const auto& f : files) {
    const auto page = read_talk_page(f);
    const auto parsed = to_events(page, registry);
    for (const auto& d : parsed.diagnostics) std::cerr << f.string() << ": " << d << '\n';
    for (const auto& e : parsed.events) out << to_jsonl(e) << '\n';
  }
  return 0;
}

// peaks -------------------------------------------------------------------

int run_peaks(const std::vector<std::string>& edits, const std::vector<std::string>& comments,
              const Common& common) {
  const auto params = common.params();
  Table table{{"article", "kind", "start_day", "length", "max_ratio"}, {}};
  const auto add = [&](const SeriesMap& series) {
    for (const auto& [_, s] : series) {
      for (const auto& run : detect_peaks(s, params)) {
        table.add({run.article_id, std::string(to_string(run.kind)), format_day(run.start_day),
                   static_cast<std::int64_t>(run.length), run.max_ratio()});
      }
    }
  };
  add(build_series(load_comments(comments, common)));
  add(build_series(load_edits(edits, common)));
  emit(table, common);
  return 0;
}

// stats -------------------------------------------------------------------

int run_stats(const std::string& peaks_path, const std::string& report,
              const std::string& powerlaw, std::int64_t x_min, const Common& common) {
  if (report.empty() == powerlaw.empty()) {
    throw ConfigError("stats needs exactly one of --report and --powerlaw");
  }
  const auto runs = read_peak_table(peaks_path);
  std::vector<PeakRun> comment_runs, edit_runs;
  for (const auto& r : runs) (r.kind == ActivityKind::comment ? comment_runs : edit_runs).push_back(r);

  if (!powerlaw.empty()) {
    std::vector<std::int64_t> samples;
    if (powerlaw == "length") {
      for (const auto& r : runs) samples.push_back(r.length);
    } else if (powerlaw == "peaks_per_article") {
      std::map<std::pair<std::string, ActivityKind>, std::int64_t> per;
      for (const auto& r : runs) ++per[{r.article_id, r.kind}];
      for (const auto& [_, n] : per) samples.push_back(n);
    } else if (powerlaw == "inter_peak") {
      for (const auto* list : {&comment_runs, &edit_runs}) {
        for (const auto& [_, grouped] : group_by_article(*list)) {
          for (long g : inter_peak_intervals(grouped)) samples.push_back(g);
        }
      }
    } else {
      throw ConfigError("--powerlaw column must be length, peaks_per_article or inter_peak");
    }
    const auto fit = fit_power_law(samples, x_min);
    Table t{{"alpha", "x_min", "n"}, {}};
    t.add({fit.alpha, fit.x_min, static_cast<std::int64_t>(fit.n_samples)});
    emit(t, common);
    return 0;
  }

  if (report == "overlap") {
    Table t{{"tolerance", "comment_runs", "overlapping_comment_runs", "articles_with_overlap"}, {}};
    for (int tol : {0, 1, 2}) {
      const auto o = overlap(comment_runs, edit_runs, tol);
      t.add({static_cast<std::int64_t>(tol), static_cast<std::int64_t>(o.n_comment_runs),
             static_cast<std::int64_t>(o.n_overlapping_comment_peaks),
             static_cast<std::int64_t>(o.n_articles_with_overlap)});
    }
    emit(t, common);
  } else if (report == "anniversary") {
    Table t{{"kind", "article", "anniversaries"}, {}};
    for (const auto* list : {&comment_runs, &edit_runs}) {
      const std::string kind = list == &comment_runs ? "comment" : "edit";
      for (const auto& [article, n] : anniversaries(*list)) {
        if (n > 0) t.add({kind, article, static_cast<std::int64_t>(n)});
      }
    }
    emit(t, common);
  } else if (report == "distributions") {
    Table t{{"distribution", "kind", "value", "count"}, {}};
    const auto put = [&](const char* name, const std::string& kind, const Histogram& h) {
      for (std::size_t i = 0; i < h.counts.size(); ++i) {
        if (h.counts[i] == 0) continue;
        t.add({std::string(name), kind, static_cast<std::int64_t>(h.bin_edges[i]),
               static_cast<std::int64_t>(h.counts[i])});
      }
    };
    for (const auto* list : {&comment_runs, &edit_runs}) {
      const std::string kind = list == &comment_runs ? "comment" : "edit";
      put("peaks_per_article", kind, peaks_per_article(*list));
      put("run_length", kind, run_lengths(*list));
      std::vector<std::int64_t> gaps;
      for (const auto& [_, grouped] : group_by_article(*list)) {
        for (long g : inter_peak_intervals(grouped)) gaps.push_back(g);
      }
      put("inter_peak", kind, integer_histogram(gaps));
    }
    emit(t, common);
  } else {
    throw ConfigError("--report must be overlap, anniversary or distributions");
  }
  return 0;
}

// hindex / deltah / maturity ------------------------------------------------

int run_hindex(const std::vector<std::string>& comments, const Common& common) {
  Table t{{"article", "final_h", "max_depth", "n_comments"}, {}};
  for (const auto& d : build_discussions(load_comments(comments, common))) {
    t.add({d.tree.article_id(), static_cast<std::int64_t>(h_index(d.tree)),
           static_cast<std::int64_t>(d.tree.max_level() - 1),
           static_cast<std::int64_t>(d.tree.size())});
  }
  emit(t, common);
  return 0;
}

int run_deltah(const std::vector<std::string>& comments, const Common& common) {
  std::vector<HTrace> traces;
  for (auto& d : build_discussions(load_comments(comments, common))) {
    if (d.trace) traces.push_back(std::move(*d.trace));
  }
  Table t{{"rank", "article", "delta_h", "start_date", "end_date", "duration", "final_h",
           "n_comments"},
          {}};
  const auto rows = rank_by_speed(traces, common.min_comments);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    t.add({static_cast<std::int64_t>(i + 1), r.article_id, r.delta_h, format_day(r.start_day),
           format_day(r.end_day), static_cast<std::int64_t>(r.duration_days),
           static_cast<std::int64_t>(r.final_h), static_cast<std::int64_t>(r.n_comments)});
  }
  emit(t, common);
  return 0;
}

int run_maturity(const std::vector<std::string>& comments, const std::string& as_of,
                 const Common& common) {
  if (common.k < 0) throw ConfigError("-k must be >= 0");
  auto discussions = build_discussions(load_comments(comments, common));
  Timestamp now{};
  if (!as_of.empty()) {
    now = parse_as_of(as_of);
  } else {
    for (const auto& d : discussions) {
      for (const auto& c : d.tree.nodes()) {
        if (c.timestamp) now = std::max(now, *c.timestamp);
      }
    }
  }
  if (common.k == 0) std::cerr << "warning: k = 0 marks every discussion mature\n";
  Table t{{"article", "final_h", "delta_h", "last_increase", "days_since_last_increase",
           "threshold_days", "mature"},
          {}};
  for (const auto& d : discussions) {
    if (!d.trace || d.trace->steps.size() < 2) continue;
    const auto m = maturity(*d.trace, now, common.k);
    t.add({d.tree.article_id(), static_cast<std::int64_t>(d.trace->final_h()), m.delta_h,
           format_timestamp(d.trace->steps.back().at), m.time_since_last_increase,
           m.threshold_multiple * m.delta_h, std::string(m.mature ? "true" : "false")});
  }
  emit(t, common);
  return 0;
}

// report --------------------------------------------------------------------

int run_report_cmd(RunConfig config, const std::vector<std::string>& edits,
                   const std::vector<std::string>& comments, const std::string& as_of,
                   const Common& common) {
  config.edit_paths.assign(edits.begin(), edits.end());
  config.comment_paths.assign(comments.begin(), comments.end());
  if (common.format != "auto") config.input_format = common.input_format({});
  config.params = common.params();
  config.min_comments = common.min_comments;
  config.k = common.k;
  if (!as_of.empty()) config.as_of = parse_as_of(as_of);
  config.out_dir = common.out.empty() ? fs::path(".") : fs::path(common.out);
  config.format = common.report_format == "json" ? OutputFormat::json : OutputFormat::csv;
  const auto outcome = run_report(config);
  std::cerr << outcome.articles << " articles, " << outcome.files.size() << " files, "
            << outcome.diagnostics.size() << " diagnostics\n";
  return 0;
}

// watch ---------------------------------------------------------------------

int run_watch(bool from_stdin, const std::string& events, const std::string& kind_text,
              bool sort, const Common& common) {
  const auto params = common.params();
  std::ofstream file;
  auto& out = open_out(common.out, file);
  out << "day,article,kind,count,median,ratio,tier\n";
  if (from_stdin) {
    if (!events.empty()) throw ConfigError("--stdin and --events are exclusive");
    WatchSession session(params);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(std::cin, line)) {
      ++line_no;
      if (line.empty() || line.starts_with('#') || line.starts_with("article,")) continue;
      WatchRecord rec;
      try {
        rec = parse_watch_line(line);
      } catch (const InputError& e) {
        std::cerr << "stdin:" << line_no << ": " << e.what() << '\n';
        continue;
      }
      if (auto alert = session.feed(rec.article_id, rec.kind, rec.day, rec.count)) {
        out << format_alert(*alert) << std::endl;
      }
    }
    return 0;
  }
  if (events.empty()) throw ConfigError("watch needs --stdin or --events");
  const auto kind = parse_kind(kind_text);
  if (!kind) throw ConfigError("--kind must be edit or comment");
  std::vector<std::string> diagnostics;
  const auto alerts =
      simulate_watch(events, *kind, common.input_format(events), params, sort, diagnostics);
  for (const auto& d : diagnostics) std::cerr << d << '\n';
  for (const auto& a : alerts) out << format_alert(a) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Activity peaks and discussion growth of wiki articles"};
  app.require_subcommand(1);
  Common common;

  auto* parse_talk = app.add_subcommand("parse-talk", "extract comment events from wikitext");
  std::string talk_in, patterns;
  parse_talk->add_option("--in", talk_in, "talk page file or directory")->required();
  parse_talk->add_option("--patterns", patterns, "extra signature date patterns");
  add_common(parse_talk, common, false, false);

  std::vector<std::string> edits, comments;
  auto* peaks = app.add_subcommand("peaks", "detect activity peaks");
  peaks->add_option("--edits", edits, "edit event files");
  peaks->add_option("--comments", comments, "comment event files");
  add_common(peaks, common, true, false);

  auto* stats = app.add_subcommand("stats", "statistics over a peaks table");
  std::string peaks_path, report_kind, powerlaw;
  std::int64_t x_min = 1;
  stats->add_option("--peaks", peaks_path, "peaks table")->required();
  stats->add_option("--report", report_kind, "overlap, anniversary or distributions");
  stats->add_option("--powerlaw", powerlaw, "length, peaks_per_article or inter_peak");
  stats->add_option("--x-min", x_min, "power-law lower cutoff")->capture_default_str();
  add_common(stats, common, false, false);

  auto* hindex = app.add_subcommand("hindex", "discussion h-index per article");
  hindex->add_option("--comments", comments, "comment event files")->required();
  add_common(hindex, common, false, false);

  auto* deltah = app.add_subcommand("deltah", "discussion growth speed ranking");
  deltah->add_option("--comments", comments, "comment event files")->required();
  add_common(deltah, common, false, true);

  auto* mature = app.add_subcommand("maturity", "discussion maturity status");
  std::string as_of;
  mature->add_option("--comments", comments, "comment event files")->required();
  mature->add_option("--as-of", as_of, "reference date (default: latest comment)");
  add_common(mature, common, false, true);

  auto* report = app.add_subcommand("report", "full report into an output directory");
  RunConfig config;
  report->add_option("--edits", edits, "edit event files");
  report->add_option("--comments", comments, "comment event files");
  report->add_option("--as-of", as_of, "maturity reference (default: latest event)");
  report->add_option("--c-sweep", config.c_sweep, "extra peak factors")->capture_default_str();
  report->add_option("--tolerances", config.tolerances, "overlap tolerances in days")
      ->capture_default_str();
  report->add_option("--rows", config.speed_rows, "rows of the speed rankings")
      ->capture_default_str();
  report->add_option("--top", config.top_rows, "rows of the top-article tables")
      ->capture_default_str();
  report->add_option("--bins-per-decade", config.bins_per_decade, "log histogram resolution")
      ->capture_default_str();
  report->add_option("--x-min", config.x_min, "power-law lower cutoff")->capture_default_str();
  report->add_option("--threads", config.threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  add_common(report, common, true, true);

  auto* watch = app.add_subcommand("watch", "real-time peak alerts");
  bool from_stdin = false, sort = false;
  std::string events, kind_text = "edit";
  watch->add_flag("--stdin", from_stdin, "read article,kind,date,count lines");
  watch->add_option("--events", events, "replay an event file");
  watch->add_option("--kind", kind_text, "event kind of --events")->capture_default_str();
  watch->add_flag("--sort", sort, "sort --events by time first");
  add_common(watch, common, true, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*parse_talk) return run_parse_talk(talk_in, patterns, common);
    if (*peaks) return run_peaks(edits, comments, common);
    if (*stats) return run_stats(peaks_path, report_kind, powerlaw, x_min, common);
    if (*hindex) return run_hindex(comments, common);
    if (*deltah) return run_deltah(comments, common);
    if (*mature) return run_maturity(comments, as_of, common);
    if (*report) return run_report_cmd(config, edits, comments, as_of, common);
    if (*watch) return run_watch(from_stdin, events, kind_text, sort, common);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
