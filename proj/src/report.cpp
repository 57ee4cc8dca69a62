#include "talkpulse/report.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "talkpulse/errors.hpp"
#include "talkpulse/peakstats.hpp"

namespace talkpulse {

namespace {

constexpr std::array<double, 13> kRatioThresholds = {1,  1.5, 2,  3,  4,  5,  7,
                                                     10, 15,  20, 30, 50, 100};

struct KindSweep {
  std::uint64_t runs = 0;
  std::uint64_t days = 0;
};

struct SweepEntry {
  double c = 0.0;
  KindSweep comment;
  KindSweep edit;
  std::vector<std::uint64_t> overlapping;  // one per tolerance
};

struct RatioTally {
  std::uint64_t active_days = 0;
  std::array<std::uint64_t, kRatioThresholds.size()> floored{};
  std::array<std::uint64_t, kRatioThresholds.size()> pure{};

  RatioTally& operator+=(const RatioTally& o) {
    active_days += o.active_days;
    for (std::size_t i = 0; i < kRatioThresholds.size(); ++i) {
      floored[i] += o.floored[i];
      pure[i] += o.pure[i];
    }
    return *this;
  }
};

struct ArticleWork {
  ArticleReport report;
  std::vector<SweepEntry> sweep;
  RatioTally comment_ratios;
  RatioTally edit_ratios;
  std::vector<std::string> diagnostics;
  bool invalid_discussion = false;
};

std::vector<double> peak_factors(const RunConfig& config) {
  std::set<double> cs(config.c_sweep.begin(), config.c_sweep.end());
  cs.insert(config.params.c);
  return {cs.begin(), cs.end()};
}

void tally_ratios(const ActivitySeries& series, std::span<const double> medians,
                  const PeakParams& params, RatioTally& tally) {
  for (std::size_t t = 0; t < series.counts.size(); ++t) {
    const double n = series.counts[t];
    if (n == 0) continue;
    ++tally.active_days;
    const double floored = n / std::max(medians[t], static_cast<double>(params.n_min));
    const double pure = medians[t] > 0 ? n / medians[t] : INFINITY;
    for (std::size_t i = 0; i < kRatioThresholds.size(); ++i) {
      if (floored > kRatioThresholds[i]) ++tally.floored[i];
      if (pure > kRatioThresholds[i]) ++tally.pure[i];
    }
  }
}

using CommentRange = std::span<const CommentEvent>;

ArticleWork analyze_one(const RunConfig& config, const std::vector<double>& cs,
                        const std::string& article, const ActivitySeries* edits,
                        const ActivitySeries* comments, CommentRange discussion,
                        Timestamp as_of) {
  ArticleWork work;
  auto& rep = work.report;
  rep.article_id = article;
  rep.n_edits = edits ? edits->total() : 0;
  rep.n_dated_comments = comments ? comments->total() : 0;
  rep.n_comments = discussion.size();

  std::vector<double> comment_medians, edit_medians;
  if (comments) {
    comment_medians = sliding_median(*comments, config.params.window_halfwidth);
    tally_ratios(*comments, comment_medians, config.params, work.comment_ratios);
  }
  if (edits) {
    edit_medians = sliding_median(*edits, config.params.window_halfwidth);
    tally_ratios(*edits, edit_medians, config.params, work.edit_ratios);
  }

  for (double c : cs) {
    PeakParams p = config.params;
    p.c = c;
    SweepEntry entry{c, {}, {}, {}};
    std::vector<PeakRun> c_runs, e_runs;
    if (comments) c_runs = detect_peaks(*comments, comment_medians, p);
    if (edits) e_runs = detect_peaks(*edits, edit_medians, p);
    entry.comment = {c_runs.size(), peak_day_total(c_runs)};
    entry.edit = {e_runs.size(), peak_day_total(e_runs)};
    for (int tol : config.tolerances) {
      entry.overlapping.push_back(overlap(c_runs, e_runs, tol).n_overlapping_comment_peaks);
    }
    work.sweep.push_back(std::move(entry));
    if (c == config.params.c) {
      rep.comment_runs = std::move(c_runs);
      rep.edit_runs = std::move(e_runs);
    }
  }
  const auto longest = [](const std::vector<PeakRun>& runs) -> std::optional<std::uint32_t> {
    if (runs.empty()) return std::nullopt;
    std::uint32_t best = 0;
    for (const auto& r : runs) best = std::max(best, r.length);
    return best;
  };
  rep.max_comment_run = longest(rep.comment_runs);
  rep.max_edit_run = longest(rep.edit_runs);

  if (!discussion.empty()) {
    try {
      const auto tree =
          DiscussionTree::build(article, std::vector<CommentEvent>(discussion.begin(), discussion.end()));
      rep.final_h = h_index(tree);
      rep.max_level = tree.max_level();
      if (rep.n_dated_comments > 0) {
        rep.trace = h_trace(tree);
        if (rep.trace->steps.size() >= 2) {
          rep.delta_h = delta_h(*rep.trace);
          rep.maturity = maturity(*rep.trace, as_of, config.k);
        }
      }
    } catch (const InputError& e) {
      work.invalid_discussion = true;
      work.diagnostics.push_back(std::string("invalid discussion: ") + e.what());
    }
  }
  return work;
}

std::vector<ArticleWork> analyze(const RunConfig& config, const SeriesMap& edit_series,
                                 const SeriesMap& comment_series,
                                 std::vector<CommentEvent> comments, Timestamp as_of) {
  std::sort(comments.begin(), comments.end(), [](const CommentEvent& a, const CommentEvent& b) {
    if (a.article_id != b.article_id) return a.article_id < b.article_id;
    return a.doc_order < b.doc_order;
  });
  std::map<std::string_view, CommentRange> discussions;
  for (std::size_t i = 0; i < comments.size();) {
    std::size_t j = i;
    while (j < comments.size() && comments[j].article_id == comments[i].article_id) ++j;
    discussions.emplace(comments[i].article_id, CommentRange(comments.data() + i, j - i));
    i = j;
  }

  std::set<std::string> ids;
  for (const auto& [id, _] : edit_series) ids.insert(id);
  for (const auto& [id, _] : comment_series) ids.insert(id);
  for (const auto& [id, _] : discussions) ids.emplace(id);
  const std::vector<std::string> articles(ids.begin(), ids.end());

  const auto cs = peak_factors(config);
  std::vector<ArticleWork> out(articles.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < articles.size();) {
      const auto& id = articles[i];
      auto e = edit_series.find(id);
      auto c = comment_series.find(id);
      auto d = discussions.find(id);
      out[i] = analyze_one(config, cs, id, e == edit_series.end() ? nullptr : &e->second,
                           c == comment_series.end() ? nullptr : &c->second,
                           d == discussions.end() ? CommentRange{} : d->second, as_of);
    }
  };
  unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(articles.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  return out;
}

Cell opt_cell(const auto& value) {
  if (!value) return std::monostate{};
  return static_cast<std::int64_t>(*value);
}

Cell count(std::uint64_t v) { return static_cast<std::int64_t>(v); }

void append_distribution(Table& table, std::string_view kind, const Histogram& hist) {
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    if (hist.counts[i] == 0) continue;
    table.add({std::string(kind), static_cast<std::int64_t>(hist.bin_edges[i]), count(hist.counts[i])});
  }
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

Table speed_table(const std::vector<SpeedRow>& rows) {
  Table t{{"rank", "article", "delta_h", "start_date", "end_date", "duration", "final_h",
           "n_comments"},
          {}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    t.add({static_cast<std::int64_t>(i + 1), r.article_id, r.delta_h, format_day(r.start_day),
           format_day(r.end_day), static_cast<std::int64_t>(r.duration_days),
           static_cast<std::int64_t>(r.final_h), count(r.n_comments)});
  }
  return t;
}

}  // namespace

void RunConfig::validate() const {
  params.validate();
  for (double c : c_sweep) {
    if (!(c > 1.0)) throw ConfigError("every swept peak factor must be > 1");
  }
  for (int tol : tolerances) {
    if (tol < 0 || tol > 2) throw ConfigError("overlap tolerances must lie in {0,1,2}");
  }
  if (!(k >= 0.0)) throw ConfigError("maturity multiple k must be >= 0");
  if (bins_per_decade < 1) throw ConfigError("bins per decade must be >= 1");
  if (x_min < 1) throw ConfigError("x_min must be >= 1");
}

std::vector<ArticleReport> analyze_articles(const RunConfig& config,
                                            const SeriesMap& edit_series,
                                            const SeriesMap& comment_series,
                                            std::vector<CommentEvent> comments,
                                            Timestamp as_of,
                                            std::vector<std::string>& diagnostics) {
  config.validate();
  auto work = analyze(config, edit_series, comment_series, std::move(comments), as_of);
  std::vector<ArticleReport> out;
  out.reserve(work.size());
  for (auto& w : work) {
    diagnostics.insert(diagnostics.end(), w.diagnostics.begin(), w.diagnostics.end());
    out.push_back(std::move(w.report));
  }
  return out;
}

ReportOutcome run_report(const RunConfig& config) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (!std::filesystem::is_directory(config.out_dir)) {
    throw ConfigError("output directory not usable: " + config.out_dir.string());
  }

  ReportOutcome outcome;
  struct Totals {
    std::uint64_t read = 0, rejected = 0, events = 0;
  } edit_totals, comment_totals;
  std::uint64_t undated = 0;

  std::vector<EditEvent> edits;
  std::vector<CommentEvent> comments;
  const auto load = [&](const std::filesystem::path& path, ActivityKind kind, Totals& totals) {
    auto loaded =
        load_events(path, kind, config.input_format.value_or(format_from_extension(path)));
    totals.read += loaded.records_read;
    totals.rejected += loaded.records_rejected;
    for (const auto& d : loaded.diagnostics) outcome.diagnostics.push_back(to_string(d));
    if (loaded.records_rejected > loaded.diagnostics.size()) {
      outcome.diagnostics.push_back(path.string() + ": " +
                                    std::to_string(loaded.records_rejected - loaded.diagnostics.size()) +
                                    " further rejected records not listed");
    }
    if (kind == ActivityKind::edit) {
      totals.events += loaded.edits.size();
      edits.insert(edits.end(), std::make_move_iterator(loaded.edits.begin()),
                   std::make_move_iterator(loaded.edits.end()));
    } else {
      totals.events += loaded.comments.size();
      undated += loaded.undated_comments;
      comments.insert(comments.end(), std::make_move_iterator(loaded.comments.begin()),
                      std::make_move_iterator(loaded.comments.end()));
    }
  };
  for (const auto& p : config.edit_paths) load(p, ActivityKind::edit, edit_totals);
  for (const auto& p : config.comment_paths) load(p, ActivityKind::comment, comment_totals);

  Timestamp latest{};
  for (const auto& e : edits) latest = std::max(latest, e.timestamp);
  for (const auto& c : comments) {
    if (c.timestamp) latest = std::max(latest, *c.timestamp);
  }
  const Timestamp as_of = config.as_of.value_or(latest);

  const SeriesMap edit_series = build_series(edits);
  edits = {};
  const SeriesMap comment_series = build_series(comments);
  const std::uint64_t dated_comments = comment_totals.events - undated;

  auto work = analyze(config, edit_series, comment_series, std::move(comments), as_of);
  outcome.articles = work.size();
  std::size_t invalid_discussions = 0;
  for (const auto& w : work) {
    outcome.diagnostics.insert(outcome.diagnostics.end(), w.diagnostics.begin(), w.diagnostics.end());
    invalid_discussions += w.invalid_discussion;
  }

  const auto emit = [&](const Table& table, const std::string& stem) {
    outcome.files.push_back(write_table(table, config.out_dir, stem, config.format));
  };
  const auto cs = peak_factors(config);

  // Peak runs at the configured c.
  std::vector<PeakRun> all_comment_runs, all_edit_runs;
  {
    Table t{{"article", "kind", "start_day", "length", "max_ratio"}, {}};
    for (const auto& w : work) {
      for (const auto* runs : {&w.report.comment_runs, &w.report.edit_runs}) {
        for (const auto& r : *runs) {
          t.add({r.article_id, std::string(to_string(r.kind)), format_day(r.start_day),
                 static_cast<std::int64_t>(r.length), r.max_ratio()});
        }
      }
      all_comment_runs.insert(all_comment_runs.end(), w.report.comment_runs.begin(),
                              w.report.comment_runs.end());
      all_edit_runs.insert(all_edit_runs.end(), w.report.edit_runs.begin(),
                           w.report.edit_runs.end());
    }
    emit(t, "peaks");
  }

  // Peak totals and overlaps per peak factor.
  {
    Table counts{{"kind", "c", "peak_runs", "peak_days", "articles_with_peaks"}, {}};
    Table over{{"c", "tolerance", "comment_runs", "overlapping_comment_runs",
                "articles_with_overlap"},
               {}};
    for (std::size_t ci = 0; ci < cs.size(); ++ci) {
      KindSweep comment, edit;
      std::uint64_t comment_articles = 0, edit_articles = 0;
      std::vector<std::uint64_t> overlapping(config.tolerances.size(), 0);
      std::vector<std::uint64_t> overlap_articles(config.tolerances.size(), 0);
      for (const auto& w : work) {
        const auto& e = w.sweep[ci];
        comment.runs += e.comment.runs;
        comment.days += e.comment.days;
        edit.runs += e.edit.runs;
        edit.days += e.edit.days;
        comment_articles += e.comment.runs > 0;
        edit_articles += e.edit.runs > 0;
        for (std::size_t ti = 0; ti < overlapping.size(); ++ti) {
          overlapping[ti] += e.overlapping[ti];
          overlap_articles[ti] += e.overlapping[ti] > 0;
        }
      }
      counts.add({"comment", cs[ci], count(comment.runs), count(comment.days), count(comment_articles)});
      counts.add({"edit", cs[ci], count(edit.runs), count(edit.days), count(edit_articles)});
      for (std::size_t ti = 0; ti < overlapping.size(); ++ti) {
        over.add({cs[ci], static_cast<std::int64_t>(config.tolerances[ti]), count(comment.runs),
                  count(overlapping[ti]), count(overlap_articles[ti])});
      }
    }
    emit(counts, "peak_counts");
    emit(over, "overlap");
  }

  // Anniversary gaps.
  {
    Table t{{"kind", "article", "anniversaries"}, {}};
    for (const auto* runs : {&all_comment_runs, &all_edit_runs}) {
      std::vector<std::pair<std::string, int>> rows;
      for (const auto& [article, n] : anniversaries(*runs)) {
        if (n > 0) rows.emplace_back(article, n);
      }
      std::stable_sort(rows.begin(), rows.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      const auto kind = runs == &all_comment_runs ? "comment" : "edit";
      for (const auto& [article, n] : rows) t.add({kind, article, static_cast<std::int64_t>(n)});
    }
    emit(t, "anniversaries");
  }

  // Distributions of peaks per article, run length and inter-peak time.
  std::map<std::string, std::vector<std::int64_t>> samples;
  {
    Table per_article{{"kind", "value", "count"}, {}};
    Table lengths{{"kind", "value", "count"}, {}};
    Table gaps{{"kind", "value", "count"}, {}};
    for (const auto* runs : {&all_comment_runs, &all_edit_runs}) {
      const std::string kind = runs == &all_comment_runs ? "comment" : "edit";
      append_distribution(per_article, kind, peaks_per_article(*runs));
      append_distribution(lengths, kind, run_lengths(*runs));
      std::vector<std::int64_t> intervals;
      for (const auto& w : work) {
        const auto& list = kind == "comment" ? w.report.comment_runs : w.report.edit_runs;
        for (long g : inter_peak_intervals(list)) intervals.push_back(g);
        if (!list.empty()) samples[kind + ":peaks_per_article"].push_back(static_cast<std::int64_t>(list.size()));
        for (const auto& r : list) samples[kind + ":run_length"].push_back(r.length);
      }
      append_distribution(gaps, kind, integer_histogram(intervals));
      samples[kind + ":inter_peak"] = std::move(intervals);
    }
    emit(per_article, "dist_peaks_per_article");
    emit(lengths, "dist_run_length");
    emit(gaps, "dist_inter_peak");
  }

  // Power-law exponents of those distributions.
  {
    Table t{{"kind", "quantity", "alpha", "x_min", "n_samples", "degenerate"}, {}};
    for (const auto& [key, values] : samples) {
      const auto colon = key.find(':');
      std::vector<Cell> row{key.substr(0, colon), key.substr(colon + 1), std::monostate{},
                            config.x_min, std::monostate{}, std::monostate{}};
      try {
        const auto fit = fit_power_law(values, config.x_min);
        row[2] = fit.alpha;
        row[4] = count(fit.n_samples);
        row[5] = std::string(fit.degenerate ? "true" : "false");
      } catch (const std::invalid_argument&) {
        row[4] = static_cast<std::int64_t>(std::count_if(
            values.begin(), values.end(), [&](std::int64_t v) { return v >= config.x_min; }));
      }
      t.add(std::move(row));
    }
    emit(t, "powerlaw");
  }

  // Ratio distribution (share of active days above each factor).
  {
    RatioTally comment_tally, edit_tally;
    for (const auto& w : work) {
      comment_tally += w.comment_ratios;
      edit_tally += w.edit_ratios;
    }
    Table t{{"kind", "variant", "threshold", "days_above", "active_days", "fraction"}, {}};
    for (const auto* tally : {&comment_tally, &edit_tally}) {
      const std::string kind = tally == &comment_tally ? "comment" : "edit";
      for (std::size_t i = 0; i < kRatioThresholds.size(); ++i) {
        for (int variant = 0; variant < 2; ++variant) {
          const auto above = variant == 0 ? tally->floored[i] : tally->pure[i];
          Cell fraction = std::monostate{};
          if (tally->active_days > 0) {
            fraction = static_cast<double>(above) / static_cast<double>(tally->active_days);
          }
          t.add({kind, std::string(variant == 0 ? "floored" : "pure"), kRatioThresholds[i],
                 count(above), count(tally->active_days), fraction});
        }
      }
    }
    emit(t, "ratio_ccdf");
  }

  // Discussion growth speed.
  std::vector<HTrace> traces;
  for (const auto& w : work) {
    if (w.report.trace) traces.push_back(*w.report.trace);
  }
  const auto ranked = rank_by_speed(traces, config.min_comments);
  {
    std::vector<SpeedRow> fastest(ranked.begin(),
                                  ranked.begin() + static_cast<long>(std::min(config.speed_rows, ranked.size())));
    std::vector<SpeedRow> slowest(ranked.rbegin(),
                                  ranked.rbegin() + static_cast<long>(std::min(config.speed_rows, ranked.size())));
    emit(speed_table(fastest), "speed_fastest");
    emit(speed_table(slowest), "speed_slowest");

    std::vector<double> dh;
    for (const auto& r : ranked) {
      if (r.delta_h > 0) dh.push_back(r.delta_h);
    }
    const auto hist = log_binned_histogram(dh, config.bins_per_decade);
    const auto density = hist.densities();
    Table t{{"bin_lo", "bin_hi", "count", "density"}, {}};
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
      t.add({hist.bin_edges[i], hist.bin_edges[i + 1], count(hist.counts[i]), density[i]});
    }
    emit(t, "dist_delta_h");
  }

  // Top-article listings.
  {
    std::vector<const ArticleReport*> reps;
    for (const auto& w : work) reps.push_back(&w.report);
    const auto top = [&](auto key, auto filter) {
      std::vector<const ArticleReport*> sel;
      for (auto* r : reps) {
        if (filter(*r)) sel.push_back(r);
      }
      std::stable_sort(sel.begin(), sel.end(),
                       [&](const ArticleReport* a, const ArticleReport* b) { return key(*a) > key(*b); });
      if (sel.size() > config.top_rows) sel.resize(config.top_rows);
      return sel;
    };
    Table tc{{"article", "comment_peaks", "edit_peaks"}, {}};
    for (auto* r : top([](const ArticleReport& a) { return a.comment_runs.size(); },
                       [](const ArticleReport& a) { return !a.comment_runs.empty(); })) {
      tc.add({r->article_id, count(r->comment_runs.size()), count(r->edit_runs.size())});
    }
    emit(tc, "top_comment_peaks");
    Table te{{"article", "edit_peaks", "comment_peaks"}, {}};
    for (auto* r : top([](const ArticleReport& a) { return a.edit_runs.size(); },
                       [](const ArticleReport& a) { return !a.edit_runs.empty(); })) {
      te.add({r->article_id, count(r->edit_runs.size()), count(r->comment_runs.size())});
    }
    emit(te, "top_edit_peaks");
    Table tl{{"article", "max_comment_run"}, {}};
    for (auto* r : top([](const ArticleReport& a) { return a.max_comment_run.value_or(0); },
                       [](const ArticleReport& a) { return a.max_comment_run.has_value(); })) {
      tl.add({r->article_id, opt_cell(r->max_comment_run)});
    }
    emit(tl, "longest_comment_peaks");
  }

  // Global daily totals.
  {
    std::map<Day, std::pair<std::uint64_t, std::uint64_t>> days;
    std::optional<Day> lo, hi;
    for (const auto* series : {&edit_series, &comment_series}) {
      for (const auto& [_, s] : *series) {
        lo = lo ? std::min(*lo, s.start_day) : s.start_day;
        hi = hi ? std::max(*hi, s.end_day()) : s.end_day();
      }
    }
    Table t{{"day", "edits", "comments"}, {}};
    if (lo) {
      const auto span = static_cast<std::size_t>(days_between(*lo, *hi)) + 1;
      std::vector<std::uint64_t> e(span, 0), c(span, 0);
      for (const auto& [_, s] : edit_series) {
        const auto off = static_cast<std::size_t>(days_between(*lo, s.start_day));
        for (std::size_t i = 0; i < s.counts.size(); ++i) e[off + i] += s.counts[i];
      }
      for (const auto& [_, s] : comment_series) {
        const auto off = static_cast<std::size_t>(days_between(*lo, s.start_day));
        for (std::size_t i = 0; i < s.counts.size(); ++i) c[off + i] += s.counts[i];
      }
      for (std::size_t i = 0; i < span; ++i) {
        t.add({format_day(*lo + std::chrono::days{static_cast<long>(i)}), count(e[i]), count(c[i])});
      }
    }
    emit(t, "daily_totals");
  }

  // Per-article listing.
  {
    Table t{{"article", "n_edits", "n_comments", "n_dated_comments", "comment_runs", "edit_runs",
             "comment_peak_days", "edit_peak_days", "max_comment_run", "max_edit_run", "final_h",
             "max_level", "h0", "delta_h", "mature"},
            {}};
    for (const auto& w : work) {
      const auto& r = w.report;
      Cell mature = std::monostate{};
      if (r.maturity) mature = std::string(r.maturity->mature ? "true" : "false");
      t.add({r.article_id, count(r.n_edits), count(r.n_comments), count(r.n_dated_comments),
             count(r.comment_runs.size()), count(r.edit_runs.size()),
             count(peak_day_total(r.comment_runs)), count(peak_day_total(r.edit_runs)),
             opt_cell(r.max_comment_run), opt_cell(r.max_edit_run), opt_cell(r.final_h),
             opt_cell(r.max_level),
             r.trace ? Cell{static_cast<std::int64_t>(r.trace->h0)} : Cell{},
             r.delta_h ? Cell{r.delta_h->value} : Cell{}, mature});
    }
    emit(t, "articles");
  }

  // Summary.
  {
    Table t{{"key", "value"}, {}};
    const auto put = [&](std::string key, Cell v) { t.add({std::move(key), std::move(v)}); };
    put("edit_records_read", count(edit_totals.read));
    put("edit_records_rejected", count(edit_totals.rejected));
    put("edit_events", count(edit_totals.events));
    put("comment_records_read", count(comment_totals.read));
    put("comment_records_rejected", count(comment_totals.rejected));
    put("comment_events", count(comment_totals.events));
    put("dated_comments", count(dated_comments));
    put("undated_comments", count(undated));
    put("records_reconcile",
        std::string(edit_totals.read == edit_totals.events + edit_totals.rejected &&
                            comment_totals.read == comment_totals.events + comment_totals.rejected
                        ? "true"
                        : "false"));
    put("articles", count(work.size()));
    put("articles_with_edits", count(edit_series.size()));
    put("articles_with_comments", count(comment_series.size()));
    put("invalid_discussions", count(invalid_discussions));
    put("comment_edit_ratio", edit_totals.events > 0
                                  ? Cell{static_cast<double>(dated_comments) /
                                         static_cast<double>(edit_totals.events)}
                                  : Cell{});
    put("c", config.params.c);
    put("n_min", static_cast<std::int64_t>(config.params.n_min));
    put("window_halfwidth", static_cast<std::int64_t>(config.params.window_halfwidth));
    put("as_of", format_timestamp(as_of));
    for (const auto* runs : {&all_comment_runs, &all_edit_runs}) {
      const std::string kind = runs == &all_comment_runs ? "comment" : "edit";
      std::set<std::string_view> articles;
      for (const auto& r : *runs) articles.insert(r.article_id);
      put(kind + "_peak_runs", count(runs->size()));
      put(kind + "_peak_days", count(peak_day_total(*runs)));
      put(kind + "_articles_with_peaks", count(articles.size()));
      put(kind + "_runs_per_peaked_article",
          articles.empty() ? Cell{}
                           : Cell{static_cast<double>(runs->size()) / static_cast<double>(articles.size())});
    }
    put("ranked_discussions", count(ranked.size()));
    std::vector<double> dh;
    for (const auto& r : ranked) dh.push_back(r.delta_h);
    double mean = 0.0;
    for (double v : dh) mean += v;
    put("delta_h_mean", dh.empty() ? Cell{} : Cell{mean / static_cast<double>(dh.size())});
    put("delta_h_median", dh.empty() ? Cell{} : Cell{median_of(dh)});

    // Delta h against longest edit peak, among ranked discussions with edit peaks.
    std::map<std::string_view, const ArticleReport*> by_id;
    for (const auto& w : work) by_id.emplace(w.report.article_id, &w.report);
    std::vector<double> xs, ys;
    for (const auto& r : ranked) {
      const auto* rep = by_id.at(r.article_id);
      if (!rep->max_edit_run) continue;
      xs.push_back(r.delta_h);
      ys.push_back(*rep->max_edit_run);
    }
    Cell r_cell, p_cell;
    try {
      const auto corr = pearson(xs, ys);
      r_cell = corr.r;
      p_cell = corr.p;
    } catch (const std::invalid_argument&) {
    }
    put("pearson_delta_h_max_edit_run_r", r_cell);
    put("pearson_delta_h_max_edit_run_p", p_cell);
    put("pearson_delta_h_max_edit_run_n", count(xs.size()));
    put("diagnostics", count(outcome.diagnostics.size()));
    emit(t, "summary");
  }

  {
    const auto path = config.out_dir / "diagnostics.txt";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    for (const auto& d : outcome.diagnostics) out << d << '\n';
    outcome.files.push_back(path);
  }
  return outcome;
}

std::vector<PeakRun> read_peak_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  std::vector<std::string> cells;
  std::map<std::string, std::size_t, std::less<>> columns;
  std::vector<PeakRun> runs;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) {
    return InputError(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!split_csv_line(line, cells)) throw fail("unterminated quoted field");
    if (columns.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) columns.emplace(cells[i], i);
      for (const char* name : {"article", "kind", "start_day", "length"}) {
        if (!columns.contains(name)) throw fail(std::string("missing column ") + name);
      }
      continue;
    }
    if (cells.size() != columns.size()) throw fail("wrong number of fields");
    const auto cell = [&](const char* name) -> const std::string& { return cells[columns.find(name)->second]; };
    PeakRun run;
    run.article_id = cell("article");
    const auto kind = parse_kind(cell("kind"));
    const auto day = parse_day(cell("start_day"));
    if (!kind) throw fail("bad kind " + cell("kind"));
    if (!day) throw fail("bad start_day " + cell("start_day"));
    run.kind = *kind;
    run.start_day = *day;
    const auto& len = cell("length");
    const auto [ptr, ec] = std::from_chars(len.data(), len.data() + len.size(), run.length);
    if (ec != std::errc{} || ptr != len.data() + len.size() || run.length == 0) {
      throw fail("bad length " + len);
    }
    runs.push_back(std::move(run));
  }
  if (columns.empty()) throw fail("missing header");
  return runs;
}

std::string alert_tier(double ratio, double c) {
  if (ratio >= 4 * c) return "4c";
  if (ratio >= 2 * c) return "2c";
  return "c";
}

Table alert_table(const std::vector<Alert>& alerts) {
  Table t{{"day", "article", "kind", "count", "median", "ratio", "tier"}, {}};
  for (const auto& a : alerts) {
    t.add({format_day(a.day), a.article_id, std::string(to_string(a.kind)),
           static_cast<std::int64_t>(a.count), a.median, a.ratio, a.tier});
  }
  return t;
}

WatchSession::WatchSession(PeakParams params) : params_(params) { params_.validate(); }

std::optional<Alert> WatchSession::feed(const std::string& article, ActivityKind kind, Day day,
                                        std::uint32_t count) {
  auto& state = states_[{article, kind}];
  const auto step = state.step(day, count, params_);
  if (!step.is_peak) return std::nullopt;
  return Alert{day, article, kind, count, step.median, step.ratio, alert_tier(step.ratio, params_.c)};
}

WatchRecord parse_watch_line(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
  std::vector<std::string_view> fields;
  for (std::size_t pos = 0;;) {
    const auto comma = line.find(',', pos);
    fields.push_back(line.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (fields.size() != 4) throw InputError("expected article,kind,date,count: " + std::string(line));
  WatchRecord rec;
  rec.article_id = std::string(fields[0]);
  if (rec.article_id.empty()) throw InputError("empty article id");
  const auto kind = parse_kind(fields[1]);
  if (!kind) throw InputError("unknown kind: " + std::string(fields[1]));
  rec.kind = *kind;
  const auto day = parse_day(fields[2]);
  if (!day) throw InputError("bad date: " + std::string(fields[2]));
  rec.day = *day;
  const auto& f = fields[3];
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), rec.count);
  if (ec != std::errc{} || ptr != f.data() + f.size() || f.empty()) {
    throw InputError("bad count: " + std::string(f));
  }
  return rec;
}

std::string format_alert(const Alert& a) {
  return format_day(a.day) + ',' + a.article_id + ',' + std::string(to_string(a.kind)) + ',' +
         std::to_string(a.count) + ',' + format_real(a.median) + ',' + format_real(a.ratio) + ',' +
         a.tier;
}

std::vector<Alert> simulate_watch(const std::filesystem::path& events, ActivityKind kind,
                                  InputFormat format, const PeakParams& params, bool sort,
                                  std::vector<std::string>& diagnostics) {
  params.validate();
  auto loaded = load_events(events, kind, format);
  for (const auto& d : loaded.diagnostics) diagnostics.push_back(to_string(d));

  struct Stamp {
    Timestamp ts;
    std::string_view article;
  };
  std::vector<Stamp> stamps;
  if (kind == ActivityKind::edit) {
    for (const auto& e : loaded.edits) stamps.push_back({e.timestamp, e.article_id});
  } else {
    for (const auto& c : loaded.comments) {
      if (c.timestamp) stamps.push_back({*c.timestamp, c.article_id});
    }
  }
  for (std::size_t i = 1; i < stamps.size() && !sort; ++i) {
    if (stamps[i].ts < stamps[i - 1].ts) {
      throw InputError(events.string() + ": out-of-order timestamp " +
                       format_timestamp(stamps[i].ts) + " after " +
                       format_timestamp(stamps[i - 1].ts) + " (use --sort)");
    }
  }
  if (sort) {
    std::stable_sort(stamps.begin(), stamps.end(),
                     [](const Stamp& a, const Stamp& b) { return a.ts < b.ts; });
  }

  struct Pending {
    Day day{};
    std::uint32_t count = 0;
  };
  WatchSession session(params);
  std::map<std::string_view, Pending> pending;
  std::vector<Alert> alerts;
  const auto close_day = [&](std::string_view article, const Pending& p) {
    if (auto alert = session.feed(std::string(article), kind, p.day, p.count)) {
      alerts.push_back(std::move(*alert));
    }
  };
  for (const auto& s : stamps) {
    const Day d = day_of(s.ts);
    auto [it, fresh] = pending.try_emplace(s.article, Pending{d, 0});
    if (!fresh && it->second.day != d) {
      close_day(s.article, it->second);
      it->second = {d, 0};
    }
    ++it->second.count;
  }
  for (const auto& [article, p] : pending) close_day(article, p);

  std::stable_sort(alerts.begin(), alerts.end(), [](const Alert& a, const Alert& b) {
    if (a.day != b.day) return a.day < b.day;
    return a.article_id < b.article_id;
  });
  return alerts;
}

}  // namespace talkpulse
