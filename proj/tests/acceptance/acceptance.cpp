// Acceptance run: one PASS/FAIL/SKIP line per criterion. Exit status is
// nonzero when any criterion fails.
#include <spawn.h>
#include <sys/resource.h>
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "talkpulse/discussion.hpp"
#include "talkpulse/errors.hpp"
#include "talkpulse/ingest.hpp"
#include "talkpulse/peakstats.hpp"
#include "talkpulse/talkparser.hpp"
#include "talkpulse/timeseries.hpp"

extern char** environ;

using namespace talkpulse;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::pass;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Status::pass : Status::fail, std::move(detail)};
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s.precision(precision);
  s << std::fixed << v;
  return s.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1e", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Random series shared by criteria 1, 2 and 8: quiet stretches, noisy
// stretches and isolated bursts.
struct SeriesCase {
  std::vector<std::uint32_t> counts;
  PeakParams params;
};

std::vector<SeriesCase> random_series(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  const double cs[] = {2, 5, 10, 20};
  const std::uint32_t floors[] = {1, 10};
  std::vector<SeriesCase> out;
  for (std::size_t i = 0; i < n; ++i) {
    SeriesCase sc;
    const std::size_t len = 1 + rng() % 200;
    const std::uint32_t base = static_cast<std::uint32_t>(rng() % 60);
    for (std::size_t d = 0; d < len; ++d) {
      std::uint32_t v;
      switch (rng() % 8) {
        case 0: v = static_cast<std::uint32_t>(rng() % 1001); break;
        case 1: v = 0; break;
        default: v = base + static_cast<std::uint32_t>(rng() % (base / 2 + 3));
      }
      sc.counts.push_back(std::min<std::uint32_t>(v, 1000));
    }
    sc.params.c = cs[rng() % 4];
    sc.params.n_min = floors[rng() % 2];
    sc.params.window_halfwidth = 14;
    out.push_back(std::move(sc));
  }
  return out;
}

ActivitySeries as_series(const std::vector<std::uint32_t>& counts) {
  return {"S", ActivityKind::edit, *parse_day("2005-01-01"), counts};
}

std::vector<bool> run_days(const std::vector<PeakRun>& runs, const ActivitySeries& s) {
  std::vector<bool> flags(s.counts.size());
  for (const auto& r : runs) {
    const auto first = (r.start_day - s.start_day).count();
    for (std::uint32_t k = 0; k < r.length; ++k) flags[static_cast<std::size_t>(first + k)] = true;
  }
  return flags;
}

Outcome ac1_peak_oracle() {
  const auto cases = random_series(101, 1000);
  const auto t0 = Clock::now();
  std::size_t mismatches = 0, peak_days = 0;
  for (const auto& sc : cases) {
    const auto s = as_series(sc.counts);
    const auto got = run_days(detect_peaks(s, sc.params), s);
    const auto want = oracle::centred_peaks(sc.counts, sc.params.c, sc.params.n_min,
                                            sc.params.window_halfwidth);
    mismatches += got != want;
    peak_days += static_cast<std::size_t>(std::count(want.begin(), want.end(), true));
  }
  const double secs = seconds_since(t0);
  return verdict(mismatches == 0 && secs < 5.0,
                 std::to_string(mismatches) + " mismatching series of 1000, " +
                     std::to_string(peak_days) + " oracle peak days, " + fmt(secs) + " s (< 5 s)");
}

Outcome ac2_subset() {
  const auto cases = random_series(202, 1000);
  std::size_t violations = 0, n5 = 0, n10 = 0, n20 = 0;
  for (const auto& sc : cases) {
    const auto s = as_series(sc.counts);
    std::vector<std::vector<bool>> flags;
    for (double c : {5.0, 10.0, 20.0}) {
      PeakParams p = sc.params;
      p.c = c;
      flags.push_back(run_days(detect_peaks(s, p), s));
    }
    for (std::size_t d = 0; d < s.counts.size(); ++d) {
      n5 += flags[0][d];
      n10 += flags[1][d];
      n20 += flags[2][d];
      if ((flags[2][d] && !flags[1][d]) || (flags[1][d] && !flags[0][d])) ++violations;
    }
  }
  return verdict(violations == 0, std::to_string(violations) + " violations; peak days c=5/10/20: " +
                                      std::to_string(n5) + "/" + std::to_string(n10) + "/" +
                                      std::to_string(n20));
}

Outcome ac3_hindex_oracle() {
  std::mt19937_64 rng(303);
  std::vector<std::vector<CommentEvent>> forests;
  for (int i = 0; i < 1000; ++i) {
    forests.push_back(gen::random_forest(rng, "A", 1 + rng() % 500, static_cast<int>(rng() % 31)));
  }
  // Timed: the implementation alone.
  const auto t0 = Clock::now();
  std::vector<std::vector<int>> depths, prefix_h;
  std::vector<int> final_h;
  for (const auto& nodes : forests) {
    const auto tree = DiscussionTree::build("A", nodes);
    auto& d = depths.emplace_back();
    for (const auto& c : tree.nodes()) d.push_back(c.depth);
    final_h.push_back(h_index(tree));
    HIndexCounter counter;
    auto& steps = prefix_h.emplace_back();
    for (int v : d) steps.push_back(counter.add(v + 1));
  }
  const double secs = seconds_since(t0);

  const auto t1 = Clock::now();
  std::size_t mismatches = 0, insertion_failures = 0;
  int max_h = 0;
  for (std::size_t i = 0; i < forests.size(); ++i) {
    mismatches += final_h[i] != oracle::h_index_scan(depths[i]);
    max_h = std::max(max_h, final_h[i]);
    std::vector<int> prefix;
    int last = 0;
    for (std::size_t k = 0; k < depths[i].size(); ++k) {
      prefix.push_back(depths[i][k]);
      const int now = prefix_h[i][k];
      if (now < last || now != oracle::h_index_scan(prefix)) ++insertion_failures;
      last = now;
    }
  }
  const double oracle_secs = seconds_since(t1);
  return verdict(mismatches == 0 && insertion_failures == 0 && secs < 5.0,
                 std::to_string(mismatches) + " h mismatches, " + std::to_string(insertion_failures) +
                     " insertion failures, max h " + std::to_string(max_h) + ", " + fmt(secs) +
                     " s (< 5 s; oracle " + fmt(oracle_secs) + " s)");
}

Outcome ac4_delta_h() {
  std::size_t failures = 0;
  std::string first_failure;
  // Uniform spacing through the full tree -> trace -> delta h path.
  std::mt19937_64 rng(404);
  for (int i = 0; i < 200; ++i) {
    const double spacing = static_cast<double>(1 + rng() % (400 * 86400)) / 86400.0;
    const int h0 = 1 + static_cast<int>(rng() % 5);
    const int rises = 1 + static_cast<int>(rng() % 8);
    std::vector<double> incs;
    for (int k = 1; k <= rises; ++k) incs.push_back(k * spacing);
    const auto dh = delta_h(h_trace(DiscussionTree::build("S", gen::staircase("S", h0, incs))));
    if (std::fabs(dh.value - spacing) > 1e-9) {
      if (failures++ == 0) first_failure = "uniform spacing " + fmt(spacing, 9);
    }
  }
  struct Fixture {
    int h0;
    std::vector<double> increases;
    int undated;
    double expected;
  };
  const std::vector<Fixture> fixtures = {
      {1, {10, 20}, 0, 10.0},
      {4, {100}, 0, 100.0},
      {2, {3, 7}, 0, 3.5},
      {3, {1.5, 2.5, 6}, 0, 2.0},
      {5, {30, 30, 90}, 0, 30.0},
      {2, {0.25}, 0, 0.25},
      {6, {12}, 0, 12.0},
      {3, {10, 11, 12, 13}, 0, 3.25},
      {2, {365}, 0, 365.0},
      {1, {5}, 0, 5.0},
      {4, {2, 2}, 0, 1.0},
      {3, {0.5, 40.5}, 0, 20.25},
      {7, {700}, 0, 700.0},
      {2, {1, 2, 3, 4, 5, 6, 7, 8}, 0, 1.0},
      {3, {9}, 3, 9.0},
      {5, {1.25, 2.5, 3.75}, 0, 1.25},
      {2, {50, 150}, 0, 75.0},
      {4, {0.1, 0.3}, 0, 0.15},
      {1, {7, 7, 21}, 0, 7.0},
      {3, {331.9}, 2, 331.9},
  };
  for (std::size_t i = 0; i < fixtures.size(); ++i) {
    const auto& f = fixtures[i];
    const auto trace =
        h_trace(DiscussionTree::build("S", gen::staircase("S", f.h0, f.increases, f.undated)));
    const auto dh = delta_h(trace);
    const bool ok = trace.h0 == f.h0 && std::fabs(dh.value - f.expected) < 1e-9 &&
                    dh.intervals_used == static_cast<int>(f.increases.size());
    if (!ok && failures++ == 0) first_failure = "fixture " + std::to_string(i + 1);
  }
  return verdict(failures == 0, std::to_string(failures) + " failures over 200 uniform traces and " +
                                    std::to_string(fixtures.size()) + " truncated-trace fixtures" +
                                    (failures ? " (first: " + first_failure + ")" : ""));
}

Outcome ac5_power_law() {
  std::mt19937_64 rng(505);
  std::vector<std::int64_t> xs(100'000);
  for (auto& x : xs) x = oracle::zipf(1.4, rng);
  const auto t0 = Clock::now();
  const auto fit = fit_power_law(xs, 1);
  double secs = seconds_since(t0);
  const bool recovered = std::fabs(fit.alpha - 1.4) <= 0.1;

  double worst = 0.0;
  const std::pair<double, std::int64_t> setups[] = {{1.4, 1}, {1.6, 1}, {1.8, 1}, {2.0, 1},
                                                    {2.5, 1}, {3.0, 1}, {1.5, 2}, {2.2, 3},
                                                    {1.7, 5}, {2.8, 10}};
  for (const auto& [alpha, x_min] : setups) {
    std::vector<std::int64_t> sample;
    while (sample.size() < 800) {
      const auto x = oracle::zipf(alpha, rng);
      if (x >= x_min) sample.push_back(x);
    }
    const double grid = oracle::grid_argmax(
        [&](double a) { return oracle::shifted_continuous_ll(a, sample, x_min); });
    const auto t = Clock::now();
    const double alpha_hat = fit_power_law(sample, x_min).alpha;
    secs += seconds_since(t);
    worst = std::max(worst, std::fabs(alpha_hat - grid));
  }
  return verdict(recovered && worst < 0.01 && secs < 10.0,
                 "alpha " + fmt(fit.alpha, 4) + " (1.4 +- 0.1), worst grid gap " + fmt(worst, 5) +
                     " on 10 fixtures (< 0.01), fitting " + fmt(secs, 4) + " s (< 10 s)");
}

Outcome ac6_pearson() {
  const auto got = pearson(fixture::kPearsonX, fixture::kPearsonY);
  const auto ref = oracle::pearson_reference(fixture::kPearsonX, fixture::kPearsonY);
  const double gap = std::fabs(got.r - ref.r.convert_to<double>());
  std::vector<double> xs, up, down;
  for (int i = 0; i < 20; ++i) {
    xs.push_back(i * 0.7 - 3.0);
    up.push_back(2.5 * xs.back() + 1.0);
    down.push_back(-4.0 * xs.back() + 2.0);
  }
  const double pos = std::fabs(pearson(xs, up).r - 1.0);
  const double neg = std::fabs(pearson(xs, down).r + 1.0);
  return verdict(gap < 1e-12 && pos < 1e-12 && neg < 1e-12,
                 "r " + fmt(got.r, 15) + ", gap to 50-digit reference " + sci(gap) + ", |r-1| " +
                     sci(pos) + ", |r+1| " + sci(neg) +
                     " (< 1e-12)");
}

Outcome ac7_parser_corpus() {
  const fs::path dir = fs::path(TALKPULSE_FIXTURES) / "talk";
  std::size_t pages = 0, mismatches = 0, round_trip_failures = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".wiki") continue;
    ++pages;
    const auto expected_path = fs::path(entry.path()).replace_extension(".expected.jsonl");
    const auto expected = slurp(expected_path);
    std::string got;
    for (const auto& e : to_events(read_talk_page(entry.path())).events) got += to_jsonl(e) + "\n";
    mismatches += got != expected;

    const auto reloaded = load_events(expected_path, ActivityKind::comment, InputFormat::jsonl);
    std::string again;
    for (const auto& e : reloaded.comments) again += to_jsonl(e) + "\n";
    round_trip_failures += again != expected || reloaded.records_rejected != 0;
  }
  return verdict(pages == 25 && mismatches == 0 && round_trip_failures == 0,
                 std::to_string(pages) + " pages, " + std::to_string(mismatches) +
                     " stream mismatches, " + std::to_string(round_trip_failures) +
                     " round-trip failures");
}

Outcome ac8_stream() {
  const auto cases = random_series(808, 1000);
  std::size_t mismatches = 0, alerts = 0;
  for (const auto& sc : cases) {
    PeakParams p = sc.params;
    const auto want = oracle::trailing(sc.counts, p.c, p.n_min, p.window_halfwidth);
    const auto s = as_series(sc.counts);
    const auto batch = trailing_detection(s, p);
    StreamState state;
    bool same = batch.size() == want.size();
    for (std::size_t d = 0; d < sc.counts.size(); ++d) {
      const auto step = state.step(s.start_day + std::chrono::days{d}, sc.counts[d], p);
      same = same && step.is_peak == want[d].is_peak && step.median == want[d].median &&
             step.ratio == want[d].ratio && batch[d].is_peak == step.is_peak &&
             batch[d].median == step.median && batch[d].ratio == step.ratio;
      alerts += step.is_peak;
    }
    mismatches += !same;
  }
  return verdict(mismatches == 0, std::to_string(mismatches) + " mismatching series of 1000, " +
                                      std::to_string(alerts) + " streaming alerts");
}

struct ChildRun {
  int exit_code = -1;
  double seconds = 0.0;
  long max_rss_kb = 0;
};

ChildRun run_cli(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  std::string exe = TALKPULSE_CLI;
  argv.push_back(exe.data());
  std::vector<std::string> copy = args;
  for (auto& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);
  ChildRun run;
  const auto t0 = Clock::now();
  pid_t pid;
  if (posix_spawn(&pid, exe.c_str(), nullptr, nullptr, argv.data(), environ) != 0) return run;
  int status = 0;
  rusage usage{};
  wait4(pid, &status, 0, &usage);
  run.seconds = seconds_since(t0);
  run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  run.max_rss_kb = usage.ru_maxrss;
  return run;
}

// 10^4 articles with 100 edits and 100 comments each. Edits mix a steady
// background with occasional bursts; comments form forests up to depth 15.
void write_synthetic_corpus(const fs::path& dir) {
  std::mt19937_64 rng(909);
  std::ofstream edits(dir / "edits.jsonl"), comments(dir / "comments.jsonl");
  const auto origin = *parse_timestamp("2004-01-01T00:00:00Z");
  char line[256];
  for (int a = 0; a < 10'000; ++a) {
    const std::string article = "Article " + std::to_string(a);
    const int burst_day = static_cast<int>(rng() % 2000);
    for (int e = 0; e < 100; ++e) {
      const long day = e < 30 ? burst_day : static_cast<long>(rng() % 2000);
      const auto ts = origin + std::chrono::days{day} + std::chrono::seconds{rng() % 86400};
      std::snprintf(line, sizeof line, "{\"article\":\"%s\",\"ts\":\"%s\"}\n", article.c_str(),
                    format_timestamp(ts).c_str());
      edits << line;
    }
    std::vector<int> depth;
    long day = static_cast<long>(rng() % 500);
    for (int c = 0; c < 100; ++c) {
      int d = 0;
      int parent = -1;
      if (c > 0 && rng() % 5 != 0) {
        parent = static_cast<int>(rng() % static_cast<unsigned>(c));
        if (depth[static_cast<std::size_t>(parent)] >= 15) parent = -1;
      }
      if (parent >= 0) d = depth[static_cast<std::size_t>(parent)] + 1;
      depth.push_back(d);
      day += static_cast<long>(rng() % 20);
      const auto ts = origin + std::chrono::days{day} + std::chrono::seconds{rng() % 86400};
      const std::string parent_field =
          parent < 0 ? "null" : "\"c" + std::to_string(parent) + "\"";
      std::snprintf(line, sizeof line,
                    "{\"article\":\"%s\",\"id\":\"c%d\",\"parent\":%s,\"depth\":%d,\"ts\":\"%s\","
                    "\"author\":\"u%d\",\"ord\":%d}\n",
                    article.c_str(), c, parent_field.c_str(), d, format_timestamp(ts).c_str(),
                    static_cast<int>(rng() % 300), c);
      comments << line;
    }
  }
}

Outcome ac9_performance() {
  const auto dir = fs::temp_directory_path() / "talkpulse_acceptance_perf";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_synthetic_corpus(dir);
  const auto run = run_cli({"report", "--edits", (dir / "edits.jsonl").string(), "--comments",
                            (dir / "comments.jsonl").string(), "--min-comments", "50", "--out",
                            (dir / "out").string()});
  const double rss_mb = static_cast<double>(run.max_rss_kb) / 1024.0;
  const bool ok = run.exit_code == 0 && run.seconds < 60.0 && rss_mb < 2048.0 &&
                  fs::exists(dir / "out" / "summary.csv");
  fs::remove_all(dir);
  return verdict(ok, "exit " + std::to_string(run.exit_code) + ", " + fmt(run.seconds) +
                         " s (< 60 s), peak RSS " + fmt(rss_mb, 1) + " MB (< 2048 MB)");
}

// Looks for <stem>.jsonl or <stem>.csv in the corpus directory.
std::optional<fs::path> corpus_file(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".jsonl", ".csv"}) {
    if (fs::exists(dir / (stem + ext))) return dir / (stem + ext);
  }
  return std::nullopt;
}

std::map<std::string, std::string> read_summary(const fs::path& path) {
  std::map<std::string, std::string> out;
  std::ifstream in(path);
  std::vector<std::string> cells;
  for (std::string line; std::getline(in, line);) {
    if (split_csv_line(line, cells) && cells.size() == 2) out[cells[0]] = cells[1];
  }
  return out;
}

bool within(double got, double want, double rel) { return std::fabs(got - want) <= rel * want; }

Outcome ac10_full_corpus() {
  const char* env = std::getenv("TALKPULSE_CORPUS_DIR");
  if (env == nullptr || *env == '\0') {
    return {Status::skip, "TALKPULSE_CORPUS_DIR not set; full-corpus mode needs the dataset"};
  }
  const fs::path dir = env;
  const auto edits = corpus_file(dir, "edits");
  const auto comments = corpus_file(dir, "comments");
  if (!edits || !comments) {
    return {Status::fail, "expected edits.{jsonl,csv} and comments.{jsonl,csv} in " + dir.string()};
  }
  const auto out = fs::temp_directory_path() / "talkpulse_acceptance_corpus";
  fs::remove_all(out);
  const auto run = run_cli({"report", "--edits", edits->string(), "--comments", comments->string(),
                            "--out", out.string()});
  if (run.exit_code != 0) return {Status::fail, "report exited " + std::to_string(run.exit_code)};

  auto summary = read_summary(out / "summary.csv");
  const double ratio = std::stod(summary["comment_edit_ratio"]);
  const double comment_runs = std::stod(summary["comment_peak_runs"]);
  const double edit_runs = std::stod(summary["edit_peak_runs"]);
  bool ok = std::fabs(ratio - 0.06) <= 0.01 && within(comment_runs, 2580, 0.02) &&
            within(edit_runs, 32853, 0.02);
  std::string detail = "ratio " + fmt(ratio, 4) + " (0.06 +- 0.01), comment runs " +
                       fmt(comment_runs, 0) + " (2580 +- 2%), edit runs " + fmt(edit_runs, 0) +
                       " (32853 +- 2%)";

  const std::map<std::string, double> presidents = {
      {"George W. Bush", 70.7}, {"Barack Obama", 90.2}, {"Bill Clinton", 331.9}};
  std::map<std::string, double> found;
  std::ifstream in(out / "articles.csv");
  std::vector<std::string> cells;
  std::string line;
  std::getline(in, line);
  split_csv_line(line, cells);
  const auto col = std::find(cells.begin(), cells.end(), "delta_h") - cells.begin();
  while (std::getline(in, line)) {
    if (!split_csv_line(line, cells) || cells.empty()) continue;
    if (presidents.contains(cells[0]) && !cells[static_cast<std::size_t>(col)].empty()) {
      found[cells[0]] = std::stod(cells[static_cast<std::size_t>(col)]);
    }
  }
  for (const auto& [name, want] : presidents) {
    const auto it = found.find(name);
    const bool hit = it != found.end() && within(it->second, want, 0.05);
    ok = ok && hit;
    detail += ", " + name + " " + (it == found.end() ? "missing" : fmt(it->second, 1)) + " (" +
              fmt(want, 1) + " +- 5%)";
  }
  return verdict(ok, detail);
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"AC1 peak detector equals brute-force centred-median oracle", ac1_peak_oracle},
      {"AC2 peak days shrink as c grows (20 within 10 within 5)", ac2_subset},
      {"AC3 h-index equals theta-scan oracle, insertion monotone", ac3_hindex_oracle},
      {"AC4 delta h exact on uniform and truncated traces", ac4_delta_h},
      {"AC5 power-law MLE recovery and grid-search agreement", ac5_power_law},
      {"AC6 Pearson fixture and perfect-linearity cases", ac6_pearson},
      {"AC7 parser corpus byte-identical, JSONL round trip", ac7_parser_corpus},
      {"AC8 streaming equals trailing batch detection", ac8_stream},
      {"AC9 report over 1e6 comments + 1e6 edits in time and memory", ac9_performance},
      {"AC10 full-corpus reproduction", ac10_full_corpus},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    failed += o.status == Status::fail;
    std::printf("[%s] %s: %s\n", tag, name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
