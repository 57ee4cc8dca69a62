#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "talkpulse/errors.hpp"
#include "talkpulse/report.hpp"

using namespace talkpulse;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(TALKPULSE_FIXTURES) / "report";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("talkpulse_report_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig fixture_config(const fs::path& out) {
  RunConfig cfg;
  cfg.edit_paths = {kFixtures / "edits.jsonl"};
  cfg.comment_paths = {kFixtures / "comments.jsonl"};
  cfg.min_comments = 1;
  cfg.out_dir = out;
  return cfg;
}

std::string summary_value(const fs::path& dir, const std::string& key) {
  for (const auto& line : lines_of(dir / "summary.csv")) {
    if (line.rfind(key + ",", 0) == 0) return line.substr(key.size() + 1);
  }
  return "<missing>";
}

// Daily edit counts written as one event per edit, spread over the day.
fs::path edit_file(const fs::path& dir, const std::string& article,
                   const std::vector<std::uint32_t>& per_day) {
  const auto path = dir / (article + ".jsonl");
  std::ofstream out(path);
  const auto start = *parse_timestamp("2010-06-01T00:00:00Z");
  for (std::size_t d = 0; d < per_day.size(); ++d) {
    for (std::uint32_t i = 0; i < per_day[d]; ++i) {
      const auto ts = start + std::chrono::days{d} + std::chrono::seconds{i * 60};
      out << to_jsonl(EditEvent{article, ts}) << '\n';
    }
  }
  return path;
}

std::vector<Alert> watch(const fs::path& file, bool sort = false) {
  std::vector<std::string> diags;
  return simulate_watch(file, ActivityKind::edit, InputFormat::jsonl, PeakParams{}, sort, diags);
}

}  // namespace

TEST_CASE("config validation") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.c_sweep = {1.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.tolerances = {-1};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.k = -0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.params.c = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("empty inputs give header-only tables") {
  const auto in = scratch("empty_in");
  const auto out = scratch("empty_out");
  std::ofstream(in / "e.jsonl").close();
  std::ofstream(in / "c.jsonl").close();
  RunConfig cfg;
  cfg.edit_paths = {in / "e.jsonl"};
  cfg.comment_paths = {in / "c.jsonl"};
  cfg.out_dir = out;
  const auto outcome = run_report(cfg);
  CHECK(outcome.articles == 0);
  CHECK(outcome.diagnostics.empty());
  CHECK(lines_of(out / "peaks.csv") == std::vector<std::string>{"article,kind,start_day,length,max_ratio"});
  CHECK(lines_of(out / "speed_fastest.csv").size() == 1);
  CHECK(lines_of(out / "articles.csv").size() == 1);
  CHECK(summary_value(out, "records_reconcile") == "true");
  CHECK(summary_value(out, "comment_edit_ratio").empty());
}

TEST_CASE("missing input is an input error") {
  auto cfg = fixture_config(scratch("missing"));
  cfg.edit_paths = {kFixtures / "no_such_file.jsonl"};
  CHECK_THROWS_AS(run_report(cfg), InputError);
}

TEST_CASE("two-article fixture matches the golden tables") {
  const auto out = scratch("golden");
  const auto outcome = run_report(fixture_config(out));
  CHECK(outcome.articles == 2);
  REQUIRE(outcome.diagnostics.size() == 1);
  CHECK(outcome.diagnostics[0].find("malformed timestamp") != std::string::npos);
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(kFixtures / "golden")) {
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(out / entry.path().filename()) == slurp(entry.path()));
    ++compared;
  }
  CHECK(compared == 18);
}

TEST_CASE("totals reconcile with the diagnostics") {
  const auto out = scratch("reconcile");
  run_report(fixture_config(out));
  const auto num = [&](const char* key) { return std::stoll(summary_value(out, key)); };
  CHECK(num("edit_records_read") == num("edit_events") + num("edit_records_rejected"));
  CHECK(num("comment_records_read") == num("comment_events") + num("comment_records_rejected"));
  CHECK(num("comment_events") == num("dated_comments") + num("undated_comments"));
  CHECK(num("undated_comments") == 1);
  CHECK(num("diagnostics") == 1);
  CHECK(lines_of(out / "diagnostics.txt").size() == 1);
}

TEST_CASE("output does not depend on line order or thread count") {
  const auto in = scratch("shuffled_in");
  std::mt19937_64 rng(5);
  for (const char* name : {"edits.jsonl", "comments.jsonl"}) {
    auto lines = lines_of(kFixtures / name);
    std::shuffle(lines.begin(), lines.end(), rng);
    std::ofstream f(in / name);
    for (const auto& l : lines) f << l << '\n';
  }
  const auto a = scratch("order_a");
  const auto b = scratch("order_b");
  auto cfg = fixture_config(a);
  cfg.threads = 1;
  run_report(cfg);
  cfg.edit_paths = {in / "edits.jsonl"};
  cfg.comment_paths = {in / "comments.jsonl"};
  cfg.out_dir = b;
  cfg.threads = 4;
  run_report(cfg);
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.path().extension() != ".csv") continue;
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
  }
}

TEST_CASE("json output") {
  const auto out = scratch("json");
  auto cfg = fixture_config(out);
  cfg.format = OutputFormat::json;
  run_report(cfg);
  const auto peaks = slurp(out / "peaks.json");
  CHECK(peaks.find("\"article\":\"Beta\"") != std::string::npos);
  CHECK_FALSE(fs::exists(out / "peaks.csv"));
}

TEST_CASE("analyze_articles exposes per-article results") {
  auto loaded_e = load_events(kFixtures / "edits.jsonl", ActivityKind::edit, InputFormat::jsonl);
  auto loaded_c = load_events(kFixtures / "comments.jsonl", ActivityKind::comment, InputFormat::jsonl);
  const auto es = build_series(loaded_e.edits);
  const auto cs = build_series(loaded_c.comments);
  RunConfig cfg;
  std::vector<std::string> diags;
  const auto reports = analyze_articles(cfg, es, cs, loaded_c.comments,
                                        *parse_timestamp("2008-03-01T00:00:00Z"), diags);
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].article_id == "Alpha");
  CHECK(reports[0].final_h == 4);
  CHECK(reports[0].edit_runs.size() == 2);
  CHECK(reports[0].max_edit_run == 2u);
  CHECK_FALSE(reports[0].max_comment_run);
  CHECK(reports[1].final_h == 3);
  CHECK(reports[1].max_level == 21);
  REQUIRE(reports[1].delta_h);
  CHECK(reports[1].delta_h->value == doctest::Approx(4.99375).epsilon(1e-12));
}

TEST_CASE("peak table round trip") {
  const auto out = scratch("peaktable");
  run_report(fixture_config(out));
  const auto runs = read_peak_table(out / "peaks.csv");
  REQUIRE(runs.size() == 4);
  CHECK(runs[0].article_id == "Alpha");
  CHECK(runs[0].length == 2);
  CHECK(runs[0].start_day == parse_day("2008-01-31"));
  CHECK(runs[2].kind == ActivityKind::comment);
  CHECK(runs[2].day_ratios.empty());

  std::ofstream(out / "bad.csv") << "article,kind,start_day,length\nX,edit,2008-01-01,0\n";
  CHECK_THROWS_AS(read_peak_table(out / "bad.csv"), InputError);
  std::ofstream(out / "nohdr.csv") << "article,kind\n";
  CHECK_THROWS_AS(read_peak_table(out / "nohdr.csv"), InputError);
  CHECK_THROWS_AS(read_peak_table(out / "absent.csv"), InputError);
}

TEST_CASE("alert tiers") {
  CHECK(alert_tier(5.5, 5) == "c");
  CHECK(alert_tier(10, 5) == "2c");
  CHECK(alert_tier(19.9, 5) == "2c");
  CHECK(alert_tier(20, 5) == "4c");
}

TEST_CASE("watch lines") {
  const auto rec = parse_watch_line("Foo Bar,comment,2009-02-03,17\r");
  CHECK(rec.article_id == "Foo Bar");
  CHECK(rec.kind == ActivityKind::comment);
  CHECK(rec.day == parse_day("2009-02-03"));
  CHECK(rec.count == 17);
  CHECK_THROWS_AS(parse_watch_line("a,edit,2009-02-03"), InputError);
  CHECK_THROWS_AS(parse_watch_line("a,revert,2009-02-03,1"), InputError);
  CHECK_THROWS_AS(parse_watch_line("a,edit,2009-02-30,1"), InputError);
  CHECK_THROWS_AS(parse_watch_line("a,edit,2009-02-03,-1"), InputError);
  CHECK_THROWS_AS(parse_watch_line(",edit,2009-02-03,1"), InputError);

  WatchSession session{PeakParams{}};
  const auto d0 = *parse_day("2009-02-03");
  CHECK_FALSE(session.feed("a", ActivityKind::edit, d0, 3));
  const auto alert = session.feed("a", ActivityKind::edit, d0 + std::chrono::days{1}, 51);
  REQUIRE(alert);
  CHECK(alert->ratio == doctest::Approx(5.1));
  CHECK(format_alert(*alert) == "2009-02-04,a,edit,51,3,5.1,c");
  // Feeds are independent per article and kind.
  CHECK_NOTHROW(session.feed("a", ActivityKind::comment, d0, 1));
  CHECK_THROWS_AS(session.feed("a", ActivityKind::edit, d0, 1), OutOfOrderFeed);
}

TEST_CASE("simulate_watch examples") {
  const auto dir = scratch("watch");
  std::vector<std::uint32_t> flat(30, 3);

  CHECK(watch(edit_file(dir, "flat", flat)).empty());

  auto one = flat;
  one[20] = 100;
  const auto single = watch(edit_file(dir, "one", one));
  REQUIRE(single.size() == 1);
  CHECK(single[0].day == *parse_day("2010-06-21"));
  CHECK(single[0].count == 100);
  CHECK(single[0].ratio == 10.0);
  CHECK(single[0].tier == "2c");

  auto two = flat;
  two[15] = 100;
  two[20] = 100;
  const auto pair = watch(edit_file(dir, "two", two));
  REQUIRE(pair.size() == 2);
  CHECK(pair[1].day - pair[0].day == std::chrono::days{5});
}

TEST_CASE("simulate_watch ordering") {
  const auto dir = scratch("watch_order");
  const auto path = dir / "mixed.jsonl";
  {
    std::ofstream out(path);
    out << to_jsonl(EditEvent{"a", *parse_timestamp("2010-01-02T00:00:00Z")}) << '\n';
    out << to_jsonl(EditEvent{"a", *parse_timestamp("2010-01-01T00:00:00Z")}) << '\n';
  }
  CHECK_THROWS_AS(watch(path), InputError);
  CHECK(watch(path, true).empty());

  // Several articles interleaved; alerts sorted by day then article.
  const auto multi = dir / "multi.jsonl";
  {
    std::ofstream out(multi);
    const auto start = *parse_timestamp("2010-01-01T00:00:00Z");
    for (int d = 0; d < 20; ++d) {
      for (const char* art : {"b", "a"}) {
        const int n = d == 12 ? 60 : 2;
        for (int i = 0; i < n; ++i) {
          out << to_jsonl(EditEvent{art, start + std::chrono::days{d} + std::chrono::minutes{i}})
              << '\n';
        }
      }
    }
  }
  const auto alerts = watch(multi, true);
  REQUIRE(alerts.size() == 2);
  CHECK(alerts[0].article_id == "a");
  CHECK(alerts[1].article_id == "b");
}
