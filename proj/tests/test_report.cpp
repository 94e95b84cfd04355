#include <algorithm>
#include <cstdio>
#include <vector>

#include <doctest.h>

#include "plr/error.hpp"
#include "plr/report.hpp"
#include "plr/rng.hpp"

using namespace plr;

TEST_SUITE_BEGIN("report");

namespace {

TrialResult trial(const std::string& dataset, const std::string& method, std::size_t k,
                  std::uint64_t seed, double mse) {
  TrialResult t;
  t.dataset = dataset;
  t.method = method;
  t.num_false = k;
  t.seed = seed;
  t.test_mse = mse;
  t.validation_metric = mse * 0.9;
  return t;
}

}  // namespace

TEST_CASE("aggregate_cell mean/std and the single-trial case") {
  const std::vector<TrialResult> three = {trial("d", "ident", 4, 0, 4.0),
                                          trial("d", "ident", 4, 1, 5.0),
                                          trial("d", "ident", 4, 2, 6.0)};
  const CellStats s = aggregate_cell(three);
  CHECK(s.mean == doctest::Approx(5.0));
  CHECK(s.stddev == doctest::Approx(1.0));
  CHECK(s.n_trials == 3);

  const std::vector<TrialResult> one = {trial("d", "ident", 4, 0, 4.2)};
  const CellStats single = aggregate_cell(one);
  CHECK(single.mean == 4.2);
  CHECK(single.stddev == 0.0);
  CHECK(single.n_trials == 1);

  const std::vector<TrialResult> mixed = {trial("d", "ident", 4, 0, 4.0),
                                          trial("d", "pident", 4, 1, 5.0)};
  CHECK_THROWS_AS(aggregate_cell(mixed), AggregationError);
}

TEST_CASE("aggregate groups by cell and is order invariant") {
  std::vector<TrialResult> trials;
  for (std::uint64_t s = 0; s < 4; ++s) {
    trials.push_back(trial("abalone", "ident", 4, s, 4.0 + 0.1 * static_cast<double>(s)));
    trials.push_back(trial("abalone", "avgl-mse", 4, s, 14.0 + static_cast<double>(s)));
    trials.push_back(trial("housing", "ident", 2, s, 16.0));
  }
  const BenchReport a = aggregate(trials);
  CHECK(a.cells.size() == 3);

  std::vector<TrialResult> shuffled = trials;
  Rng rng(4);
  rng.shuffle(shuffled);
  const BenchReport b = aggregate(shuffled);
  REQUIRE(b.cells.size() == a.cells.size());
  for (const auto& [key, stats] : a.cells) {
    const auto it = b.cells.find(key);
    REQUIRE(it != b.cells.end());
    CHECK(it->second.mean == stats.mean);
    CHECK(it->second.stddev == stats.stddev);
  }

  // Duplicating a cell's trial list under fresh seeds keeps mean and std.
  std::vector<TrialResult> doubled = {trial("d", "ident", 4, 0, 4.0),
                                      trial("d", "ident", 4, 1, 6.0),
                                      trial("d", "ident", 4, 2, 4.0),
                                      trial("d", "ident", 4, 3, 6.0)};
  const CellStats dup = aggregate_cell(doubled);
  CHECK(dup.mean == doctest::Approx(5.0));
}

TEST_CASE("format_fixed rounds half to even on the decimal value") {
  CHECK(format_fixed(4.655, 2) == "4.66");
  CHECK(format_fixed(4.645, 2) == "4.64");
  CHECK(format_fixed(4.6551, 2) == "4.66");
  CHECK(format_fixed(4.6549, 2) == "4.65");
  CHECK(format_fixed(0.3, 2) == "0.30");
  CHECK(format_fixed(2.0, 2) == "2.00");
  CHECK(format_fixed(-1.005, 2) == "-1.00");
  CHECK(format_fixed(9.999, 2) == "10.00");
  CHECK(format_fixed(-0.0001, 2) == "0.00");
  CHECK(format_fixed(14.42, 2) == "14.42");
}

TEST_CASE("render_table marks the best method per row") {
  const std::vector<TrialResult> trials = {
      trial("abalone", "ident", 2, 0, 4.60), trial("abalone", "ident", 2, 1, 4.64),
      trial("abalone", "pident", 2, 0, 4.54), trial("abalone", "pident", 2, 1, 4.56),
  };
  BenchReport report = aggregate(trials);
  const std::string md = render_table(report, TableFormat::Markdown);
  // ident mean 4.62, pident mean 4.55: pident is bolded.
  CHECK(md.find("**4.55") != std::string::npos);
  CHECK(md.find("**4.62") == std::string::npos);
  CHECK(md.find("| abalone | 2 |") != std::string::npos);

  const std::string csv = render_table(report, TableFormat::Csv);
  CHECK(csv.find("*") == std::string::npos);
  CHECK(csv.find("|") == std::string::npos);
  CHECK(csv.find("4.55") != std::string::npos);
}

TEST_CASE("render_table column order follows the canonical method order") {
  const std::vector<TrialResult> trials = {
      trial("d", "pident", 2, 0, 1.0),
      trial("d", "supervised", 2, 0, 2.0),
      trial("d", "avgl-mse", 2, 0, 3.0),
  };
  const std::string csv = render_table(aggregate(trials), TableFormat::Csv);
  const auto sup = csv.find("supervised");
  const auto avgl = csv.find("avgl-mse");
  const auto pid = csv.find("pident");
  REQUIRE(sup != std::string::npos);
  CHECK(sup < avgl);
  CHECK(avgl < pid);
}

TEST_CASE("render is byte-deterministic") {
  std::vector<TrialResult> trials;
  for (std::uint64_t s = 0; s < 5; ++s) {
    trials.push_back(trial("a", "ident", 4, s, 4.0 + 0.37 * static_cast<double>(s)));
    trials.push_back(trial("a", "avgl-mae", 4, s, 5.0 + 0.11 * static_cast<double>(s)));
  }
  const std::string first = render_table(aggregate(trials), TableFormat::Markdown);
  const std::string second = render_table(aggregate(trials), TableFormat::Markdown);
  CHECK(first == second);
}

TEST_CASE("trial result store line round-trips without runtime") {
  TrialResult t = trial("abalone", "ident", 4, 3, 4.655);
  t.runtime_seconds = 123.0;
  const std::string line = t.to_store_json();
  CHECK(line.find("runtime") == std::string::npos);
  const TrialResult back = TrialResult::from_store_json(line);
  CHECK(back.dataset == t.dataset);
  CHECK(back.method == t.method);
  CHECK(back.num_false == t.num_false);
  CHECK(back.seed == t.seed);
  CHECK(back.test_mse == t.test_mse);
  CHECK(back.validation_metric == t.validation_metric);
  CHECK_THROWS_AS(TrialResult::from_store_json("{}"), LoadError);
}

TEST_CASE("scaling curve csv round-trips exact floats") {
  std::vector<ScalingPoint> points;
  Rng rng(8);
  double fraction = 0.0;
  for (int i = 0; i < 5; ++i) {
    fraction += rng.uniform(0.05, 0.19);
    points.push_back({fraction, rng.uniform(1.0, 40.0), rng.uniform(0.0, 4.0)});
  }
  const std::string csv = scaling_curve_csv(points);
  const std::vector<ScalingPoint> back = parse_scaling_curve_csv(csv);
  REQUIRE(back.size() == points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    REQUIRE(back[i].fraction == points[i].fraction);
    REQUIRE(back[i].mean_mse == points[i].mean_mse);
    REQUIRE(back[i].stddev == points[i].stddev);
  }
}

TEST_CASE("scaling curve rejects bad fraction lists") {
  CHECK_THROWS_AS(scaling_curve_csv(std::vector<ScalingPoint>{{0.8, 1, 0}, {0.2, 2, 0}}),
                  DomainError);
  CHECK_THROWS_AS(scaling_curve_csv(std::vector<ScalingPoint>{{0.0, 1, 0}}), DomainError);
  CHECK_THROWS_AS(scaling_curve_csv(std::vector<ScalingPoint>{{0.5, 1, 0}, {0.5, 2, 0}}),
                  DomainError);
}

TEST_CASE("scaling curve svg slopes down for an improving run") {
  const std::vector<ScalingPoint> points = {{0.2, 10.0, 0.0}, {1.0, 5.0, 0.0}};
  const std::string svg = scaling_curve_svg(points);
  const auto poly = svg.find("<polyline");
  REQUIRE(poly != std::string::npos);
  const auto points_attr = svg.find("points=\"", poly);
  const auto end = svg.find('"', points_attr + 8);
  const std::string coords = svg.substr(points_attr + 8, end - points_attr - 8);
  double x1, y1, x2, y2;
  REQUIRE(std::sscanf(coords.c_str(), "%lf,%lf %lf,%lf", &x1, &y1, &x2, &y2) == 4);
  CHECK(x2 > x1);
  CHECK(y2 > y1);   // larger svg y = lower mse

  // A single point still renders.
  const std::string tiny = scaling_curve_svg(std::vector<ScalingPoint>{{0.5, 3.0, 1.0}});
  CHECK(tiny.find("<svg") != std::string::npos);
  CHECK(tiny.find("circle") != std::string::npos);
}

TEST_SUITE_END();
