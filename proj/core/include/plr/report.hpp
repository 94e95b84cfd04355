#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace plr {

/// One (dataset, method, |S|, seed) training outcome.
struct TrialResult {
  std::string dataset;
  std::string method;
  std::size_t num_false = 0;
  std::uint64_t seed = 0;
  double test_mse = 0.0;
  double validation_metric = 0.0;
  double runtime_seconds = 0.0;   // informational; kept out of the results store

  /// Deterministic results-store line (excludes runtime).
  std::string to_store_json() const;
  static TrialResult from_store_json(const std::string& line);
};

struct CellKey {
  std::string dataset;
  std::size_t num_false = 0;
  std::string method;

  auto operator<=>(const CellKey&) const = default;
};

struct CellStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n_trials = 0;
};

struct BenchReport {
  std::map<CellKey, CellStats> cells;   // ordered by (dataset, |S|, method)
  std::string git_hash;
  std::string config_hash;
  std::string created_at;
};

/// Mean and sample std of one homogeneous group of trials.
/// Throws AggregationError when the trials disagree on (dataset, method, |S|).
CellStats aggregate_cell(std::span<const TrialResult> trials);

/// Group trials by (dataset, method, |S|) and compute per-cell stats.
/// A single-trial cell reports std 0 with n_trials = 1.
BenchReport aggregate(std::span<const TrialResult> trials);

enum class TableFormat { Markdown, Csv };

/// One row per (dataset, |S|), one column per method, cells "mean (std)"
/// rounded to two decimals (half-to-even). Markdown bolds the best mean per
/// row (ties: all tied are bolded).
std::string render_table(const BenchReport& report, TableFormat format);

/// Fixed-point decimal formatting with round-half-to-even on the shortest
/// round-trip representation of v.
std::string format_fixed(double v, int decimals);

struct ScalingPoint {
  double fraction = 0.0;
  double mean_mse = 0.0;
  double stddev = 0.0;
};

/// CSV of (fraction, mean, std). Fractions must be strictly increasing in
/// (0, 1]. Floats are written in shortest round-trip form.
std::string scaling_curve_csv(std::span<const ScalingPoint> points);
std::vector<ScalingPoint> parse_scaling_curve_csv(const std::string& text);

/// Line chart with a +-std error band.
std::string scaling_curve_svg(std::span<const ScalingPoint> points);

/// Multi-series line chart (used for the per-dataset degradation charts).
struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};
std::string line_chart_svg(std::span<const SvgSeries> series,
                           const std::string& x_label, const std::string& y_label);

}  // namespace plr
