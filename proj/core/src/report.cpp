#include "plr/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "plr/error.hpp"
#include "plr/stats.hpp"

namespace plr {

namespace {

using nlohmann::json;

// Canonical method column order; anything unknown goes after, alphabetically.
const std::vector<std::string> kMethodOrder = {
    "supervised", "avgl-mse", "avgl-mae", "avgl-huber",
    "avgv-mse",   "avgv-mae", "avgv-huber", "ident", "pident"};

std::size_t method_rank(const std::string& method) {
  const auto it = std::find(kMethodOrder.begin(), kMethodOrder.end(), method);
  return static_cast<std::size_t>(it - kMethodOrder.begin());
}

std::string shortest_repr(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "0";
  return std::string(buf, ptr);
}

}  // namespace

std::string format_fixed(double v, int decimals) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  std::string s = shortest_repr(v);
  if (s.find('e') != std::string::npos || s.find('E') != std::string::npos) {
    // Out of plain-decimal range; printf rounding is fine out here.
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    std::string out = buf;
    if (out.find_first_of("123456789") == std::string::npos && out[0] == '-') {
      out.erase(0, 1);
    }
    return out;
  }
  bool negative = false;
  if (!s.empty() && s[0] == '-') {
    negative = true;
    s.erase(0, 1);
  }
  std::string digits = s;
  const std::size_t dot = s.find('.');
  std::size_t frac_len = 0;
  if (dot != std::string::npos) {
    digits = s.substr(0, dot) + s.substr(dot + 1);
    frac_len = s.size() - dot - 1;
  }
  const auto want = static_cast<std::size_t>(decimals);
  while (frac_len < want) {
    digits.push_back('0');
    ++frac_len;
  }
  if (frac_len > want) {
    const std::size_t keep = digits.size() - (frac_len - want);
    const char next = digits[keep];
    bool rest_nonzero = false;
    for (std::size_t i = keep + 1; i < digits.size(); ++i) {
      if (digits[i] != '0') rest_nonzero = true;
    }
    digits.erase(keep);
    bool round_up = next > '5' || (next == '5' && rest_nonzero);
    if (next == '5' && !rest_nonzero) {
      // Exact tie: round half to even.
      const char last = digits.empty() ? '0' : digits.back();
      round_up = ((last - '0') % 2) != 0;
    }
    if (round_up) {
      std::size_t i = digits.size();
      while (i-- > 0) {
        if (digits[i] != '9') {
          ++digits[i];
          break;
        }
        digits[i] = '0';
        if (i == 0) {
          digits.insert(digits.begin(), '1');
          break;
        }
      }
    }
    frac_len = want;
  }
  std::string int_part = digits.substr(0, digits.size() - frac_len);
  std::string frac_part = digits.substr(digits.size() - frac_len);
  while (int_part.size() > 1 && int_part.front() == '0') int_part.erase(0, 1);
  if (int_part.empty()) int_part = "0";
  std::string out = int_part;
  if (decimals > 0) out += "." + frac_part;
  const bool is_zero = out.find_first_of("123456789") == std::string::npos;
  return (negative && !is_zero) ? "-" + out : out;
}

std::string TrialResult::to_store_json() const {
  json j;
  j["dataset"] = dataset;
  j["method"] = method;
  j["num_false"] = num_false;
  j["seed"] = seed;
  j["test_mse"] = test_mse;
  j["validation_metric"] = validation_metric;
  return j.dump();
}

TrialResult TrialResult::from_store_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    TrialResult t;
    t.dataset = j.at("dataset").get<std::string>();
    t.method = j.at("method").get<std::string>();
    t.num_false = j.at("num_false").get<std::size_t>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.test_mse = j.at("test_mse").get<double>();
    t.validation_metric = j.at("validation_metric").get<double>();
    return t;
  } catch (const json::exception& e) {
    throw LoadError(std::string("results store: bad record: ") + e.what());
  }
}

CellStats aggregate_cell(std::span<const TrialResult> trials) {
  if (trials.empty()) throw AggregationError("aggregate: empty cell");
  const TrialResult& first = trials.front();
  std::vector<double> values;
  values.reserve(trials.size());
  for (const TrialResult& t : trials) {
    if (t.dataset != first.dataset || t.method != first.method ||
        t.num_false != first.num_false) {
      throw AggregationError("aggregate: mixed keys in one cell: (" + first.dataset + ", " +
                             first.method + ", " + std::to_string(first.num_false) +
                             ") vs (" + t.dataset + ", " + t.method + ", " +
                             std::to_string(t.num_false) + ")");
    }
    values.push_back(t.test_mse);
  }
  CellStats stats;
  stats.n_trials = values.size();
  if (values.size() == 1) {
    stats.mean = values[0];
    stats.stddev = 0.0;   // single trial: no spread to report
  } else {
    const MeanStd ms = mean_std(values);
    stats.mean = ms.mean;
    stats.stddev = ms.stddev;
  }
  return stats;
}

BenchReport aggregate(std::span<const TrialResult> trials) {
  if (trials.empty()) throw DomainError("aggregate: no trials");
  std::map<CellKey, std::vector<TrialResult>> groups;
  for (const TrialResult& t : trials) {
    groups[CellKey{t.dataset, t.num_false, t.method}].push_back(t);
  }
  BenchReport report;
  for (const auto& [key, group] : groups) {
    report.cells[key] = aggregate_cell(group);
  }
  return report;
}

std::string render_table(const BenchReport& report, TableFormat format) {
  if (report.cells.empty()) throw DomainError("render_table: empty report");

  std::vector<std::string> methods;
  std::vector<std::pair<std::string, std::size_t>> rows;   // (dataset, |S|)
  for (const auto& [key, stats] : report.cells) {
    if (std::find(methods.begin(), methods.end(), key.method) == methods.end()) {
      methods.push_back(key.method);
    }
    const std::pair<std::string, std::size_t> row{key.dataset, key.num_false};
    if (std::find(rows.begin(), rows.end(), row) == rows.end()) rows.push_back(row);
  }
  std::sort(methods.begin(), methods.end(), [](const auto& a, const auto& b) {
    const std::size_t ra = method_rank(a);
    const std::size_t rb = method_rank(b);
    return ra != rb ? ra < rb : a < b;
  });
  std::sort(rows.begin(), rows.end());

  std::ostringstream out;
  const bool md = format == TableFormat::Markdown;
  const char* sep = md ? " | " : ",";
  if (md) out << "| ";
  out << "dataset" << sep << "num_false";
  for (const std::string& m : methods) out << sep << m;
  if (md) out << " |";
  out << '\n';
  if (md) {
    out << "| ---" << " | ---:";
    for (std::size_t i = 0; i < methods.size(); ++i) out << " | ---";
    out << " |\n";
  }

  for (const auto& [dataset, num_false] : rows) {
    double best = std::numeric_limits<double>::infinity();
    for (const std::string& m : methods) {
      const auto it = report.cells.find(CellKey{dataset, num_false, m});
      if (it != report.cells.end()) best = std::min(best, it->second.mean);
    }
    if (md) out << "| ";
    out << dataset << sep << num_false;
    for (const std::string& m : methods) {
      out << sep;
      const auto it = report.cells.find(CellKey{dataset, num_false, m});
      if (it == report.cells.end()) {
        out << (md ? "-" : "");
        continue;
      }
      const CellStats& s = it->second;
      const std::string cell =
          format_fixed(s.mean, 2) + " (" + format_fixed(s.stddev, 2) + ")";
      if (md && s.mean == best) {
        out << "**" << cell << "**";
      } else {
        out << cell;
      }
    }
    if (md) out << " |";
    out << '\n';
  }
  return out.str();
}

std::string scaling_curve_csv(std::span<const ScalingPoint> points) {
  if (points.empty()) throw DomainError("scaling curve: no points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].fraction > 0.0 && points[i].fraction <= 1.0)) {
      throw DomainError("scaling curve: fraction " + std::to_string(points[i].fraction) +
                        " outside (0, 1]");
    }
    if (i > 0 && !(points[i].fraction > points[i - 1].fraction)) {
      throw DomainError("scaling curve: fractions must be strictly increasing");
    }
  }
  std::ostringstream out;
  out << "fraction,mean_mse,std\n";
  for (const ScalingPoint& p : points) {
    out << shortest_repr(p.fraction) << ',' << shortest_repr(p.mean_mse) << ','
        << shortest_repr(p.stddev) << '\n';
  }
  return out.str();
}

std::vector<ScalingPoint> parse_scaling_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw LoadError("scaling curve: empty csv");
  std::vector<ScalingPoint> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ScalingPoint p;
    double* fields[3] = {&p.fraction, &p.mean_mse, &p.stddev};
    std::size_t start = 0;
    for (int f = 0; f < 3; ++f) {
      const std::size_t end = f < 2 ? line.find(',', start) : line.size();
      if (end == std::string::npos) throw LoadError("scaling curve: short row '" + line + "'");
      const auto [ptr, ec] =
          std::from_chars(line.data() + start, line.data() + end, *fields[f]);
      if (ec != std::errc() || ptr != line.data() + end) {
        throw LoadError("scaling curve: bad number in '" + line + "'");
      }
      start = end + 1;
    }
    points.push_back(p);
  }
  return points;
}

namespace {

struct PlotFrame {
  static constexpr double width = 480.0;
  static constexpr double height = 320.0;
  static constexpr double margin_left = 56.0;
  static constexpr double margin_right = 16.0;
  static constexpr double margin_top = 16.0;
  static constexpr double margin_bottom = 40.0;

  double x_min, x_max, y_min, y_max;

  double sx(double x) const {
    const double w = width - margin_left - margin_right;
    return margin_left + (x - x_min) / (x_max - x_min) * w;
  }
  double sy(double y) const {
    const double h = height - margin_top - margin_bottom;
    return margin_top + (y_max - y) / (y_max - y_min) * h;
  }
};

std::string fmt2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void pad_range(double& lo, double& hi) {
  if (hi <= lo) {
    const double pad = std::max(1.0, std::abs(lo)) * 0.1;
    lo -= pad;
    hi += pad;
  } else {
    const double pad = (hi - lo) * 0.05;
    lo -= pad;
    hi += pad;
  }
}

void svg_header(std::ostringstream& out) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << PlotFrame::width
      << "\" height=\"" << PlotFrame::height << "\" viewBox=\"0 0 " << PlotFrame::width
      << " " << PlotFrame::height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void svg_axes(std::ostringstream& out, const PlotFrame& f, const std::string& x_label,
              const std::string& y_label) {
  const double x0 = PlotFrame::margin_left;
  const double x1 = PlotFrame::width - PlotFrame::margin_right;
  const double y0 = PlotFrame::height - PlotFrame::margin_bottom;
  const double y1 = PlotFrame::margin_top;
  out << "<line x1=\"" << fmt2(x0) << "\" y1=\"" << fmt2(y0) << "\" x2=\"" << fmt2(x1)
      << "\" y2=\"" << fmt2(y0) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << fmt2(x0) << "\" y1=\"" << fmt2(y0) << "\" x2=\"" << fmt2(x0)
      << "\" y2=\"" << fmt2(y1) << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << fmt2((x0 + x1) / 2) << "\" y=\"" << fmt2(PlotFrame::height - 8)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n"
      << "<text x=\"12\" y=\"" << fmt2((y0 + y1) / 2)
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 12 "
      << fmt2((y0 + y1) / 2) << ")\">" << y_label << "</text>\n"
      << "<text x=\"" << fmt2(x0 - 4) << "\" y=\"" << fmt2(y0)
      << "\" text-anchor=\"end\" font-size=\"10\">" << fmt2(f.y_min) << "</text>\n"
      << "<text x=\"" << fmt2(x0 - 4) << "\" y=\"" << fmt2(y1 + 10)
      << "\" text-anchor=\"end\" font-size=\"10\">" << fmt2(f.y_max) << "</text>\n"
      << "<text x=\"" << fmt2(x0) << "\" y=\"" << fmt2(y0 + 14)
      << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt2(f.x_min) << "</text>\n"
      << "<text x=\"" << fmt2(x1) << "\" y=\"" << fmt2(y0 + 14)
      << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt2(f.x_max) << "</text>\n";
}

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                               "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
                               "#bcbd22"};

}  // namespace

std::string scaling_curve_svg(std::span<const ScalingPoint> points) {
  // Reuse the csv validation rules.
  (void)scaling_curve_csv(points);

  PlotFrame f{};
  f.x_min = points.front().fraction;
  f.x_max = points.back().fraction;
  f.y_min = std::numeric_limits<double>::infinity();
  f.y_max = -std::numeric_limits<double>::infinity();
  for (const ScalingPoint& p : points) {
    f.y_min = std::min(f.y_min, p.mean_mse - p.stddev);
    f.y_max = std::max(f.y_max, p.mean_mse + p.stddev);
  }
  pad_range(f.x_min, f.x_max);
  pad_range(f.y_min, f.y_max);

  std::ostringstream out;
  svg_header(out);
  svg_axes(out, f, "training fraction", "test mse");

  out << "<polygon fill=\"#1f77b4\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
  for (const ScalingPoint& p : points) {
    out << fmt2(f.sx(p.fraction)) << ',' << fmt2(f.sy(p.mean_mse + p.stddev)) << ' ';
  }
  for (std::size_t i = points.size(); i-- > 0;) {
    out << fmt2(f.sx(points[i].fraction)) << ',' << fmt2(f.sy(points[i].mean_mse - points[i].stddev));
    if (i > 0) out << ' ';
  }
  out << "\"/>\n";

  out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0) out << ' ';
    out << fmt2(f.sx(points[i].fraction)) << ',' << fmt2(f.sy(points[i].mean_mse));
  }
  out << "\"/>\n";
  for (const ScalingPoint& p : points) {
    out << "<circle cx=\"" << fmt2(f.sx(p.fraction)) << "\" cy=\"" << fmt2(f.sy(p.mean_mse))
        << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string line_chart_svg(std::span<const SvgSeries> series, const std::string& x_label,
                           const std::string& y_label) {
  if (series.empty()) throw DomainError("line chart: no series");
  PlotFrame f{};
  f.x_min = f.y_min = std::numeric_limits<double>::infinity();
  f.x_max = f.y_max = -std::numeric_limits<double>::infinity();
  for (const SvgSeries& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty()) {
      throw ShapeError("line chart: series '" + s.label + "' has mismatched or empty data");
    }
    for (double x : s.x) {
      f.x_min = std::min(f.x_min, x);
      f.x_max = std::max(f.x_max, x);
    }
    for (double y : s.y) {
      f.y_min = std::min(f.y_min, y);
      f.y_max = std::max(f.y_max, y);
    }
  }
  pad_range(f.x_min, f.x_max);
  pad_range(f.y_min, f.y_max);

  std::ostringstream out;
  svg_header(out);
  svg_axes(out, f, x_label, y_label);
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kSeriesColors[s % (sizeof(kSeriesColors) / sizeof(char*))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (i > 0) out << ' ';
      out << fmt2(f.sx(series[s].x[i])) << ',' << fmt2(f.sy(series[s].y[i]));
    }
    out << "\"/>\n";
    out << "<text x=\"" << fmt2(PlotFrame::width - PlotFrame::margin_right - 4) << "\" y=\""
        << fmt2(PlotFrame::margin_top + 14.0 * static_cast<double>(s + 1))
        << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">"
        << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace plr
