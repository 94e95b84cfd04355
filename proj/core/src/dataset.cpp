#include "plr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "plr/error.hpp"
#include "plr/stats.hpp"

namespace plr {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// RFC 4180 field splitting: quoted fields may contain commas, escaped
// quotes ("") and newlines. Returns one vector of cells per record.
std::vector<std::vector<std::string>> parse_csv_records(const std::string& text,
                                                        const std::string& origin) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string cell;
  bool in_quotes = false;
  bool cell_started = false;

  auto end_cell = [&] {
    record.push_back(std::move(cell));
    cell.clear();
    cell_started = false;
  };
  auto end_record = [&] {
    end_cell();
    // Skip records that are entirely empty (e.g. a trailing newline).
    if (record.size() == 1 && record[0].empty()) {
      record.clear();
      return;
    }
    records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!cell_started && cell.empty()) {
          in_quotes = true;
          cell_started = true;
        } else {
          cell.push_back(c);
        }
        break;
      case ',':
        end_cell();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        cell.push_back(c);
        cell_started = true;
        break;
    }
  }
  if (in_quotes) throw LoadError(origin + ": unterminated quoted field");
  if (cell_started || !cell.empty() || !record.empty()) end_record();
  return records;
}

double parse_number(const std::string& cell, std::size_t record, const std::string& column,
                    const std::string& origin) {
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) {
    throw LoadError(origin + ": row " + std::to_string(record) + ", column '" + column +
                    "': cannot parse '" + cell + "' as a number");
  }
  return value;
}

ColumnKind parse_column_kind(const std::string& name) {
  if (name == "continuous") return ColumnKind::Continuous;
  if (name == "bounded") return ColumnKind::Bounded;
  if (name == "categorical") return ColumnKind::Categorical;
  throw LoadError("schema: unknown column kind '" + name + "'");
}

std::string column_kind_name(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Continuous: return "continuous";
    case ColumnKind::Bounded: return "bounded";
    case ColumnKind::Categorical: return "categorical";
  }
  return "?";
}

}  // namespace

DatasetSchema DatasetSchema::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw LoadError(std::string("schema: invalid JSON: ") + e.what());
  }
  DatasetSchema schema;
  try {
    schema.target = j.at("target").get<std::string>();
    for (const auto& jc : j.at("columns")) {
      ColumnSpec col;
      col.name = jc.at("name").get<std::string>();
      col.kind = parse_column_kind(jc.at("kind").get<std::string>());
      if (col.kind == ColumnKind::Bounded) {
        col.lo = jc.at("lo").get<double>();
        col.hi = jc.at("hi").get<double>();
        if (!(col.hi > col.lo)) {
          throw LoadError("schema: bounded column '" + col.name + "' needs hi > lo");
        }
      }
      if (col.kind == ColumnKind::Categorical) {
        col.levels = jc.at("levels").get<std::vector<std::string>>();
        if (col.levels.empty()) {
          throw LoadError("schema: categorical column '" + col.name + "' has no levels");
        }
      }
      if (col.name == schema.target) {
        throw LoadError("schema: target '" + schema.target + "' listed among feature columns");
      }
      schema.columns.push_back(std::move(col));
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("schema: malformed structure: ") + e.what());
  }
  if (schema.columns.empty()) throw LoadError("schema: no feature columns");
  return schema;
}

DatasetSchema DatasetSchema::load(const std::filesystem::path& path) {
  return from_json_string(read_file(path));
}

std::string DatasetSchema::to_json_string() const {
  json cols = json::array();
  for (const ColumnSpec& c : columns) {
    json jc{{"name", c.name}, {"kind", column_kind_name(c.kind)}};
    if (c.kind == ColumnKind::Bounded) {
      jc["lo"] = c.lo;
      jc["hi"] = c.hi;
    }
    if (c.kind == ColumnKind::Categorical) jc["levels"] = c.levels;
    cols.push_back(std::move(jc));
  }
  return json{{"columns", std::move(cols)}, {"target", target}}.dump(2);
}

RawTable load_csv_text(const std::string& text, const DatasetSchema& schema,
                       const std::string& origin) {
  if (text.empty()) throw LoadError(origin + ": empty file");
  const auto records = parse_csv_records(text, origin);
  if (records.empty()) throw LoadError(origin + ": no header row");

  const std::vector<std::string>& header = records[0];
  auto column_index = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw LoadError(origin + ": missing column '" + name + "' in header");
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  std::vector<std::size_t> feature_idx;
  feature_idx.reserve(schema.columns.size());
  for (const ColumnSpec& c : schema.columns) feature_idx.push_back(column_index(c.name));
  const std::size_t target_idx = column_index(schema.target);

  RawTable table;
  table.columns = schema.columns;
  table.feature_columns.assign(schema.columns.size(), {});
  const std::size_t n = records.size() - 1;
  for (auto& col : table.feature_columns) col.reserve(n);
  table.target.reserve(n);

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw LoadError(origin + ": row " + std::to_string(r) + " has " +
                      std::to_string(rec.size()) + " cells, header has " +
                      std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const ColumnSpec& spec = schema.columns[c];
      const std::string& cell = rec[feature_idx[c]];
      if (spec.kind == ColumnKind::Categorical) {
        const auto it = std::find(spec.levels.begin(), spec.levels.end(), cell);
        if (it == spec.levels.end()) {
          throw LoadError(origin + ": row " + std::to_string(r) + ", column '" + spec.name +
                          "': unknown level '" + cell + "'");
        }
        table.feature_columns[c].push_back(
            static_cast<double>(it - spec.levels.begin()));
      } else {
        table.feature_columns[c].push_back(parse_number(cell, r, spec.name, origin));
      }
    }
    table.target.push_back(parse_number(rec[target_idx], r, schema.target, origin));
  }
  return table;
}

RawTable load_csv(const std::filesystem::path& path, const DatasetSchema& schema) {
  return load_csv_text(read_file(path), schema, path.string());
}

SplitIndices split_indices(std::size_t n, std::array<double, 3> fractions, Rng& rng) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DomainError("split: fractions sum to " + std::to_string(sum) + ", expected 1");
  }
  for (double f : fractions) {
    if (f < 0.0) throw DomainError("split: negative fraction");
  }
  if (n < 5) {
    throw DomainError("split: need at least 5 rows, got " + std::to_string(n));
  }
  // Validation/test round down; the remainder goes to train.
  const auto n_val = static_cast<std::size_t>(static_cast<double>(n) * fractions[1]);
  const auto n_test = static_cast<std::size_t>(static_cast<double>(n) * fractions[2]);
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);

  SplitIndices out;
  out.train.assign(perm.begin(), perm.begin() + n_train);
  out.validation.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  out.test.assign(perm.begin() + n_train + n_val, perm.end());
  return out;
}

namespace {

RawTable take_table_rows(const RawTable& table, std::span<const std::size_t> idx) {
  RawTable out;
  out.columns = table.columns;
  out.feature_columns.assign(table.feature_columns.size(), {});
  for (std::size_t c = 0; c < table.feature_columns.size(); ++c) {
    out.feature_columns[c].reserve(idx.size());
    for (std::size_t i : idx) out.feature_columns[c].push_back(table.feature_columns[c][i]);
  }
  out.target.reserve(idx.size());
  for (std::size_t i : idx) out.target.push_back(table.target[i]);
  return out;
}

}  // namespace

SplitTables split(const RawTable& table, std::array<double, 3> fractions, Rng& rng) {
  const SplitIndices idx = split_indices(table.row_count(), fractions, rng);
  return {take_table_rows(table, idx.train), take_table_rows(table, idx.validation),
          take_table_rows(table, idx.test)};
}

std::size_t FittedTransform::output_dim() const {
  std::size_t d = 0;
  for (const ColumnTransform& c : columns) {
    if (c.dropped) continue;
    d += c.kind == ColumnKind::Categorical ? c.levels.size() : 1;
  }
  return d;
}

Matrix FittedTransform::apply(const RawTable& table) const {
  if (table.feature_columns.size() != columns.size()) {
    throw ShapeError("transform: table has " + std::to_string(table.feature_columns.size()) +
                     " feature columns, transform expects " + std::to_string(columns.size()));
  }
  const std::size_t n = table.row_count();
  Matrix X(n, output_dim(), 0.0);
  std::size_t out_col = 0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const ColumnTransform& t = columns[c];
    if (t.dropped) continue;
    const std::vector<double>& raw = table.feature_columns[c];
    switch (t.kind) {
      case ColumnKind::Continuous:
        for (std::size_t i = 0; i < n; ++i) X(i, out_col) = (raw[i] - t.mean) / t.stddev;
        ++out_col;
        break;
      case ColumnKind::Bounded: {
        const std::vector<double> scaled = minmax(raw, t.lo, t.hi);
        for (std::size_t i = 0; i < n; ++i) X(i, out_col) = scaled[i];
        ++out_col;
        break;
      }
      case ColumnKind::Categorical:
        for (std::size_t i = 0; i < n; ++i) {
          const auto level = static_cast<std::size_t>(raw[i]);
          X(i, out_col + level) = 1.0;
        }
        out_col += t.levels.size();
        break;
    }
  }
  return X;
}

FittedTransform fit_transform(const RawTable& train) {
  FittedTransform fitted;
  for (std::size_t c = 0; c < train.columns.size(); ++c) {
    const ColumnSpec& spec = train.columns[c];
    ColumnTransform t;
    t.name = spec.name;
    t.kind = spec.kind;
    switch (spec.kind) {
      case ColumnKind::Continuous:
        try {
          const Standardized s = standardize(train.feature_columns[c]);
          t.mean = s.mean;
          t.stddev = s.stddev;
        } catch (const ConstantColumnError&) {
          t.dropped = true;
          fitted.warnings.push_back("dropped zero-variance column '" + spec.name + "'");
        }
        break;
      case ColumnKind::Bounded:
        t.lo = spec.lo;
        t.hi = spec.hi;
        break;
      case ColumnKind::Categorical:
        t.levels = spec.levels;
        break;
    }
    fitted.columns.push_back(std::move(t));
  }
  if (fitted.output_dim() == 0) throw DomainError("preprocess: no usable feature columns");
  return fitted;
}

PreprocessedSplits preprocess(const RawTable& train, const RawTable& validation,
                              const RawTable& test) {
  PreprocessedSplits out;
  out.transform = fit_transform(train);
  out.train_X = out.transform.apply(train);
  out.validation_X = out.transform.apply(validation);
  out.test_X = out.transform.apply(test);
  out.train_y = train.target;
  out.validation_y = validation.target;
  out.test_y = test.target;
  return out;
}

std::string split_tag_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Validation: return "validation";
    case SplitTag::Test: return "test";
  }
  return "?";
}

void PartialDataset::validate() const {
  if (candidates.size() != X.rows() || y_true.size() != X.rows()) {
    throw ShapeError("partial dataset: " + std::to_string(X.rows()) + " rows but " +
                     std::to_string(candidates.size()) + " candidate sets and " +
                     std::to_string(y_true.size()) + " labels");
  }
  if (candidates.empty()) return;
  const std::size_t set_size = candidates.front().size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].size() != set_size) {
      throw DomainError("partial dataset: candidate set " + std::to_string(i) + " has size " +
                        std::to_string(candidates[i].size()) + ", expected " +
                        std::to_string(set_size));
    }
    const auto& ys = candidates[i].labels();
    if (std::find(ys.begin(), ys.end(), y_true[i]) == ys.end()) {
      throw DomainError("partial dataset: true label of example " + std::to_string(i) +
                        " is missing from its candidate set");
    }
  }
}

PartialDataset make_supervised(Matrix X, std::vector<double> y, SplitTag tag) {
  PartialDataset ds;
  ds.X = std::move(X);
  ds.y_true = std::move(y);
  ds.candidates.reserve(ds.y_true.size());
  for (double v : ds.y_true) ds.candidates.emplace_back(std::vector<double>{v});
  ds.split_tag = tag;
  return ds;
}

PartialDataset take_examples(const PartialDataset& ds, std::span<const std::size_t> idx) {
  PartialDataset out;
  out.split_tag = ds.split_tag;
  out.X = Matrix(idx.size(), ds.X.cols());
  out.candidates.reserve(idx.size());
  out.y_true.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const std::size_t i = idx[r];
    std::copy(ds.X.row(i).begin(), ds.X.row(i).end(), out.X.row(r).begin());
    out.candidates.push_back(ds.candidates[i]);
    out.y_true.push_back(ds.y_true[i]);
  }
  return out;
}

std::vector<CandidateSet> corrupt(std::span<const double> labels,
                                  const CorruptionConfig& config, const Rng& rng) {
  if (!(config.span_lo < config.span_hi)) {
    throw DomainError("corrupt: degenerate label span [" + std::to_string(config.span_lo) +
                      ", " + std::to_string(config.span_hi) + "]");
  }
  std::vector<CandidateSet> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Rng child = rng.derive(i);
    std::vector<double> false_labels(config.num_false);
    for (double& v : false_labels) v = child.uniform(config.span_lo, config.span_hi);
    const std::uint64_t pos = child.below(config.num_false + 1);
    std::vector<double> set;
    set.reserve(config.num_false + 1);
    std::size_t next_false = 0;
    for (std::size_t j = 0; j <= config.num_false; ++j) {
      set.push_back(j == pos ? labels[i] : false_labels[next_false++]);
    }
    out.emplace_back(std::move(set));
  }
  return out;
}

std::vector<CandidateSet> corrupt(std::span<const double> labels,
                                  const CorruptionConfig& config) {
  return corrupt(labels, config, Rng(config.seed));
}

SynthData synth_linear(std::size_t n, std::span<const double> w, double b,
                       std::pair<double, double> x_range, Rng& rng) {
  if (n == 0) throw DomainError("synth_linear: n must be >= 1");
  if (w.empty()) throw DomainError("synth_linear: empty weight vector");
  if (!(x_range.second > x_range.first)) {
    throw DomainError("synth_linear: degenerate x range");
  }
  SynthData out;
  out.X = Matrix(n, w.size());
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = b;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double x = rng.uniform(x_range.first, x_range.second);
      out.X(i, j) = x;
      acc += w[j] * x;
    }
    out.y[i] = acc;
  }
  return out;
}

void write_jsonl(const PartialDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot open '" + path.string() + "' for writing");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    json j;
    std::vector<double> features(ds.X.row(i).begin(), ds.X.row(i).end());
    j["features"] = features;
    j["candidates"] = ds.candidates[i].labels();
    j["y_true"] = ds.y_true[i];
    out << j.dump() << '\n';
  }
}

PartialDataset read_jsonl(const std::filesystem::path& path, SplitTag tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> features;
  std::vector<CandidateSet> candidates;
  std::vector<double> y_true;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      features.push_back(j.at("features").get<std::vector<double>>());
      candidates.emplace_back(j.at("candidates").get<std::vector<double>>());
      y_true.push_back(j.at("y_true").get<double>());
    } catch (const json::exception& e) {
      throw LoadError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (features.empty()) throw LoadError(path.string() + ": no records");
  const std::size_t d = features.front().size();
  PartialDataset ds;
  ds.X = Matrix(features.size(), d);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) {
      throw LoadError(path.string() + ": record " + std::to_string(i + 1) +
                      " has inconsistent feature length");
    }
    std::copy(features[i].begin(), features[i].end(), ds.X.row(i).begin());
  }
  ds.candidates = std::move(candidates);
  ds.y_true = std::move(y_true);
  ds.split_tag = tag;
  ds.validate();
  return ds;
}

}  // namespace plr
