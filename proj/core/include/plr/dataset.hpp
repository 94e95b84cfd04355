#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plr/losses.hpp"
#include "plr/matrix.hpp"
#include "plr/rng.hpp"

namespace plr {

enum class ColumnKind { Continuous, Bounded, Categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  double lo = 0.0;                   // Bounded only
  double hi = 0.0;                   // Bounded only
  std::vector<std::string> levels;   // Categorical only
};

/// Declares how each feature column is typed and which column is the target.
/// Continuous columns are standardized, bounded columns are min-max scaled
/// with the declared range, categorical columns are one-hot encoded. Targets
/// are kept in their original units.
struct DatasetSchema {
  std::vector<ColumnSpec> columns;
  std::string target;

  static DatasetSchema from_json_string(const std::string& text);
  static DatasetSchema load(const std::filesystem::path& path);
  std::string to_json_string() const;
};

/// Typed column store produced by load_csv. Categorical cells hold the level
/// index; everything else holds the parsed number.
struct RawTable {
  std::vector<ColumnSpec> columns;
  std::vector<std::vector<double>> feature_columns;  // one vector per schema column
  std::vector<double> target;

  std::size_t row_count() const { return target.size(); }
};

/// Parse an RFC 4180 CSV (header row required) against the schema.
/// Throws LoadError with row/column context on any problem.
RawTable load_csv(const std::filesystem::path& path, const DatasetSchema& schema);
RawTable load_csv_text(const std::string& text, const DatasetSchema& schema,
                       const std::string& origin = "<string>");

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Random disjoint covering split. Validation/test sizes round down; the
/// remainder goes to train. Requires n >= 5 and fractions summing to 1.
SplitIndices split_indices(std::size_t n, std::array<double, 3> fractions, Rng& rng);

struct SplitTables {
  RawTable train;
  RawTable validation;
  RawTable test;
};

SplitTables split(const RawTable& table, std::array<double, 3> fractions, Rng& rng);

struct ColumnTransform {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  bool dropped = false;              // zero-variance continuous column
  double mean = 0.0;                 // Continuous
  double stddev = 1.0;               // Continuous
  double lo = 0.0;                   // Bounded
  double hi = 0.0;                   // Bounded
  std::vector<std::string> levels;   // Categorical
};

/// Feature transform fitted on the training split only.
struct FittedTransform {
  std::vector<ColumnTransform> columns;
  std::vector<std::string> warnings;

  std::size_t output_dim() const;
  Matrix apply(const RawTable& table) const;
};

FittedTransform fit_transform(const RawTable& train);

enum class SplitTag { Train, Validation, Test };

std::string split_tag_name(SplitTag tag);

/// Feature matrix plus one candidate label set per example. The true label
/// is carried alongside for evaluation and the supervised baseline only; it
/// is always a member of its candidate set.
struct PartialDataset {
  Matrix X;
  std::vector<CandidateSet> candidates;
  std::vector<double> y_true;
  SplitTag split_tag = SplitTag::Train;

  std::size_t size() const { return X.rows(); }
  /// Checks containment, equal candidate-set sizes, and shape agreement.
  void validate() const;
};

/// Dataset whose candidate sets are the true labels alone.
PartialDataset make_supervised(Matrix X, std::vector<double> y, SplitTag tag);

PartialDataset take_examples(const PartialDataset& ds, std::span<const std::size_t> idx);

struct PreprocessedSplits {
  Matrix train_X;
  Matrix validation_X;
  Matrix test_X;
  std::vector<double> train_y;
  std::vector<double> validation_y;
  std::vector<double> test_y;
  FittedTransform transform;
};

/// Fit the feature transform on train, apply it to all three splits.
/// Labels stay in original units.
PreprocessedSplits preprocess(const RawTable& train, const RawTable& validation,
                              const RawTable& test);

struct CorruptionConfig {
  std::size_t num_false = 0;
  double span_lo = 0.0;   // label span, estimated from the training split
  double span_hi = 0.0;
  std::uint64_t seed = 0;
};

/// Attach a candidate set to every label: the true label plus num_false
/// draws from U(span_lo, span_hi), with the true label's position inside the
/// set randomized. Each example uses its own derived stream, so results do
/// not depend on processing order.
std::vector<CandidateSet> corrupt(std::span<const double> labels,
                                  const CorruptionConfig& config, const Rng& rng);
std::vector<CandidateSet> corrupt(std::span<const double> labels,
                                  const CorruptionConfig& config);

struct SynthData {
  Matrix X;
  std::vector<double> y;
};

/// Noise-free linear data: X uniform over x_range per dimension, y = w.x + b.
SynthData synth_linear(std::size_t n, std::span<const double> w, double b,
                       std::pair<double, double> x_range, Rng& rng);

/// JSON-lines I/O: one {"features": [...], "candidates": [...], "y_true": v}
/// record per example. y_true is included for evaluation only.
void write_jsonl(const PartialDataset& ds, const std::filesystem::path& path);
PartialDataset read_jsonl(const std::filesystem::path& path, SplitTag tag);

}  // namespace plr
