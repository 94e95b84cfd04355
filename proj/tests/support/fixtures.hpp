#pragma once

// Deterministic synthetic stand-ins for the benchmark datasets, plus small
// filesystem helpers for tests that drive the CLI surface. The generators
// match the shipped schemas column-for-column and are tuned to similar label
// statistics, so the whole pipeline can be exercised hermetically.

#include <filesystem>
#include <string>

#include "plr/rng.hpp"

namespace fixtures {

/// Approximate standard normal draw (Irwin-Hall with 12 uniforms).
double gaussian(plr::Rng& rng);

/// Shellfish-style growth data matching data/schemas/abalone.json:
/// one categorical column plus seven correlated size/weight measurements,
/// integer ring counts in [1, 29] with mean near 10.
std::string abalone_like_csv(std::size_t n = 4177, std::uint64_t seed = 0xaba10);

/// Mixture-strength data matching data/schemas/concrete.json: eight
/// continuous mix columns, real-valued strength roughly in [2, 83].
std::string concrete_like_csv(std::size_t n = 1030, std::uint64_t seed = 0xc0c0);

/// Tiny two-feature linear dataset (y = 3a - 2b + 1 + noise) with its
/// schema; fast enough for CLI round-trip tests.
std::string linear_csv(std::size_t n = 400, std::uint64_t seed = 7, double noise = 0.1);
std::string linear_schema_json();

/// Unique scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Path to a checked-in schema file (data/schemas/<name>.json).
std::filesystem::path schema_path(const std::string& name);

}  // namespace fixtures
