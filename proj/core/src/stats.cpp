#include "plr/stats.hpp"

#include <cmath>
#include <string>

#include "plr/error.hpp"

namespace plr {

double mean(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean: empty input");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

MeanStd mean_std(std::span<const double> values) {
  if (values.size() < 2) {
    throw DomainError("mean_std: sample std needs at least 2 values, got " +
                      std::to_string(values.size()));
  }
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) {
    const double d = v - m;
    ss += d * d;
  }
  return {m, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

Standardized standardize(std::span<const double> column) {
  if (column.empty()) throw DomainError("standardize: empty column");
  if (column.size() < 2) {
    throw ConstantColumnError("standardize: sample std undefined for a single value");
  }
  const MeanStd ms = mean_std(column);
  if (ms.stddev == 0.0) {
    throw ConstantColumnError("standardize: column has zero sample variance");
  }
  Standardized out;
  out.mean = ms.mean;
  out.stddev = ms.stddev;
  out.values.reserve(column.size());
  for (double v : column) out.values.push_back((v - ms.mean) / ms.stddev);
  return out;
}

std::vector<double> minmax(std::span<const double> column, double lo, double hi) {
  if (!(hi > lo)) {
    throw DomainError("minmax: degenerate range [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
  const double span = hi - lo;
  std::vector<double> out;
  out.reserve(column.size());
  for (double v : column) out.push_back((v - lo) / span);
  return out;
}

}  // namespace plr
