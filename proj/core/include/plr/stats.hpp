#pragma once

#include <span>
#include <vector>

namespace plr {

struct Standardized {
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 1.0;
};

/// Rescale a column to sample mean 0 and sample standard deviation 1
/// (ddof = 1). Returns the fitted (mean, std) so the same transform can be
/// reused on held-out data. Throws ConstantColumnError when the sample
/// standard deviation is zero (or undefined, i.e. fewer than two values).
Standardized standardize(std::span<const double> column);

/// (x - lo) / (hi - lo). Throws DomainError when hi <= lo.
std::vector<double> minmax(std::span<const double> column, double lo, double hi);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Sample mean and sample standard deviation (ddof = 1).
/// Throws DomainError when fewer than two values are given.
MeanStd mean_std(std::span<const double> values);

double mean(std::span<const double> values);

}  // namespace plr
