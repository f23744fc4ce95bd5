#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pheno {

struct ExgSeries {
  std::vector<double> values;
  int tp_max = 0;
  int tp_min = 0;
  double slope = 0.0;
  double intercept = 0.0;
  bool valid = false;
};

// tp_max is the first maximum; tp_min the first minimum at or after tp_max.
// The slope is an ordinary least-squares fit of value on timepoint index over
// [tp_max, tp_min]; a window shorter than 2 points is flagged invalid.
ExgSeries extract_slope(std::span<const double> values);

struct SlopeObservation {
  std::string plot_id;
  int label = 0;
  double slope = 0.0;
  std::optional<double> yield;
};

struct GroupSlopeStats {
  int label = 0;
  double mean = 0.0;
  // Sample standard deviation; 0 for a single plot.
  double sd = 0.0;
  std::size_t n = 0;
};

// Groups ordered by label; empty groups are omitted.
std::vector<GroupSlopeStats> slope_by_rm_group(std::span<const SlopeObservation> plots);

struct CorrelationReport {
  int rm_group = 0;
  std::size_t n = 0;
  std::size_t dropped = 0;
  // Unset when fewer than 3 plots remain or either variable is constant.
  std::optional<double> r;
  std::optional<double> p_value;
};

// Per group: one pass of 3-sd outlier removal on yield and slope (group
// statistics computed once), then Pearson r with a two-sided t-test on n-2
// degrees of freedom. Plots without a yield are ignored.
std::vector<CorrelationReport> slope_yield_correlation(std::span<const SlopeObservation> plots);

double pearson_r(std::span<const double> x, std::span<const double> y);
// Two-sided p-value for H0: rho = 0.
double correlation_p_value(double r, std::size_t n);

}  // namespace pheno
