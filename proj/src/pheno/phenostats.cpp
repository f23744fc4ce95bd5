#include "pheno/phenostats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/distributions/students_t.hpp>

namespace pheno {

namespace {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(std::span<const double> v) {
  MeanSd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return out;
}

}  // namespace

ExgSeries extract_slope(std::span<const double> values) {
  ExgSeries s;
  s.values.assign(values.begin(), values.end());
  if (values.empty()) return s;
  const auto n = static_cast<int>(values.size());
  for (int i = 1; i < n; ++i) {
    if (values[i] > values[s.tp_max]) s.tp_max = i;
  }
  s.tp_min = s.tp_max;
  for (int i = s.tp_max + 1; i < n; ++i) {
    if (values[i] < values[s.tp_min]) s.tp_min = i;
  }
  const int count = s.tp_min - s.tp_max + 1;
  if (count < 2) return s;

  // Normal equations from raw sums.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = s.tp_max; i <= s.tp_min; ++i) {
    const double x = i;
    sx += x;
    sy += values[i];
    sxx += x * x;
    sxy += x * values[i];
  }
  const double m = count;
  const double det = m * sxx - sx * sx;
  s.slope = (m * sxy - sx * sy) / det;
  s.intercept = (sy - s.slope * sx) / m;
  s.valid = true;
  return s;
}

std::vector<GroupSlopeStats> slope_by_rm_group(std::span<const SlopeObservation> plots) {
  std::map<int, std::vector<double>> groups;
  for (const auto& p : plots) groups[p.label].push_back(p.slope);
  std::vector<GroupSlopeStats> out;
  for (const auto& [label, slopes] : groups) {
    const auto ms = mean_sd(slopes);
    out.push_back({label, ms.mean, ms.sd, slopes.size()});
  }
  return out;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double correlation_p_value(double r, std::size_t n) {
  if (n < 3) return 1.0;
  if (std::abs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

std::vector<CorrelationReport> slope_yield_correlation(std::span<const SlopeObservation> plots) {
  std::map<int, std::vector<const SlopeObservation*>> groups;
  for (const auto& p : plots) {
    if (p.yield) groups[p.label].push_back(&p);
  }
  std::vector<CorrelationReport> out;
  for (const auto& [label, members] : groups) {
    std::vector<double> slopes, yields;
    for (const auto* p : members) {
      slopes.push_back(p->slope);
      yields.push_back(*p->yield);
    }
    const auto s_stats = mean_sd(slopes);
    const auto y_stats = mean_sd(yields);
    auto outlier = [](double v, const MeanSd& ms) { return ms.sd > 0 && std::abs(v - ms.mean) > 3.0 * ms.sd; };

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < slopes.size(); ++i) {
      if (outlier(slopes[i], s_stats) || outlier(yields[i], y_stats)) continue;
      xs.push_back(slopes[i]);
      ys.push_back(yields[i]);
    }
    CorrelationReport rep;
    rep.rm_group = label;
    rep.n = xs.size();
    rep.dropped = slopes.size() - xs.size();
    if (rep.n >= 3 && mean_sd(xs).sd > 0 && mean_sd(ys).sd > 0) {
      rep.r = pearson_r(xs, ys);
      rep.p_value = correlation_p_value(*rep.r, rep.n);
    }
    out.push_back(rep);
  }
  return out;
}

}  // namespace pheno
