#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace daycare {

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Unbiased sample variance (n - 1 denominator); 0 for fewer than two values.
inline double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size() - 1);
}

inline double standard_normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// True when `successes` lies within k standard deviations of Binomial(n, p)'s mean.
inline bool within_binomial_sigma(long successes, long n, double p, double k = 3.0) {
  const double mu = static_cast<double>(n) * p;
  const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
  return std::abs(static_cast<double>(successes) - mu) <= k * sd;
}

struct RankSumResult {
  double u = 0.0;        // Mann-Whitney U of the first sample
  double z = 0.0;
  double p_value = 1.0;  // one-sided, alternative: first sample tends larger
};

/// Mann-Whitney rank-sum test, normal approximation with tie correction and
/// continuity correction. One-sided: H1 is that `x` is stochastically larger.
inline RankSumResult rank_sum_greater(std::span<const double> x, std::span<const double> y) {
  RankSumResult out;
  const std::size_t nx = x.size(), ny = y.size(), n = nx + ny;
  if (nx == 0 || ny == 0) return out;
  std::vector<std::pair<double, int>> all;
  all.reserve(n);
  for (double v : x) all.emplace_back(v, 0);
  for (double v : y) all.emplace_back(v, 1);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_x = 0.0, tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[j].first == all[i].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (all[k].second == 0) rank_x += avg_rank;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double dnx = static_cast<double>(nx), dny = static_cast<double>(ny), dn = static_cast<double>(n);
  out.u = rank_x - dnx * (dnx + 1.0) / 2.0;
  const double mu = dnx * dny / 2.0;
  const double var = dnx * dny / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (var <= 0.0) return out;
  out.z = (out.u - mu - 0.5) / std::sqrt(var);
  out.p_value = standard_normal_sf(out.z);
  return out;
}

}  // namespace daycare
