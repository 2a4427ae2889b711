#include "pdi/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "pdi/errors.hpp"
#include "pdi/textstats.hpp"

namespace pdi {
namespace {

bool all_equal(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

// Ranks doubled so that tied mid-ranks stay integral.
std::vector<std::int64_t> doubled_ranks(std::span<const double> values) {
  const auto ranks = average_ranks(values);
  std::vector<std::int64_t> out(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    out[i] = static_cast<std::int64_t>(std::llround(ranks[i] * 2.0));
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const long double mx = mean(x);
  const long double my = mean(y);
  CompensatedSum sxy, sxx, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double dx = x[i] - mx;
    const long double dy = y[i] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  const long double r = sxy.value() / std::sqrt(sxx.value() * syy.value());
  return std::clamp(static_cast<double>(r), -1.0, 1.0);
}

// Two-sided exact p-value: share of all n! pairings whose rank statistic is
// at least as far from its null centre as the observed one. Heap's
// algorithm with an incremental update keeps this O(n!) with O(1) per step.
double spearman_exact_p(const std::vector<std::int64_t>& ax,
                        std::vector<std::int64_t> ay) {
  const std::size_t n = ax.size();
  const std::int64_t sum_x = std::accumulate(ax.begin(), ax.end(), std::int64_t{0});
  const std::int64_t sum_y = std::accumulate(ay.begin(), ay.end(), std::int64_t{0});
  const std::int64_t centre = sum_x * sum_y;
  std::int64_t s = 0;
  for (std::size_t i = 0; i < n; ++i) s += ax[i] * ay[i];
  const std::int64_t n64 = static_cast<std::int64_t>(n);
  const std::int64_t observed = std::llabs(n64 * s - centre);

  std::uint64_t hits = 0;
  std::uint64_t total = 0;
  const auto visit = [&] {
    ++total;
    if (std::llabs(n64 * s - centre) >= observed) ++hits;
  };
  const auto swap_at = [&](std::size_t i, std::size_t j) {
    s += (ax[i] - ax[j]) * (ay[j] - ay[i]);
    std::swap(ay[i], ay[j]);
  };

  std::vector<std::size_t> c(n, 0);
  visit();
  std::size_t i = 1;
  while (i < n) {
    if (c[i] < i) {
      if (i % 2 == 0) {
        swap_at(0, i);
      } else {
        swap_at(c[i], i);
      }
      visit();
      ++c[i];
      i = 1;
    } else {
      c[i] = 0;
      ++i;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

std::string_view p_value_method_name(PValueMethod m) {
  switch (m) {
    case PValueMethod::ExactPermutation: return "exact";
    case PValueMethod::TApproximation: return "t-approx";
    case PValueMethod::NormalApproximation: return "normal-approx";
  }
  return "exact";
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyCohort, "mean of an empty set");
  CompensatedSum s;
  for (double v : values) s.add(v);
  return static_cast<double>(s.value() / static_cast<long double>(values.size()));
}

double population_variance(std::span<const double> values) {
  const long double m = mean(values);
  CompensatedSum s;
  for (double v : values) s.add((v - m) * (v - m));
  return static_cast<double>(s.value() / static_cast<long double>(values.size()));
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyCohort, "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::vector<double> zscore_cohort(std::span<const double> values) {
  if (values.size() < 2) {
    throw Error(ErrorCode::DegenerateCohort, "z-scores need at least two values");
  }
  if (all_equal(values)) {
    throw Error(ErrorCode::DegenerateCohort, "z-scores of a constant cohort");
  }
  CompensatedSum s;
  for (double v : values) s.add(v);
  const long double m = s.value() / static_cast<long double>(values.size());
  CompensatedSum ss;
  for (double v : values) ss.add((v - m) * (v - m));
  const long double sd = std::sqrt(ss.value() / static_cast<long double>(values.size()));
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = static_cast<double>((values[i] - m) / sd);
  }
  return out;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::DegenerateInput, "spearman inputs differ in length");
  }
  if (x.size() < 3) {
    throw Error(ErrorCode::DegenerateInput, "spearman needs at least 3 pairs");
  }
  if (all_equal(x) || all_equal(y)) {
    throw Error(ErrorCode::DegenerateInput, "spearman input is constant");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw Error(ErrorCode::DegenerateInput, "spearman input is not finite");
    }
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  SpearmanResult r;
  r.n = x.size();
  r.rho = pearson(rx, ry);
  if (r.n <= kSpearmanExactMaxN) {
    r.method = PValueMethod::ExactPermutation;
    r.p_value = spearman_exact_p(doubled_ranks(x), doubled_ranks(y));
  } else {
    r.method = PValueMethod::TApproximation;
    const double df = static_cast<double>(r.n) - 2.0;
    const double denom = 1.0 - r.rho * r.rho;
    if (denom <= 0.0) {
      r.p_value = 0.0;
    } else {
      const double t = std::fabs(r.rho) * std::sqrt(df / denom);
      boost::math::students_t dist(df);
      r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
    }
  }
  return r;
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::EmptyGroup, "mann-whitney needs two nonempty samples");
  }
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  const std::size_t n = na + nb;
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto d = doubled_ranks(pooled);
  std::int64_t d_obs = 0;
  for (std::size_t i = 0; i < na; ++i) d_obs += d[i];

  MannWhitneyResult r;
  const double na_d = static_cast<double>(na);
  r.u = static_cast<double>(d_obs) / 2.0 - na_d * (na_d + 1.0) / 2.0;

  if (n <= kMannWhitneyExactMaxN) {
    r.method = PValueMethod::ExactPermutation;
    const std::int64_t centre = static_cast<std::int64_t>(na * (n + 1));
    const std::int64_t observed = std::llabs(d_obs - centre);
    std::uint64_t hits = 0;
    std::uint64_t total = 0;
    const std::uint32_t limit = 1u << n;
    for (std::uint32_t mask = 0; mask < limit; ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != na) continue;
      std::int64_t sum = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1u << i)) sum += d[i];
      }
      ++total;
      if (std::llabs(sum - centre) >= observed) ++hits;
    }
    r.p_value = static_cast<double>(hits) / static_cast<double>(total);
    return r;
  }

  r.method = PValueMethod::NormalApproximation;
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double nd = static_cast<double>(n);
  const double nb_d = static_cast<double>(nb);
  const double mu = na_d * nb_d / 2.0;
  const double var = na_d * nb_d / 12.0 * ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
  if (var <= 0.0) {
    r.p_value = 1.0;
    return r;
  }
  const double z = std::max(0.0, std::fabs(r.u - mu) - 0.5) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

TrendFit fit_trend(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::DegenerateInput, "trend fit needs >= 2 paired points");
  }
  if (all_equal(x)) {
    throw Error(ErrorCode::DegenerateInput, "trend fit needs distinct x values");
  }
  // Rounding in the mean must not turn a flat series into a tiny slope.
  if (all_equal(y)) return {y.front(), 0.0, x.size()};
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  const long double n = static_cast<long double>(x.size());
  const long double mx = sx.value() / n;
  const long double my = sy.value() / n;
  CompensatedSum sxx, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double dx = x[i] - mx;
    sxx.add(dx * dx);
    sxy.add(dx * (y[i] - my));
  }
  const long double slope = sxy.value() / sxx.value();
  TrendFit fit;
  fit.slope = static_cast<double>(slope);
  fit.intercept = static_cast<double>(my - slope * mx);
  fit.n_points = x.size();
  return fit;
}

std::string_view significance_stars(double p_value) {
  if (p_value < 0.001) return "***";
  if (p_value < 0.01) return "**";
  if (p_value < 0.05) return "*";
  return "";
}

}  // namespace pdi
