#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pdi {

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Population z-scores. Throws DegenerateCohort for fewer than two values or
// a constant input.
std::vector<double> zscore_cohort(std::span<const double> values);

double mean(std::span<const double> values);
double population_variance(std::span<const double> values);
// Median with the two middle values averaged for even sizes.
double median(std::vector<double> values);

// Largest n whose Spearman p-value is computed by full permutation.
inline constexpr std::size_t kSpearmanExactMaxN = 12;
// Largest n_a + n_b whose Mann-Whitney p-value is computed exactly.
inline constexpr std::size_t kMannWhitneyExactMaxN = 16;

enum class PValueMethod { ExactPermutation, TApproximation, NormalApproximation };
std::string_view p_value_method_name(PValueMethod m);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  PValueMethod method = PValueMethod::ExactPermutation;
  std::size_t n = 0;
};

// Average-rank Spearman correlation with a two-sided p-value. Requires equal
// lengths >= 3 and at least two distinct values per input (DegenerateInput).
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

struct MannWhitneyResult {
  double u = 0.0;  // U statistic of sample a
  double p_value = 1.0;
  PValueMethod method = PValueMethod::ExactPermutation;
};

// Two-sided Mann-Whitney U. Exact enumeration of all label assignments when
// n_a + n_b <= kMannWhitneyExactMaxN, otherwise the tie-corrected normal
// approximation with continuity correction.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

struct TrendFit {
  double intercept = 0.0;
  double slope = 0.0;
  std::size_t n_points = 0;
};

// Ordinary least squares y ~ intercept + slope * x. Needs >= 2 points with
// distinct x (DegenerateInput otherwise).
TrendFit fit_trend(std::span<const double> x, std::span<const double> y);

// Significance stars at .05 / .01 / .001.
std::string_view significance_stars(double p_value);

}  // namespace pdi
