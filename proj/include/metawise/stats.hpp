// Self-contained statistics kit: Welch's unequal-variance t-test (raw and
// moment-based forms), the two-sample Kolmogorov-Smirnov test with the
// asymptotic p-value series, Gaussian-kernel density estimation with
// Silverman's bandwidth rule, a seeded percentile bootstrap for group
// squared error differences, an ordering-effect (crossover) analysis, and
// the special functions these require.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metawise/core.hpp"

namespace metawise {

enum class Alternative { TwoSided, Less, Greater };

std::string_view to_token(Alternative alternative);

struct TestResult {
    double statistic = 0.0;
    std::optional<double> degrees_of_freedom;
    double p_value = 1.0;
    Alternative alternative = Alternative::TwoSided;
};

// Density evaluated on an evenly spaced grid. center_offset is the mean that
// was subtracted before fitting (0 unless mean-centered); grid coordinates
// are in the centered frame.
struct DensityCurve {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
    double center_offset = 0.0;
};

struct BootstrapResult {
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double p_value = 1.0;
};

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation with the symmetry switch at x > (a+1)/(a+b+2).
// Absolute error below 1e-10 across the domain.
double regularized_incomplete_beta(double x, double a, double b);

// Student-t CDF via the incomplete beta function.
double student_t_cdf(double t, double degrees_of_freedom);

// Standard normal CDF (erfc-based), used by tests and the KS limit checks.
double normal_cdf(double x);

// Welch's two-sample t-test for unequal variances with Welch-Satterthwaite
// degrees of freedom. Requires n >= 2 per sample; throws when both samples
// are constant and equal (the statistic is undefined). Two-sided p is
// 2*min(tail, 1-tail), clamped to [0, 1].
TestResult welch_t(std::span<const double> sample_a, std::span<const double> sample_b,
                   Alternative alternative = Alternative::TwoSided);

// Same test driven by summary moments. Variances are taken as unbiased
// sample variances; set bessel_correct when they use the n denominator
// instead (e.g. recovered as MSE - GSE) to rescale by n/(n-1).
TestResult welch_t_from_summary(std::size_t n_a, double mean_a, double var_a, std::size_t n_b,
                                double mean_b, double var_b,
                                Alternative alternative = Alternative::TwoSided,
                                bool bessel_correct = false);

// Two-sample Kolmogorov-Smirnov test. D = sup |ECDF_a - ECDF_b|; the p-value
// uses the asymptotic Kolmogorov series with effective size
// n_a*n_b/(n_a+n_b), truncated once terms drop below 1e-12.
TestResult ks_two_sample(std::span<const double> sample_a, std::span<const double> sample_b);

// 0.9 * min(sd, IQR/1.34) * n^(-1/5); falls back to sd when the IQR is zero.
// Throws when the sample has no spread.
double silverman_bandwidth(std::span<const double> sample);

// Gaussian-kernel density on an even grid spanning the data range extended
// by 6 bandwidths each side. Default bandwidth is Silverman's rule;
// mean_centered subtracts the sample mean before fitting.
DensityCurve kde(std::span<const double> sample, std::optional<double> bandwidth = {},
                 std::size_t grid_points = 512, bool mean_centered = false);

// Percentile bootstrap for GSE(a) - GSE(b) with independent within-crowd
// resampling. Deterministic for a fixed seed regardless of thread count;
// requires replications >= 100. p is the two-sided count-based bootstrap p.
BootstrapResult bootstrap_gse_diff(std::span<const double> sample_a,
                                   std::span<const double> sample_b, const Criterion& criterion,
                                   std::size_t replications, std::uint64_t seed,
                                   unsigned threads = 1);

// One Welch comparison of second-task estimates between two first-aid groups
// that share the same second aid.
struct OrderingComparison {
    std::string second_aid;
    std::string first_aid_a;
    std::string first_aid_b;
    TestResult test;
};

struct OrderingEffectAnalysis {
    std::vector<OrderingComparison> comparisons;
    // One mean-centered density per (first_aid, second_aid) group.
    std::vector<std::pair<std::pair<std::string, std::string>, DensityCurve>> centered_densities;
};

// Input: second-task estimates keyed by (first aid viewed, second aid
// viewed). For every second aid, Welch-tests all pairs of first-aid groups;
// requires at least two groups of size >= 2 per second aid.
OrderingEffectAnalysis ordering_effect_analysis(
    const std::map<std::pair<std::string, std::string>, std::vector<double>>& groups);

}  // namespace metawise
