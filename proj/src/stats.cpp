#include "metawise/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "metawise/numeric.hpp"
#include "metawise/rng.hpp"

namespace metawise {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

struct Moments {
    std::size_t n;
    double mean;
    double variance;  // n-1 denominator
};

Moments sample_moments(std::span<const double> xs) {
    CompensatedSum sum;
    for (double x : xs) sum.add(x);
    const double mean = sum.value() / static_cast<double>(xs.size());
    CompensatedSum sq;
    for (double x : xs) {
        const double d = x - mean;
        sq.add(d * d);
    }
    const double variance =
        xs.size() > 1 ? sq.value() / static_cast<double>(xs.size() - 1) : 0.0;
    return {xs.size(), mean, variance};
}

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

// p-values for a t statistic given its CDF value.
TestResult make_t_result(double t, double df, double cdf, Alternative alternative) {
    TestResult result;
    result.statistic = t;
    result.degrees_of_freedom = df;
    result.alternative = alternative;
    switch (alternative) {
        case Alternative::TwoSided:
            result.p_value = clamp01(2.0 * std::min(cdf, 1.0 - cdf));
            break;
        case Alternative::Less:
            result.p_value = clamp01(cdf);
            break;
        case Alternative::Greater:
            result.p_value = clamp01(1.0 - cdf);
            break;
    }
    return result;
}

TestResult welch_from_moments(const Moments& a, const Moments& b, Alternative alternative) {
    const double g_a = a.variance / static_cast<double>(a.n);
    const double g_b = b.variance / static_cast<double>(b.n);
    const double se_sq = g_a + g_b;
    const double diff = a.mean - b.mean;

    if (se_sq <= 0.0) {
        if (diff == 0.0) {
            throw std::invalid_argument(
                "welch_t: both samples constant and equal; statistic undefined");
        }
        // Constant samples with different means: infinitely significant.
        TestResult result;
        result.statistic = diff > 0.0 ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity();
        result.alternative = alternative;
        switch (alternative) {
            case Alternative::TwoSided: result.p_value = 0.0; break;
            case Alternative::Less: result.p_value = diff < 0.0 ? 0.0 : 1.0; break;
            case Alternative::Greater: result.p_value = diff > 0.0 ? 0.0 : 1.0; break;
        }
        return result;
    }

    const double t = diff / std::sqrt(se_sq);
    const double df = se_sq * se_sq /
                      (g_a * g_a / static_cast<double>(a.n - 1) +
                       g_b * g_b / static_cast<double>(b.n - 1));
    return make_t_result(t, df, student_t_cdf(t, df), alternative);
}

// Continued fraction for the incomplete beta function (Lentz's method).
double beta_continued_fraction(double x, double a, double b) {
    constexpr int kMaxIterations = 500;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) return h;
    }
    throw std::runtime_error("regularized_incomplete_beta: continued fraction did not converge");
}

std::vector<double> sorted_copy(std::span<const double> xs) {
    std::vector<double> out(xs.begin(), xs.end());
    std::sort(out.begin(), out.end());
    return out;
}

// Linear-interpolation quantile of a sorted sample (R type 7).
double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted.front();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 l^2).
// For small lambda the alternating series converges slowly, so the
// theta-transformed form is used there (standard switch near 1.18).
double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
        const double series =
            y + std::pow(y, 9.0) + std::pow(y, 25.0) + std::pow(y, 49.0);
        return clamp01(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * series);
    }
    CompensatedSum sum;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum.add(sign * term);
        if (term < 1e-12) break;
        sign = -sign;
    }
    return clamp01(2.0 * sum.value());
}

double gse_of(std::span<const double> xs, double y) {
    CompensatedSum sum;
    for (double x : xs) sum.add(x);
    const double mean = sum.value() / static_cast<double>(xs.size());
    const double d = mean - y;
    return d * d;
}

}  // namespace

std::string_view to_token(Alternative alternative) {
    switch (alternative) {
        case Alternative::TwoSided: return "two_sided";
        case Alternative::Less: return "less";
        case Alternative::Greater: return "greater";
    }
    throw std::invalid_argument("unknown alternative");
}

double regularized_incomplete_beta(double x, double a, double b) {
    require(a > 0.0 && b > 0.0, "regularized_incomplete_beta: a and b must be positive");
    require(x >= 0.0 && x <= 1.0, "regularized_incomplete_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(x, a, b) / a;
    }
    return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double student_t_cdf(double t, double degrees_of_freedom) {
    require(degrees_of_freedom > 0.0, "student_t_cdf: degrees of freedom must be positive");
    if (t == 0.0) return 0.5;
    const double x = degrees_of_freedom / (degrees_of_freedom + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(x, degrees_of_freedom / 2.0, 0.5);
    return t > 0.0 ? 1.0 - tail : tail;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

TestResult welch_t(std::span<const double> sample_a, std::span<const double> sample_b,
                   Alternative alternative) {
    require(sample_a.size() >= 2 && sample_b.size() >= 2,
            "welch_t: each sample needs at least two observations");
    return welch_from_moments(sample_moments(sample_a), sample_moments(sample_b), alternative);
}

TestResult welch_t_from_summary(std::size_t n_a, double mean_a, double var_a, std::size_t n_b,
                                double mean_b, double var_b, Alternative alternative,
                                bool bessel_correct) {
    require(n_a >= 2 && n_b >= 2, "welch_t_from_summary: each group needs n >= 2");
    require(var_a >= 0.0 && var_b >= 0.0, "welch_t_from_summary: variances must be nonnegative");
    if (bessel_correct) {
        var_a *= static_cast<double>(n_a) / static_cast<double>(n_a - 1);
        var_b *= static_cast<double>(n_b) / static_cast<double>(n_b - 1);
    }
    return welch_from_moments({n_a, mean_a, var_a}, {n_b, mean_b, var_b}, alternative);
}

TestResult ks_two_sample(std::span<const double> sample_a, std::span<const double> sample_b) {
    require(!sample_a.empty() && !sample_b.empty(), "ks_two_sample: samples must be nonempty");

    const std::vector<double> a = sorted_copy(sample_a);
    const std::vector<double> b = sorted_copy(sample_b);
    const double n_a = static_cast<double>(a.size());
    const double n_b = static_cast<double>(b.size());

    double d = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        const double value = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= value) ++i;
        while (j < b.size() && b[j] <= value) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n_a - static_cast<double>(j) / n_b));
    }

    const double effective = n_a * n_b / (n_a + n_b);
    const double lambda = std::sqrt(effective) * d;

    TestResult result;
    result.statistic = d;
    result.alternative = Alternative::TwoSided;
    result.p_value = kolmogorov_q(lambda);
    return result;
}

double silverman_bandwidth(std::span<const double> sample) {
    require(sample.size() >= 2, "silverman_bandwidth: need at least two observations");
    const Moments m = sample_moments(sample);
    const double sd = std::sqrt(m.variance);
    require(sd > 0.0, "silverman_bandwidth: sample has zero spread");

    const std::vector<double> sorted = sorted_copy(sample);
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (spread <= 0.0) spread = sd;  // degenerate IQR, e.g. heavy ties
    return 0.9 * spread * std::pow(static_cast<double>(sample.size()), -0.2);
}

DensityCurve kde(std::span<const double> sample, std::optional<double> bandwidth,
                 std::size_t grid_points, bool mean_centered) {
    require(sample.size() >= 2, "kde: need at least two observations");
    require(grid_points >= 2, "kde: need at least two grid points");
    if (bandwidth) require(*bandwidth > 0.0, "kde: bandwidth must be positive");

    const Moments m = sample_moments(sample);
    std::vector<double> data(sample.begin(), sample.end());
    double offset = 0.0;
    if (mean_centered) {
        offset = m.mean;
        for (double& x : data) x -= offset;
    }
    const double h = bandwidth ? *bandwidth : silverman_bandwidth(data);

    const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
    const double lo = *lo_it - 6.0 * h;
    const double hi = *hi_it + 6.0 * h;

    DensityCurve curve;
    curve.bandwidth = h;
    curve.center_offset = offset;
    curve.grid.resize(grid_points);
    curve.density.resize(grid_points);
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    const double norm =
        1.0 / (static_cast<double>(data.size()) * h * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t g = 0; g < grid_points; ++g) {
        const double at = lo + step * static_cast<double>(g);
        CompensatedSum acc;
        for (double x : data) {
            const double z = (at - x) / h;
            acc.add(std::exp(-0.5 * z * z));
        }
        curve.grid[g] = at;
        curve.density[g] = norm * acc.value();
    }
    return curve;
}

BootstrapResult bootstrap_gse_diff(std::span<const double> sample_a,
                                   std::span<const double> sample_b, const Criterion& criterion,
                                   std::size_t replications, std::uint64_t seed,
                                   unsigned threads) {
    require(replications >= 100, "bootstrap_gse_diff: need at least 100 replications");
    require(!sample_a.empty() && !sample_b.empty(), "bootstrap_gse_diff: samples must be nonempty");
    criterion.validate();

    const double y = criterion.true_value;
    BootstrapResult result;
    result.estimate = gse_of(sample_a, y) - gse_of(sample_b, y);

    std::vector<double> diffs(replications);
    const RngStream root(seed, {0x626f6f74ULL});  // bootstrap namespace
    const auto run_replication = [&](std::size_t r) {
        RngStream stream = root.derive(r);
        CompensatedSum sum_a;
        for (std::size_t k = 0; k < sample_a.size(); ++k) {
            sum_a.add(sample_a[stream.uniform_index(sample_a.size())]);
        }
        CompensatedSum sum_b;
        for (std::size_t k = 0; k < sample_b.size(); ++k) {
            sum_b.add(sample_b[stream.uniform_index(sample_b.size())]);
        }
        const double da = sum_a.value() / static_cast<double>(sample_a.size()) - y;
        const double db = sum_b.value() / static_cast<double>(sample_b.size()) - y;
        diffs[r] = da * da - db * db;
    };

    if (threads > 1) {
        std::vector<std::thread> pool;
        const std::size_t per = (replications + threads - 1) / threads;
        for (unsigned w = 0; w < threads; ++w) {
            const std::size_t begin = per * w;
            const std::size_t end = std::min(replications, begin + per);
            if (begin >= end) break;
            pool.emplace_back([&, begin, end] {
                for (std::size_t r = begin; r < end; ++r) run_replication(r);
            });
        }
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t r = 0; r < replications; ++r) run_replication(r);
    }

    std::vector<double> sorted = diffs;
    std::sort(sorted.begin(), sorted.end());
    result.ci_low = quantile_sorted(sorted, 0.025);
    result.ci_high = quantile_sorted(sorted, 0.975);

    std::size_t at_or_below = 0;
    std::size_t at_or_above = 0;
    for (double v : diffs) {
        if (v <= 0.0) ++at_or_below;
        if (v >= 0.0) ++at_or_above;
    }
    const double r1 = static_cast<double>(replications + 1);
    const double p_low = static_cast<double>(at_or_below + 1) / r1;
    const double p_high = static_cast<double>(at_or_above + 1) / r1;
    result.p_value = clamp01(2.0 * std::min(p_low, p_high));
    return result;
}

OrderingEffectAnalysis ordering_effect_analysis(
    const std::map<std::pair<std::string, std::string>, std::vector<double>>& groups) {
    require(!groups.empty(), "ordering_effect_analysis: no groups supplied");

    // Regroup by second aid.
    std::map<std::string, std::vector<std::pair<std::string, const std::vector<double>*>>>
        by_second;
    for (const auto& [key, data] : groups) {
        by_second[key.second].emplace_back(key.first, &data);
    }

    OrderingEffectAnalysis analysis;
    for (const auto& [second_aid, first_groups] : by_second) {
        std::size_t usable = 0;
        for (const auto& [first_aid, data] : first_groups) {
            if (data->size() >= 2) ++usable;
        }
        require(usable >= 2,
                "ordering_effect_analysis: each second aid needs two first-aid groups of n >= 2");

        for (std::size_t i = 0; i < first_groups.size(); ++i) {
            for (std::size_t j = i + 1; j < first_groups.size(); ++j) {
                const auto& [first_a, data_a] = first_groups[i];
                const auto& [first_b, data_b] = first_groups[j];
                if (data_a->size() < 2 || data_b->size() < 2) continue;
                analysis.comparisons.push_back(
                    {second_aid, first_a, first_b,
                     welch_t(*data_a, *data_b, Alternative::TwoSided)});
            }
        }
    }

    for (const auto& [key, data] : groups) {
        if (data.size() < 2) continue;
        analysis.centered_densities.emplace_back(key, kde(data, {}, 512, true));
    }
    return analysis;
}

}  // namespace metawise
