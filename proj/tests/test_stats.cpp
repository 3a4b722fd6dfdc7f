#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "metawise/rng.hpp"
#include "metawise/stats.hpp"
#include "oracles.hpp"

using namespace metawise;

TEST_CASE("regularized incomplete beta: boundaries and closed forms") {
    CHECK(regularized_incomplete_beta(0.0, 2.5, 7.0) == 0.0);
    CHECK(regularized_incomplete_beta(1.0, 2.5, 7.0) == 1.0);
    // Beta(2,2) CDF is 3x^2 - 2x^3; at 0.5 that is exactly 0.5.
    CHECK(regularized_incomplete_beta(0.5, 2.0, 2.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(regularized_incomplete_beta(-0.1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(regularized_incomplete_beta(0.5, 0.0, 1), std::invalid_argument);
}

TEST_CASE("regularized incomplete beta: reflection identity on random inputs") {
    RngStream stream(41);
    for (int trial = 0; trial < 200; ++trial) {
        const double x = stream.uniform01();
        const double a = stream.uniform(0.2, 20.0);
        const double b = stream.uniform(0.2, 20.0);
        const double forward = regularized_incomplete_beta(x, a, b);
        const double reflected = regularized_incomplete_beta(1.0 - x, b, a);
        CHECK(forward + reflected == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("regularized incomplete beta matches quadrature to 1e-10") {
    // Shapes >= 1 keep the integrand bounded, which the quadrature oracle
    // needs to reach 1e-10 itself; the reflection test above covers a,b < 1.
    RngStream stream(42);
    for (int trial = 0; trial < 60; ++trial) {
        const double x = stream.uniform(0.01, 0.99);
        const double a = stream.uniform(1.0, 12.0);
        const double b = stream.uniform(1.0, 12.0);
        const double expected = oracles::incomplete_beta(x, a, b);
        CHECK(std::abs(regularized_incomplete_beta(x, a, b) - expected) < 1e-10);
    }
}

TEST_CASE("student t cdf approaches the normal cdf at large df") {
    for (int i = -3; i <= 3; ++i) {
        const double x = static_cast<double>(i);
        CHECK(std::abs(student_t_cdf(x, 1e6) - normal_cdf(x)) < 1e-4);
    }
}

TEST_CASE("welch_t: trivial and symmetry cases") {
    const std::vector<double> xs{1, 2, 3, 4};

    const TestResult same = welch_t(xs, xs);
    CHECK(same.statistic == doctest::Approx(0.0));
    CHECK(same.p_value == doctest::Approx(1.0));

    const std::vector<double> ys{2, 4, 6, 8};
    const TestResult ab = welch_t(xs, ys);
    const TestResult ba = welch_t(ys, xs);
    CHECK(ab.statistic == doctest::Approx(-ba.statistic).epsilon(1e-14));
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-14));

    // One-sided p-values are complementary.
    const TestResult less = welch_t(xs, ys, Alternative::Less);
    const TestResult greater = welch_t(xs, ys, Alternative::Greater);
    CHECK(less.p_value + greater.p_value == doctest::Approx(1.0).epsilon(1e-12));

    // Constant equal samples leave the statistic undefined.
    const std::vector<double> flat{5, 5, 5};
    CHECK_THROWS_AS(welch_t(flat, flat), std::invalid_argument);
    CHECK_THROWS_AS(welch_t(std::vector<double>{1.0}, ys), std::invalid_argument);
}

TEST_CASE("welch_t matches the frozen oracle case to 1e-6") {
    // Independent oracle: adaptive quadrature of the t density at the
    // Welch-Satterthwaite df (values cross-checked against scipy).
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{2, 4, 6, 8, 10};
    const TestResult result = welch_t(a, b);

    CHECK(result.statistic == doctest::Approx(-1.8973665961010275).epsilon(1e-9));
    CHECK(result.degrees_of_freedom.value() == doctest::Approx(5.882352941176471).epsilon(1e-9));
    CHECK(result.p_value == doctest::Approx(0.10753119493062718).epsilon(1e-6));

    const double oracle_p =
        2.0 * oracles::student_t_cdf(result.statistic, *result.degrees_of_freedom);
    CHECK(std::abs(result.p_value - oracle_p) < 1e-6);
}

TEST_CASE("welch_t_from_summary: published moment rows") {
    // Variances recovered as MSE - GSE from the printed rows.
    const TestResult fed_vs_pred =
        welch_t_from_summary(91, 6.61, 1.48 - 0.04, 91, 8.13, 14.92 - 1.76);
    CHECK(fed_vs_pred.p_value < 0.001);

    const TestResult pred_vs_comp =
        welch_t_from_summary(163, 7.54, 5.01 - 0.55, 76, 9.88, 74.75 - 9.49);
    CHECK(pred_vs_comp.p_value < 0.016);

    const TestResult equal = welch_t_from_summary(10, 3.0, 2.0, 12, 3.0, 2.5);
    CHECK(equal.statistic == doctest::Approx(0.0));
    CHECK(equal.p_value == doctest::Approx(1.0));

    // The Bessel flag only rescales by n/(n-1); conclusions stay put.
    const TestResult corrected =
        welch_t_from_summary(91, 6.61, 1.44, 91, 8.13, 13.16, Alternative::TwoSided, true);
    CHECK(corrected.p_value < 0.001);
    CHECK(corrected.p_value > fed_vs_pred.p_value);  // larger variances, milder t
}

TEST_CASE("ks_two_sample: hand-computed suprema") {
    const std::vector<double> xs{1, 2, 3};
    CHECK(ks_two_sample(xs, xs).statistic == doctest::Approx(0.0));

    CHECK(ks_two_sample(std::vector<double>{1, 2}, std::vector<double>{3, 4}).statistic ==
          doctest::Approx(1.0));

    // ECDFs over {1,2,3,4}: differences are 1/2, 0, 1/2, 0.
    CHECK(ks_two_sample(std::vector<double>{1, 3}, std::vector<double>{2, 4}).statistic ==
          doctest::Approx(0.5));

    CHECK_THROWS_AS(ks_two_sample({}, xs), std::invalid_argument);
}

TEST_CASE("ks_two_sample: D invariant under strictly increasing transforms") {
    RngStream stream(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(40), b(60);
        for (auto& x : a) x = stream.normal(0.0, 1.0);
        for (auto& x : b) x = stream.normal(0.4, 1.3);
        const double d_raw = ks_two_sample(a, b).statistic;

        auto transform = [](double x) { return std::exp(x) + x; };  // strictly increasing
        std::vector<double> ta(a.size()), tb(b.size());
        std::transform(a.begin(), a.end(), ta.begin(), transform);
        std::transform(b.begin(), b.end(), tb.begin(), transform);
        CHECK(ks_two_sample(ta, tb).statistic == doctest::Approx(d_raw).epsilon(1e-14));

        CHECK(d_raw >= 0.0);
        CHECK(d_raw <= 1.0);
    }
}

TEST_CASE("ks_two_sample: p-value sanity on well-separated samples") {
    RngStream stream(18);
    std::vector<double> a(200), b(200);
    for (auto& x : a) x = stream.normal(0.0, 1.0);
    for (auto& x : b) x = stream.normal(2.0, 1.0);
    CHECK(ks_two_sample(a, b).p_value < 1e-6);

    std::vector<double> c(200);
    for (auto& x : c) x = stream.normal(0.0, 1.0);
    CHECK(ks_two_sample(a, c).p_value > 0.01);
}

TEST_CASE("silverman bandwidth formula") {
    RngStream stream(23);
    std::vector<double> xs(500);
    for (auto& x : xs) x = stream.normal(10.0, 2.0);

    // Recompute the rule directly.
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    auto quant = [&](double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
    };
    const double iqr = quant(0.75) - quant(0.25);
    const double expected = 0.9 * std::min(std::sqrt(var), iqr / 1.34) *
                            std::pow(500.0, -0.2);
    CHECK(silverman_bandwidth(xs) == doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(silverman_bandwidth(std::vector<double>{3, 3, 3}), std::invalid_argument);
}

TEST_CASE("kde: translation equivariance") {
    RngStream stream(29);
    std::vector<double> xs(300);
    for (auto& x : xs) x = stream.normal(5.0, 1.5);
    std::vector<double> shifted = xs;
    for (double& x : shifted) x += 123.0;

    const DensityCurve base = kde(xs);
    const DensityCurve moved = kde(shifted);
    CHECK(base.bandwidth == doctest::Approx(moved.bandwidth).epsilon(1e-9));
    for (std::size_t i = 0; i < base.grid.size(); ++i) {
        CHECK(moved.grid[i] - base.grid[i] == doctest::Approx(123.0).epsilon(1e-9));
        CHECK(moved.density[i] == doctest::Approx(base.density[i]).epsilon(1e-9));
    }
}

TEST_CASE("kde: standard normal density and normalization") {
    RngStream stream(314159);
    std::vector<double> xs(10000);
    for (auto& x : xs) x = stream.normal(0.0, 1.0);
    const DensityCurve curve = kde(xs);

    // Density at 0 close to 1/sqrt(2 pi).
    double at_zero = 0.0;
    for (std::size_t i = 0; i + 1 < curve.grid.size(); ++i) {
        if (curve.grid[i] <= 0.0 && 0.0 <= curve.grid[i + 1]) {
            const double t = (0.0 - curve.grid[i]) / (curve.grid[i + 1] - curve.grid[i]);
            at_zero = curve.density[i] + t * (curve.density[i + 1] - curve.density[i]);
            break;
        }
    }
    CHECK(std::abs(at_zero - 0.3989) < 0.03);

    // Trapezoidal integral within 0.005 of 1 and everywhere nonnegative.
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < curve.grid.size(); ++i) {
        CHECK(curve.density[i] >= 0.0);
        integral += 0.5 * (curve.density[i] + curve.density[i + 1]) *
                    (curve.grid[i + 1] - curve.grid[i]);
    }
    CHECK(std::abs(integral - 1.0) < 0.005);
}

TEST_CASE("kde: mean centering") {
    RngStream stream(31);
    std::vector<double> xs(400);
    for (auto& x : xs) x = stream.normal(42.0, 3.0);
    const DensityCurve curve = kde(xs, {}, 512, true);
    CHECK(curve.center_offset == doctest::Approx(42.0).epsilon(0.02));

    // First moment of the centered density is near 0 (within 2 bandwidths).
    double moment = 0.0;
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < curve.grid.size(); ++i) {
        const double mid = 0.5 * (curve.grid[i] + curve.grid[i + 1]);
        const double w = 0.5 * (curve.density[i] + curve.density[i + 1]) *
                         (curve.grid[i + 1] - curve.grid[i]);
        moment += mid * w;
        mass += w;
    }
    CHECK(std::abs(moment / mass) < 2.0 * curve.bandwidth);

    CHECK_THROWS_AS(kde(std::vector<double>{1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(kde(xs, -0.5), std::invalid_argument);
}

TEST_CASE("bootstrap_gse_diff: identical crowds bracket zero") {
    RngStream stream(37);
    std::vector<double> xs(150);
    for (auto& x : xs) x = stream.normal(3.0, 1.0);
    const BootstrapResult result =
        bootstrap_gse_diff(xs, xs, Criterion::fixed(2.5), 2000, 7);
    CHECK(result.estimate == doctest::Approx(0.0));
    CHECK(result.ci_low <= 0.0);
    CHECK(result.ci_high >= 0.0);
    CHECK(result.p_value > 0.2);
}

TEST_CASE("bootstrap_gse_diff: clearly separated crowds are significant") {
    // Crowd a centered at Y+2, crowd b at Y+0.1, both sd 1: GSE difference
    // near 4 with small resampling noise. Cross-checked at 1e5 replications.
    RngStream stream(38);
    const double y = 10.0;
    std::vector<double> a(200), b(200);
    for (auto& x : a) x = stream.normal(y + 2.0, 1.0);
    for (auto& x : b) x = stream.normal(y + 0.1, 1.0);
    const BootstrapResult result =
        bootstrap_gse_diff(a, b, Criterion::fixed(y), 100000, 99);
    CHECK(result.p_value < 0.01);
    CHECK(result.ci_low > 0.0);
}

TEST_CASE("bootstrap_gse_diff: deterministic per seed, stable under doubling") {
    RngStream stream(39);
    std::vector<double> a(80), b(90);
    for (auto& x : a) x = stream.normal(1.0, 2.0);
    for (auto& x : b) x = stream.normal(0.5, 1.0);
    const Criterion y = Criterion::fixed(0.7);

    const BootstrapResult r1 = bootstrap_gse_diff(a, b, y, 1500, 12345);
    const BootstrapResult r2 = bootstrap_gse_diff(a, b, y, 1500, 12345);
    CHECK(r1.estimate == r2.estimate);
    CHECK(r1.ci_low == r2.ci_low);
    CHECK(r1.ci_high == r2.ci_high);
    CHECK(r1.p_value == r2.p_value);

    // Same seed with more replications: same point estimate, similar CI.
    const BootstrapResult r4 = bootstrap_gse_diff(a, b, y, 6000, 12345);
    CHECK(r4.estimate == r1.estimate);
    const double w1 = r1.ci_high - r1.ci_low;
    const double w4 = r4.ci_high - r4.ci_low;
    CHECK(std::abs(w4 - w1) / w1 < 0.2);

    // Thread count does not change the draws.
    const BootstrapResult threaded = bootstrap_gse_diff(a, b, y, 1500, 12345, 4);
    CHECK(threaded.ci_low == r1.ci_low);
    CHECK(threaded.p_value == r1.p_value);

    CHECK_THROWS_AS(bootstrap_gse_diff(a, b, y, 50, 1), std::invalid_argument);
}

TEST_CASE("ordering_effect_analysis: identical groups and injected shift") {
    std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
    RngStream stream(43);

    std::vector<double> shared(200);
    for (auto& x : shared) x = stream.normal(50.0, 5.0);
    groups[{"alpha", "gamma"}] = shared;
    groups[{"beta", "gamma"}] = shared;  // identical data -> t = 0, p = 1

    std::vector<double> shifted(200);
    for (auto& x : shifted) x = stream.normal(55.0, 5.0);  // +1 sd shift
    std::vector<double> baseline(200);
    for (auto& x : baseline) x = stream.normal(50.0, 5.0);
    groups[{"alpha", "delta"}] = shifted;
    groups[{"beta", "delta"}] = baseline;

    const OrderingEffectAnalysis analysis = ordering_effect_analysis(groups);
    REQUIRE(analysis.comparisons.size() == 2);
    for (const auto& comparison : analysis.comparisons) {
        if (comparison.second_aid == "gamma") {
            CHECK(comparison.test.p_value == doctest::Approx(1.0));
        } else {
            CHECK(comparison.test.p_value < 0.01);
        }
    }
    CHECK(analysis.centered_densities.size() == 4);
    for (const auto& [key, curve] : analysis.centered_densities) {
        CHECK(curve.center_offset != 0.0);
    }

    groups.erase({"beta", "gamma"});
    CHECK_THROWS_AS(ordering_effect_analysis(groups), std::invalid_argument);
}

TEST_CASE("ordering_effect_analysis: null calibration over seeded repetitions") {
    // Same generator for every ordering: p-values should look uniform, so
    // no more than ~10% of tests land below 0.05.
    std::size_t total = 0;
    std::size_t below = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        RngStream stream(9000 + rep);
        std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
        const std::vector<std::string> aids{"a", "b", "c"};
        for (const auto& first : aids) {
            for (const auto& second : aids) {
                if (first == second) continue;
                std::vector<double> data(60);
                for (auto& x : data) x = stream.normal(100.0, 12.0);
                groups[{first, second}] = std::move(data);
            }
        }
        for (const auto& comparison : ordering_effect_analysis(groups).comparisons) {
            ++total;
            if (comparison.test.p_value < 0.05) ++below;
        }
    }
    CHECK(total == 300);
    CHECK(static_cast<double>(below) / static_cast<double>(total) <= 0.10);
}
