#include <doctest.h>

#include <cmath>
#include <map>

#include "metawise/core.hpp"
#include "metawise/effects.hpp"
#include "metawise/rng.hpp"

using namespace metawise;

TEST_CASE("information_effect") {
    CHECK(information_effect(30685, 3422) == doctest::Approx(27263.0));
    CHECK(information_effect(2.75, 3.47) == doctest::Approx(-0.72).epsilon(1e-9));
    CHECK(information_effect(5.5, 5.5) == 0.0);
    CHECK_THROWS_AS(information_effect(-1.0, 2.0), std::invalid_argument);
}

TEST_CASE("choice_effect") {
    CHECK(choice_effect(3.47, 1.38) == doctest::Approx(2.09).epsilon(1e-9));
    CHECK(choice_effect(3422, 1508) == doctest::Approx(1914.0));
    CHECK(choice_effect(7.0, 7.0) == 0.0);
}

TEST_CASE("effects telescope: IE + CE = gse_control - gse_choice") {
    RngStream stream(5);
    for (int trial = 0; trial < 100; ++trial) {
        const double c = stream.uniform(0.0, 1e5);
        const double r = stream.uniform(0.0, 1e5);
        const double h = stream.uniform(0.0, 1e5);
        CHECK(information_effect(c, r) + choice_effect(r, h) ==
              doctest::Approx(c - h).epsilon(1e-12));
    }
}

TEST_CASE("is_metawise: strict positivity") {
    EffectReport report;
    report.choice_effect = 0.0;
    CHECK_FALSE(is_metawise(report));
    report.choice_effect = 1e-9;
    CHECK(is_metawise(report));
    report.choice_effect = -0.5;
    CHECK_FALSE(is_metawise(report));
}

TEST_CASE("detect_simpson: bean-jar single choice pattern is detected") {
    // Per-aid crowd errors worsen for the two most used aids while the
    // overall crowd improves.
    const std::map<std::string, GsePair> per_aid{
        {"scale", {32584, 31353}},
        {"equation", {463, 8151}},
        {"comparison", {283, 600}},
    };
    CHECK(detect_simpson(per_aid, {3422, 1508}, 2));

    // Monotone in the threshold.
    CHECK(detect_simpson(per_aid, {3422, 1508}, 1));
    CHECK_FALSE(detect_simpson(per_aid, {3422, 1508}, 3));
}

TEST_CASE("detect_simpson: cpi single choice pattern is not") {
    const std::map<std::string, GsePair> per_aid{
        {"fed_statement", {0.04, 0.09}},  // the only aid that got worse
        {"pred_model", {1.76, 0.55}},
        {"components", {19.83, 9.49}},
    };
    CHECK_FALSE(detect_simpson(per_aid, {3.47, 1.38}, 2));
}

TEST_CASE("detect_simpson: trivial and error cases") {
    const std::map<std::string, GsePair> improving{{"a", {10, 5}}, {"b", {8, 2}}};
    CHECK_FALSE(detect_simpson(improving, {9, 4}, 1));
    CHECK_THROWS_AS(detect_simpson({}, {1, 2}, 1), std::invalid_argument);
    CHECK_THROWS_AS(detect_simpson(improving, {9, 4}, 0), std::invalid_argument);
}

TEST_CASE("counterfactual_reallocation: published bean-jar moves") {
    const Criterion bean = Criterion::fixed(488.0);

    ReallocationPlan even_split;
    even_split.lines = {{"scale", 44, 0, 311},
                        {"equation", 222, 244, 578},
                        {"comparison", 134, 156, 512}};
    even_split.rounding_unit = 1.0;
    even_split.gse_basis = SquaredErrorBasis::RoundedEstimate;

    const auto printed = counterfactual_reallocation(even_split, bean,
                                                     RoundingMode::PaperRounding);
    CHECK(printed.crowd_estimate == doctest::Approx(552.0));
    CHECK(printed.gse == doctest::Approx(4096.0));

    const auto full = counterfactual_reallocation(even_split, bean, RoundingMode::FullPrecision);
    CHECK(full.crowd_estimate == doctest::Approx(552.26).epsilon(1e-12));
    CHECK(full.gse == doctest::Approx(4129.3476).epsilon(1e-9));

    ReallocationPlan to_comparison;
    to_comparison.lines = {{"scale", 44, 0, 311},
                           {"equation", 222, 222, 578},
                           {"comparison", 134, 178, 512}};
    to_comparison.rounding_unit = 1.0;
    to_comparison.gse_basis = SquaredErrorBasis::ExactEstimate;

    const auto printed2 = counterfactual_reallocation(to_comparison, bean,
                                                      RoundingMode::PaperRounding);
    CHECK(printed2.crowd_estimate == doctest::Approx(548.0));
    CHECK(printed2.gse == doctest::Approx(3676.0));
}

TEST_CASE("counterfactual_reallocation: cpi shares over assigned means") {
    ReallocationPlan plan;
    plan.lines = {{"fed_statement", 51, 51, 6.61},
                  {"pred_model", 163, 163, 8.13},
                  {"components", 76, 76, 11.25}};
    plan.rounding_unit = 0.01;

    const auto result =
        counterfactual_reallocation(plan, Criterion::fixed(6.8), RoundingMode::FullPrecision);
    CHECK(std::abs(result.crowd_estimate - 8.68) < 0.005);
}

TEST_CASE("counterfactual_reallocation: identity plan reproduces the recombination") {
    // destination == source just reweights the given means by their counts.
    ReallocationPlan plan;
    plan.lines = {{"a", 51, 51, 6.51}, {"b", 163, 163, 7.54}, {"c", 76, 76, 9.88}};
    const auto result =
        counterfactual_reallocation(plan, Criterion::fixed(6.8), RoundingMode::FullPrecision);
    CHECK(result.crowd_estimate ==
          doctest::Approx((51 * 6.51 + 163 * 7.54 + 76 * 9.88) / 290.0).epsilon(1e-12));
}

TEST_CASE("counterfactual_reallocation: count conservation enforced") {
    ReallocationPlan bad;
    bad.lines = {{"a", 10, 12, 1.0}, {"b", 10, 10, 2.0}};
    CHECK_THROWS_AS(
        counterfactual_reallocation(bad, Criterion::fixed(0.0), RoundingMode::FullPrecision),
        std::invalid_argument);

    ReallocationPlan negative;
    negative.lines = {{"a", 10, -1, 1.0}, {"b", 10, 21, 2.0}};
    CHECK_THROWS_AS(
        counterfactual_reallocation(negative, Criterion::fixed(0.0), RoundingMode::FullPrecision),
        std::invalid_argument);
}

TEST_CASE("counterfactual_reallocation: rounding modes agree within the unit bound") {
    // |gse_printed - gse_full| <= 2 |C - Y| u + u^2 for the rounded-estimate
    // basis, over randomized plans.
    RngStream stream(77);
    for (int trial = 0; trial < 200; ++trial) {
        ReallocationPlan plan;
        const double unit = trial % 2 == 0 ? 1.0 : 0.01;
        double total = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double count = std::floor(stream.uniform(1, 200));
            plan.lines.push_back({std::string(1, static_cast<char>('a' + k)), count, 0.0,
                                  stream.uniform(-100, 100)});
            total += count;
        }
        // Destination: shuffle all of line 0's count onto lines 1 and 2.
        plan.lines[1].dest_count = plan.lines[0].source_count + plan.lines[1].source_count;
        plan.lines[2].dest_count = plan.lines[2].source_count;
        plan.rounding_unit = unit;
        plan.gse_basis = SquaredErrorBasis::RoundedEstimate;

        const Criterion criterion = Criterion::fixed(stream.uniform(-100, 100));
        const auto full = counterfactual_reallocation(plan, criterion,
                                                      RoundingMode::FullPrecision);
        const auto printed = counterfactual_reallocation(plan, criterion,
                                                         RoundingMode::PaperRounding);
        const double bound =
            2.0 * std::abs(full.crowd_estimate - criterion.true_value) * unit + unit * unit;
        CHECK(std::abs(printed.gse - full.gse) <= bound);
        CHECK(std::abs(printed.crowd_estimate - full.crowd_estimate) <= unit);
    }
}

TEST_CASE("effect_report from summaries: published aggregate rows") {
    const auto report_for = [](double gse_control, double gse_assigned, double gse_choice) {
        CrowdSummary control{1, 0, gse_control, 0, 0};
        CrowdSummary assigned{1, 0, gse_assigned, 0, 0};
        CrowdSummary choice{1, 0, gse_choice, 0, 0};
        return effect_report(control, assigned, choice);
    };

    const EffectReport cpi_single = report_for(2.75, 3.47, 1.38);
    CHECK(cpi_single.information_effect == doctest::Approx(-0.72).epsilon(1e-9));
    CHECK(cpi_single.choice_effect == doctest::Approx(2.09).epsilon(1e-9));
    CHECK(cpi_single.metawise);

    const EffectReport cpi_multiple = report_for(2.75, 3.47, 1.01);
    CHECK(cpi_multiple.choice_effect == doctest::Approx(2.46).epsilon(1e-9));
    CHECK(cpi_multiple.metawise);

    const EffectReport bean_single = report_for(30685, 3422, 1508);
    CHECK(bean_single.information_effect == doctest::Approx(27263.0));
    CHECK(bean_single.choice_effect == doctest::Approx(1914.0));
    CHECK(bean_single.metawise);

    const EffectReport bean_multiple = report_for(30685, 3422, 2293);
    CHECK(bean_multiple.choice_effect == doctest::Approx(1129.0));
    CHECK(bean_multiple.metawise);

    const EffectReport flat = report_for(5.0, 5.0, 5.0);
    CHECK(flat.information_effect == 0.0);
    CHECK(flat.choice_effect == 0.0);
    CHECK_FALSE(flat.metawise);
}

TEST_CASE("effect_report: criterion consistency check") {
    const Criterion y = Criterion::fixed(10.0);
    CrowdSummary good{5, 12.0, 4.0, 9.0, 3.0};  // gse = (12-10)^2 exactly
    CrowdSummary bad{5, 12.0, 7.5, 9.0, 3.0};

    CHECK_NOTHROW(effect_report(good, good, good, {}, 2, y, 1e-6));
    CHECK_THROWS_AS(effect_report(good, bad, good, {}, 2, y, 1e-6), std::invalid_argument);
    // A loose tolerance (printed rounding) lets the same rows through.
    CHECK_NOTHROW(effect_report(good, bad, good, {}, 2, y, 5.0));
}

TEST_CASE("effect_report_from_samples: CIs appear only with bootstrap") {
    RngStream stream(55);
    std::vector<double> control(120), assigned(120), choice(120);
    for (auto& x : control) x = stream.normal(4.0, 1.0);
    for (auto& x : assigned) x = stream.normal(9.0, 2.0);
    for (auto& x : choice) x = stream.normal(10.2, 1.5);
    const Criterion y = Criterion::fixed(10.0);

    const EffectReport plain = effect_report_from_samples(control, assigned, choice, y);
    CHECK_FALSE(plain.ie_ci_low.has_value());
    CHECK(plain.information_effect > 0.0);  // control is far off, assigned close

    BootstrapConfig bootstrap;
    bootstrap.replications = 800;
    bootstrap.seed = 4;
    const EffectReport with_ci =
        effect_report_from_samples(control, assigned, choice, y, bootstrap);
    REQUIRE(with_ci.ie_ci_low.has_value());
    REQUIRE(with_ci.ce_ci_high.has_value());
    CHECK(*with_ci.ie_ci_low <= with_ci.information_effect);
    CHECK(*with_ci.ie_ci_high >= with_ci.information_effect);
    CHECK(with_ci.information_effect == plain.information_effect);
}
