#include "metawise/effects.hpp"

#include <cmath>
#include <stdexcept>

#include "metawise/numeric.hpp"
#include "metawise/rng.hpp"
#include "metawise/stats.hpp"

namespace metawise {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

double trunc_to_unit(double x, double unit) {
    // Printed group estimates truncate toward zero decimals; the small nudge
    // keeps values sitting on a unit boundary from flooring down.
    return std::floor(x / unit + 1e-9) * unit;
}

double round_to_unit(double x, double unit) { return std::round(x / unit) * unit; }

EffectReport assemble(double gse_control, double gse_random, double gse_choice,
                      const std::map<std::string, GsePair>& per_aid,
                      std::size_t simpson_min_aids_worse) {
    EffectReport report;
    report.gse_control = gse_control;
    report.gse_random = gse_random;
    report.gse_choice = gse_choice;
    report.information_effect = information_effect(gse_control, gse_random);
    report.choice_effect = choice_effect(gse_random, gse_choice);
    report.metawise = report.choice_effect > 0.0;
    report.per_aid = per_aid;
    report.simpson_flag =
        per_aid.empty() ? false
                        : detect_simpson(per_aid, {gse_random, gse_choice}, simpson_min_aids_worse);
    return report;
}

void check_summary_against(const CrowdSummary& summary, const Criterion& criterion,
                           double tolerance, const char* label) {
    const double d = summary.mean - criterion.true_value;
    if (std::abs(summary.gse - d * d) > tolerance) {
        throw std::invalid_argument(std::string("effect_report: ") + label +
                                    " summary inconsistent with the criterion (gse != (mean-Y)^2)");
    }
}

}  // namespace

double information_effect(double gse_control, double gse_random) {
    require(gse_control >= 0.0 && gse_random >= 0.0,
            "information_effect: group squared errors must be nonnegative");
    return gse_control - gse_random;
}

double choice_effect(double gse_random, double gse_choice) {
    require(gse_random >= 0.0 && gse_choice >= 0.0,
            "choice_effect: group squared errors must be nonnegative");
    return gse_random - gse_choice;
}

bool is_metawise(const EffectReport& report) { return report.choice_effect > 0.0; }

bool detect_simpson(const std::map<std::string, GsePair>& per_aid, const GsePair& overall,
                    std::size_t min_aids_worse) {
    require(!per_aid.empty(), "detect_simpson: per-aid map must not be empty");
    require(min_aids_worse >= 1, "detect_simpson: min_aids_worse must be at least 1");
    std::size_t worse = 0;
    for (const auto& [aid, pair] : per_aid) {
        if (pair.choice > pair.assigned) ++worse;
    }
    return worse >= min_aids_worse && overall.choice < overall.assigned;
}

void ReallocationPlan::validate() const {
    require(!lines.empty(), "reallocation plan has no aid lines");
    require(rounding_unit > 0.0, "reallocation plan rounding unit must be positive");
    CompensatedSum source_total;
    CompensatedSum dest_total;
    for (const auto& line : lines) {
        require(!line.aid.empty(), "reallocation plan aid names must be nonempty");
        require(line.source_count >= 0.0 && line.dest_count >= 0.0,
                "reallocation plan counts must be nonnegative");
        require(std::isfinite(line.mean), "reallocation plan means must be finite");
        source_total.add(line.source_count);
        dest_total.add(line.dest_count);
    }
    require(dest_total.value() > 0.0, "reallocation plan destination counts sum to zero");
    require(std::abs(source_total.value() - dest_total.value()) <= 1e-9,
            "reallocation plan does not conserve the total count");
}

ReallocationResult counterfactual_reallocation(const ReallocationPlan& plan,
                                               const Criterion& criterion, RoundingMode mode) {
    plan.validate();
    criterion.validate();

    DoubleDouble weighted;
    CompensatedSum total;
    for (const auto& line : plan.lines) {
        const TwoSum p = two_prod(line.dest_count, line.mean);
        weighted += DoubleDouble{p.value, p.error};
        total.add(line.dest_count);
    }
    const double estimate = dd_div(weighted, total.value()).value();
    const double exact_gse = group_squared_error(estimate, criterion);

    if (mode == RoundingMode::FullPrecision) {
        return {estimate, exact_gse};
    }

    const double printed_estimate = trunc_to_unit(estimate, plan.rounding_unit);
    switch (plan.gse_basis) {
        case SquaredErrorBasis::RoundedEstimate:
            // The squared error follows from the printed estimate exactly.
            return {printed_estimate, group_squared_error(printed_estimate, criterion)};
        case SquaredErrorBasis::ExactEstimate:
            // The printed error was computed before rounding the estimate and
            // then printed at the reporting unit.
            return {printed_estimate, round_to_unit(exact_gse, plan.rounding_unit)};
    }
    throw std::invalid_argument("unknown squared-error basis");
}

EffectReport effect_report(const CrowdSummary& control, const CrowdSummary& random_assigned,
                           const CrowdSummary& choice,
                           const std::map<std::string, GsePair>& per_aid,
                           std::size_t simpson_min_aids_worse,
                           const std::optional<Criterion>& criterion,
                           double gse_consistency_tolerance) {
    require(control.n >= 1 && random_assigned.n >= 1 && choice.n >= 1,
            "effect_report: all crowd summaries must be populated");
    if (criterion) {
        criterion->validate();
        check_summary_against(control, *criterion, gse_consistency_tolerance, "control");
        check_summary_against(random_assigned, *criterion, gse_consistency_tolerance, "assigned");
        check_summary_against(choice, *criterion, gse_consistency_tolerance, "choice");
    }
    return assemble(control.gse, random_assigned.gse, choice.gse, per_aid,
                    simpson_min_aids_worse);
}

EffectReport effect_report_from_samples(std::span<const double> control,
                                        std::span<const double> random_assigned,
                                        std::span<const double> choice,
                                        const Criterion& criterion,
                                        const BootstrapConfig& bootstrap,
                                        const std::map<std::string, GsePair>& per_aid,
                                        std::size_t simpson_min_aids_worse) {
    const CrowdSummary s_control = summarize_crowd(control, criterion);
    const CrowdSummary s_random = summarize_crowd(random_assigned, criterion);
    const CrowdSummary s_choice = summarize_crowd(choice, criterion);
    EffectReport report = assemble(s_control.gse, s_random.gse, s_choice.gse, per_aid,
                                   simpson_min_aids_worse);

    if (bootstrap.replications > 0) {
        const BootstrapResult ie =
            bootstrap_gse_diff(control, random_assigned, criterion, bootstrap.replications,
                               derive_seed(bootstrap.seed, 1), bootstrap.threads);
        const BootstrapResult ce =
            bootstrap_gse_diff(random_assigned, choice, criterion, bootstrap.replications,
                               derive_seed(bootstrap.seed, 2), bootstrap.threads);
        report.ie_ci_low = ie.ci_low;
        report.ie_ci_high = ie.ci_high;
        report.ce_ci_low = ce.ci_low;
        report.ce_ci_high = ce.ci_high;
    }
    return report;
}

}  // namespace metawise
