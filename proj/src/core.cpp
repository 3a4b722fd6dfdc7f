#include "metawise/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "metawise/numeric.hpp"

namespace metawise {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

bool all_finite(std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

// Weighted mean in double-double precision. Weights may be null (uniform).
DoubleDouble weighted_mean_dd(std::span<const double> xs, const std::vector<double>* weights) {
    DoubleDouble acc;
    if (weights == nullptr) {
        for (double x : xs) acc += x;
        return dd_div(acc, static_cast<double>(xs.size()));
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const TwoSum p = two_prod((*weights)[i], xs[i]);
        acc += DoubleDouble{p.value, p.error};
    }
    return acc;
}

// sum_i c_i (x_i - center)^2 in double-double precision, where c_i is either
// a weight vector or the constant 1/n.
DoubleDouble weighted_sq_dev_dd(std::span<const double> xs, const DoubleDouble& center,
                                const std::vector<double>* weights) {
    DoubleDouble acc;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const DoubleDouble dev = dd_sub(DoubleDouble::of(xs[i]), center);
        DoubleDouble term = dd_sq(dev);
        if (weights != nullptr) {
            term = dd_mul(term, DoubleDouble::of((*weights)[i]));
        }
        acc += term;
    }
    if (weights == nullptr) {
        acc = dd_div(acc, static_cast<double>(xs.size()));
    }
    return acc;
}

}  // namespace

void Criterion::validate() const {
    require(std::isfinite(true_value) && std::isfinite(mean) && std::isfinite(variance),
            "criterion fields must be finite");
    require(variance >= 0.0, "criterion variance must be nonnegative");
    if (variance == 0.0) {
        require(mean == true_value, "fixed criterion (variance 0) requires mean == true_value");
    }
}

void AidCatalog::validate() const {
    require(!aids.empty(), "aid catalog must not be empty");
    std::unordered_set<std::string_view> seen;
    for (const auto& aid : aids) {
        require(!aid.empty(), "aid identifiers must be nonempty");
        require(seen.insert(aid).second, "aid identifiers must be unique");
    }
}

bool AidCatalog::contains(std::string_view aid) const {
    return std::find(aids.begin(), aids.end(), aid) != aids.end();
}

std::size_t AidCatalog::index_of(std::string_view aid) const {
    const auto it = std::find(aids.begin(), aids.end(), aid);
    require(it != aids.end(), "aid not present in catalog");
    return static_cast<std::size_t>(it - aids.begin());
}

void AidSet::validate_against(const AidCatalog& catalog) const {
    for (const auto& aid : members) {
        require(catalog.contains(aid), "aid set member not present in catalog");
    }
}

std::string_view to_token(TreatmentCondition condition) {
    switch (condition) {
        case TreatmentCondition::Control: return "control";
        case TreatmentCondition::Assigned: return "assigned";
        case TreatmentCondition::SingleChoice: return "single_choice";
        case TreatmentCondition::MultipleChoice: return "multiple_choice";
    }
    throw std::invalid_argument("unknown treatment condition");
}

TreatmentCondition parse_condition(std::string_view token) {
    if (token == "control") return TreatmentCondition::Control;
    if (token == "assigned") return TreatmentCondition::Assigned;
    if (token == "single_choice") return TreatmentCondition::SingleChoice;
    if (token == "multiple_choice") return TreatmentCondition::MultipleChoice;
    throw std::invalid_argument("unknown treatment condition token: " + std::string(token));
}

void EstimateSample::validate() const {
    require(std::isfinite(estimate), "estimate must be finite");
    if (aid_sequence.empty()) {
        require(!final_aid.has_value(), "final_aid must be absent when no aids were viewed");
    } else {
        require(final_aid.has_value() && *final_aid == aid_sequence.back(),
                "final_aid must equal the last aid viewed");
        for (const auto& aid : aid_sequence) {
            require(!aid.empty(), "aid identifiers in a sequence must be nonempty");
        }
    }
    switch (condition) {
        case TreatmentCondition::Control:
            require(aid_sequence.empty(), "control samples must have an empty aid sequence");
            break;
        case TreatmentCondition::Assigned:
        case TreatmentCondition::SingleChoice:
            require(aid_sequence.size() == 1,
                    "assigned and single-choice samples must have exactly one aid");
            break;
        case TreatmentCondition::MultipleChoice:
            require(!aid_sequence.empty(),
                    "multiple-choice samples must have at least one aid");
            break;
    }
}

CrowdWeights CrowdWeights::uniform(std::size_t n) {
    if (n == 0) throw std::invalid_argument("cannot build weights for an empty crowd");
    return {std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

void CrowdWeights::validate(bool require_strictly_positive) const {
    require(!values.empty(), "weights must not be empty");
    CompensatedSum total;
    for (double w : values) {
        require(std::isfinite(w), "weights must be finite");
        require(w >= 0.0, "weights must be nonnegative");
        if (require_strictly_positive) require(w > 0.0, "weights must be strictly positive");
        total.add(w);
    }
    require(std::abs(total.value() - 1.0) <= kSimplexTolerance, "weights must sum to 1");
}

SelectionDistribution SelectionDistribution::uniform(std::size_t n) {
    if (n == 0) throw std::invalid_argument("cannot build a selection over an empty crowd");
    return {std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

void SelectionDistribution::validate() const {
    require(!probabilities.empty(), "selection distribution must not be empty");
    CompensatedSum total;
    for (double p : probabilities) {
        require(std::isfinite(p) && p >= 0.0, "selection probabilities must be nonnegative");
        total.add(p);
    }
    require(std::abs(total.value() - 1.0) <= kSimplexTolerance,
            "selection probabilities must sum to 1");
}

double crowd_estimate(std::span<const double> estimates, const CrowdWeights& weights) {
    require(!estimates.empty(), "crowd_estimate: estimates must not be empty");
    require(estimates.size() == weights.values.size(),
            "crowd_estimate: weights length must match estimates");
    weights.validate();
    require(all_finite(estimates), "crowd_estimate: estimates must be finite");
    return weighted_mean_dd(estimates, &weights.values).value();
}

double group_squared_error(double crowd_estimate_value, const Criterion& criterion) {
    criterion.validate();
    require(std::isfinite(crowd_estimate_value), "group_squared_error: estimate must be finite");
    const double d = crowd_estimate_value - criterion.true_value;
    return d * d;
}

double mean_squared_error(std::span<const double> estimates, const Criterion& criterion,
                          const SelectionDistribution& selection) {
    require(!estimates.empty(), "mean_squared_error: estimates must not be empty");
    require(estimates.size() == selection.probabilities.size(),
            "mean_squared_error: selection length must match estimates");
    selection.validate();
    criterion.validate();
    require(all_finite(estimates), "mean_squared_error: estimates must be finite");
    DoubleDouble acc;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const TwoSum dev = two_sum(estimates[i], -criterion.true_value);
        const DoubleDouble sq = dd_sq(DoubleDouble{dev.value, dev.error});
        acc += dd_mul(sq, DoubleDouble::of(selection.probabilities[i]));
    }
    return acc.value();
}

double predictive_diversity(std::span<const double> estimates, const CrowdWeights& weights) {
    require(!estimates.empty(), "predictive_diversity: estimates must not be empty");
    require(estimates.size() == weights.values.size(),
            "predictive_diversity: weights length must match estimates");
    weights.validate();
    require(all_finite(estimates), "predictive_diversity: estimates must be finite");
    const DoubleDouble center = weighted_mean_dd(estimates, &weights.values);
    DoubleDouble acc;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const DoubleDouble dev = dd_sub(DoubleDouble::of(estimates[i]), center);
        acc += dd_mul(dd_sq(dev), DoubleDouble::of(weights.values[i]));
    }
    return acc.value();
}

double diversity_identity_residual(std::span<const double> estimates,
                                   const Criterion& criterion) {
    require(!estimates.empty(), "diversity_identity_residual: estimates must not be empty");
    criterion.validate();
    require(all_finite(estimates), "diversity_identity_residual: estimates must be finite");

    // Everything below stays in double-double until the final rounding, so
    // the algebraic cancellation GSE - MSE + diversity is preserved far past
    // double precision.
    const DoubleDouble mean = weighted_mean_dd(estimates, nullptr);
    const DoubleDouble gse = dd_sq(dd_sub(mean, criterion.true_value));
    const DoubleDouble mse =
        weighted_sq_dev_dd(estimates, DoubleDouble::of(criterion.true_value), nullptr);
    const DoubleDouble diversity = weighted_sq_dev_dd(estimates, mean, nullptr);
    return dd_add(dd_sub(gse, mse), diversity).value();
}

bool crowd_wisdom_predicate(std::span<const double> estimates, const CrowdWeights& weights,
                            const SelectionDistribution& selection, const Criterion& criterion) {
    const double c = crowd_estimate(estimates, weights);
    const double gse = group_squared_error(c, criterion);
    const double mse = mean_squared_error(estimates, criterion, selection);
    return mse >= gse;
}

CrowdSummary summarize_crowd(std::span<const double> estimates, const Criterion& criterion) {
    require(!estimates.empty(), "summarize_crowd: estimates must not be empty");
    criterion.validate();
    require(all_finite(estimates), "summarize_crowd: estimates must be finite");

    const std::size_t n = estimates.size();
    const DoubleDouble mean = weighted_mean_dd(estimates, nullptr);
    const DoubleDouble gse = dd_sq(dd_sub(mean, criterion.true_value));
    const DoubleDouble mse =
        weighted_sq_dev_dd(estimates, DoubleDouble::of(criterion.true_value), nullptr);
    const DoubleDouble diversity = weighted_sq_dev_dd(estimates, mean, nullptr);

    CrowdSummary summary;
    summary.n = n;
    summary.mean = mean.value();
    summary.gse = gse.value();
    summary.mse = mse.value();
    // n-1 denominator; a singleton crowd has variance 0 by convention.
    summary.variance =
        n > 1 ? dd_div(dd_mul(diversity, DoubleDouble::of(static_cast<double>(n))),
                       static_cast<double>(n - 1))
                    .value()
              : 0.0;
    return summary;
}

CrowdSummary summarize_crowd(std::span<const EstimateSample> samples,
                             const Criterion& criterion) {
    require(!samples.empty(), "summarize_crowd: samples must not be empty");
    std::vector<double> estimates;
    estimates.reserve(samples.size());
    for (const auto& s : samples) estimates.push_back(s.estimate);
    return summarize_crowd(std::span<const double>(estimates), criterion);
}

}  // namespace metawise
