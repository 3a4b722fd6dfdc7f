// Domain types and the fundamental crowd error/diversity metrics.
//
// The crowd estimate is a convex combination C = sum_i w_i x_i of individual
// estimates. Crowd-level accuracy is the group squared error (C - Y)^2, the
// individual-level counterpart is the selection-weighted mean squared error
// E[(P - Y)^2], and the two are linked through predictive diversity:
// for uniform weights, GSE = MSE - diversity holds as an algebraic identity.
// All metrics here are pure functions of immutable value types and safe to
// call concurrently.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace metawise {

// Tolerance used for "sums to one" checks on weights and selection
// distributions.
inline constexpr double kSimplexTolerance = 1e-12;

// The quantity being estimated: realized value plus first two moments of the
// generating distribution. A fixed criterion has variance 0 and mean equal
// to the realized value.
struct Criterion {
    double true_value = 0.0;
    double mean = 0.0;
    double variance = 0.0;

    static Criterion fixed(double y) { return {y, y, 0.0}; }

    // Throws std::invalid_argument on nonfinite fields, negative variance,
    // or variance == 0 with mean != true_value.
    void validate() const;
};

// Ordered list of available decision aids. The order is the canonical
// presentation order used when counterbalancing.
struct AidCatalog {
    std::vector<std::string> aids;

    void validate() const;  // unique, nonempty identifiers
    bool contains(std::string_view aid) const;
    std::size_t index_of(std::string_view aid) const;  // throws if absent
};

// A chosen subset of a catalog's aids; empty is a valid (control) exposure.
struct AidSet {
    std::vector<std::string> members;

    void validate_against(const AidCatalog& catalog) const;
};

enum class TreatmentCondition {
    Control,
    Assigned,
    SingleChoice,
    MultipleChoice,
};

std::string_view to_token(TreatmentCondition condition);
TreatmentCondition parse_condition(std::string_view token);

// One participant's record: which aids they viewed, in order, and the
// estimate they submitted. The final aid labels the record for per-aid
// grouping; for multi-aid sequences the label is the last aid viewed.
struct EstimateSample {
    std::string participant_id;
    TreatmentCondition condition = TreatmentCondition::Control;
    std::vector<std::string> aid_sequence;
    std::optional<std::string> final_aid;
    double estimate = 0.0;
    std::string task_id;

    // Enforces final_aid == aid_sequence.back() (or nullopt when empty) and
    // the condition/sequence consistency rules: Control has no aids,
    // Assigned and SingleChoice exactly one, MultipleChoice at least one.
    void validate() const;
};

// Aggregation weights: nonnegative, summing to one. Strict positivity is an
// optional check; zero weights are legal so that excluding a member and
// corner solutions of the optimal-weight problem stay expressible.
struct CrowdWeights {
    std::vector<double> values;

    static CrowdWeights uniform(std::size_t n);
    void validate(bool require_strictly_positive = false) const;
};

// Probabilities of selecting each decision-maker when scoring a "random
// member" of the crowd.
struct SelectionDistribution {
    std::vector<double> probabilities;

    static SelectionDistribution uniform(std::size_t n);
    void validate() const;
};

// Per-crowd descriptive statistics. gse and mse use uniform weights/selection
// and the n denominator; variance is the n-1 sample variance (what a t-test
// needs). For a size-1 crowd the variance is 0 and gse == mse.
struct CrowdSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double gse = 0.0;
    double mse = 0.0;
    double variance = 0.0;
};

// C = sum_i w_i x_i. Uniform weights give the arithmetic mean.
double crowd_estimate(std::span<const double> estimates, const CrowdWeights& weights);

// (C - Y)^2 for an already-computed crowd estimate.
double group_squared_error(double crowd_estimate_value, const Criterion& criterion);

// sum_i p_i (x_i - Y)^2; uniform selection gives the mean of squared errors.
double mean_squared_error(std::span<const double> estimates, const Criterion& criterion,
                          const SelectionDistribution& selection);

// sum_i w_i (x_i - C)^2 with C the weighted crowd estimate. Zero iff all
// estimates are equal.
double predictive_diversity(std::span<const double> estimates, const CrowdWeights& weights);

// GSE - (MSE - diversity) under uniform weighting, evaluated end-to-end in
// compensated arithmetic. Contract: |result| < 1e-9 for all finite inputs
// (in practice < 1e-12 for crowds up to 10^4 values of magnitude 1e6).
double diversity_identity_residual(std::span<const double> estimates, const Criterion& criterion);

// True iff the selection-weighted individual error is at least the crowd
// error. With matching uniform weights and selection this is Jensen's
// inequality and always true.
bool crowd_wisdom_predicate(std::span<const double> estimates, const CrowdWeights& weights,
                            const SelectionDistribution& selection, const Criterion& criterion);

CrowdSummary summarize_crowd(std::span<const double> estimates, const Criterion& criterion);
CrowdSummary summarize_crowd(std::span<const EstimateSample> samples, const Criterion& criterion);

}  // namespace metawise
