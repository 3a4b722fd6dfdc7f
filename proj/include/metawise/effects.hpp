// Information effect, choice effect, the metawisdom predicate, detection of
// the Simpson's-paradox pattern, and counterfactual reallocation of choosers
// across aids.
//
// The information effect of an aid collection is the drop in group squared
// error from the no-aid crowd to the randomly-assigned crowd; the choice
// effect is the further drop from random assignment to self-chosen aids. A
// strictly positive choice effect is metawisdom. All effects here act on
// realized group squared errors; expectation-level estimation lives in the
// simulator, which calls these once per replication.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "metawise/core.hpp"

namespace metawise {

// (gse under assignment, gse under choice) for one aid or for a whole crowd.
struct GsePair {
    double assigned = 0.0;
    double choice = 0.0;
};

struct EffectReport {
    double gse_control = 0.0;
    double gse_random = 0.0;
    double gse_choice = 0.0;
    double information_effect = 0.0;
    double choice_effect = 0.0;
    bool metawise = false;
    std::map<std::string, GsePair> per_aid;
    bool simpson_flag = false;
    std::optional<double> ie_ci_low, ie_ci_high;
    std::optional<double> ce_ci_low, ce_ci_high;
};

// gse_control - gse_random; positive when randomized exposure helped.
double information_effect(double gse_control, double gse_random);

// gse_random - gse_choice; strictly positive defines metawisdom.
double choice_effect(double gse_random, double gse_choice);

bool is_metawise(const EffectReport& report);

// True iff at least min_aids_worse aids got individually worse under choice
// (gse_choice > gse_assigned) while the overall crowd improved
// (overall.choice < overall.assigned).
bool detect_simpson(const std::map<std::string, GsePair>& per_aid, const GsePair& overall,
                    std::size_t min_aids_worse = 2);

enum class RoundingMode { FullPrecision, PaperRounding };

// Published counterfactuals are not uniform about when the group estimate
// was rounded: some square the estimate as printed, others square the
// unrounded value and round only the squared error. Each plan records which
// basis its printed numbers used.
enum class SquaredErrorBasis { RoundedEstimate, ExactEstimate };

// Moves choosers between aids while holding per-aid means fixed: the
// destination counts reweight the given group means into a new crowd
// estimate. Total count must be conserved.
struct ReallocationPlan {
    struct AidLine {
        std::string aid;
        double source_count = 0.0;
        double dest_count = 0.0;
        double mean = 0.0;
    };
    std::vector<AidLine> lines;
    double rounding_unit = 1.0;  // printed precision of the group estimate
    SquaredErrorBasis gse_basis = SquaredErrorBasis::RoundedEstimate;

    void validate() const;
};

struct ReallocationResult {
    double crowd_estimate = 0.0;
    double gse = 0.0;
};

// Count-weighted recombination of per-aid means under the destination
// counts, then the squared error against the criterion. PaperRounding
// truncates the reported estimate to the plan's printed unit and rounds the
// squared error to the same unit, squaring per the plan's basis.
ReallocationResult counterfactual_reallocation(const ReallocationPlan& plan,
                                               const Criterion& criterion, RoundingMode mode);

struct BootstrapConfig {
    std::size_t replications = 0;  // 0 disables confidence intervals
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

// Assembles an EffectReport from three crowd summaries. When a criterion is
// supplied, each summary must satisfy |gse - (mean - Y)^2| <= tolerance
// (use the printed rounding threshold for published rows).
EffectReport effect_report(const CrowdSummary& control, const CrowdSummary& random_assigned,
                           const CrowdSummary& choice,
                           const std::map<std::string, GsePair>& per_aid = {},
                           std::size_t simpson_min_aids_worse = 2,
                           const std::optional<Criterion>& criterion = std::nullopt,
                           double gse_consistency_tolerance = 1e-6);

// Same report computed from raw estimates; bootstrap confidence intervals
// for both effects are attached when config.replications > 0.
EffectReport effect_report_from_samples(std::span<const double> control,
                                        std::span<const double> random_assigned,
                                        std::span<const double> choice,
                                        const Criterion& criterion,
                                        const BootstrapConfig& bootstrap = {},
                                        const std::map<std::string, GsePair>& per_aid = {},
                                        std::size_t simpson_min_aids_worse = 2);

}  // namespace metawise
