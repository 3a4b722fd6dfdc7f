// Generative Monte Carlo model of the two-stage experiment.
//
// Decision-makers carry a personal bias and a personal noise level. Each aid
// shifts the conditional mean, rescales the noise, and can anchor away part
// of the personal bias. Choice behavior tilts base selection shares by each
// decision-maker's own expected squared error under the aid (softmax with
// matching coefficient alpha; alpha = 0 reduces exactly to the base shares).
// Every draw comes from a substream addressed by (seed, arm, participant),
// so results are byte-identical across runs and thread counts.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "metawise/core.hpp"
#include "metawise/effects.hpp"
#include "metawise/rng.hpp"

namespace metawise {

// Baseline (no-aid) population: personal bias b_i ~ Normal(bias_mean,
// bias_sd) relative to the criterion, noise sd drawn uniformly from the
// given range. A control estimate is Normal(Y + b_i, noise_sd_i^2).
struct PopulationSpec {
    std::size_t n = 1;
    double bias_mean = 0.0;
    double bias_sd = 0.0;
    double noise_sd_min = 1.0;
    double noise_sd_max = 1.0;

    void validate() const;
};

struct DecisionMaker {
    double bias = 0.0;
    double noise_sd = 1.0;
};

// Conditional effect of viewing an aid: the estimate mean becomes
// Y + (1 - anchor_weight) * b_i + mean_shift, the sd becomes
// noise_sd * sd_multiplier.
struct AidEffect {
    double mean_shift = 0.0;
    double sd_multiplier = 1.0;
    double anchor_weight = 0.0;

    void validate() const;
};

struct ChoiceModelSpec {
    // Per-aid base selection shares, summing to 1 over the catalog.
    std::map<std::string, double> base_shares;
    // Softmax tilt strength: selection weight is
    // share_a * exp(-alpha * expected_sq_error(dm, a)).
    double matching_coefficient = 0.0;
    // P(view exactly 1), P(view exactly 2), P(view all) in MultipleChoice.
    std::array<double, 3> view_count_probabilities{0.58, 0.09, 0.33};
    // Which viewed aid governs the conditional estimate distribution:
    // the last viewed (default) or the first viewed.
    bool last_aid_rule = true;

    void validate(const AidCatalog& catalog) const;
};

struct ArmSizes {
    std::size_t control = 0;
    std::size_t assigned = 0;
    std::size_t single_choice = 0;
    std::size_t multiple_choice = 0;

    std::size_t total() const { return control + assigned + single_choice + multiple_choice; }
};

struct ExperimentConfig {
    std::string task_id = "task";
    Criterion criterion;
    AidCatalog catalog;
    PopulationSpec population;
    std::map<std::string, AidEffect> aid_effects;
    ChoiceModelSpec choice;
    ArmSizes arm_sizes;
    std::uint64_t seed = 0;
    // Blends the mean shifts of earlier-viewed aids into the governing aid's
    // shift; 0 (the default) makes the governing aid fully supersede them.
    double carryover = 0.0;
    // Count-style tasks cannot go below zero; when set, negative draws are
    // floored at 0 (the truncation is visible in the returned samples).
    bool clip_negative_estimates = false;

    void validate() const;
};

std::vector<DecisionMaker> sample_population(const PopulationSpec& spec, RngStream& stream);

// All |catalog|! presentation orders, assigned round-robin so counts differ
// by at most one across orders.
std::vector<std::vector<std::string>> generate_counterbalanced_orderings(
    const AidCatalog& catalog, std::size_t total);

// E[(X - Y)^2] for this decision-maker under the given aid (nullptr = no
// aid): squared conditional bias plus conditional variance.
double expected_squared_error(const DecisionMaker& dm, const AidEffect* effect);

// Analytic per-aid selection probabilities for one decision-maker; the
// sampling path in choose_aids draws from exactly this vector.
std::vector<double> choice_probabilities(const DecisionMaker& dm, const ChoiceModelSpec& choice,
                                         const std::map<std::string, AidEffect>& aid_effects,
                                         const AidCatalog& catalog);

// Aid sequence for one participant. Assigned ignores the choice model and
// draws one aid uniformly; SingleChoice draws one aid from the tilted
// shares; MultipleChoice draws a view count, then aids without replacement
// by the same tilted rule.
std::vector<std::string> choose_aids(const DecisionMaker& dm, TreatmentCondition condition,
                                     const ChoiceModelSpec& choice,
                                     const std::map<std::string, AidEffect>& aid_effects,
                                     const AidCatalog& catalog, RngStream& stream);

// One estimate draw conditional on the viewed aids. An empty sequence is the
// control draw Normal(Y + b_i, noise_sd_i^2).
double realize_estimate(const DecisionMaker& dm, std::span<const std::string> aid_sequence,
                        const Criterion& criterion,
                        const std::map<std::string, AidEffect>& aid_effects, double carryover,
                        bool last_aid_rule, RngStream& stream);

// Full four-arm experiment; deterministic in (config, seed) and in thread
// count. Samples come back in arm order (control, assigned, single choice,
// multiple choice), each arm in participant order.
std::vector<EstimateSample> run_experiment(const ExperimentConfig& config, unsigned threads = 1);

struct EffectDistribution {
    std::vector<double> values;  // one per replication
    double mean = 0.0;
    double std_error = 0.0;
    double mean_ci_low = 0.0;   // mean +- 1.96 * std_error
    double mean_ci_high = 0.0;
    double pct_2_5 = 0.0;       // percentiles of the replication distribution
    double pct_97_5 = 0.0;
};

struct MonteCarloEffects {
    std::size_t replications = 0;
    EffectDistribution information_effect;
    EffectDistribution choice_effect_single;
    EffectDistribution choice_effect_multiple;
};

// Replication-level estimation of the expected effects: replication r runs
// the experiment under seed substream (seed, r) and records the realized
// information and choice effects.
MonteCarloEffects monte_carlo_effects(const ExperimentConfig& config, std::size_t replications,
                                      unsigned threads = 1);

}  // namespace metawise
