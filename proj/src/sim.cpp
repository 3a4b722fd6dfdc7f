#include "metawise/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "metawise/numeric.hpp"

namespace metawise {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw std::invalid_argument(message);
}

// Stream-path constants so every purpose has a stable address.
enum StreamPurpose : std::uint64_t {
    kPopulationDraw = 1,
    kChoiceDraw = 2,
    kEstimateDraw = 3,
};

constexpr std::array<TreatmentCondition, 4> kArmOrder = {
    TreatmentCondition::Control,
    TreatmentCondition::Assigned,
    TreatmentCondition::SingleChoice,
    TreatmentCondition::MultipleChoice,
};

std::size_t arm_size(const ArmSizes& sizes, TreatmentCondition condition) {
    switch (condition) {
        case TreatmentCondition::Control: return sizes.control;
        case TreatmentCondition::Assigned: return sizes.assigned;
        case TreatmentCondition::SingleChoice: return sizes.single_choice;
        case TreatmentCondition::MultipleChoice: return sizes.multiple_choice;
    }
    return 0;
}

DecisionMaker draw_decision_maker(const PopulationSpec& spec, RngStream& stream) {
    DecisionMaker dm;
    dm.bias = stream.normal(spec.bias_mean, spec.bias_sd);
    dm.noise_sd = stream.uniform(spec.noise_sd_min, spec.noise_sd_max);
    return dm;
}

const AidEffect& effect_for(const std::map<std::string, AidEffect>& aid_effects,
                            const std::string& aid) {
    const auto it = aid_effects.find(aid);
    require(it != aid_effects.end(), "unknown aid (no effect configured)");
    return it->second;
}

void run_arm(const ExperimentConfig& config, TreatmentCondition condition,
             std::size_t arm_index, std::span<EstimateSample> out, unsigned threads) {
    const RngStream arm_root(config.seed, {arm_index});
    const auto fill_one = [&](std::size_t i) {
        RngStream pop_stream = arm_root.derive(i).derive(kPopulationDraw);
        RngStream choice_stream = arm_root.derive(i).derive(kChoiceDraw);
        RngStream estimate_stream = arm_root.derive(i).derive(kEstimateDraw);

        const DecisionMaker dm = draw_decision_maker(config.population, pop_stream);
        std::vector<std::string> sequence;
        if (condition != TreatmentCondition::Control) {
            sequence = choose_aids(dm, condition, config.choice, config.aid_effects,
                                   config.catalog, choice_stream);
        }
        double estimate =
            realize_estimate(dm, sequence, config.criterion, config.aid_effects,
                             config.carryover, config.choice.last_aid_rule, estimate_stream);
        if (config.clip_negative_estimates && estimate < 0.0) estimate = 0.0;

        EstimateSample sample;
        char id[40];
        std::snprintf(id, sizeof(id), "%s-%05zu", std::string(to_token(condition)).c_str(), i);
        sample.participant_id = id;
        sample.condition = condition;
        sample.aid_sequence = std::move(sequence);
        if (!sample.aid_sequence.empty()) sample.final_aid = sample.aid_sequence.back();
        sample.estimate = estimate;
        sample.task_id = config.task_id;
        out[i] = std::move(sample);
    };

    const std::size_t n = out.size();
    if (threads > 1 && n > 1) {
        std::vector<std::thread> pool;
        const std::size_t per = (n + threads - 1) / threads;
        for (unsigned w = 0; w < threads; ++w) {
            const std::size_t begin = per * w;
            const std::size_t end = std::min(n, begin + per);
            if (begin >= end) break;
            pool.emplace_back([&, begin, end] {
                for (std::size_t i = begin; i < end; ++i) fill_one(i);
            });
        }
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t i = 0; i < n; ++i) fill_one(i);
    }
}

EffectDistribution summarize_distribution(std::vector<double> values) {
    EffectDistribution dist;
    dist.values = std::move(values);
    const std::size_t n = dist.values.size();
    CompensatedSum sum;
    for (double v : dist.values) sum.add(v);
    dist.mean = sum.value() / static_cast<double>(n);
    CompensatedSum sq;
    for (double v : dist.values) {
        const double d = v - dist.mean;
        sq.add(d * d);
    }
    const double variance = n > 1 ? sq.value() / static_cast<double>(n - 1) : 0.0;
    dist.std_error = std::sqrt(variance / static_cast<double>(n));
    dist.mean_ci_low = dist.mean - 1.96 * dist.std_error;
    dist.mean_ci_high = dist.mean + 1.96 * dist.std_error;

    std::vector<double> sorted = dist.values;
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, n - 1);
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    dist.pct_2_5 = quantile(0.025);
    dist.pct_97_5 = quantile(0.975);
    return dist;
}

}  // namespace

void PopulationSpec::validate() const {
    require(n >= 1, "population must have at least one decision-maker");
    require(std::isfinite(bias_mean), "population bias mean must be finite");
    require(bias_sd >= 0.0, "population bias sd must be nonnegative");
    require(noise_sd_min > 0.0, "population noise sd range must be positive");
    require(noise_sd_min <= noise_sd_max, "population noise sd range low must not exceed high");
}

void AidEffect::validate() const {
    require(std::isfinite(mean_shift), "aid mean shift must be finite");
    require(sd_multiplier > 0.0, "aid sd multiplier must be positive");
    require(anchor_weight >= 0.0 && anchor_weight <= 1.0, "aid anchor weight must lie in [0, 1]");
}

void ChoiceModelSpec::validate(const AidCatalog& catalog) const {
    require(base_shares.size() == catalog.aids.size(),
            "choice model must give a base share for every catalog aid");
    CompensatedSum total;
    for (const auto& aid : catalog.aids) {
        const auto it = base_shares.find(aid);
        require(it != base_shares.end(), "choice model missing a base share for a catalog aid");
        require(it->second >= 0.0, "base shares must be nonnegative");
        total.add(it->second);
    }
    require(std::abs(total.value() - 1.0) <= 1e-9, "base shares must sum to 1");
    require(matching_coefficient >= 0.0, "matching coefficient must be nonnegative");
    CompensatedSum view_total;
    for (double p : view_count_probabilities) {
        require(p >= 0.0, "view count probabilities must be nonnegative");
        view_total.add(p);
    }
    require(std::abs(view_total.value() - 1.0) <= 1e-9, "view count probabilities must sum to 1");
}

void ExperimentConfig::validate() const {
    criterion.validate();
    catalog.validate();
    population.validate();
    require(!task_id.empty(), "task id must be nonempty");
    require(arm_sizes.control >= 1 && arm_sizes.assigned >= 1 && arm_sizes.single_choice >= 1 &&
                arm_sizes.multiple_choice >= 1,
            "every arm needs at least one participant");
    require(aid_effects.size() == catalog.aids.size(),
            "every catalog aid needs a configured effect");
    for (const auto& aid : catalog.aids) {
        const auto it = aid_effects.find(aid);
        require(it != aid_effects.end(), "aid effect missing for a catalog aid");
        it->second.validate();
    }
    choice.validate(catalog);
    require(carryover >= 0.0 && carryover <= 1.0, "carryover must lie in [0, 1]");
}

std::vector<DecisionMaker> sample_population(const PopulationSpec& spec, RngStream& stream) {
    spec.validate();
    std::vector<DecisionMaker> population;
    population.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        population.push_back(draw_decision_maker(spec, stream));
    }
    return population;
}

std::vector<std::vector<std::string>> generate_counterbalanced_orderings(
    const AidCatalog& catalog, std::size_t total) {
    catalog.validate();

    // Enumerate permutations of the canonical order.
    std::vector<std::size_t> index(catalog.aids.size());
    std::iota(index.begin(), index.end(), 0);
    std::vector<std::vector<std::string>> permutations;
    do {
        std::vector<std::string> order;
        order.reserve(index.size());
        for (std::size_t k : index) order.push_back(catalog.aids[k]);
        permutations.push_back(std::move(order));
    } while (std::next_permutation(index.begin(), index.end()));

    std::vector<std::vector<std::string>> orderings;
    orderings.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        orderings.push_back(permutations[i % permutations.size()]);
    }
    return orderings;
}

double expected_squared_error(const DecisionMaker& dm, const AidEffect* effect) {
    if (effect == nullptr) {
        return dm.bias * dm.bias + dm.noise_sd * dm.noise_sd;
    }
    const double conditional_bias = (1.0 - effect->anchor_weight) * dm.bias + effect->mean_shift;
    const double conditional_sd = dm.noise_sd * effect->sd_multiplier;
    return conditional_bias * conditional_bias + conditional_sd * conditional_sd;
}

std::vector<double> choice_probabilities(const DecisionMaker& dm, const ChoiceModelSpec& choice,
                                         const std::map<std::string, AidEffect>& aid_effects,
                                         const AidCatalog& catalog) {
    std::vector<double> weights(catalog.aids.size());
    double min_error = std::numeric_limits<double>::infinity();
    std::vector<double> errors(catalog.aids.size());
    for (std::size_t i = 0; i < catalog.aids.size(); ++i) {
        errors[i] = expected_squared_error(dm, &effect_for(aid_effects, catalog.aids[i]));
        min_error = std::min(min_error, errors[i]);
    }
    // Shifting by the minimum error leaves the normalized tilt unchanged and
    // keeps exp() in range for large alpha.
    CompensatedSum total;
    for (std::size_t i = 0; i < catalog.aids.size(); ++i) {
        const double share = choice.base_shares.at(catalog.aids[i]);
        const double w =
            share * std::exp(-choice.matching_coefficient * (errors[i] - min_error));
        weights[i] = w;
        total.add(w);
    }
    require(total.value() > 0.0, "choice probabilities vanished for every aid");
    for (double& w : weights) w /= total.value();
    return weights;
}

std::vector<std::string> choose_aids(const DecisionMaker& dm, TreatmentCondition condition,
                                     const ChoiceModelSpec& choice,
                                     const std::map<std::string, AidEffect>& aid_effects,
                                     const AidCatalog& catalog, RngStream& stream) {
    catalog.validate();
    switch (condition) {
        case TreatmentCondition::Assigned:
            return {catalog.aids[stream.uniform_index(catalog.aids.size())]};
        case TreatmentCondition::SingleChoice: {
            const std::vector<double> p = choice_probabilities(dm, choice, aid_effects, catalog);
            return {catalog.aids[stream.categorical(p)]};
        }
        case TreatmentCondition::MultipleChoice: {
            const std::size_t bucket =
                stream.categorical(std::span<const double>(choice.view_count_probabilities));
            // Bucket 2 means "view everything available".
            std::size_t count = bucket == 0 ? 1 : bucket == 1 ? 2 : catalog.aids.size();
            count = std::min(count, catalog.aids.size());

            std::vector<double> weights = choice_probabilities(dm, choice, aid_effects, catalog);
            std::vector<std::string> remaining = catalog.aids;
            std::vector<std::string> sequence;
            sequence.reserve(count);
            for (std::size_t k = 0; k < count; ++k) {
                const std::size_t pick = stream.categorical(weights);
                sequence.push_back(remaining[pick]);
                remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
                weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(pick));
            }
            return sequence;
        }
        case TreatmentCondition::Control:
            break;
    }
    throw std::invalid_argument("choose_aids: condition must be an aid-viewing treatment");
}

double realize_estimate(const DecisionMaker& dm, std::span<const std::string> aid_sequence,
                        const Criterion& criterion,
                        const std::map<std::string, AidEffect>& aid_effects, double carryover,
                        bool last_aid_rule, RngStream& stream) {
    criterion.validate();
    if (aid_sequence.empty()) {
        return stream.normal(criterion.true_value + dm.bias, dm.noise_sd);
    }

    const std::size_t governing_index = last_aid_rule ? aid_sequence.size() - 1 : 0;
    const AidEffect& governing = effect_for(aid_effects, aid_sequence[governing_index]);

    double shift = governing.mean_shift;
    if (carryover > 0.0 && aid_sequence.size() > 1) {
        CompensatedSum prefix;
        for (std::size_t i = 0; i < aid_sequence.size(); ++i) {
            if (i == governing_index) continue;
            prefix.add(effect_for(aid_effects, aid_sequence[i]).mean_shift);
        }
        shift += carryover * prefix.value() / static_cast<double>(aid_sequence.size() - 1);
    }

    const double mean =
        criterion.true_value + (1.0 - governing.anchor_weight) * dm.bias + shift;
    const double sd = dm.noise_sd * governing.sd_multiplier;
    return stream.normal(mean, sd);
}

std::vector<EstimateSample> run_experiment(const ExperimentConfig& config, unsigned threads) {
    config.validate();
    std::vector<EstimateSample> samples(config.arm_sizes.total());

    std::size_t offset = 0;
    for (std::size_t arm = 0; arm < kArmOrder.size(); ++arm) {
        const TreatmentCondition condition = kArmOrder[arm];
        const std::size_t n = arm_size(config.arm_sizes, condition);
        run_arm(config, condition, arm, std::span<EstimateSample>(samples).subspan(offset, n),
                threads);
        offset += n;
    }
    return samples;
}

MonteCarloEffects monte_carlo_effects(const ExperimentConfig& config, std::size_t replications,
                                      unsigned threads) {
    require(replications >= 2, "monte_carlo_effects: need at least two replications");
    config.validate();

    std::vector<double> ie(replications);
    std::vector<double> ce_single(replications);
    std::vector<double> ce_multiple(replications);

    const auto run_replication = [&](std::size_t r) {
        ExperimentConfig rep = config;
        rep.seed = derive_seed(config.seed, r);
        const std::vector<EstimateSample> samples = run_experiment(rep, 1);

        std::array<std::vector<double>, 4> arms;
        for (const auto& s : samples) {
            arms[static_cast<std::size_t>(s.condition)].push_back(s.estimate);
        }
        const auto gse = [&](TreatmentCondition c) {
            return summarize_crowd(std::span<const double>(arms[static_cast<std::size_t>(c)]),
                                   config.criterion)
                .gse;
        };
        const double g_control = gse(TreatmentCondition::Control);
        const double g_assigned = gse(TreatmentCondition::Assigned);
        ie[r] = information_effect(g_control, g_assigned);
        ce_single[r] = choice_effect(g_assigned, gse(TreatmentCondition::SingleChoice));
        ce_multiple[r] = choice_effect(g_assigned, gse(TreatmentCondition::MultipleChoice));
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

    MonteCarloEffects effects;
    effects.replications = replications;
    effects.information_effect = summarize_distribution(std::move(ie));
    effects.choice_effect_single = summarize_distribution(std::move(ce_single));
    effects.choice_effect_multiple = summarize_distribution(std::move(ce_multiple));
    return effects;
}

}  // namespace metawise
