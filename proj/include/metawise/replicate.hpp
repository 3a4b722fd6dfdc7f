// Bundled experiment summary tables, consistency checks against their
// criteria, dataset ingestion/serialization, full-dataset analysis, and the
// plain-text/CSV replication report.
//
// Raw participant data is not available for the two bundled experiments; the
// bundle ships the published per-condition summary rows only (n, mean, group
// squared error, mean squared error). Raw-data pathways are exercised
// through simulator-generated datasets.

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "metawise/core.hpp"
#include "metawise/effects.hpp"
#include "metawise/stats.hpp"

namespace metawise {

enum class Experiment { Cpi, BeanJar };

std::string_view to_token(Experiment experiment);
Experiment parse_experiment(std::string_view token);

// Aggregate rows use this aid label; control rows use kNoAidLabel.
inline constexpr std::string_view kAllAidsLabel = "All";
inline constexpr std::string_view kNoAidLabel = "none";

struct SummaryRow {
    Experiment experiment = Experiment::Cpi;
    TreatmentCondition condition = TreatmentCondition::Control;
    std::string aid;
    std::size_t n = 0;
    double mean = 0.0;
    double gse = 0.0;
    double mse = 0.0;
};

// FNV-1a 64-bit, used to pin the bundled table content.
std::uint64_t fnv1a64(std::string_view text);

// Parses `condition,aid,n,mean,gse,mse` rows; verifies the checksum first
// when one is supplied and throws on mismatch.
std::vector<SummaryRow> parse_summary_table(std::string_view csv_text, Experiment experiment,
                                            std::optional<std::uint64_t> expected_checksum = {});

// All published rows of both experiments (13 each), checksum-verified.
std::vector<SummaryRow> load_bundled_tables();

// The raw CSV text of a bundled table, for export.
std::string_view bundled_table_csv(Experiment experiment);

Criterion bundled_criterion(Experiment experiment);

struct ConsistencyCheck {
    SummaryRow row;
    double computed_gse = 0.0;
    double printed_gse = 0.0;
    double delta = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

// Printed-rounding tolerance on |(mean - Y)^2 - printed gse|: means printed
// to 2 decimals allow 0.05, integer means allow 180.
double consistency_threshold(Experiment experiment);

std::vector<ConsistencyCheck> check_table_consistency(
    std::span<const SummaryRow> rows, const std::map<Experiment, Criterion>& criteria);
std::vector<ConsistencyCheck> check_table_consistency(std::span<const SummaryRow> rows);

struct RecombinedMean {
    Experiment experiment = Experiment::Cpi;
    TreatmentCondition condition = TreatmentCondition::Control;
    double recombined = 0.0;
    double printed = 0.0;
    double delta = 0.0;
};

// Count-weighted recombination of per-aid means per condition, compared to
// the printed aggregate row. Throws when an aggregate row lacks its per-aid
// rows.
std::vector<RecombinedMean> recombine_all_rows(std::span<const SummaryRow> rows);

// CSV ingestion error with position information; what() carries
// "<source>:<line>: ..." ready for display.
class CsvError : public std::runtime_error {
public:
    CsvError(std::string_view source, std::size_t line, std::string_view column,
             std::string_view reason);

    std::size_t line() const { return line_; }
    const std::string& column() const { return column_; }

private:
    std::size_t line_;
    std::string column_;
};

// Reads `participant_id,condition,aid_sequence,final_aid,estimate,task_id`
// rows (aid_sequence `;`-joined or empty, final_aid an aid name or `none`).
// Every row is validated against the condition/sequence invariants; the
// first violation raises CsvError with its line number.
std::vector<EstimateSample> ingest_csv(std::istream& in, std::string_view source_name);
std::vector<EstimateSample> ingest_csv(const std::filesystem::path& path);

// Inverse of ingest_csv; estimates are written in shortest round-trip form
// so ingest(emit(samples)) == samples field-for-field.
void emit_csv(std::span<const EstimateSample> samples, std::ostream& out);
std::string emit_csv(std::span<const EstimateSample> samples);

struct ConditionAidSummary {
    TreatmentCondition condition = TreatmentCondition::Control;
    std::string aid;
    CrowdSummary stats;
};

struct PairwiseWelch {
    TreatmentCondition condition = TreatmentCondition::Control;
    std::string aid_a;
    std::string aid_b;
    TestResult two_sided;
};

struct AnalysisOptions {
    std::size_t bootstrap_replications = 0;  // 0 disables effect CIs
    std::uint64_t seed = 0;
    std::size_t simpson_min_aids_worse = 2;
    unsigned threads = 1;
};

struct DatasetAnalysis {
    std::vector<ConditionAidSummary> table;
    std::vector<PairwiseWelch> pairwise;
    std::optional<EffectReport> single_choice_effects;
    std::optional<EffectReport> multiple_choice_effects;
    std::vector<std::string> notices;
};

// Per-aid and aggregate summaries per condition, pairwise Welch tests within
// each condition, and effect reports for whichever choice arms are present.
// Missing arms downgrade effects to a notice; summaries are always produced.
DatasetAnalysis analyze_dataset(std::span<const EstimateSample> samples,
                                const Criterion& criterion, const AnalysisOptions& options = {});

struct NamedReallocation {
    Experiment experiment = Experiment::BeanJar;
    std::string description;
    ReallocationPlan plan;
};

// The bundled counterfactual reallocations: the two bean-jar chooser moves
// and the single-choice shares applied to the assigned means.
std::vector<NamedReallocation> bundled_reallocations();

struct ReplicationReport {
    std::string text;  // tables, consistency, effects, counterfactuals
    std::string csv;   // machine-readable copy of the summary rows
    std::size_t consistency_failures = 0;
};

ReplicationReport render_replication_report(RoundingMode rounding);

}  // namespace metawise
