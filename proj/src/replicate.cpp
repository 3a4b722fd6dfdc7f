#include "metawise/replicate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "metawise/format.hpp"
#include "metawise/numeric.hpp"
#include "metawise/rng.hpp"

namespace metawise {

namespace {

// Published summary rows. The aggregate 'All' rows are as printed, not
// recomputed; check_table_consistency and recombine_all_rows quantify how
// close the printed values are to the arithmetic.
constexpr std::string_view kCpiTableCsv =
    "condition,aid,n,mean,gse,mse\n"
    "assigned,fed_statement,91,6.61,0.04,1.48\n"
    "assigned,pred_model,91,8.13,1.76,14.92\n"
    "assigned,components,91,11.25,19.83,88.41\n"
    "assigned,All,273,8.66,3.47,34.93\n"
    "single_choice,fed_statement,51,6.51,0.09,0.69\n"
    "single_choice,pred_model,163,7.54,0.55,5.01\n"
    "single_choice,components,76,9.88,9.49,74.75\n"
    "single_choice,All,290,7.97,1.38,22.53\n"
    "multiple_choice,fed_statement,56,6.65,0.02,1.46\n"
    "multiple_choice,pred_model,182,7.41,0.37,5.64\n"
    "multiple_choice,components,59,10.12,11.04,58.65\n"
    "multiple_choice,All,297,7.80,1.01,15.38\n"
    "control,none,87,5.143,2.75,13.44\n";

constexpr std::string_view kBeanJarTableCsv =
    "condition,aid,n,mean,gse,mse\n"
    "assigned,scale,133,307,32584,82599\n"
    "assigned,equation,133,510,463,87076\n"
    "assigned,comparison,134,471,283,23578\n"
    "assigned,All,400,430,3422,64316\n"
    "single_choice,scale,44,311,31353,78492\n"
    "single_choice,equation,222,578,8151,63771\n"
    "single_choice,comparison,134,512,600,30693\n"
    "single_choice,All,400,527,1508,54309\n"
    "multiple_choice,scale,41,318,29033,71911\n"
    "multiple_choice,equation,234,578,8118,86802\n"
    "multiple_choice,comparison,123,528,1625,23027\n"
    "multiple_choice,All,398,536,2293,65559\n"
    "control,none,100,313,30685,71537\n";

// FNV-1a of the two tables above; guards against silent edits.
constexpr std::uint64_t kCpiChecksum = 7801823669887701753ULL;
constexpr std::uint64_t kBeanJarChecksum = 5636399276069307681ULL;

constexpr double kCpiCriterion = 6.8;
constexpr double kBeanJarCriterion = 488.0;

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(text.substr(start));
            return out;
        }
        out.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

constexpr std::string_view kSampleCsvHeader =
    "participant_id,condition,aid_sequence,final_aid,estimate,task_id";

const char* kSampleColumns[6] = {"participant_id", "condition", "aid_sequence",
                                 "final_aid",      "estimate",  "task_id"};

}  // namespace

std::string_view to_token(Experiment experiment) {
    switch (experiment) {
        case Experiment::Cpi: return "cpi";
        case Experiment::BeanJar: return "bean_jar";
    }
    throw std::invalid_argument("unknown experiment");
}

Experiment parse_experiment(std::string_view token) {
    if (token == "cpi") return Experiment::Cpi;
    if (token == "bean_jar") return Experiment::BeanJar;
    throw std::invalid_argument("unknown experiment token: " + std::string(token));
}

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::vector<SummaryRow> parse_summary_table(std::string_view csv_text, Experiment experiment,
                                            std::optional<std::uint64_t> expected_checksum) {
    if (expected_checksum && fnv1a64(csv_text) != *expected_checksum) {
        throw std::runtime_error("bundled summary table is corrupt (checksum mismatch)");
    }

    std::vector<SummaryRow> rows;
    std::size_t line_number = 0;
    for (std::string_view line : split(csv_text, '\n')) {
        ++line_number;
        line = strip_cr(line);
        if (line.empty()) continue;
        if (line_number == 1) {
            require(line == "condition,aid,n,mean,gse,mse",
                    "summary table header must be condition,aid,n,mean,gse,mse");
            continue;
        }
        const auto fields = split(line, ',');
        require(fields.size() == 6, "summary table row must have 6 fields");

        SummaryRow row;
        row.experiment = experiment;
        row.condition = parse_condition(fields[0]);
        row.aid = std::string(fields[1]);
        double n = 0.0;
        require(parse_double(fields[2], n) && n >= 1.0 && n == std::floor(n),
                "summary table n must be a positive integer");
        row.n = static_cast<std::size_t>(n);
        require(parse_double(fields[3], row.mean), "summary table mean must be numeric");
        require(parse_double(fields[4], row.gse) && row.gse >= 0.0,
                "summary table gse must be nonnegative");
        require(parse_double(fields[5], row.mse) && row.mse >= 0.0,
                "summary table mse must be nonnegative");
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), "summary table has no rows");
    return rows;
}

std::vector<SummaryRow> load_bundled_tables() {
    std::vector<SummaryRow> rows =
        parse_summary_table(kCpiTableCsv, Experiment::Cpi, kCpiChecksum);
    std::vector<SummaryRow> bean =
        parse_summary_table(kBeanJarTableCsv, Experiment::BeanJar, kBeanJarChecksum);
    rows.insert(rows.end(), bean.begin(), bean.end());
    return rows;
}

std::string_view bundled_table_csv(Experiment experiment) {
    return experiment == Experiment::Cpi ? kCpiTableCsv : kBeanJarTableCsv;
}

Criterion bundled_criterion(Experiment experiment) {
    return Criterion::fixed(experiment == Experiment::Cpi ? kCpiCriterion : kBeanJarCriterion);
}

double consistency_threshold(Experiment experiment) {
    return experiment == Experiment::Cpi ? 0.05 : 180.0;
}

std::vector<ConsistencyCheck> check_table_consistency(
    std::span<const SummaryRow> rows, const std::map<Experiment, Criterion>& criteria) {
    require(!rows.empty(), "check_table_consistency: no rows");
    std::vector<ConsistencyCheck> checks;
    checks.reserve(rows.size());
    for (const auto& row : rows) {
        const auto it = criteria.find(row.experiment);
        require(it != criteria.end(), "check_table_consistency: no criterion for experiment");
        const double d = row.mean - it->second.true_value;

        ConsistencyCheck check;
        check.row = row;
        check.computed_gse = d * d;
        check.printed_gse = row.gse;
        check.delta = std::abs(check.computed_gse - check.printed_gse);
        check.threshold = consistency_threshold(row.experiment);
        check.pass = check.delta <= check.threshold;
        checks.push_back(std::move(check));
    }
    return checks;
}

std::vector<ConsistencyCheck> check_table_consistency(std::span<const SummaryRow> rows) {
    return check_table_consistency(rows, {{Experiment::Cpi, bundled_criterion(Experiment::Cpi)},
                                          {Experiment::BeanJar,
                                           bundled_criterion(Experiment::BeanJar)}});
}

std::vector<RecombinedMean> recombine_all_rows(std::span<const SummaryRow> rows) {
    require(!rows.empty(), "recombine_all_rows: no rows");

    std::vector<RecombinedMean> result;
    for (const auto& all_row : rows) {
        if (all_row.aid != kAllAidsLabel) continue;

        DoubleDouble weighted;
        CompensatedSum count;
        for (const auto& row : rows) {
            if (row.experiment != all_row.experiment || row.condition != all_row.condition ||
                row.aid == kAllAidsLabel) {
                continue;
            }
            const TwoSum p = two_prod(static_cast<double>(row.n), row.mean);
            weighted += DoubleDouble{p.value, p.error};
            count.add(static_cast<double>(row.n));
        }
        require(count.value() > 0.0, "recombine_all_rows: aggregate row has no per-aid rows");
        require(static_cast<std::size_t>(count.value()) == all_row.n,
                "recombine_all_rows: per-aid counts do not sum to the aggregate n");

        RecombinedMean rec;
        rec.experiment = all_row.experiment;
        rec.condition = all_row.condition;
        rec.recombined = dd_div(weighted, count.value()).value();
        rec.printed = all_row.mean;
        rec.delta = std::abs(rec.recombined - rec.printed);
        result.push_back(rec);
    }
    return result;
}

CsvError::CsvError(std::string_view source, std::size_t line, std::string_view column,
                   std::string_view reason)
    : std::runtime_error(std::string(source) + ":" + std::to_string(line) + ": " +
                         (column.empty() ? std::string() : "column " + std::string(column) + ": ") +
                         std::string(reason)),
      line_(line),
      column_(column) {}

std::vector<EstimateSample> ingest_csv(std::istream& in, std::string_view source_name) {
    std::vector<EstimateSample> samples;
    std::string line;
    std::size_t line_number = 0;
    bool saw_header = false;

    while (std::getline(in, line)) {
        ++line_number;
        std::string_view view = strip_cr(line);
        if (!saw_header) {
            if (view != kSampleCsvHeader) {
                throw CsvError(source_name, line_number, "",
                               "expected header '" + std::string(kSampleCsvHeader) + "'");
            }
            saw_header = true;
            continue;
        }
        if (view.empty()) continue;

        const auto fields = split(view, ',');
        if (fields.size() != 6) {
            throw CsvError(source_name, line_number, "",
                           "expected 6 comma-separated fields, found " +
                               std::to_string(fields.size()));
        }

        EstimateSample sample;
        sample.participant_id = std::string(fields[0]);
        if (sample.participant_id.empty()) {
            throw CsvError(source_name, line_number, kSampleColumns[0], "must be nonempty");
        }
        try {
            sample.condition = parse_condition(fields[1]);
        } catch (const std::invalid_argument& e) {
            throw CsvError(source_name, line_number, kSampleColumns[1], e.what());
        }
        if (!fields[2].empty()) {
            for (std::string_view aid : split(fields[2], ';')) {
                if (aid.empty()) {
                    throw CsvError(source_name, line_number, kSampleColumns[2],
                                   "empty aid name in sequence");
                }
                sample.aid_sequence.emplace_back(aid);
            }
        }
        if (fields[3] != kNoAidLabel) {
            if (fields[3].empty()) {
                throw CsvError(source_name, line_number, kSampleColumns[3],
                               "must be an aid name or 'none'");
            }
            sample.final_aid = std::string(fields[3]);
        }
        if (!parse_double(fields[4], sample.estimate)) {
            throw CsvError(source_name, line_number, kSampleColumns[4],
                           "not a numeric literal: '" + std::string(fields[4]) + "'");
        }
        sample.task_id = std::string(fields[5]);

        try {
            sample.validate();
        } catch (const std::invalid_argument& e) {
            throw CsvError(source_name, line_number, "", e.what());
        }
        samples.push_back(std::move(sample));
    }
    if (!saw_header) throw CsvError(source_name, 1, "", "file is empty (header required)");
    return samples;
}

std::vector<EstimateSample> ingest_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(path.string(), 0, "", "cannot open file");
    return ingest_csv(in, path.string());
}

void emit_csv(std::span<const EstimateSample> samples, std::ostream& out) {
    out << kSampleCsvHeader << '\n';
    for (const auto& s : samples) {
        out << s.participant_id << ',' << to_token(s.condition) << ',';
        for (std::size_t i = 0; i < s.aid_sequence.size(); ++i) {
            if (i > 0) out << ';';
            out << s.aid_sequence[i];
        }
        out << ',' << (s.final_aid ? *s.final_aid : std::string(kNoAidLabel)) << ','
            << format_double(s.estimate) << ',' << s.task_id << '\n';
    }
}

std::string emit_csv(std::span<const EstimateSample> samples) {
    std::ostringstream out;
    emit_csv(samples, out);
    return out.str();
}

namespace {

constexpr std::array<TreatmentCondition, 4> kDisplayOrder = {
    TreatmentCondition::Assigned,
    TreatmentCondition::SingleChoice,
    TreatmentCondition::MultipleChoice,
    TreatmentCondition::Control,
};

std::string aid_label(const EstimateSample& s) {
    return s.final_aid ? *s.final_aid : std::string(kNoAidLabel);
}

}  // namespace

DatasetAnalysis analyze_dataset(std::span<const EstimateSample> samples,
                                const Criterion& criterion, const AnalysisOptions& options) {
    require(!samples.empty(), "analyze_dataset: no samples");
    criterion.validate();
    for (const auto& s : samples) s.validate();

    // condition -> aid label -> estimates
    std::map<TreatmentCondition, std::map<std::string, std::vector<double>>> groups;
    std::map<TreatmentCondition, std::vector<double>> arm_estimates;
    for (const auto& s : samples) {
        groups[s.condition][aid_label(s)].push_back(s.estimate);
        arm_estimates[s.condition].push_back(s.estimate);
    }

    DatasetAnalysis analysis;
    for (TreatmentCondition condition : kDisplayOrder) {
        const auto arm = groups.find(condition);
        if (arm == groups.end()) continue;
        for (const auto& [aid, values] : arm->second) {
            analysis.table.push_back(
                {condition, aid, summarize_crowd(std::span<const double>(values), criterion)});
        }
        // Aggregate row only when the arm has per-aid structure.
        if (condition != TreatmentCondition::Control) {
            analysis.table.push_back(
                {condition, std::string(kAllAidsLabel),
                 summarize_crowd(std::span<const double>(arm_estimates[condition]), criterion)});
        }

        const auto& aid_groups = arm->second;
        for (auto a = aid_groups.begin(); a != aid_groups.end(); ++a) {
            for (auto b = std::next(a); b != aid_groups.end(); ++b) {
                if (a->second.size() < 2 || b->second.size() < 2) continue;
                analysis.pairwise.push_back(
                    {condition, a->first, b->first,
                     welch_t(a->second, b->second, Alternative::TwoSided)});
            }
        }
    }

    const bool has_control = groups.count(TreatmentCondition::Control) > 0;
    const bool has_assigned = groups.count(TreatmentCondition::Assigned) > 0;
    if (!has_control || !has_assigned) {
        analysis.notices.push_back(
            "effects omitted: control and assigned arms are both required");
        return analysis;
    }

    const auto per_aid_for = [&](TreatmentCondition choice_condition) {
        std::map<std::string, GsePair> per_aid;
        for (const auto& [aid, assigned_values] : groups[TreatmentCondition::Assigned]) {
            const auto& choice_groups = groups[choice_condition];
            const auto it = choice_groups.find(aid);
            if (it == choice_groups.end()) continue;
            per_aid[aid] = {
                summarize_crowd(std::span<const double>(assigned_values), criterion).gse,
                summarize_crowd(std::span<const double>(it->second), criterion).gse};
        }
        return per_aid;
    };

    const auto effects_for = [&](TreatmentCondition choice_condition) {
        BootstrapConfig bootstrap;
        bootstrap.replications = options.bootstrap_replications;
        bootstrap.seed = derive_seed(options.seed, static_cast<std::uint64_t>(choice_condition));
        bootstrap.threads = options.threads;
        return effect_report_from_samples(
            arm_estimates[TreatmentCondition::Control], arm_estimates[TreatmentCondition::Assigned],
            arm_estimates[choice_condition], criterion, bootstrap, per_aid_for(choice_condition),
            options.simpson_min_aids_worse);
    };

    if (groups.count(TreatmentCondition::SingleChoice) > 0) {
        analysis.single_choice_effects = effects_for(TreatmentCondition::SingleChoice);
    } else {
        analysis.notices.push_back("single-choice effects omitted: arm not present");
    }
    if (groups.count(TreatmentCondition::MultipleChoice) > 0) {
        analysis.multiple_choice_effects = effects_for(TreatmentCondition::MultipleChoice);
    } else {
        analysis.notices.push_back("multiple-choice effects omitted: arm not present");
    }
    return analysis;
}

std::vector<NamedReallocation> bundled_reallocations() {
    std::vector<NamedReallocation> plans;

    {
        NamedReallocation named;
        named.experiment = Experiment::BeanJar;
        named.description = "44 scale choosers split evenly between equation and comparison";
        named.plan.lines = {{"scale", 44, 0, 311},
                            {"equation", 222, 244, 578},
                            {"comparison", 134, 156, 512}};
        named.plan.rounding_unit = 1.0;
        named.plan.gse_basis = SquaredErrorBasis::RoundedEstimate;
        plans.push_back(std::move(named));
    }
    {
        NamedReallocation named;
        named.experiment = Experiment::BeanJar;
        named.description = "all 44 scale choosers moved to comparison";
        named.plan.lines = {{"scale", 44, 0, 311},
                            {"equation", 222, 222, 578},
                            {"comparison", 134, 178, 512}};
        named.plan.rounding_unit = 1.0;
        // The published error for this move squares the unrounded estimate.
        named.plan.gse_basis = SquaredErrorBasis::ExactEstimate;
        plans.push_back(std::move(named));
    }
    {
        NamedReallocation named;
        named.experiment = Experiment::Cpi;
        named.description = "single-choice shares applied to the assigned-condition means";
        named.plan.lines = {{"fed_statement", 51, 51, 6.61},
                            {"pred_model", 163, 163, 8.13},
                            {"components", 76, 76, 11.25}};
        named.plan.rounding_unit = 0.01;
        named.plan.gse_basis = SquaredErrorBasis::RoundedEstimate;
        plans.push_back(std::move(named));
    }
    return plans;
}

namespace {

std::string condition_display(TreatmentCondition condition) {
    switch (condition) {
        case TreatmentCondition::Control: return "Control";
        case TreatmentCondition::Assigned: return "Assigned";
        case TreatmentCondition::SingleChoice: return "Single Choice";
        case TreatmentCondition::MultipleChoice: return "Multiple Choice";
    }
    return "?";
}

int mean_digits(Experiment experiment) { return experiment == Experiment::Cpi ? 2 : 0; }

void append_table(std::string& out, Experiment experiment,
                  std::span<const SummaryRow> rows) {
    out += "== ";
    out += (experiment == Experiment::Cpi ? "CPI experiment (criterion 6.8)"
                                          : "Bean jar experiment (criterion 488)");
    out += " ==\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %-14s %6s %10s %12s %12s\n", "condition", "aid", "n",
                  "mean", "GSE", "MSE");
    out += line;
    for (const auto& row : rows) {
        if (row.experiment != experiment) continue;
        std::snprintf(line, sizeof(line), "%-16s %-14s %6zu %10s %12s %12s\n",
                      condition_display(row.condition).c_str(), row.aid.c_str(), row.n,
                      format_fixed(row.mean, mean_digits(experiment) + 1).c_str(),
                      format_fixed(row.gse, 2).c_str(), format_fixed(row.mse, 2).c_str());
        out += line;
    }
    out += "\n";
}

const SummaryRow& find_row(std::span<const SummaryRow> rows, Experiment experiment,
                           TreatmentCondition condition, std::string_view aid) {
    for (const auto& row : rows) {
        if (row.experiment == experiment && row.condition == condition && row.aid == aid) {
            return row;
        }
    }
    throw std::runtime_error("bundled table row missing");
}

}  // namespace

ReplicationReport render_replication_report(RoundingMode rounding) {
    const std::vector<SummaryRow> rows = load_bundled_tables();
    ReplicationReport report;
    std::string& out = report.text;
    char line[240];

    out += "Two-stage crowd estimation: bundled-summary replication report\n";
    out += "===============================================================\n\n";
    append_table(out, Experiment::Cpi, rows);
    append_table(out, Experiment::BeanJar, rows);

    out += "-- Consistency: (mean - criterion)^2 vs printed GSE --\n";
    const auto checks = check_table_consistency(rows);
    for (const auto& check : checks) {
        if (!check.pass) ++report.consistency_failures;
        std::snprintf(line, sizeof(line), "%-9s %-16s %-14s computed %12.4f printed %12.4f "
                      "delta %9.4f (<= %g)  %s\n",
                      std::string(to_token(check.row.experiment)).c_str(),
                      condition_display(check.row.condition).c_str(), check.row.aid.c_str(),
                      check.computed_gse, check.printed_gse, check.delta, check.threshold,
                      check.pass ? "ok" : "FAIL");
        out += line;
    }
    std::snprintf(line, sizeof(line), "consistency failures: %zu of %zu rows\n\n",
                  report.consistency_failures, checks.size());
    out += line;

    out += "-- Recombination: count-weighted per-aid means vs printed aggregate --\n";
    for (const auto& rec : recombine_all_rows(rows)) {
        std::snprintf(line, sizeof(line),
                      "%-9s %-16s recombined %10.4f printed %10.4f delta %8.4f\n",
                      std::string(to_token(rec.experiment)).c_str(),
                      condition_display(rec.condition).c_str(), rec.recombined, rec.printed,
                      rec.delta);
        out += line;
    }
    out += "\n";

    out += "-- Information and choice effects (from the printed aggregate rows) --\n";
    for (const Experiment experiment : {Experiment::Cpi, Experiment::BeanJar}) {
        const int digits = experiment == Experiment::Cpi ? 2 : 0;
        const auto& control = find_row(rows, experiment, TreatmentCondition::Control, kNoAidLabel);
        const auto& assigned =
            find_row(rows, experiment, TreatmentCondition::Assigned, kAllAidsLabel);
        const auto& single =
            find_row(rows, experiment, TreatmentCondition::SingleChoice, kAllAidsLabel);
        const auto& multiple =
            find_row(rows, experiment, TreatmentCondition::MultipleChoice, kAllAidsLabel);

        const double ie = information_effect(control.gse, assigned.gse);
        const double ce_single = choice_effect(assigned.gse, single.gse);
        const double ce_multiple = choice_effect(assigned.gse, multiple.gse);
        std::snprintf(line, sizeof(line),
                      "%-9s IE = %s   CE(single) = %s   CE(multiple) = %s   metawise: %s/%s\n",
                      std::string(to_token(experiment)).c_str(), format_fixed(ie, digits).c_str(),
                      format_fixed(ce_single, digits).c_str(),
                      format_fixed(ce_multiple, digits).c_str(),
                      ce_single > 0 ? "yes" : "no", ce_multiple > 0 ? "yes" : "no");
        out += line;

        // Simpson check per choice condition from the per-aid rows.
        for (const auto choice_condition :
             {TreatmentCondition::SingleChoice, TreatmentCondition::MultipleChoice}) {
            std::map<std::string, GsePair> per_aid;
            for (const auto& row : rows) {
                if (row.experiment != experiment || row.condition != TreatmentCondition::Assigned ||
                    row.aid == kAllAidsLabel) {
                    continue;
                }
                const auto& choice_row = find_row(rows, experiment, choice_condition, row.aid);
                per_aid[row.aid] = {row.gse, choice_row.gse};
            }
            const auto& choice_all = find_row(rows, experiment, choice_condition, kAllAidsLabel);
            const bool simpson =
                detect_simpson(per_aid, {assigned.gse, choice_all.gse}, 2);
            std::snprintf(line, sizeof(line), "          Simpson pattern (%s): %s\n",
                          condition_display(choice_condition).c_str(), simpson ? "yes" : "no");
            out += line;
        }
    }
    out += "\n";

    out += "-- Welch tests from printed moments (variance = MSE - GSE) --\n";
    struct NamedPair {
        Experiment experiment;
        TreatmentCondition condition;
        std::string_view aid_a, aid_b;
    };
    const NamedPair pairs[] = {
        {Experiment::Cpi, TreatmentCondition::Assigned, "fed_statement", "pred_model"},
        {Experiment::Cpi, TreatmentCondition::Assigned, "fed_statement", "components"},
        {Experiment::Cpi, TreatmentCondition::Assigned, "pred_model", "components"},
        {Experiment::Cpi, TreatmentCondition::SingleChoice, "fed_statement", "pred_model"},
        {Experiment::Cpi, TreatmentCondition::SingleChoice, "pred_model", "components"},
        {Experiment::Cpi, TreatmentCondition::MultipleChoice, "pred_model", "components"},
        {Experiment::BeanJar, TreatmentCondition::Assigned, "scale", "equation"},
        {Experiment::BeanJar, TreatmentCondition::Assigned, "equation", "comparison"},
        {Experiment::BeanJar, TreatmentCondition::SingleChoice, "equation", "comparison"},
        {Experiment::BeanJar, TreatmentCondition::MultipleChoice, "equation", "comparison"},
    };
    for (const auto& pair : pairs) {
        const auto& a = find_row(rows, pair.experiment, pair.condition, pair.aid_a);
        const auto& b = find_row(rows, pair.experiment, pair.condition, pair.aid_b);
        const TestResult t = welch_t_from_summary(a.n, a.mean, a.mse - a.gse, b.n, b.mean,
                                                  b.mse - b.gse, Alternative::TwoSided);
        std::snprintf(line, sizeof(line),
                      "%-9s %-16s %-14s vs %-14s t = %8.3f  df = %7.1f  p(two-sided) = %.5f\n",
                      std::string(to_token(pair.experiment)).c_str(),
                      condition_display(pair.condition).c_str(), std::string(pair.aid_a).c_str(),
                      std::string(pair.aid_b).c_str(), t.statistic,
                      t.degrees_of_freedom.value_or(0.0), t.p_value);
        out += line;
    }
    out += "\n";

    out += "-- Choice vs assigned aggregate means (Welch, both sidednesses) --\n";
    for (const Experiment experiment : {Experiment::Cpi, Experiment::BeanJar}) {
        const auto& assigned =
            find_row(rows, experiment, TreatmentCondition::Assigned, kAllAidsLabel);
        for (const auto condition :
             {TreatmentCondition::SingleChoice, TreatmentCondition::MultipleChoice,
              TreatmentCondition::Control}) {
            const auto& row = find_row(rows, experiment, condition,
                                       condition == TreatmentCondition::Control ? kNoAidLabel
                                                                                : kAllAidsLabel);
            const TestResult two = welch_t_from_summary(
                row.n, row.mean, row.mse - row.gse, assigned.n, assigned.mean,
                assigned.mse - assigned.gse, Alternative::TwoSided);
            const TestResult less = welch_t_from_summary(
                row.n, row.mean, row.mse - row.gse, assigned.n, assigned.mean,
                assigned.mse - assigned.gse, Alternative::Less);
            std::snprintf(line, sizeof(line),
                          "%-9s %-16s vs Assigned: t = %8.3f  p(two-sided) = %.5f  "
                          "p(mean < assigned) = %.5f\n",
                          std::string(to_token(experiment)).c_str(),
                          condition_display(condition).c_str(), two.statistic, two.p_value,
                          less.p_value);
            out += line;
        }
    }
    out += "\n";

    out += "-- Counterfactual reallocations (";
    out += rounding == RoundingMode::PaperRounding ? "as-printed rounding" : "full precision";
    out += ") --\n";
    for (const auto& named : bundled_reallocations()) {
        const Criterion criterion = bundled_criterion(named.experiment);
        const ReallocationResult res =
            counterfactual_reallocation(named.plan, criterion, rounding);
        const int digits = named.experiment == Experiment::Cpi ? 2 : 0;
        std::snprintf(line, sizeof(line), "%-9s %-62s -> estimate %s, GSE %s\n",
                      std::string(to_token(named.experiment)).c_str(), named.description.c_str(),
                      format_fixed(res.crowd_estimate, digits).c_str(),
                      format_fixed(res.gse, digits == 0 ? 0 : 2).c_str());
        out += line;
    }

    // Machine-readable copy.
    report.csv = "experiment,condition,aid,n,mean,gse,mse\n";
    for (const auto& row : rows) {
        report.csv += std::string(to_token(row.experiment)) + "," +
                      std::string(to_token(row.condition)) + "," + row.aid + "," +
                      std::to_string(row.n) + "," + format_double(row.mean) + "," +
                      format_double(row.gse) + "," + format_double(row.mse) + "\n";
    }
    return report;
}

}  // namespace metawise
