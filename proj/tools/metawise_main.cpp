// metawise: simulate two-stage aid-choice experiments, analyze estimate
// datasets, replicate the bundled summary tables and counterfactuals, fit
// optimal crowd weights, and emit density figures.
//
// Exit codes: 0 success, 1 validation/input error, 2 internal error.
// Every artifact-producing command writes a manifest.json (tool version,
// seed, config digest) next to its outputs, and all file writes go through
// write-then-rename so failures leave no partial outputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "metawise/core.hpp"
#include "metawise/effects.hpp"
#include "metawise/format.hpp"
#include "metawise/numeric.hpp"
#include "metawise/replicate.hpp"
#include "metawise/sim.hpp"
#include "metawise/stats.hpp"
#include "metawise/svg.hpp"
#include "metawise/weights.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kToolVersion = "0.1.0";

void write_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path temp = path.string() + ".partial";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + temp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + temp.string());
    }
    fs::rename(temp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::uint64_t entropy_seed() {
    std::random_device device;
    return (static_cast<std::uint64_t>(device()) << 32) ^ device();
}

json criterion_to_json(const metawise::Criterion& c) {
    return json{{"true_value", c.true_value}, {"mean", c.mean}, {"variance", c.variance}};
}

metawise::Criterion criterion_from_json(const json& j) {
    if (j.is_number()) return metawise::Criterion::fixed(j.get<double>());
    metawise::Criterion c;
    c.true_value = j.at("true_value").get<double>();
    c.mean = j.value("mean", c.true_value);
    c.variance = j.value("variance", 0.0);
    return c;
}

metawise::ExperimentConfig config_from_json(const json& j) {
    metawise::ExperimentConfig config;
    config.task_id = j.value("task_id", std::string("task"));
    config.criterion = criterion_from_json(j.at("criterion"));
    config.catalog.aids = j.at("catalog").get<std::vector<std::string>>();

    const json& population = j.at("population");
    config.population.n = population.value("n", std::size_t{1});
    config.population.bias_mean = population.value("bias_mean", 0.0);
    config.population.bias_sd = population.value("bias_sd", 0.0);
    config.population.noise_sd_min = population.at("noise_sd_min").get<double>();
    config.population.noise_sd_max = population.at("noise_sd_max").get<double>();

    for (const auto& [aid, spec] : j.at("aid_effects").items()) {
        metawise::AidEffect effect;
        effect.mean_shift = spec.value("mean_shift", 0.0);
        effect.sd_multiplier = spec.value("sd_multiplier", 1.0);
        effect.anchor_weight = spec.value("anchor_weight", 0.0);
        config.aid_effects[aid] = effect;
    }

    const json& choice = j.at("choice");
    for (const auto& [aid, share] : choice.at("base_shares").items()) {
        config.choice.base_shares[aid] = share.get<double>();
    }
    config.choice.matching_coefficient = choice.value("matching_coefficient", 0.0);
    if (choice.contains("view_count_probabilities")) {
        const auto probs = choice.at("view_count_probabilities").get<std::vector<double>>();
        if (probs.size() != 3) {
            throw std::invalid_argument(
                "choice.view_count_probabilities must have exactly 3 entries");
        }
        std::copy(probs.begin(), probs.end(), config.choice.view_count_probabilities.begin());
    }
    config.choice.last_aid_rule = choice.value("last_aid_rule", true);

    const json& arms = j.at("arm_sizes");
    config.arm_sizes.control = arms.at("control").get<std::size_t>();
    config.arm_sizes.assigned = arms.at("assigned").get<std::size_t>();
    config.arm_sizes.single_choice = arms.at("single_choice").get<std::size_t>();
    config.arm_sizes.multiple_choice = arms.at("multiple_choice").get<std::size_t>();

    config.seed = j.value("seed", std::uint64_t{0});
    config.carryover = j.value("carryover", 0.0);
    config.clip_negative_estimates = j.value("clip_negative_estimates", false);
    return config;
}

json config_to_json(const metawise::ExperimentConfig& config) {
    json aid_effects = json::object();
    for (const auto& [aid, effect] : config.aid_effects) {
        aid_effects[aid] = {{"mean_shift", effect.mean_shift},
                            {"sd_multiplier", effect.sd_multiplier},
                            {"anchor_weight", effect.anchor_weight}};
    }
    json base_shares = json::object();
    for (const auto& [aid, share] : config.choice.base_shares) base_shares[aid] = share;
    return json{
        {"task_id", config.task_id},
        {"criterion", criterion_to_json(config.criterion)},
        {"catalog", config.catalog.aids},
        {"population",
         {{"n", config.population.n},
          {"bias_mean", config.population.bias_mean},
          {"bias_sd", config.population.bias_sd},
          {"noise_sd_min", config.population.noise_sd_min},
          {"noise_sd_max", config.population.noise_sd_max}}},
        {"aid_effects", aid_effects},
        {"choice",
         {{"base_shares", base_shares},
          {"matching_coefficient", config.choice.matching_coefficient},
          {"view_count_probabilities", config.choice.view_count_probabilities},
          {"last_aid_rule", config.choice.last_aid_rule}}},
        {"arm_sizes",
         {{"control", config.arm_sizes.control},
          {"assigned", config.arm_sizes.assigned},
          {"single_choice", config.arm_sizes.single_choice},
          {"multiple_choice", config.arm_sizes.multiple_choice}}},
        {"seed", config.seed},
        {"carryover", config.carryover},
        {"clip_negative_estimates", config.clip_negative_estimates},
    };
}

std::string config_digest(const json& config) {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(metawise::fnv1a64(config.dump())));
    return hex;
}

void write_manifest_at(const fs::path& manifest_path, std::string_view command,
                       std::uint64_t seed, const json& parameters,
                       const std::vector<std::string>& outputs) {
    json manifest{
        {"tool", "metawise"},
        {"version", kToolVersion},
        {"command", std::string(command)},
        {"seed", seed},
        {"config_digest", config_digest(parameters)},
        {"parameters", parameters},
        {"outputs", outputs},
    };
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");
}

void write_manifest(const fs::path& out_dir, std::string_view command, std::uint64_t seed,
                    const json& parameters, const std::vector<std::string>& outputs) {
    write_manifest_at(out_dir / "manifest.json", command, seed, parameters, outputs);
}

metawise::RoundingMode parse_rounding(const std::string& token) {
    if (token == "full") return metawise::RoundingMode::FullPrecision;
    if (token == "paper") return metawise::RoundingMode::PaperRounding;
    throw std::invalid_argument("--rounding must be 'full' or 'paper'");
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& config_path, const std::string& manifest_path,
                 const std::string& out_dir, std::optional<std::uint64_t> seed_flag,
                 unsigned threads) {
    json config_json;
    if (!manifest_path.empty()) {
        const json manifest = json::parse(read_file(manifest_path));
        config_json = manifest.at("parameters");
        if (!seed_flag) seed_flag = manifest.at("seed").get<std::uint64_t>();
    } else {
        config_json = json::parse(read_file(config_path));
    }

    metawise::ExperimentConfig config = config_from_json(config_json);
    if (seed_flag) {
        config.seed = *seed_flag;
    } else if (!config_json.contains("seed")) {
        config.seed = entropy_seed();
    }
    config.validate();

    const std::vector<metawise::EstimateSample> samples =
        metawise::run_experiment(config, threads);

    const fs::path out(out_dir);
    fs::create_directories(out);
    write_file_atomic(out / "dataset.csv", metawise::emit_csv(samples));
    write_manifest(out, "simulate", config.seed, config_to_json(config), {"dataset.csv"});

    std::cout << "wrote " << (out / "dataset.csv").string() << " (" << samples.size()
              << " samples, seed " << config.seed << ")\n";
    return 0;
}

// ----------------------------------------------------------------- analyze

std::string render_analysis_text(const metawise::DatasetAnalysis& analysis,
                                 const metawise::Criterion& criterion) {
    std::string out;
    char line[200];
    out += "Dataset analysis (criterion " + metawise::format_double(criterion.true_value) +
           ")\n\n";
    std::snprintf(line, sizeof(line), "%-16s %-14s %6s %12s %12s %12s %12s\n", "condition", "aid",
                  "n", "mean", "GSE", "MSE", "variance");
    out += line;
    for (const auto& row : analysis.table) {
        std::snprintf(line, sizeof(line), "%-16s %-14s %6zu %12.4f %12.4f %12.4f %12.4f\n",
                      std::string(metawise::to_token(row.condition)).c_str(), row.aid.c_str(),
                      row.stats.n, row.stats.mean, row.stats.gse, row.stats.mse,
                      row.stats.variance);
        out += line;
    }
    out += "\npairwise Welch tests (two-sided):\n";
    for (const auto& test : analysis.pairwise) {
        std::snprintf(line, sizeof(line), "%-16s %-14s vs %-14s t = %8.3f  p = %.5f\n",
                      std::string(metawise::to_token(test.condition)).c_str(), test.aid_a.c_str(),
                      test.aid_b.c_str(), test.two_sided.statistic, test.two_sided.p_value);
        out += line;
    }

    const auto append_effects = [&](const char* label,
                                    const std::optional<metawise::EffectReport>& report) {
        if (!report) return;
        out += "\n";
        out += label;
        out += ":\n";
        std::snprintf(line, sizeof(line),
                      "  GSE control = %.4f  GSE assigned = %.4f  GSE choice = %.4f\n",
                      report->gse_control, report->gse_random, report->gse_choice);
        out += line;
        std::snprintf(line, sizeof(line),
                      "  information effect = %.4f  choice effect = %.4f  metawise: %s\n",
                      report->information_effect, report->choice_effect,
                      report->metawise ? "yes" : "no");
        out += line;
        if (!report->per_aid.empty()) {
            std::snprintf(line, sizeof(line), "  Simpson pattern: %s\n",
                          report->simpson_flag ? "yes" : "no");
            out += line;
        }
        if (report->ce_ci_low) {
            std::snprintf(line, sizeof(line),
                          "  bootstrap 95%% CI: IE [%.4f, %.4f]  CE [%.4f, %.4f]\n",
                          *report->ie_ci_low, *report->ie_ci_high, *report->ce_ci_low,
                          *report->ce_ci_high);
            out += line;
        }
    };
    append_effects("single choice effects", analysis.single_choice_effects);
    append_effects("multiple choice effects", analysis.multiple_choice_effects);

    for (const auto& notice : analysis.notices) out += "\nnote: " + notice + "\n";
    return out;
}

int cmd_analyze(const std::string& input, double criterion_value, const std::string& out_dir,
                std::size_t bootstrap, std::uint64_t seed, unsigned threads) {
    const auto samples = metawise::ingest_csv(fs::path(input));
    const metawise::Criterion criterion = metawise::Criterion::fixed(criterion_value);

    metawise::AnalysisOptions options;
    options.bootstrap_replications = bootstrap;
    options.seed = seed;
    options.threads = threads;
    const metawise::DatasetAnalysis analysis =
        metawise::analyze_dataset(samples, criterion, options);

    const std::string text = render_analysis_text(analysis, criterion);

    std::string csv = "condition,aid,n,mean,gse,mse,variance\n";
    for (const auto& row : analysis.table) {
        csv += std::string(metawise::to_token(row.condition)) + "," + row.aid + "," +
               std::to_string(row.stats.n) + "," + metawise::format_double(row.stats.mean) + "," +
               metawise::format_double(row.stats.gse) + "," +
               metawise::format_double(row.stats.mse) + "," +
               metawise::format_double(row.stats.variance) + "\n";
    }

    if (!out_dir.empty()) {
        const fs::path out(out_dir);
        write_file_atomic(out / "analysis.txt", text);
        write_file_atomic(out / "summary.csv", csv);
        write_manifest(out, "analyze", seed,
                       json{{"input", input},
                            {"criterion", criterion_value},
                            {"bootstrap", bootstrap}},
                       {"analysis.txt", "summary.csv"});
    }
    std::cout << text;
    return 0;
}

// --------------------------------------------------------------- replicate

int cmd_replicate(const std::string& out_dir, const std::string& rounding_token) {
    const metawise::RoundingMode rounding = parse_rounding(rounding_token);
    const metawise::ReplicationReport report = metawise::render_replication_report(rounding);

    if (!out_dir.empty()) {
        const fs::path out(out_dir);
        write_file_atomic(out / "replication.txt", report.text);
        write_file_atomic(out / "tables.csv", report.csv);
        write_manifest(out, "replicate", 0, json{{"rounding", rounding_token}},
                       {"replication.txt", "tables.csv"});
    }
    std::cout << report.text;
    return report.consistency_failures == 0 ? 0 : 1;
}

int cmd_counterfactual(const std::string& rounding_token) {
    const metawise::RoundingMode rounding = parse_rounding(rounding_token);
    for (const auto& named : metawise::bundled_reallocations()) {
        const metawise::Criterion criterion = metawise::bundled_criterion(named.experiment);
        const auto result = metawise::counterfactual_reallocation(named.plan, criterion, rounding);
        const int digits = named.experiment == metawise::Experiment::Cpi ? 2 : 0;
        std::cout << metawise::to_token(named.experiment) << ": " << named.description
                  << " -> estimate " << metawise::format_fixed(result.crowd_estimate, digits)
                  << ", GSE " << metawise::format_fixed(result.gse, digits == 0 ? 0 : 2) << "\n";
    }
    return 0;
}

// --------------------------------------------------------------------- kde

int cmd_kde(const std::string& input, const std::string& out_file, const std::string& group_by,
            std::optional<double> criterion_value, bool mean_centered,
            std::optional<double> bandwidth, std::size_t grid_points,
            const std::string& task_filter) {
    const auto samples = metawise::ingest_csv(fs::path(input));

    std::map<std::string, std::vector<double>> grouped;
    for (const auto& s : samples) {
        if (!task_filter.empty() && s.task_id != task_filter) continue;
        std::string key;
        if (group_by == "condition") {
            key = std::string(metawise::to_token(s.condition));
        } else if (group_by == "final_aid") {
            key = s.final_aid ? *s.final_aid : std::string(metawise::kNoAidLabel);
        } else if (group_by == "condition_aid") {
            key = std::string(metawise::to_token(s.condition)) + "/" +
                  (s.final_aid ? *s.final_aid : std::string(metawise::kNoAidLabel));
        } else {
            throw std::invalid_argument(
                "--group-by must be condition, final_aid, or condition_aid");
        }
        grouped[key].push_back(s.estimate);
    }
    if (grouped.empty()) throw std::invalid_argument("no samples matched the grouping/filter");

    std::vector<metawise::DensityPlotGroup> groups;
    for (const auto& [label, values] : grouped) {
        if (values.size() < 2) {
            throw std::invalid_argument("group '" + label +
                                        "' has fewer than 2 observations; cannot estimate a density");
        }
        metawise::DensityPlotGroup group;
        group.label = label;
        group.curve = metawise::kde(values, bandwidth, grid_points, mean_centered);
        // In centered coordinates the group mean sits at 0 by construction.
        double mean = 0.0;
        if (!mean_centered) {
            metawise::CompensatedSum sum;
            for (double v : values) sum.add(v);
            mean = sum.value() / static_cast<double>(values.size());
        }
        group.group_mean = mean;
        groups.push_back(std::move(group));
    }

    metawise::DensityPlotOptions options;
    if (criterion_value && !mean_centered) options.criterion_line = *criterion_value;
    options.title = mean_centered ? "Mean-centered estimate densities" : "Estimate densities";
    const fs::path out_path(out_file);
    write_file_atomic(out_path, metawise::render_density_plot(groups, options));

    json parameters{{"input", input},
                    {"group_by", group_by},
                    {"mean_centered", mean_centered},
                    {"grid_points", grid_points},
                    {"task_filter", task_filter}};
    if (criterion_value) parameters["criterion"] = *criterion_value;
    if (bandwidth) parameters["bandwidth"] = *bandwidth;
    write_manifest(out_path.has_parent_path() ? out_path.parent_path() : fs::path("."), "kde", 0,
                   parameters, {out_path.filename().string()});

    std::cout << "wrote " << out_file << " (" << groups.size() << " groups)\n";
    return 0;
}

// ----------------------------------------------------------------- weights

int cmd_weights(const std::string& input, const std::string& out_dir, double tolerance) {
    const json j = json::parse(read_file(input));
    metawise::MomentModel model;
    const auto means = j.at("means").get<std::vector<double>>();
    model.means = Eigen::Map<const Eigen::VectorXd>(means.data(),
                                                    static_cast<Eigen::Index>(means.size()));
    const auto covariance = j.at("covariance").get<std::vector<std::vector<double>>>();
    model.covariance.resize(static_cast<Eigen::Index>(covariance.size()),
                            static_cast<Eigen::Index>(covariance.size()));
    for (std::size_t r = 0; r < covariance.size(); ++r) {
        if (covariance[r].size() != covariance.size()) {
            throw std::invalid_argument("covariance must be square");
        }
        for (std::size_t c = 0; c < covariance[r].size(); ++c) {
            model.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                covariance[r][c];
        }
    }
    model.criterion_mean = j.value("criterion_mean", 0.0);
    model.criterion_variance = j.value("criterion_variance", 0.0);
    model.validate();

    const double min_eigenvalue = metawise::min_covariance_eigenvalue(model);
    if (min_eigenvalue < -1e-10) {
        throw std::invalid_argument("covariance is not positive semidefinite (eigenvalue " +
                                    metawise::format_double(min_eigenvalue) + ")");
    }

    const metawise::WeightsSolution solution = metawise::optimal_weights(model, tolerance);
    const metawise::CrowdWeights uniform = metawise::CrowdWeights::uniform(model.size());
    const double uniform_objective = metawise::expected_crowd_sq_error(uniform, model);

    std::string text = "Optimal crowd weights\n";
    text += "  weights:";
    for (double w : solution.weights.values) text += " " + metawise::format_fixed(w, 6);
    text += "\n  objective (expected crowd squared error): " +
            metawise::format_double(solution.objective) + "\n";
    text += "  uniform-weight objective:                  " +
            metawise::format_double(uniform_objective) + "\n";
    text += "  improvement over uniform:                  " +
            metawise::format_double(uniform_objective - solution.objective) + "\n";
    text += "  converged: " + std::string(solution.converged ? "yes" : "no") + " (" +
            std::to_string(solution.iterations) + " iterations, KKT residual " +
            metawise::format_double(solution.kkt_residual) + ")\n";

    if (!out_dir.empty()) {
        const fs::path out(out_dir);
        write_file_atomic(out / "weights.txt", text);
        json weights_json{{"weights", solution.weights.values},
                          {"objective", solution.objective},
                          {"uniform_objective", uniform_objective},
                          {"converged", solution.converged}};
        write_file_atomic(out / "weights.json", weights_json.dump(2) + "\n");
        write_manifest(out, "weights", 0, json{{"input", input}, {"tolerance", tolerance}},
                       {"weights.txt", "weights.json"});
    }
    std::cout << text;
    return solution.converged ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage crowd estimation toolkit: simulation, analysis, replication, "
                 "optimal weights, and figures"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run the four-arm experiment simulator");
    std::string sim_config;
    std::string sim_manifest;
    std::string sim_out = "out";
    std::uint64_t sim_seed = 0;
    bool sim_seed_set = false;
    unsigned sim_threads = 1;
    simulate->add_option("--config", sim_config, "Experiment config JSON");
    simulate->add_option("--from-manifest", sim_manifest,
                         "Reproduce a previous run from its manifest.json");
    simulate->add_option("--out", sim_out, "Output directory")->required();
    simulate->add_option("--seed", sim_seed, "64-bit seed (overrides config)")
        ->each([&](const std::string&) { sim_seed_set = true; });
    simulate->add_option("--threads", sim_threads, "Worker threads (output is identical)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Summaries, tests, and effects for a dataset");
    std::string an_input;
    double an_criterion = 0.0;
    std::string an_out;
    std::size_t an_bootstrap = 0;
    std::uint64_t an_seed = 0;
    unsigned an_threads = 1;
    analyze->add_option("--input", an_input, "EstimateSample CSV")->required();
    analyze->add_option("--criterion", an_criterion, "Criterion value")->required();
    analyze->add_option("--out", an_out, "Output directory (optional)");
    analyze->add_option("--bootstrap", an_bootstrap,
                        "Bootstrap replications for effect CIs (>= 100)");
    analyze->add_option("--seed", an_seed, "Bootstrap seed");
    analyze->add_option("--threads", an_threads, "Worker threads");

    // replicate
    auto* replicate = app.add_subcommand(
        "replicate", "Reproduce the bundled summary tables, effects, and counterfactuals");
    std::string rep_out;
    std::string rep_rounding = "paper";
    replicate->add_option("--out", rep_out, "Output directory (optional)");
    replicate->add_option("--rounding", rep_rounding, "full or paper");

    // counterfactual
    auto* counterfactual =
        app.add_subcommand("counterfactual", "Print the bundled chooser-reallocation results");
    std::string cf_rounding = "paper";
    counterfactual->add_option("--rounding", cf_rounding, "full or paper");

    // kde
    auto* kde_cmd = app.add_subcommand("kde", "Emit an SVG of per-group estimate densities");
    std::string kde_input;
    std::string kde_out = "density.svg";
    std::string kde_group_by = "final_aid";
    double kde_criterion = 0.0;
    bool kde_criterion_set = false;
    bool kde_centered = false;
    double kde_bandwidth = 0.0;
    bool kde_bandwidth_set = false;
    std::size_t kde_grid = 512;
    std::string kde_task;
    kde_cmd->add_option("--input", kde_input, "EstimateSample CSV")->required();
    kde_cmd->add_option("--out", kde_out, "Output SVG path");
    kde_cmd->add_option("--group-by", kde_group_by, "condition, final_aid, or condition_aid");
    kde_cmd->add_option("--criterion", kde_criterion, "Criterion value (drawn as a line)")
        ->each([&](const std::string&) { kde_criterion_set = true; });
    kde_cmd->add_flag("--mean-centered", kde_centered, "Center each group at its mean");
    kde_cmd->add_option("--bandwidth", kde_bandwidth, "Fixed bandwidth (default: Silverman)")
        ->each([&](const std::string&) { kde_bandwidth_set = true; });
    kde_cmd->add_option("--grid", kde_grid, "Grid points per curve");
    kde_cmd->add_option("--task", kde_task, "Only include samples with this task id");

    // weights
    auto* weights = app.add_subcommand("weights", "Optimal aggregation weights from moments");
    std::string w_input;
    std::string w_out;
    double w_tolerance = 1e-10;
    weights->add_option("--input", w_input, "Moment model JSON")->required();
    weights->add_option("--out", w_out, "Output directory (optional)");
    weights->add_option("--tolerance", w_tolerance, "KKT residual tolerance");

    try {
        app.parse(argc, argv);

        if (simulate->parsed()) {
            if (sim_config.empty() && sim_manifest.empty()) {
                throw std::invalid_argument("simulate needs --config or --from-manifest");
            }
            return cmd_simulate(sim_config, sim_manifest, sim_out,
                                sim_seed_set ? std::optional(sim_seed) : std::nullopt,
                                sim_threads);
        }
        if (analyze->parsed()) {
            return cmd_analyze(an_input, an_criterion, an_out, an_bootstrap, an_seed, an_threads);
        }
        if (replicate->parsed()) return cmd_replicate(rep_out, rep_rounding);
        if (counterfactual->parsed()) return cmd_counterfactual(cf_rounding);
        if (kde_cmd->parsed()) {
            return cmd_kde(kde_input, kde_out, kde_group_by,
                           kde_criterion_set ? std::optional(kde_criterion) : std::nullopt,
                           kde_centered,
                           kde_bandwidth_set ? std::optional(kde_bandwidth) : std::nullopt,
                           kde_grid, kde_task);
        }
        if (weights->parsed()) return cmd_weights(w_input, w_out, w_tolerance);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const metawise::CsvError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
