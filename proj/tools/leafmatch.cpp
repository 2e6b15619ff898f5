// leafmatch command-line driver: extract, fit, match, evaluate, synth.

#include "leafmatch/eval_harness.hpp"
#include "leafmatch/log.hpp"
#include "leafmatch/persistence.hpp"
#include "leafmatch/pipeline.hpp"
#include "leafmatch/synth_leaf.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>

namespace fs = std::filesystem;
using namespace leafmatch;

namespace {

constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Files named directly plus every file under a named directory ending in `suffix`.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& args, const std::string& suffix)
{
    std::vector<fs::path> out;
    for (const auto& a : args) {
        const fs::path p(a);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(p)) {
                const std::string name = entry.path().filename().string();
                if (entry.is_regular_file() && name.size() >= suffix.size()
                    && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
                    found.push_back(entry.path());
                }
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else if (fs::exists(p)) {
            out.push_back(p);
        } else {
            throw Error("no such file or directory: " + a);
        }
    }
    return out;
}

/// Flags that override fields of a config loaded from file.  Each flag writes to a
/// scratch copy; after parsing, only flags given on the command line are applied.
template <typename Config>
class Overrides {
public:
    template <typename T>
    void add(CLI::App* app, const std::string& flag, T Config::*field, const std::string& help)
    {
        add_path<T>(app, flag, [field](Config& c) -> T& { return c.*field; }, help);
    }

    template <typename T>
    void add_path(CLI::App* app, const std::string& flag, std::function<T&(Config&)> access, const std::string& help)
    {
        CLI::Option* opt = app->add_option(flag, access(scratch_), help)->capture_default_str();
        appliers_.emplace_back(opt, [access](Config& dst, Config& src) { access(dst) = access(src); });
    }

    void apply(Config& dst)
    {
        for (auto& [opt, fn] : appliers_) {
            if (opt->count() > 0) {
                fn(dst, scratch_);
            }
        }
    }

private:
    Config scratch_;
    std::vector<std::pair<CLI::Option*, std::function<void(Config&, Config&)>>> appliers_;
};

void add_pipeline_flags(CLI::App* app, Overrides<PipelineConfig>& o, bool extraction)
{
    if (extraction) {
        o.add(app, "--l-max", &PipelineConfig::l_max, "Longest 3D triangle edge kept in the leaf mesh, mm");
        o.add_path<double>(app, "--presmooth-radius", [](PipelineConfig& c) -> double& { return c.presmooth.radius; },
                           "Neighbourhood radius of the height pre-smoothing, mm");
        o.add_path<double>(app, "--presmooth-factor", [](PipelineConfig& c) -> double& { return c.presmooth.factor; },
                           "Pre-smoothing step factor");
        o.add_path<int>(app, "--presmooth-iters", [](PipelineConfig& c) -> int& { return c.presmooth.iterations; },
                        "Pre-smoothing iterations");
        o.add_path<double>(app, "--postsmooth-factor",
                           [](PipelineConfig& c) -> double& { return c.postsmooth.factor; },
                           "Mesh smoothing step factor");
        o.add_path<int>(app, "--postsmooth-iters", [](PipelineConfig& c) -> int& { return c.postsmooth.iterations; },
                        "Mesh smoothing iterations");
        o.add(app, "--max-hole-edges", &PipelineConfig::max_hole_edges, "Largest hole (in edges) that gets filled");
        o.add(app, "-n,--points", &PipelineConfig::n_points, "Points per resampled outline");
        o.add(app, "--min-cluster", &PipelineConfig::min_cluster, "Smallest leaf cluster processed, points");
    }
    o.add(app, "--threads", &PipelineConfig::threads, "Worker threads, 0 = all cores");
}

PipelineConfig load_pipeline_config(const std::string& file, Overrides<PipelineConfig>& overrides)
{
    PipelineConfig config;
    if (!file.empty()) {
        config = pipeline_config_from_json(read_text_file(file));
    }
    overrides.apply(config);
    config.validate();
    return config;
}

std::vector<ScanExtraction> load_outline_files(const std::vector<std::string>& inputs)
{
    const auto files = expand_inputs(inputs, ".outlines.json");
    if (files.empty()) {
        throw UsageError("no outline files given");
    }
    std::vector<ScanExtraction> out;
    for (const auto& f : files) {
        out.push_back(load_outlines(f));
    }
    return out;
}

std::string outline_file_name(const OutlineSet& set)
{
    fs::path name = scan_file_name(set.plant_id, set.time_index);
    return name.replace_extension(".outlines.json").string();
}

int cmd_extract(const std::vector<std::string>& inputs, const fs::path& out_dir, const PipelineConfig& config,
                const std::optional<std::vector<double>>& emergence)
{
    if (inputs.empty()) {
        throw UsageError("no input scans given");
    }
    const auto files = expand_inputs(inputs, ".txt");
    if (files.empty()) {
        throw UsageError("no scan files found in the given inputs");
    }
    PipelineConfig cfg = config;
    if (emergence) {
        cfg.emergence = Vec3((*emergence)[0], (*emergence)[1], (*emergence)[2]);
    }
    ExtractionSummary summary;
    for (const auto& f : files) {
        const LabeledScan scan = parse_scan(f, cfg.labels);
        const ScanExtraction x = extract_scan(scan, cfg);
        summary.add(x);
        save_outlines(out_dir / outline_file_name(x.set), x);
        log::info("{}: {} of {} leaves extracted", f.string(), x.set.outlines.size(), x.attempted());
    }
    write_text_file(out_dir / "extraction_log.json", summary_to_json(summary));
    std::cout << "extracted " << summary.extracted << " of " << summary.attempted << " leaves from " << summary.scans
              << " scans (yield " << 100.0 * summary.yield() << "%)\n";
    for (const auto& [reason, count] : summary.excluded) {
        std::cout << "  " << exclusion_name(reason) << ": " << count << "\n";
    }
    if (summary.misaligned > 0) {
        std::cout << "  kept but flagged axis_misaligned: " << summary.misaligned << "\n";
    }
    return 0;
}

int cmd_fit(const std::vector<std::string>& inputs, const std::vector<std::string>& plants, int d,
            const fs::path& out)
{
    const std::set<std::string> keep(plants.begin(), plants.end());
    std::vector<TrainingOutline> training;
    for (const auto& x : load_outline_files(inputs)) {
        if (!keep.empty() && keep.count(x.set.plant_id) == 0) {
            continue;
        }
        for (const auto& o : x.set.outlines) {
            training.push_back({o, x.set.emergence});
        }
    }
    if (d > static_cast<int>(training.size()) - 1) {
        throw DataError("d = " + std::to_string(d) + " needs at least " + std::to_string(d + 1)
                        + " training outlines, found " + std::to_string(training.size()));
    }
    const ShapeModel model = fit_shape_model(training, d);
    if (const auto problem = check_model_invariants(model)) {
        throw DataError("fitted model violates an invariant: " + *problem);
    }
    save_model(out, model);
    std::cout << "fitted " << model.dims() << " components on " << model.outline_count << " outlines from "
              << model.plant_ids.size() << " plants -> " << out.string() << "\n";
    return 0;
}

int cmd_match(const fs::path& before, const fs::path& after, const fs::path& model_path, const std::string& features,
              const fs::path& out, const std::string& csv)
{
    const ShapeModel model = load_model(model_path);
    const FeatureConfig config = FeatureConfig::parse(features);
    const ScanExtraction b = load_outlines(before);
    const ScanExtraction a = load_outlines(after);
    if (b.set.plant_id != a.set.plant_id) {
        log::warn("matching scans of different plants: {} and {}", b.set.plant_id, a.set.plant_id);
    }
    const MatchResult result = match_scans(b.set, a.set, model, config);
    save_match(out, result);
    if (!csv.empty()) {
        write_text_file(csv, cost_matrix_csv(result.costs));
    }
    for (const auto& p : result.pairs) {
        std::cout << p.before_leaf << " -> " << p.after_leaf << "  cost " << p.cost << "\n";
    }
    std::cout << "total cost " << result.total_cost << "\n";
    return 0;
}

int cmd_evaluate(const std::vector<std::string>& inputs, const fs::path& model_path,
                 const std::vector<std::string>& tables, const std::vector<std::string>& features, int bins,
                 const fs::path& out_dir)
{
    const ShapeModel model = load_model(model_path);
    std::map<std::string, PlantSequence> by_plant;
    for (auto& x : load_outline_files(inputs)) {
        by_plant[x.set.plant_id].push_back(std::move(x.set));
    }
    std::vector<PlantSequence> sequences;
    for (auto& [plant, seq] : by_plant) {
        sequences.push_back(std::move(seq));
    }

    std::vector<std::pair<std::string, std::vector<FeatureConfig>>> runs;
    for (const auto& t : tables) {
        if (t == "ablation") {
            runs.emplace_back(t, ablation_configs());
        } else if (t == "comparison") {
            runs.emplace_back(t, comparison_configs());
        } else {
            throw UsageError("unknown table '" + t + "' (expected ablation or comparison)");
        }
    }
    if (!features.empty()) {
        std::vector<FeatureConfig> custom;
        for (const auto& f : features) {
            custom.push_back(FeatureConfig::parse(f));
        }
        runs.emplace_back("custom", custom);
    }
    if (runs.empty()) {
        throw UsageError("nothing to evaluate: no tables and no feature sets");
    }

    for (const auto& [name, configs] : runs) {
        const TableReport report = run_table(sequences, configs, model, bins);
        write_text_file(out_dir / (name + ".json"), report_to_json(report));
        write_text_file(out_dir / (name + ".csv"), report_csv(report));
        std::cout << name << "\n";
        for (const auto& row : report.rows) {
            std::cout << "  " << row.config.name() << ": sensitivity "
                      << (row.sensitivity ? std::to_string(*row.sensitivity) : "n/a") << ", eta "
                      << (row.eta ? std::to_string(*row.eta) : "n/a") << "\n";
        }
    }
    return 0;
}

int cmd_synth(const synth::SynthConfig& config, const fs::path& out_dir)
{
    const synth::SynthSequence seq = synth::generate_sequence(config);
    fs::create_directories(out_dir);
    for (const auto& scan : seq.scans) {
        write_scan(out_dir / scan_file_name(scan.plant_id, scan.time_index), scan);
    }
    write_text_file(out_dir / "correspondence.json", correspondences_to_json(seq.correspondences));
    write_text_file(out_dir / "truth.json", synth_truth_to_json(seq));
    std::cout << "wrote " << seq.scans.size() << " scans of " << seq.plants.size() << " plants to "
              << out_dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    log::init_from_env();

    CLI::App app{"Leaf re-identification across time-series plant scans.\n"
                 "Set LEAFMATCH_LOG=debug|info|warn|error to change log verbosity."};
    app.require_subcommand(1);

    // extract
    auto* extract = app.add_subcommand("extract", "Extract normalised leaf outlines from labelled scans");
    std::vector<std::string> extract_inputs;
    std::string extract_out = "outlines";
    std::string extract_config;
    std::optional<std::vector<double>> emergence;
    Overrides<PipelineConfig> extract_overrides;
    extract->add_option("scans", extract_inputs, "Scan files (x y z label per line) or directories of *.txt");
    extract->add_option("-o,--out", extract_out, "Output directory")->capture_default_str();
    extract->add_option("-c,--config", extract_config, "JSON pipeline config; flags override it");
    extract->add_option("--emergence", emergence, "Fixed emergence point x y z, mm (default: estimated per scan)")
        ->expected(3);
    add_pipeline_flags(extract, extract_overrides, true);

    // fit
    auto* fit = app.add_subcommand("fit", "Fit the shape model on training outlines");
    std::vector<std::string> fit_inputs;
    std::vector<std::string> fit_plants;
    std::string fit_out = "model.json";
    std::string fit_config;
    std::optional<int> fit_dims;
    fit->add_option("outlines", fit_inputs, "Outline files or directories of *.outlines.json")->required();
    fit->add_option("--plants", fit_plants, "Only use these plant ids");
    fit->add_option("-d,--dims", fit_dims, "Number of principal components [default: 23]");
    fit->add_option("-c,--config", fit_config, "JSON pipeline config (reads d)");
    fit->add_option("-o,--out", fit_out, "Model file")->capture_default_str();

    // match
    auto* match = app.add_subcommand("match", "Match the leaves of two scans of one plant");
    std::string before, after, model_path, match_out = "match.json", csv;
    std::string features = "shape+location+rotation";
    match->add_option("--before", before, "Outline file of the earlier scan")->required();
    match->add_option("--after", after, "Outline file of the later scan")->required();
    match->add_option("-m,--model", model_path, "Shape model file")->required();
    match->add_option("-f,--features", features, "Feature set, e.g. shape+location+rotation")->capture_default_str();
    match->add_option("-o,--out", match_out, "Match result file")->capture_default_str();
    match->add_option("--csv", csv, "Also write the cost matrix as CSV");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Score matchings of test sequences against instance labels");
    std::vector<std::string> eval_inputs;
    std::string eval_model, eval_out = "report", eval_config;
    std::vector<std::string> tables{"ablation", "comparison"};
    std::vector<std::string> eval_features;
    std::optional<int> bins;
    evaluate->add_option("outlines", eval_inputs, "Outline files or directories of *.outlines.json")->required();
    evaluate->add_option("-m,--model", eval_model, "Shape model file")->required();
    evaluate->add_option("--tables", tables, "Config sets to run: ablation, comparison")->capture_default_str();
    evaluate->add_option("-f,--features", eval_features, "Extra feature sets, reported as 'custom'");
    evaluate->add_option("--bins", bins, "Histogram bins of the overlapping index [default: 50]");
    evaluate->add_option("-c,--config", eval_config, "JSON pipeline config (reads bins)");
    evaluate->add_option("-o,--out", eval_out, "Report directory")->capture_default_str();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic labelled scan sequences");
    std::string synth_out = "synth", synth_config_file;
    Overrides<synth::SynthConfig> so;
    synth_cmd->add_option("-o,--out", synth_out, "Output directory")->capture_default_str();
    synth_cmd->add_option("-c,--config", synth_config_file, "JSON synth config; flags override it");
    so.add(synth_cmd, "--seed", &synth::SynthConfig::seed, "Random seed");
    so.add(synth_cmd, "--plants", &synth::SynthConfig::plants, "Number of plants");
    so.add(synth_cmd, "--steps", &synth::SynthConfig::steps, "Scans per plant");
    so.add(synth_cmd, "--leaves", &synth::SynthConfig::leaves_per_plant, "Leaves per plant at the first scan");
    so.add(synth_cmd, "--growth", &synth::SynthConfig::growth, "Uniform scale factor per step");
    so.add(synth_cmd, "--growth-jitter", &synth::SynthConfig::growth_jitter, "Per-leaf spread of the log growth factor");
    so.add(synth_cmd, "--curvature-growth", &synth::SynthConfig::curvature_growth,
           "Relative curvature increase per step");
    so.add(synth_cmd, "--noise", &synth::SynthConfig::noise_mm, "Bending noise amplitude, mm");
    so.add(synth_cmd, "--rigid", &synth::SynthConfig::rigid_deg, "Attitude perturbation per step, degrees");
    so.add(synth_cmd, "--plant-yaw", &synth::SynthConfig::plant_yaw_deg, "Whole-plant turn about the stem per scan, degrees");
    so.add(synth_cmd, "--birth", &synth::SynthConfig::birth_prob, "Probability of a new leaf per step");
    so.add(synth_cmd, "--death", &synth::SynthConfig::death_prob, "Probability that a leaf disappears per step");
    so.add(synth_cmd, "--density", &synth::SynthConfig::density, "Points per mm^2 of blade");
    so.add(synth_cmd, "--figure-eight", &synth::SynthConfig::figure_eight_rate, "Rate of pinched outlines");
    so.add(synth_cmd, "--undersized", &synth::SynthConfig::undersized_rate, "Rate of undersized clusters");
    so.add(synth_cmd, "--inverted-axis", &synth::SynthConfig::inverted_axis_rate, "Rate of drooping leaves");
    so.add(synth_cmd, "--prefix", &synth::SynthConfig::plant_prefix, "Plant id prefix");
    so.add(synth_cmd, "--first-plant", &synth::SynthConfig::first_plant_index, "Index of the first plant");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*extract) {
            const PipelineConfig config = load_pipeline_config(extract_config, extract_overrides);
            return cmd_extract(extract_inputs, extract_out, config, emergence);
        }
        if (*fit) {
            PipelineConfig config;
            if (!fit_config.empty()) {
                config = pipeline_config_from_json(read_text_file(fit_config));
            }
            return cmd_fit(fit_inputs, fit_plants, fit_dims.value_or(config.dims), fit_out);
        }
        if (*match) {
            return cmd_match(before, after, model_path, features, match_out, csv);
        }
        if (*evaluate) {
            PipelineConfig config;
            if (!eval_config.empty()) {
                config = pipeline_config_from_json(read_text_file(eval_config));
            }
            return cmd_evaluate(eval_inputs, eval_model, tables, eval_features, bins.value_or(config.bins), eval_out);
        }
        if (*synth_cmd) {
            synth::SynthConfig config;
            if (!synth_config_file.empty()) {
                config = synth_config_from_json(read_text_file(synth_config_file));
            }
            so.apply(config);
            return cmd_synth(config, synth_out);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
