#include "claro/cli/run.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "claro/cli/config.hpp"
#include "claro/error.hpp"
#include "claro/explain/attribution.hpp"
#include "claro/explain/curves.hpp"
#include "claro/explain/importance.hpp"
#include "claro/models/glm.hpp"
#include "claro/models/nn.hpp"
#include "claro/models/serialize.hpp"
#include "claro/models/tree.hpp"
#include "claro/report/export.hpp"
#include "claro/report/plot.hpp"
#include "claro/rng.hpp"
#include "claro/tabular/csv.hpp"
#include "claro/tabular/dataset.hpp"
#include "claro/tabular/synthetic.hpp"

namespace claro::cli {
namespace {

namespace fs = std::filesystem;

/// Flags shared by the pipeline subcommands. --out and --model are plumbing
/// and deliberately not part of the echoed config, so the same config and
/// seed produce byte-identical bundles in different directories.
struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

struct ExplainFlags {
    std::string which;
    std::string model_path;
    std::vector<std::string> features;
    std::size_t instance = 0;
    bool instance_set = false;
    std::string ordering;
    bool exact = false;
    bool sampled = false;
    std::size_t samples = 0;
    bool samples_set = false;
};

void add_common_flags(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config_path,
                    "JSON run configuration; missing keys take the print-config defaults");
    sub->add_option("--out", flags.out_dir, "output directory (overrides config output_dir)");
    sub->add_option("--seed", flags.seed, "root seed (overrides config seed)");
}

RunConfig effective_config(const CommonFlags& flags) {
    RunConfig cfg =
        flags.config_path.empty() ? RunConfig{} : RunConfig::load(flags.config_path);
    if (flags.seed_set) cfg.seed = flags.seed;
    return cfg;
}

fs::path resolve_out_dir(const RunConfig& cfg, const CommonFlags& flags) {
    fs::path dir = flags.out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(flags.out_dir);
    fs::create_directories(dir);
    return dir;
}

tabular::Dataset load_data(const RunConfig& cfg) {
    if (cfg.data.source == "synthetic") {
        const auto effects = cfg.data.synthetic.effects == "null"
                                 ? tabular::SyntheticEffects::null_effects()
                                 : tabular::SyntheticEffects::defaults();
        return tabular::generate_synthetic(cfg.data.synthetic.rows, cfg.seed, effects).first;
    }
    if (cfg.data.csv.data.empty() || cfg.data.csv.schema.empty()) {
        throw ValidationError(
            "data.source is 'csv' but data.csv.data or data.csv.schema is not set");
    }
    const auto schema = tabular::load_schema(cfg.data.csv.schema);
    return tabular::read_csv(cfg.data.csv.data, schema);
}

tabular::SplitResult split_data(const RunConfig& cfg, const tabular::Dataset& ds) {
    tabular::SplitSpec spec;
    spec.test_fraction = cfg.split.test_fraction;
    spec.assessment_fraction = cfg.split.assessment_fraction;
    spec.seed = derive_seed(cfg.seed, "split");
    return tabular::split(ds, spec);
}

void write_json_file(const fs::path& path, const nlohmann::json& j, std::ostream& out) {
    report::write_text_file(path, j.dump(2) + "\n");
    out << "wrote " << path.string() << "\n";
}

void echo_config(const RunConfig& cfg, const fs::path& dir, std::ostream& out) {
    write_json_file(dir / "config.json", cfg.to_json(), out);
}

struct Trained {
    std::unique_ptr<models::Predictor> model;
    nlohmann::json log;
};

Trained train_model(const RunConfig& cfg, const tabular::SplitResult& parts) {
    Trained t;
    nlohmann::json epochs = nlohmann::json::array();
    int best_epoch = -1;
    bool stopped_early = false;
    if (cfg.model.type == "glm") {
        models::GlmSpec spec;
        spec.link = models::link_from_string(cfg.model.glm.link);
        spec.terms = models::main_effect_terms(parts.analysis.schema());
        models::GlmFitOptions opts;
        opts.ridge = cfg.model.glm.ridge;
        t.model = std::make_unique<models::GlmModel>(models::fit_glm(parts.analysis, spec, opts));
    } else if (cfg.model.type == "tree") {
        models::TreeFitOptions opts;
        opts.max_depth = cfg.model.tree.max_depth;
        opts.min_leaf_size = cfg.model.tree.min_leaf_size;
        t.model = std::make_unique<models::TreeModel>(models::fit_tree(parts.analysis, opts));
    } else {
        models::TrainConfig train;
        train.learning_rate = cfg.model.nn.learning_rate;
        train.batch_size = cfg.model.nn.batch_size;
        train.early_stopping_patience = cfg.model.nn.patience;
        train.max_epochs = cfg.model.nn.max_epochs;
        train.seed = cfg.seed;
        models::NnArchitecture arch;
        arch.hidden_width = cfg.model.nn.hidden_width;
        arch.embed_threshold = cfg.model.nn.embed_threshold;
        auto fit = models::fit_nn(parts.analysis, parts.assessment, train, arch);
        for (std::size_t e = 0; e < fit.epochs.size(); ++e) {
            epochs.push_back({{"epoch", e},
                              {"analysis_loss", fit.epochs[e].train_loss},
                              {"assessment_loss", fit.epochs[e].assessment_loss}});
        }
        best_epoch = fit.best_epoch;
        stopped_early = fit.stopped_early;
        t.model = std::make_unique<models::NnModel>(std::move(fit.model));
    }
    // Losses of the saved model, so the log describes the artifact on disk
    // rather than a transient training state.
    const auto loss_on = [&](const tabular::Dataset& ds) {
        return models::weighted_loss(t.model->predict(ds), ds.response(), ds.weights(),
                                     models::LossKind::Mse);
    };
    t.log = nlohmann::json{{"format", "claro-training-log"},
                           {"version", 1},
                           {"model_type", cfg.model.type},
                           {"epochs", epochs},
                           {"best_epoch", best_epoch},
                           {"stopped_early", stopped_early},
                           {"final_analysis_loss", loss_on(parts.analysis)},
                           {"final_assessment_loss", loss_on(parts.assessment)}};
    return t;
}

/// Resolves an explainer's feature list: explicit names are validated
/// against the schema, an empty list means every applicable feature.
std::vector<std::string> select_features(const tabular::Schema& schema,
                                         const std::vector<std::string>& named,
                                         bool numeric_only) {
    if (!named.empty()) {
        for (const auto& name : named) schema.require_feature(name);
        return named;
    }
    std::vector<std::string> out;
    for (std::size_t j = 0; j < schema.feature_count(); ++j) {
        const auto& feature = schema.feature(j);
        if (numeric_only && !feature.kind.is_numeric()) continue;
        out.push_back(feature.name);
    }
    return out;
}

/// Writes <stem>.json, <stem>.csv and <svg_stem>.svg for one artifact. The
/// SVG stem only differs for break-down, whose figure is the waterfall.
template <typename Artifact>
void write_artifact(const Artifact& artifact, const fs::path& dir, const std::string& stem,
                    const report::PlotSpec& spec, std::ostream& out,
                    const std::string& svg_stem = "") {
    report::export_artifact(artifact, report::ExportFormat::Json, dir / (stem + ".json"));
    report::export_artifact(artifact, report::ExportFormat::Csv, dir / (stem + ".csv"));
    out << "wrote " << (dir / (stem + ".json")).string() << "\n";
    out << "wrote " << (dir / (stem + ".csv")).string() << "\n";
    const fs::path svg = dir / ((svg_stem.empty() ? stem : svg_stem) + ".svg");
    report::write_text_file(svg, report::render(artifact, spec));
    out << "wrote " << svg.string() << "\n";
}

void run_importance(const RunConfig& cfg, const models::Predictor& model,
                    const tabular::Dataset& eval, const fs::path& dir, std::ostream& out) {
    const auto report = explain::permutation_importance(
        model, eval, models::loss_kind_from_string(cfg.explainers.importance.loss),
        cfg.explainers.importance.repetitions, cfg.seed);
    auto spec = report::default_plot_spec(report::PlotKind::ImportanceBars);
    spec.title = "permutation importance";
    write_artifact(report, dir, "importance", spec, out);
}

void run_pdp(const RunConfig& cfg, const models::Predictor& model, const tabular::Dataset& eval,
             const fs::path& dir, std::ostream& out) {
    explain::GridSpec grid;
    grid.points = cfg.explainers.pdp.points;
    for (const auto& name :
         select_features(model.schema(), cfg.explainers.pdp.features, false)) {
        const auto curve = explain::pdp(model, eval, model.schema().require_feature(name), grid);
        auto spec = report::default_plot_spec(report::PlotKind::PdpWithHistogram);
        spec.x_label = name;
        spec.title = "partial dependence of " + name;
        write_artifact(curve, dir, "pdp_" + name, spec, out);
    }
}

void run_ice(const RunConfig& cfg, const models::Predictor& model, const tabular::Dataset& eval,
             const fs::path& dir, std::ostream& out) {
    std::vector<std::size_t> instances;
    const std::size_t cap = cfg.explainers.ice.max_instances;
    if (cap > 0 && cap < eval.n_rows()) {
        instances.resize(cap);
        for (std::size_t i = 0; i < cap; ++i) instances[i] = i;
    }
    for (const auto& name : select_features(model.schema(), cfg.explainers.ice.features, true)) {
        const auto curve =
            explain::ice(model, eval, model.schema().require_feature(name), {}, instances);
        auto spec = report::default_plot_spec(report::PlotKind::IceSpaghetti);
        spec.x_label = name;
        spec.title = "individual conditional expectations of " + name;
        write_artifact(curve, dir, "ice_" + name, spec, out);
    }
}

void run_ale(const RunConfig& cfg, const models::Predictor& model, const tabular::Dataset& eval,
             const fs::path& dir, std::ostream& out) {
    for (const auto& name : select_features(model.schema(), cfg.explainers.ale.features, true)) {
        const auto curve = explain::ale(model, eval, model.schema().require_feature(name),
                                        cfg.explainers.ale.bins);
        auto spec = report::default_plot_spec(report::PlotKind::AleLine);
        spec.x_label = name;
        spec.title = "accumulated local effects of " + name;
        write_artifact(curve, dir, "ale_" + name, spec, out);
    }
}

tabular::Dataset pick_instance(const tabular::Dataset& eval, std::size_t index) {
    if (index >= eval.n_rows()) {
        throw ValidationError("instance index " + std::to_string(index) +
                              " is out of range: the evaluation split has " +
                              std::to_string(eval.n_rows()) + " rows");
    }
    const std::size_t rows[] = {index};
    return eval.select_rows(rows);
}

void run_breakdown(const RunConfig& cfg, const models::Predictor& model,
                   const tabular::Dataset& eval, const fs::path& dir, std::ostream& out) {
    const auto& bd = cfg.explainers.breakdown;
    const auto instance = pick_instance(eval, bd.instance);
    const auto bg = explain::BackgroundSet::sample(eval, bd.background_rows, cfg.seed);
    std::vector<std::size_t> ordering;
    if (bd.ordering == "greedy") {
        ordering = explain::greedy_ordering(model, bg, instance);
    } else {
        ordering.resize(model.schema().feature_count());
        for (std::size_t j = 0; j < ordering.size(); ++j) ordering[j] = j;
    }
    const auto attribution = explain::break_down(model, bg, instance, ordering);
    auto spec = report::default_plot_spec(report::PlotKind::Waterfall);
    spec.title = "prediction break-down for instance " + std::to_string(bd.instance);
    write_artifact(attribution, dir, "breakdown_instance" + std::to_string(bd.instance), spec,
                   out, "waterfall_instance" + std::to_string(bd.instance));
}

void run_shap(const RunConfig& cfg, const models::Predictor& model,
              const tabular::Dataset& eval, const fs::path& dir, std::ostream& out) {
    const auto& shap = cfg.explainers.shap;
    const auto instance = pick_instance(eval, shap.instance);
    const auto bg = explain::BackgroundSet::sample(eval, shap.background_rows, cfg.seed);
    const auto attribution =
        shap.mode == "exact"
            ? explain::shapley_exact(model, bg, instance, shap.max_exact_features)
            : explain::shapley_sampled(model, bg, instance, shap.samples, cfg.seed);
    auto spec = report::default_plot_spec(report::PlotKind::Waterfall);
    spec.title = "Shapley attributions for instance " + std::to_string(shap.instance);
    write_artifact(attribution, dir, "shap_instance" + std::to_string(shap.instance), spec, out);
}

int cmd_train(const CommonFlags& flags, std::ostream& out) {
    const RunConfig cfg = effective_config(flags);
    const fs::path dir = resolve_out_dir(cfg, flags);
    const auto data = load_data(cfg);
    const auto parts = split_data(cfg, data);
    const auto trained = train_model(cfg, parts);
    models::save_model(*trained.model, dir / "model.json");
    out << "wrote " << (dir / "model.json").string() << "\n";
    write_json_file(dir / "training_log.json", trained.log, out);
    echo_config(cfg, dir, out);
    return 0;
}

void apply_explain_overrides(RunConfig& cfg, const ExplainFlags& flags) {
    if (!flags.features.empty()) {
        cfg.explainers.pdp.features = flags.features;
        cfg.explainers.ice.features = flags.features;
        cfg.explainers.ale.features = flags.features;
    }
    if (flags.instance_set) {
        cfg.explainers.breakdown.instance = flags.instance;
        cfg.explainers.shap.instance = flags.instance;
    }
    if (!flags.ordering.empty()) {
        if (flags.ordering != "schema" && flags.ordering != "greedy") {
            throw ValidationError("--ordering must be 'schema' or 'greedy', got '" +
                                  flags.ordering + "'");
        }
        cfg.explainers.breakdown.ordering = flags.ordering;
    }
    if (flags.exact && flags.sampled) {
        throw ValidationError("--exact and --sampled are mutually exclusive");
    }
    if (flags.exact) cfg.explainers.shap.mode = "exact";
    if (flags.sampled) cfg.explainers.shap.mode = "sampled";
    if (flags.samples_set) cfg.explainers.shap.samples = flags.samples;
}

int cmd_explain(const CommonFlags& flags, const ExplainFlags& explain_flags, std::ostream& out) {
    const std::string& which = explain_flags.which;
    if (which != "importance" && which != "pdp" && which != "ice" && which != "ale" &&
        which != "breakdown" && which != "shap") {
        throw ValidationError("unknown explainer '" + which +
                              "': expected importance, pdp, ice, ale, breakdown or shap");
    }
    RunConfig cfg = effective_config(flags);
    apply_explain_overrides(cfg, explain_flags);
    const fs::path dir = resolve_out_dir(cfg, flags);
    const fs::path model_path = explain_flags.model_path.empty()
                                    ? dir / "model.json"
                                    : fs::path(explain_flags.model_path);
    const auto model = models::load_model(model_path);
    const auto data = load_data(cfg);
    if (!model->schema().features_equal(data.schema())) {
        throw ValidationError("model file " + model_path.string() +
                              " does not match the configured data: feature schemas differ");
    }
    const auto parts = split_data(cfg, data);
    const auto& eval = parts.test;

    if (which == "importance") {
        run_importance(cfg, *model, eval, dir, out);
    } else if (which == "pdp") {
        run_pdp(cfg, *model, eval, dir, out);
    } else if (which == "ice") {
        run_ice(cfg, *model, eval, dir, out);
    } else if (which == "ale") {
        run_ale(cfg, *model, eval, dir, out);
    } else if (which == "breakdown") {
        run_breakdown(cfg, *model, eval, dir, out);
    } else {
        run_shap(cfg, *model, eval, dir, out);
    }
    echo_config(cfg, dir, out);
    return 0;
}

int cmd_casestudy(const CommonFlags& flags, std::ostream& out) {
    const RunConfig cfg = effective_config(flags);
    const fs::path dir = resolve_out_dir(cfg, flags);
    const auto data = load_data(cfg);
    const auto parts = split_data(cfg, data);
    const auto trained = train_model(cfg, parts);
    models::save_model(*trained.model, dir / "model.json");
    out << "wrote " << (dir / "model.json").string() << "\n";
    write_json_file(dir / "training_log.json", trained.log, out);

    const auto& eval = parts.test;
    run_importance(cfg, *trained.model, eval, dir, out);
    run_pdp(cfg, *trained.model, eval, dir, out);
    run_ice(cfg, *trained.model, eval, dir, out);
    run_ale(cfg, *trained.model, eval, dir, out);
    run_breakdown(cfg, *trained.model, eval, dir, out);
    run_shap(cfg, *trained.model, eval, dir, out);
    echo_config(cfg, dir, out);
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"claro: train tabular pricing models and explain their predictions"};
    app.require_subcommand(1);

    CommonFlags train_flags;
    CLI::App* train = app.add_subcommand("train", "fit a model and write model.json plus a training log");
    add_common_flags(train, train_flags);

    CommonFlags explain_common;
    ExplainFlags explain_flags;
    CLI::App* explain = app.add_subcommand("explain", "run one explainer against a trained model");
    add_common_flags(explain, explain_common);
    explain->add_option("--which", explain_flags.which,
                        "explainer: importance, pdp, ice, ale, breakdown or shap")
        ->required();
    explain->add_option("--model", explain_flags.model_path,
                        "model file (default: <out>/model.json)");
    explain->add_option("--feature", explain_flags.features,
                        "restrict pdp/ice/ale to these features (repeatable)");
    CLI::Option* instance_opt = explain->add_option("--instance", explain_flags.instance,
                                                    "evaluation-split row for breakdown/shap");
    explain->add_option("--ordering", explain_flags.ordering,
                        "breakdown ordering: schema or greedy");
    explain->add_flag("--exact", explain_flags.exact, "shap: exact Shapley values");
    explain->add_flag("--sampled", explain_flags.sampled, "shap: Monte-Carlo Shapley values");
    CLI::Option* samples_opt =
        explain->add_option("--samples", explain_flags.samples, "shap: sampled orderings");

    CommonFlags case_flags;
    CLI::App* casestudy = app.add_subcommand(
        "casestudy", "full pipeline: data, split, training and every explainer");
    add_common_flags(casestudy, case_flags);

    CLI::App* print_config =
        app.add_subcommand("print-config", "print the full default configuration as JSON");

    std::vector<const char*> argv;
    argv.push_back("claro");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        const auto seed_used = [](CLI::App* sub) {
            return sub->count("--seed") > 0;
        };
        train_flags.seed_set = seed_used(train);
        explain_common.seed_set = seed_used(explain);
        case_flags.seed_set = seed_used(casestudy);
        explain_flags.instance_set = instance_opt->count() > 0;
        explain_flags.samples_set = samples_opt->count() > 0;

        if (app.got_subcommand(train)) return cmd_train(train_flags, out);
        if (app.got_subcommand(explain)) return cmd_explain(explain_common, explain_flags, out);
        if (app.got_subcommand(casestudy)) return cmd_casestudy(case_flags, out);
        if (app.got_subcommand(print_config)) {
            out << RunConfig{}.to_json().dump(2) << "\n";
            return 0;
        }
        err << "error: no subcommand selected\n";
        return 1;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace claro::cli
