#include "claro/cli/config.hpp"

#include <fstream>
#include <set>

#include "claro/error.hpp"

namespace claro::cli {
namespace {

void check_keys(const nlohmann::json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        throw ValidationError("config section '" + where + "' must be a JSON object");
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : j.items()) {
        if (ok.find(item.key()) == ok.end()) {
            throw ValidationError("unknown config key '" + item.key() + "' in " + where);
        }
    }
}

void expect_one_of(const std::string& value, const std::string& where,
                   std::initializer_list<const char*> allowed) {
    for (const char* a : allowed) {
        if (value == a) return;
    }
    std::string options;
    for (const char* a : allowed) {
        if (!options.empty()) options += ", ";
        options += std::string("'") + a + "'";
    }
    throw ValidationError(where + " must be one of " + options + ", got '" + value + "'");
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

SyntheticConfig synthetic_from_json(const nlohmann::json& j) {
    check_keys(j, "data.synthetic", {"rows", "effects"});
    SyntheticConfig c;
    read_field(j, "rows", c.rows);
    read_field(j, "effects", c.effects);
    expect_one_of(c.effects, "data.synthetic.effects", {"default", "null"});
    return c;
}

CsvConfig csv_from_json(const nlohmann::json& j) {
    check_keys(j, "data.csv", {"data", "schema"});
    CsvConfig c;
    read_field(j, "data", c.data);
    read_field(j, "schema", c.schema);
    return c;
}

DataConfig data_from_json(const nlohmann::json& j) {
    check_keys(j, "data", {"source", "synthetic", "csv"});
    DataConfig c;
    read_field(j, "source", c.source);
    expect_one_of(c.source, "data.source", {"synthetic", "csv"});
    if (j.contains("synthetic")) c.synthetic = synthetic_from_json(j.at("synthetic"));
    if (j.contains("csv")) c.csv = csv_from_json(j.at("csv"));
    return c;
}

SplitConfig split_from_json(const nlohmann::json& j) {
    check_keys(j, "split", {"test_fraction", "assessment_fraction"});
    SplitConfig c;
    read_field(j, "test_fraction", c.test_fraction);
    read_field(j, "assessment_fraction", c.assessment_fraction);
    return c;
}

GlmConfig glm_from_json(const nlohmann::json& j) {
    check_keys(j, "model.glm", {"link", "ridge"});
    GlmConfig c;
    read_field(j, "link", c.link);
    read_field(j, "ridge", c.ridge);
    expect_one_of(c.link, "model.glm.link", {"identity", "log"});
    return c;
}

TreeConfig tree_from_json(const nlohmann::json& j) {
    check_keys(j, "model.tree", {"max_depth", "min_leaf_size"});
    TreeConfig c;
    read_field(j, "max_depth", c.max_depth);
    read_field(j, "min_leaf_size", c.min_leaf_size);
    return c;
}

NnConfig nn_from_json(const nlohmann::json& j) {
    check_keys(j, "model.nn",
               {"learning_rate", "batch_size", "patience", "max_epochs", "hidden_width",
                "embed_threshold"});
    NnConfig c;
    read_field(j, "learning_rate", c.learning_rate);
    read_field(j, "batch_size", c.batch_size);
    read_field(j, "patience", c.patience);
    read_field(j, "max_epochs", c.max_epochs);
    read_field(j, "hidden_width", c.hidden_width);
    read_field(j, "embed_threshold", c.embed_threshold);
    return c;
}

ModelConfig model_from_json(const nlohmann::json& j) {
    check_keys(j, "model", {"type", "glm", "tree", "nn"});
    ModelConfig c;
    read_field(j, "type", c.type);
    expect_one_of(c.type, "model.type", {"glm", "tree", "nn"});
    if (j.contains("glm")) c.glm = glm_from_json(j.at("glm"));
    if (j.contains("tree")) c.tree = tree_from_json(j.at("tree"));
    if (j.contains("nn")) c.nn = nn_from_json(j.at("nn"));
    return c;
}

ImportanceConfig importance_from_json(const nlohmann::json& j) {
    check_keys(j, "explainers.importance", {"loss", "repetitions"});
    ImportanceConfig c;
    read_field(j, "loss", c.loss);
    read_field(j, "repetitions", c.repetitions);
    expect_one_of(c.loss, "explainers.importance.loss", {"mse", "rmse", "mae"});
    return c;
}

PdpConfig pdp_from_json(const nlohmann::json& j) {
    check_keys(j, "explainers.pdp", {"features", "points"});
    PdpConfig c;
    read_field(j, "features", c.features);
    read_field(j, "points", c.points);
    return c;
}

IceConfig ice_from_json(const nlohmann::json& j) {
    check_keys(j, "explainers.ice", {"features", "max_instances"});
    IceConfig c;
    read_field(j, "features", c.features);
    read_field(j, "max_instances", c.max_instances);
    return c;
}

AleConfig ale_from_json(const nlohmann::json& j) {
    check_keys(j, "explainers.ale", {"features", "bins"});
    AleConfig c;
    read_field(j, "features", c.features);
    read_field(j, "bins", c.bins);
    return c;
}

BreakdownConfig breakdown_from_json(const nlohmann::json& j) {
    check_keys(j, "explainers.breakdown", {"instance", "ordering", "background_rows"});
    BreakdownConfig c;
    read_field(j, "instance", c.instance);
    read_field(j, "ordering", c.ordering);
    read_field(j, "background_rows", c.background_rows);
    expect_one_of(c.ordering, "explainers.breakdown.ordering", {"schema", "greedy"});
    return c;
}

ShapConfig shap_from_json(const nlohmann::json& j) {
    check_keys(j, "explainers.shap",
               {"instance", "mode", "samples", "background_rows", "max_exact_features"});
    ShapConfig c;
    read_field(j, "instance", c.instance);
    read_field(j, "mode", c.mode);
    read_field(j, "samples", c.samples);
    read_field(j, "background_rows", c.background_rows);
    read_field(j, "max_exact_features", c.max_exact_features);
    expect_one_of(c.mode, "explainers.shap.mode", {"sampled", "exact"});
    return c;
}

ExplainersConfig explainers_from_json(const nlohmann::json& j) {
    check_keys(j, "explainers", {"importance", "pdp", "ice", "ale", "breakdown", "shap"});
    ExplainersConfig c;
    if (j.contains("importance")) c.importance = importance_from_json(j.at("importance"));
    if (j.contains("pdp")) c.pdp = pdp_from_json(j.at("pdp"));
    if (j.contains("ice")) c.ice = ice_from_json(j.at("ice"));
    if (j.contains("ale")) c.ale = ale_from_json(j.at("ale"));
    if (j.contains("breakdown")) c.breakdown = breakdown_from_json(j.at("breakdown"));
    if (j.contains("shap")) c.shap = shap_from_json(j.at("shap"));
    return c;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
    return nlohmann::json{
        {"seed", seed},
        {"output_dir", output_dir},
        {"data",
         {{"source", data.source},
          {"synthetic", {{"rows", data.synthetic.rows}, {"effects", data.synthetic.effects}}},
          {"csv", {{"data", data.csv.data}, {"schema", data.csv.schema}}}}},
        {"split",
         {{"test_fraction", split.test_fraction},
          {"assessment_fraction", split.assessment_fraction}}},
        {"model",
         {{"type", model.type},
          {"glm", {{"link", model.glm.link}, {"ridge", model.glm.ridge}}},
          {"tree",
           {{"max_depth", model.tree.max_depth}, {"min_leaf_size", model.tree.min_leaf_size}}},
          {"nn",
           {{"learning_rate", model.nn.learning_rate},
            {"batch_size", model.nn.batch_size},
            {"patience", model.nn.patience},
            {"max_epochs", model.nn.max_epochs},
            {"hidden_width", model.nn.hidden_width},
            {"embed_threshold", model.nn.embed_threshold}}}}},
        {"explainers",
         {{"importance",
           {{"loss", explainers.importance.loss},
            {"repetitions", explainers.importance.repetitions}}},
          {"pdp", {{"features", explainers.pdp.features}, {"points", explainers.pdp.points}}},
          {"ice",
           {{"features", explainers.ice.features},
            {"max_instances", explainers.ice.max_instances}}},
          {"ale", {{"features", explainers.ale.features}, {"bins", explainers.ale.bins}}},
          {"breakdown",
           {{"instance", explainers.breakdown.instance},
            {"ordering", explainers.breakdown.ordering},
            {"background_rows", explainers.breakdown.background_rows}}},
          {"shap",
           {{"instance", explainers.shap.instance},
            {"mode", explainers.shap.mode},
            {"samples", explainers.shap.samples},
            {"background_rows", explainers.shap.background_rows},
            {"max_exact_features", explainers.shap.max_exact_features}}}}}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    check_keys(j, "config", {"seed", "output_dir", "data", "split", "model", "explainers"});
    RunConfig c;
    read_field(j, "seed", c.seed);
    read_field(j, "output_dir", c.output_dir);
    if (j.contains("data")) c.data = data_from_json(j.at("data"));
    if (j.contains("split")) c.split = split_from_json(j.at("split"));
    if (j.contains("model")) c.model = model_from_json(j.at("model"));
    if (j.contains("explainers")) c.explainers = explainers_from_json(j.at("explainers"));
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open config file " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("cannot parse " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

}  // namespace claro::cli
