#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace claro::cli {

/// Run configuration: a JSON file with full defaulting, so an empty object
/// is a valid config and `print-config` shows every effective value. Keys
/// outside the documented set are rejected rather than silently ignored.
struct SyntheticConfig {
    std::size_t rows = 10000;
    std::string effects = "default";  // "default" | "null"
};

struct CsvConfig {
    std::string data;    // CSV file
    std::string schema;  // schema JSON file
};

struct DataConfig {
    std::string source = "synthetic";  // "synthetic" | "csv"
    SyntheticConfig synthetic;
    CsvConfig csv;
};

struct SplitConfig {
    double test_fraction = 0.2;
    double assessment_fraction = 0.25;
};

struct GlmConfig {
    std::string link = "identity";
    double ridge = 0.0;
};

struct TreeConfig {
    int max_depth = 4;
    std::size_t min_leaf_size = 1;
};

struct NnConfig {
    double learning_rate = 0.1;
    std::size_t batch_size = 10000;
    int patience = 5;
    int max_epochs = 100;
    std::size_t hidden_width = 64;
    std::size_t embed_threshold = 6;
};

struct ModelConfig {
    std::string type = "nn";  // "glm" | "tree" | "nn"
    GlmConfig glm;
    TreeConfig tree;
    NnConfig nn;
};

struct ImportanceConfig {
    std::string loss = "mse";
    std::size_t repetitions = 5;
};

/// Feature lists default to "every applicable feature" when empty.
struct PdpConfig {
    std::vector<std::string> features;
    std::size_t points = 21;
};

struct IceConfig {
    std::vector<std::string> features;
    /// Cap on profiled instances (leading rows of the evaluation split);
    /// 0 profiles every row.
    std::size_t max_instances = 100;
};

struct AleConfig {
    std::vector<std::string> features;  // numeric only
    std::size_t bins = 10;
};

struct BreakdownConfig {
    std::size_t instance = 0;            // row of the evaluation split
    std::string ordering = "schema";     // "schema" | "greedy"
    std::size_t background_rows = 1000;  // seeded cap on the background set
};

struct ShapConfig {
    std::size_t instance = 0;
    std::string mode = "sampled";  // "sampled" | "exact"
    std::size_t samples = 1000;
    std::size_t background_rows = 1000;
    std::size_t max_exact_features = 8;
};

struct ExplainersConfig {
    ImportanceConfig importance;
    PdpConfig pdp;
    IceConfig ice;
    AleConfig ale;
    BreakdownConfig breakdown;
    ShapConfig shap;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    DataConfig data;
    SplitConfig split;
    ModelConfig model;
    ExplainersConfig explainers;

    nlohmann::json to_json() const;
    /// Defaults every absent field; throws ValidationError on unknown keys
    /// or out-of-vocabulary values.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
};

}  // namespace claro::cli
