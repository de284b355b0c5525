#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace claro::tabular {

/// Column type: numeric, or categorical with an ordered list of levels.
/// Categorical values are stored as indices into that list, so the level
/// order is part of the schema identity (stable one-hot/embedding slots).
class ColumnKind {
public:
    static ColumnKind numeric() { return ColumnKind{}; }
    static ColumnKind categorical(std::vector<std::string> levels);

    bool is_numeric() const { return levels_.empty(); }
    bool is_categorical() const { return !levels_.empty(); }

    /// Level list; empty for numeric columns.
    const std::vector<std::string>& levels() const { return levels_; }

    std::optional<std::int32_t> level_index(std::string_view level) const;

    bool operator==(const ColumnKind& other) const { return levels_ == other.levels_; }

private:
    ColumnKind() = default;
    std::vector<std::string> levels_;
};

struct FeatureSpec {
    std::string name;
    ColumnKind kind;
};

/// Feature layout plus the names of the response and optional weight column.
class Schema {
public:
    Schema(std::vector<FeatureSpec> features, std::string response,
           std::optional<std::string> weight = std::nullopt);

    std::size_t feature_count() const { return features_.size(); }
    const std::vector<FeatureSpec>& features() const { return features_; }
    const FeatureSpec& feature(std::size_t j) const;
    std::optional<std::size_t> feature_index(std::string_view name) const;

    /// Feature index by name; throws ValidationError when absent.
    std::size_t require_feature(std::string_view name) const;

    const std::string& response() const { return response_; }
    const std::optional<std::string>& weight() const { return weight_; }

    /// True when both schemas declare the same features in the same order
    /// (names, kinds and level lists). Response/weight names may differ.
    bool features_equal(const Schema& other) const;

    nlohmann::json to_json() const;
    static Schema from_json(const nlohmann::json& j);

private:
    std::vector<FeatureSpec> features_;
    std::string response_;
    std::optional<std::string> weight_;
};

}  // namespace claro::tabular
