#include "claro/tabular/schema.hpp"

#include <algorithm>
#include <unordered_set>

#include "claro/error.hpp"

namespace claro::tabular {

ColumnKind ColumnKind::categorical(std::vector<std::string> levels) {
    if (levels.empty()) throw ValidationError("categorical column needs at least one level");
    std::unordered_set<std::string_view> seen;
    for (const auto& level : levels) {
        if (level.empty()) throw ValidationError("categorical level names must be non-empty");
        if (!seen.insert(level).second)
            throw ValidationError("duplicate categorical level '" + level + "'");
    }
    ColumnKind kind;
    kind.levels_ = std::move(levels);
    return kind;
}

std::optional<std::int32_t> ColumnKind::level_index(std::string_view level) const {
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (levels_[i] == level) return static_cast<std::int32_t>(i);
    }
    return std::nullopt;
}

Schema::Schema(std::vector<FeatureSpec> features, std::string response,
               std::optional<std::string> weight)
    : features_(std::move(features)), response_(std::move(response)), weight_(std::move(weight)) {
    if (features_.empty()) throw ValidationError("schema needs at least one feature");
    if (response_.empty()) throw ValidationError("schema needs a response column name");
    std::unordered_set<std::string_view> names;
    for (const auto& f : features_) {
        if (f.name.empty()) throw ValidationError("feature names must be non-empty");
        if (!names.insert(f.name).second)
            throw ValidationError("duplicate feature name '" + f.name + "'");
    }
    if (names.count(response_))
        throw ValidationError("response '" + response_ + "' clashes with a feature name");
    if (weight_) {
        if (names.count(*weight_) || *weight_ == response_)
            throw ValidationError("weight '" + *weight_ + "' clashes with another column name");
    }
}

const FeatureSpec& Schema::feature(std::size_t j) const {
    if (j >= features_.size()) throw ValidationError("feature index out of range");
    return features_[j];
}

std::optional<std::size_t> Schema::feature_index(std::string_view name) const {
    for (std::size_t j = 0; j < features_.size(); ++j) {
        if (features_[j].name == name) return j;
    }
    return std::nullopt;
}

std::size_t Schema::require_feature(std::string_view name) const {
    if (auto j = feature_index(name)) return *j;
    throw ValidationError("unknown feature '" + std::string(name) + "'");
}

bool Schema::features_equal(const Schema& other) const {
    if (features_.size() != other.features_.size()) return false;
    for (std::size_t j = 0; j < features_.size(); ++j) {
        if (features_[j].name != other.features_[j].name) return false;
        if (!(features_[j].kind == other.features_[j].kind)) return false;
    }
    return true;
}

nlohmann::json Schema::to_json() const {
    nlohmann::json features = nlohmann::json::array();
    for (const auto& f : features_) {
        nlohmann::json jf{{"name", f.name}};
        if (f.kind.is_numeric()) {
            jf["kind"] = "numeric";
        } else {
            jf["kind"] = "categorical";
            jf["levels"] = f.kind.levels();
        }
        features.push_back(std::move(jf));
    }
    nlohmann::json j{{"features", std::move(features)}, {"response", response_}};
    if (weight_) j["weight"] = *weight_;
    return j;
}

Schema Schema::from_json(const nlohmann::json& j) {
    try {
        std::vector<FeatureSpec> features;
        for (const auto& jf : j.at("features")) {
            const auto name = jf.at("name").get<std::string>();
            const auto kind = jf.at("kind").get<std::string>();
            if (kind == "numeric") {
                features.push_back({name, ColumnKind::numeric()});
            } else if (kind == "categorical") {
                features.push_back(
                    {name, ColumnKind::categorical(jf.at("levels").get<std::vector<std::string>>())});
            } else {
                throw ValidationError("unknown column kind '" + kind + "'");
            }
        }
        std::optional<std::string> weight;
        if (j.contains("weight") && !j["weight"].is_null())
            weight = j["weight"].get<std::string>();
        return Schema(std::move(features), j.at("response").get<std::string>(), std::move(weight));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed schema json: ") + e.what());
    }
}

}  // namespace claro::tabular
