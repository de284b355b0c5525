#include "claro/tabular/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "claro/error.hpp"
#include "claro/rng.hpp"

namespace claro::tabular {

namespace {

const std::vector<std::string>& age_range_levels() {
    static const std::vector<std::string> v{"18-25", "26-35", "36-45", "46-60", "60+"};
    return v;
}
const std::vector<std::string>& sex_levels() {
    static const std::vector<std::string> v{"female", "male"};
    return v;
}
const std::vector<std::string>& vehicle_category_levels() {
    static const std::vector<std::string> v{"compact", "sedan", "suv", "pickup"};
    return v;
}
const std::vector<std::string>& make_levels() {
    static const std::vector<std::string> v{"fiat", "vw", "gm", "ford",
                                            "toyota", "honda", "renault", "peugeot"};
    return v;
}
const std::vector<std::string>& region_levels() {
    static const std::vector<std::string> v{"north", "northeast", "central", "southeast",
                                            "south", "east", "west", "capital"};
    return v;
}

constexpr double kMaxVehicleAge = 20.0;

}  // namespace

Schema synthetic_schema() {
    std::vector<FeatureSpec> features;
    features.push_back({"age_range", ColumnKind::categorical(age_range_levels())});
    features.push_back({"sex", ColumnKind::categorical(sex_levels())});
    features.push_back({"vehicle_category", ColumnKind::categorical(vehicle_category_levels())});
    features.push_back({"make", ColumnKind::categorical(make_levels())});
    features.push_back({"vehicle_age", ColumnKind::numeric()});
    features.push_back({"region", ColumnKind::categorical(region_levels())});
    return Schema(std::move(features), "loss_cost", "exposure");
}

SyntheticEffects SyntheticEffects::defaults() {
    SyntheticEffects e;
    e.categorical_effects["age_range"] = {1.45, 1.15, 1.0, 0.9, 1.05};
    e.categorical_effects["sex"] = {1.0, 1.0};
    e.categorical_effects["vehicle_category"] = {0.85, 1.0, 1.15, 1.25};
    e.categorical_effects["make"] = {0.65, 0.9, 1.0, 1.15, 1.3, 1.55, 0.8, 1.25};
    e.categorical_effects["region"] = {1.2, 1.1, 0.95, 1.0, 0.9, 1.05, 1.3, 0.85};
    return e;
}

SyntheticEffects SyntheticEffects::null_effects() {
    SyntheticEffects e = defaults();
    for (auto& [name, levels] : e.categorical_effects)
        std::fill(levels.begin(), levels.end(), 1.0);
    e.vehicle_age_log_slope = 0.0;
    return e;
}

nlohmann::json SyntheticEffects::to_json() const {
    nlohmann::json cats = nlohmann::json::object();
    for (const auto& [name, levels] : categorical_effects) cats[name] = levels;
    return nlohmann::json{{"base_frequency", base_frequency},
                          {"severity_log_mean", severity_log_mean},
                          {"severity_log_sd", severity_log_sd},
                          {"categorical_effects", std::move(cats)},
                          {"vehicle_age_log_slope", vehicle_age_log_slope},
                          {"age_correlation", age_correlation}};
}

SyntheticEffects SyntheticEffects::from_json(const nlohmann::json& j) {
    SyntheticEffects e = defaults();
    try {
        if (j.contains("base_frequency")) e.base_frequency = j["base_frequency"].get<double>();
        if (j.contains("severity_log_mean"))
            e.severity_log_mean = j["severity_log_mean"].get<double>();
        if (j.contains("severity_log_sd")) e.severity_log_sd = j["severity_log_sd"].get<double>();
        if (j.contains("vehicle_age_log_slope"))
            e.vehicle_age_log_slope = j["vehicle_age_log_slope"].get<double>();
        if (j.contains("age_correlation")) e.age_correlation = j["age_correlation"].get<double>();
        if (j.contains("categorical_effects")) {
            for (const auto& [name, levels] : j["categorical_effects"].items())
                e.categorical_effects[name] = levels.get<std::vector<double>>();
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("malformed synthetic effects: ") + ex.what());
    }
    return e;
}

std::vector<std::string> GroundTruth::null_features() const {
    std::vector<std::string> names;
    for (const auto& [name, range] : effect_range) {
        if (range == 1.0) names.push_back(name);
    }
    return names;
}

std::pair<Dataset, GroundTruth> generate_synthetic(std::size_t n, std::uint64_t seed,
                                                   const SyntheticEffects& effects) {
    if (n < 1) throw ValidationError("need at least one synthetic row");
    if (effects.base_frequency <= 0.0) throw ValidationError("base_frequency must be positive");
    if (effects.age_correlation < 0.0 || effects.age_correlation >= 1.0)
        throw ValidationError("age_correlation must lie in [0,1)");

    const Schema schema = synthetic_schema();
    const std::size_t p = schema.feature_count();

    // Per-feature multiplier lookup, validated against the fixed level lists.
    std::vector<std::vector<double>> level_effects(p);
    for (std::size_t j = 0; j < p; ++j) {
        const auto& spec = schema.feature(j);
        if (spec.kind.is_numeric()) continue;
        const auto it = effects.categorical_effects.find(spec.name);
        if (it == effects.categorical_effects.end()) {
            level_effects[j].assign(spec.kind.levels().size(), 1.0);
            continue;
        }
        if (it->second.size() != spec.kind.levels().size())
            throw ValidationError("effect list for '" + spec.name + "' must have " +
                                  std::to_string(spec.kind.levels().size()) + " entries");
        for (double m : it->second) {
            if (!(m > 0.0)) throw ValidationError("effect multipliers must be positive");
        }
        level_effects[j] = it->second;
    }

    const std::size_t age_range_j = schema.require_feature("age_range");
    const std::size_t vehicle_age_j = schema.require_feature("vehicle_age");

    Rng rng(derive_seed(seed, "synthetic"));

    std::vector<CategoricalColumn> cats(p);
    NumericColumn vehicle_age(n);
    std::vector<double> response(n);
    std::vector<double> exposure(n);

    for (std::size_t j = 0; j < p; ++j) {
        if (schema.feature(j).kind.is_categorical()) cats[j].resize(n);
    }

    for (std::size_t i = 0; i < n; ++i) {
        double freq = effects.base_frequency;
        for (std::size_t j = 0; j < p; ++j) {
            const auto& spec = schema.feature(j);
            if (spec.kind.is_numeric()) continue;
            const auto idx =
                static_cast<std::int32_t>(rng.below(spec.kind.levels().size()));
            cats[j][i] = idx;
            freq *= level_effects[j][static_cast<std::size_t>(idx)];
        }

        // Vehicle age: integer 0..20; with correlation, skewed by age_range.
        double u = rng.uniform();
        if (effects.age_correlation > 0.0) {
            const double anchor = static_cast<double>(cats[age_range_j][i]) /
                                  static_cast<double>(age_range_levels().size() - 1);
            u = (1.0 - effects.age_correlation) * u + effects.age_correlation * anchor;
        }
        const double va = std::floor(u * (kMaxVehicleAge + 1.0 - 1e-12));
        vehicle_age[i] = va;
        freq *= std::exp(effects.vehicle_age_log_slope * va);

        const double w = 0.25 + 0.75 * rng.uniform();
        exposure[i] = w;

        const std::uint64_t claims = rng.poisson(freq * w);
        double total = 0.0;
        for (std::uint64_t c = 0; c < claims; ++c)
            total += rng.lognormal(effects.severity_log_mean, effects.severity_log_sd);
        response[i] = total / w;
    }

    std::vector<Column> columns;
    columns.reserve(p);
    for (std::size_t j = 0; j < p; ++j) {
        if (schema.feature(j).kind.is_numeric())
            columns.emplace_back(std::move(vehicle_age));
        else
            columns.emplace_back(std::move(cats[j]));
    }

    GroundTruth truth;
    truth.effects = effects;
    for (std::size_t j = 0; j < p; ++j) {
        const auto& spec = schema.feature(j);
        if (spec.kind.is_categorical()) {
            const auto& m = level_effects[j];
            const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
            truth.effect_range[spec.name] = *hi / *lo;
        }
    }
    truth.effect_range[schema.feature(vehicle_age_j).name] =
        std::exp(std::abs(effects.vehicle_age_log_slope) * kMaxVehicleAge);

    return {Dataset(schema, std::move(columns), std::move(response), std::move(exposure)),
            std::move(truth)};
}

}  // namespace claro::tabular
