#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "claro/tabular/dataset.hpp"

namespace claro::tabular {

/// Ground-truth description of the synthetic loss process. Each record gets a
/// claim frequency base_frequency * prod(effects), a Poisson claim count over
/// its exposure and lognormal severities; the response is total loss divided
/// by exposure, so its conditional mean is frequency * mean severity and the
/// per-variable multipliers below are the true effects a model should find.
struct SyntheticEffects {
    double base_frequency = 0.08;
    double severity_log_mean = 7.0;  // lognormal location of a single claim
    double severity_log_sd = 0.6;

    /// Per-level frequency multipliers, keyed by categorical feature name.
    std::map<std::string, std::vector<double>> categorical_effects;

    /// Continuous effect: frequency multiplier exp(slope * vehicle_age).
    double vehicle_age_log_slope = -0.05;

    /// In [0,1). Nonzero values tie vehicle_age to age_range so correlated-
    /// variable behaviour of the explainers can be exercised.
    double age_correlation = 0.0;

    /// Standard defaults: make has the widest spread, sex is null.
    static SyntheticEffects defaults();
    /// Every multiplier 1 and zero slope: the response ignores all features.
    static SyntheticEffects null_effects();

    nlohmann::json to_json() const;
    static SyntheticEffects from_json(const nlohmann::json& j);
};

struct GroundTruth {
    SyntheticEffects effects;
    /// max/min of a feature's true multipliers; exactly 1 for a null feature.
    std::map<std::string, double> effect_range;
    std::vector<std::string> null_features() const;
};

/// The fixed six-feature motor schema used by the generator.
Schema synthetic_schema();

/// Deterministic for fixed (n, seed, effects), byte for byte.
std::pair<Dataset, GroundTruth> generate_synthetic(
    std::size_t n, std::uint64_t seed,
    const SyntheticEffects& effects = SyntheticEffects::defaults());

}  // namespace claro::tabular
