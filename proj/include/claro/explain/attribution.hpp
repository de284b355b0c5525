#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "claro/models/predictor.hpp"
#include "claro/tabular/dataset.hpp"

namespace claro::explain {

/// Reference rows behind the conditional expectations of a break-down:
/// substituting an instance's values into these rows and averaging
/// predictions estimates "the expected prediction given the substituted
/// coordinates".
struct BackgroundSet {
    tabular::Dataset rows;

    explicit BackgroundSet(tabular::Dataset ds);

    /// Seeded subsample of ds capped at max_rows (row order preserved).
    static BackgroundSet sample(const tabular::Dataset& ds, std::size_t max_rows,
                                std::uint64_t seed);
};

struct Attribution {
    std::string feature;
    double value = 0.0;
    /// Monte-Carlo standard error; only meaningful for shapley_sampled
    /// with M >= 2, otherwise 0.
    double std_error = 0.0;
    /// The explained instance's value for this feature, rendered as text
    /// (level name, or shortest round-trip decimal for numerics).
    std::string instance_value;
};

/// Additive decomposition of one prediction: intercept (mean background
/// prediction) plus one contribution per feature, summing to prediction.
struct AttributionSet {
    double intercept = 0.0;
    std::vector<Attribution> contributions;  // in reporting order
    std::string method;  // "break_down", "shapley_exact" or "shapley_sampled"
    std::vector<std::size_t> ordering;  // break_down: the order used
    std::size_t samples = 0;            // shapley_sampled: M
    double prediction = 0.0;

    nlohmann::json to_json() const;
    static AttributionSet from_json(const nlohmann::json& j);
};

/// Ordered break-down: walk the features in `ordering`, overriding each in
/// every background row with the instance's value, and report each step's
/// change in mean prediction. The telescoping makes
/// intercept + sum(contributions) equal the instance prediction.
/// `instance` must be a single-row dataset matching the model's features.
AttributionSet break_down(const models::Predictor& model, const BackgroundSet& bg,
                          const tabular::Dataset& instance,
                          const std::vector<std::size_t>& ordering);

/// Ordering that picks, at each step, the remaining feature whose
/// substitution moves the mean prediction most in absolute value.
std::vector<std::size_t> greedy_ordering(const models::Predictor& model, const BackgroundSet& bg,
                                         const tabular::Dataset& instance);

/// Shapley attributions: the average break-down contribution over all p!
/// orderings, computed through the equivalent subset-weighted sum over the
/// 2^p substitution patterns. Refuses feature counts above max_features.
AttributionSet shapley_exact(const models::Predictor& model, const BackgroundSet& bg,
                             const tabular::Dataset& instance, std::size_t max_features = 8);

/// Monte-Carlo Shapley: mean break-down contribution over M uniformly
/// sampled orderings (ordering m uses derive_seed(seed, "shapley", m)),
/// with per-feature standard errors.
AttributionSet shapley_sampled(const models::Predictor& model, const BackgroundSet& bg,
                               const tabular::Dataset& instance, std::size_t samples,
                               std::uint64_t seed);

}  // namespace claro::explain
