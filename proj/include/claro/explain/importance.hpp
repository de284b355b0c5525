#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "claro/models/predictor.hpp"
#include "claro/tabular/dataset.hpp"

namespace claro::explain {

struct ImportanceEntry {
    std::string feature;
    double permuted_loss = 0.0;  // mean over repetitions
    double vi = 0.0;             // permuted_loss - baseline_loss
    std::vector<double> per_repetition;  // one permuted loss per repetition
};

struct ImportanceReport {
    double baseline_loss = 0.0;
    models::LossKind loss = models::LossKind::Mse;
    std::size_t repetitions = 0;
    std::uint64_t seed = 0;
    std::vector<ImportanceEntry> entries;  // in schema feature order

    nlohmann::json to_json() const;
    static ImportanceReport from_json(const nlohmann::json& j);
};

/// Permutation variable importance: the loss increase when feature j's
/// column is replaced by a seeded permutation of itself, averaged over
/// `repetitions` draws. The baseline loss is computed once on the
/// unpermuted data. Each (feature, repetition) permutation uses the seed
/// derive_seed(seed, "importance/" + feature, repetition), so results do
/// not depend on evaluation order.
ImportanceReport permutation_importance(const models::Predictor& model,
                                        const tabular::Dataset& ds,
                                        models::LossKind loss = models::LossKind::Mse,
                                        std::size_t repetitions = 5, std::uint64_t seed = 0);

}  // namespace claro::explain
