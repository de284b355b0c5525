#include "claro/explain/importance.hpp"

#include "claro/error.hpp"
#include "claro/rng.hpp"

namespace claro::explain {

ImportanceReport permutation_importance(const models::Predictor& model,
                                        const tabular::Dataset& ds, models::LossKind loss,
                                        std::size_t repetitions, std::uint64_t seed) {
    if (repetitions < 1) throw ValidationError("repetitions must be at least 1");

    ImportanceReport report;
    report.loss = loss;
    report.repetitions = repetitions;
    report.seed = seed;
    report.baseline_loss = models::weighted_loss(model.predict(ds), ds.response(),
                                                 ds.weights(), loss);

    for (std::size_t j = 0; j < ds.feature_count(); ++j) {
        ImportanceEntry entry;
        entry.feature = ds.schema().feature(j).name;
        const std::string stage = "importance/" + entry.feature;
        double sum = 0.0;
        for (std::size_t rep = 0; rep < repetitions; ++rep) {
            const tabular::Dataset permuted =
                tabular::permute_column(ds, j, derive_seed(seed, stage, rep));
            const double value = models::weighted_loss(model.predict(permuted), ds.response(),
                                                       ds.weights(), loss);
            entry.per_repetition.push_back(value);
            sum += value;
        }
        entry.permuted_loss = sum / static_cast<double>(repetitions);
        entry.vi = entry.permuted_loss - report.baseline_loss;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

nlohmann::json ImportanceReport::to_json() const {
    nlohmann::json entries_json = nlohmann::json::array();
    for (const auto& e : entries) {
        entries_json.push_back({{"feature", e.feature},
                                {"permuted_loss", e.permuted_loss},
                                {"vi", e.vi},
                                {"per_repetition", e.per_repetition}});
    }
    return nlohmann::json{{"format", "claro-importance"},
                          {"version", 1},
                          {"baseline_loss", baseline_loss},
                          {"loss", models::to_string(loss)},
                          {"repetitions", repetitions},
                          {"seed", seed},
                          {"entries", std::move(entries_json)}};
}

ImportanceReport ImportanceReport::from_json(const nlohmann::json& j) {
    try {
        ImportanceReport report;
        report.baseline_loss = j.at("baseline_loss").get<double>();
        report.loss = models::loss_kind_from_string(j.at("loss").get<std::string>());
        report.repetitions = j.at("repetitions").get<std::size_t>();
        report.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& je : j.at("entries")) {
            ImportanceEntry e;
            e.feature = je.at("feature").get<std::string>();
            e.permuted_loss = je.at("permuted_loss").get<double>();
            e.vi = je.at("vi").get<double>();
            e.per_repetition = je.at("per_repetition").get<std::vector<double>>();
            report.entries.push_back(std::move(e));
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed importance report: ") + e.what());
    }
}

}  // namespace claro::explain
