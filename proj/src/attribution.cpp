#include "claro/explain/attribution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "claro/error.hpp"
#include "claro/rng.hpp"

namespace claro::explain {

namespace {

double mean_prediction(const models::Predictor& model, const tabular::Dataset& ds) {
    const auto preds = model.predict(ds);
    double sum = 0.0;
    for (double p : preds) sum += p;
    return sum / static_cast<double>(preds.size());
}

void check_instance(const BackgroundSet& bg, const tabular::Dataset& instance) {
    if (instance.n_rows() != 1)
        throw ValidationError("the explained instance must be a single-row dataset");
    if (!instance.schema().features_equal(bg.rows.schema()))
        throw ValidationError("instance features do not match the background features");
}

void check_ordering(const std::vector<std::size_t>& ordering, std::size_t p) {
    if (ordering.size() != p)
        throw ValidationError("the ordering must list every feature exactly once");
    std::vector<bool> seen(p, false);
    for (std::size_t j : ordering) {
        if (j >= p || seen[j])
            throw ValidationError("the ordering must be a permutation of the feature indices");
        seen[j] = true;
    }
}

std::string cell_label(const tabular::Dataset& instance, std::size_t j) {
    const auto& kind = instance.schema().feature(j).kind;
    const tabular::Cell cell = instance.cell(0, j);
    if (kind.is_categorical())
        return kind.levels()[static_cast<std::size_t>(std::get<std::int32_t>(cell))];
    return nlohmann::json(std::get<double>(cell)).dump();
}

/// Walks one ordering, writing each feature's step contribution into
/// `out` (indexed by feature). Returns the final mean prediction.
double walk_ordering(const models::Predictor& model, const BackgroundSet& bg,
                     const tabular::Dataset& instance, const std::vector<std::size_t>& ordering,
                     double v0, std::vector<double>& out) {
    tabular::Dataset current = bg.rows;
    double previous = v0;
    for (std::size_t j : ordering) {
        current = current.with_column_filled(j, instance.cell(0, j));
        const double v = mean_prediction(model, current);
        out[j] = v - previous;
        previous = v;
    }
    return previous;
}

}  // namespace

// A Dataset is never empty, so the nonempty background invariant holds by
// construction.
BackgroundSet::BackgroundSet(tabular::Dataset ds) : rows(std::move(ds)) {}

BackgroundSet BackgroundSet::sample(const tabular::Dataset& ds, std::size_t max_rows,
                                    std::uint64_t seed) {
    if (max_rows < 1) throw ValidationError("the background cap must be at least one row");
    if (ds.n_rows() <= max_rows) return BackgroundSet(ds);

    Rng rng(derive_seed(seed, "background"));
    auto perm = rng.permutation(ds.n_rows());
    perm.resize(max_rows);
    std::sort(perm.begin(), perm.end());
    return BackgroundSet(ds.select_rows(perm));
}

AttributionSet break_down(const models::Predictor& model, const BackgroundSet& bg,
                          const tabular::Dataset& instance,
                          const std::vector<std::size_t>& ordering) {
    check_instance(bg, instance);
    const std::size_t p = instance.feature_count();
    check_ordering(ordering, p);

    AttributionSet result;
    result.method = "break_down";
    result.ordering = ordering;
    result.intercept = mean_prediction(model, bg.rows);
    result.prediction = model.predict_row(instance, 0);

    std::vector<double> by_feature(p, 0.0);
    walk_ordering(model, bg, instance, ordering, result.intercept, by_feature);
    for (std::size_t j : ordering) {
        result.contributions.push_back({instance.schema().feature(j).name, by_feature[j], 0.0,
                                        cell_label(instance, j)});
    }
    return result;
}

std::vector<std::size_t> greedy_ordering(const models::Predictor& model, const BackgroundSet& bg,
                                         const tabular::Dataset& instance) {
    check_instance(bg, instance);
    const std::size_t p = instance.feature_count();

    std::vector<std::size_t> ordering;
    std::vector<bool> used(p, false);
    tabular::Dataset current = bg.rows;
    double v_current = mean_prediction(model, bg.rows);

    for (std::size_t step = 0; step < p; ++step) {
        std::size_t best = p;
        double best_move = -1.0;
        double best_v = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (used[j]) continue;
            const double v =
                mean_prediction(model, current.with_column_filled(j, instance.cell(0, j)));
            const double move = std::abs(v - v_current);
            if (move > best_move) {
                best = j;
                best_move = move;
                best_v = v;
            }
        }
        ordering.push_back(best);
        used[best] = true;
        current = current.with_column_filled(best, instance.cell(0, best));
        v_current = best_v;
    }
    return ordering;
}

AttributionSet shapley_exact(const models::Predictor& model, const BackgroundSet& bg,
                             const tabular::Dataset& instance, std::size_t max_features) {
    check_instance(bg, instance);
    const std::size_t p = instance.feature_count();
    if (p > max_features) {
        throw ValidationError("exact Shapley values over " + std::to_string(p) +
                              " features would need " + std::to_string(std::size_t{1} << p) +
                              " model sweeps; use shapley_sampled instead");
    }

    // Mean prediction for every substitution pattern. Bit j of the mask
    // marks feature j as overridden with the instance's value.
    const std::size_t n_masks = std::size_t{1} << p;
    std::vector<double> value(n_masks);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        tabular::Dataset ds = bg.rows;
        for (std::size_t j = 0; j < p; ++j) {
            if (mask & (std::size_t{1} << j)) ds = ds.with_column_filled(j, instance.cell(0, j));
        }
        value[mask] = mean_prediction(model, ds);
    }

    std::vector<double> factorial(p + 1, 1.0);
    for (std::size_t k = 1; k <= p; ++k) factorial[k] = factorial[k - 1] * static_cast<double>(k);

    AttributionSet result;
    result.method = "shapley_exact";
    result.intercept = value[0];
    result.prediction = model.predict_row(instance, 0);

    // phi_j = sum over subsets S not containing j of
    //         |S|! (p-1-|S|)! / p! * (v(S u {j}) - v(S)),
    // the subset form of the mean contribution over all orderings.
    for (std::size_t j = 0; j < p; ++j) {
        const std::size_t bit = std::size_t{1} << j;
        double phi = 0.0;
        for (std::size_t mask = 0; mask < n_masks; ++mask) {
            if (mask & bit) continue;
            const auto s = static_cast<std::size_t>(std::popcount(mask));
            const double weight = factorial[s] * factorial[p - 1 - s] / factorial[p];
            phi += weight * (value[mask | bit] - value[mask]);
        }
        result.contributions.push_back(
            {instance.schema().feature(j).name, phi, 0.0, cell_label(instance, j)});
    }
    return result;
}

AttributionSet shapley_sampled(const models::Predictor& model, const BackgroundSet& bg,
                               const tabular::Dataset& instance, std::size_t samples,
                               std::uint64_t seed) {
    check_instance(bg, instance);
    if (samples < 1) throw ValidationError("sampled Shapley needs at least one ordering");
    const std::size_t p = instance.feature_count();

    AttributionSet result;
    result.method = "shapley_sampled";
    result.samples = samples;
    result.intercept = mean_prediction(model, bg.rows);
    result.prediction = model.predict_row(instance, 0);

    std::vector<double> sum(p, 0.0);
    std::vector<double> sum_sq(p, 0.0);
    std::vector<double> step(p, 0.0);
    for (std::size_t m = 0; m < samples; ++m) {
        Rng rng(derive_seed(seed, "shapley", m));
        const auto ordering = rng.permutation(p);
        walk_ordering(model, bg, instance, ordering, result.intercept, step);
        for (std::size_t j = 0; j < p; ++j) {
            sum[j] += step[j];
            sum_sq[j] += step[j] * step[j];
        }
    }

    const auto n = static_cast<double>(samples);
    for (std::size_t j = 0; j < p; ++j) {
        const double mean = sum[j] / n;
        double std_error = 0.0;
        if (samples >= 2) {
            const double variance = std::max(0.0, (sum_sq[j] - sum[j] * sum[j] / n) / (n - 1.0));
            std_error = std::sqrt(variance / n);
        }
        result.contributions.push_back(
            {instance.schema().feature(j).name, mean, std_error, cell_label(instance, j)});
    }
    return result;
}

nlohmann::json AttributionSet::to_json() const {
    nlohmann::json contribs = nlohmann::json::array();
    for (const auto& c : contributions) {
        contribs.push_back({{"feature", c.feature},
                            {"value", c.value},
                            {"std_error", c.std_error},
                            {"instance_value", c.instance_value}});
    }
    return nlohmann::json{{"format", "claro-attribution"},
                          {"version", 1},
                          {"method", method},
                          {"intercept", intercept},
                          {"prediction", prediction},
                          {"ordering", ordering},
                          {"samples", samples},
                          {"contributions", std::move(contribs)}};
}

AttributionSet AttributionSet::from_json(const nlohmann::json& j) {
    try {
        AttributionSet result;
        result.method = j.at("method").get<std::string>();
        result.intercept = j.at("intercept").get<double>();
        result.prediction = j.at("prediction").get<double>();
        result.ordering = j.at("ordering").get<std::vector<std::size_t>>();
        result.samples = j.at("samples").get<std::size_t>();
        for (const auto& jc : j.at("contributions")) {
            result.contributions.push_back({jc.at("feature").get<std::string>(),
                                            jc.at("value").get<double>(),
                                            jc.at("std_error").get<double>(),
                                            jc.at("instance_value").get<std::string>()});
        }
        return result;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed attribution set: ") + e.what());
    }
}

}  // namespace claro::explain
