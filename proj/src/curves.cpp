#include "claro/explain/curves.hpp"

#include <algorithm>
#include <cmath>

#include "claro/error.hpp"

namespace claro::explain {

namespace {

constexpr std::size_t kHistogramBins = 20;

/// Linear-interpolation quantile of a sorted sample (the R type-7 rule).
double sorted_quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<HistogramBin> numeric_histogram(const tabular::NumericColumn& values) {
    const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *min_it;
    const double hi = *max_it;
    if (lo == hi) return {{lo, hi, values.size()}};

    std::vector<HistogramBin> bins(kHistogramBins);
    const double width = (hi - lo) / static_cast<double>(kHistogramBins);
    for (std::size_t b = 0; b < kHistogramBins; ++b) {
        bins[b].lower = lo + width * static_cast<double>(b);
        bins[b].upper = lo + width * static_cast<double>(b + 1);
    }
    bins.back().upper = hi;
    for (double v : values) {
        auto b = static_cast<std::size_t>((v - lo) / width);
        if (b >= kHistogramBins) b = kHistogramBins - 1;
        ++bins[b].count;
    }
    return bins;
}

std::vector<HistogramBin> categorical_histogram(const tabular::CategoricalColumn& values,
                                                std::size_t n_levels) {
    std::vector<HistogramBin> bins(n_levels);
    for (std::size_t b = 0; b < n_levels; ++b) {
        bins[b].lower = static_cast<double>(b);
        bins[b].upper = static_cast<double>(b);
    }
    for (std::int32_t v : values) ++bins[static_cast<std::size_t>(v)].count;
    return bins;
}

/// Resolves the grid, labels and histogram for feature j and flags whether
/// it is categorical. Shared by pdp and ice.
void build_grid(const tabular::Dataset& ds, std::size_t j, const GridSpec& spec,
                CurveSet& out) {
    const auto& feature = ds.schema().feature(j);
    out.feature = feature.name;
    out.categorical = feature.kind.is_categorical();

    if (out.categorical) {
        if (spec.range) throw ValidationError("explicit ranges apply to numeric features only");
        if (spec.levels.empty()) {
            for (std::size_t l = 0; l < feature.kind.levels().size(); ++l) {
                out.grid.push_back(static_cast<double>(l));
                out.grid_labels.push_back(feature.kind.levels()[l]);
            }
        } else {
            for (const auto& name : spec.levels) {
                const auto idx = feature.kind.level_index(name);
                if (!idx) {
                    throw ValidationError("unknown level '" + name + "' for feature '" +
                                          feature.name + "'");
                }
                out.grid.push_back(static_cast<double>(*idx));
                out.grid_labels.push_back(name);
            }
        }
        out.histogram = categorical_histogram(ds.categorical(j), feature.kind.levels().size());
        return;
    }

    if (!spec.levels.empty())
        throw ValidationError("level restrictions apply to categorical features only");
    if (spec.points == 0) throw ValidationError("the grid needs at least one point");

    const auto& column = ds.numeric(j);
    const auto [min_it, max_it] = std::minmax_element(column.begin(), column.end());

    double lo = 0.0;
    double hi = 0.0;
    if (spec.range) {
        lo = spec.range->first;
        hi = spec.range->second;
        if (lo > hi) throw ValidationError("grid range lower bound exceeds upper bound");
        if (!spec.allow_extrapolation && (lo < *min_it || hi > *max_it)) {
            throw ValidationError("grid range extends beyond the observed values; "
                                  "set allow_extrapolation to permit this");
        }
    } else {
        if (spec.lower_quantile < 0.0 || spec.upper_quantile > 1.0 ||
            spec.lower_quantile > spec.upper_quantile) {
            throw ValidationError("grid quantiles must satisfy 0 <= lower <= upper <= 1");
        }
        std::vector<double> sorted(column.begin(), column.end());
        std::sort(sorted.begin(), sorted.end());
        lo = sorted_quantile(sorted, spec.lower_quantile);
        hi = sorted_quantile(sorted, spec.upper_quantile);
    }

    if (lo == hi) {
        out.grid.push_back(lo);
    } else {
        if (spec.points < 2)
            throw ValidationError("a non-degenerate grid needs at least two points");
        for (std::size_t k = 0; k < spec.points; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(spec.points - 1);
            out.grid.push_back(lo + t * (hi - lo));
        }
    }
    out.histogram = numeric_histogram(column);
}

tabular::Cell grid_cell(const CurveSet& curve, std::size_t k) {
    if (curve.categorical) return tabular::Cell{static_cast<std::int32_t>(curve.grid[k])};
    return tabular::Cell{curve.grid[k]};
}

}  // namespace

std::string to_string(CurveKind kind) {
    switch (kind) {
        case CurveKind::Pdp: return "pdp";
        case CurveKind::Ice: return "ice";
        case CurveKind::Ale: return "ale";
    }
    throw ValidationError("unknown curve kind");
}

CurveKind curve_kind_from_string(std::string_view name) {
    if (name == "pdp") return CurveKind::Pdp;
    if (name == "ice") return CurveKind::Ice;
    if (name == "ale") return CurveKind::Ale;
    throw ValidationError("unknown curve kind '" + std::string(name) + "'");
}

CurveSet pdp(const models::Predictor& model, const tabular::Dataset& ds, std::size_t j,
             const GridSpec& grid) {
    CurveSet curve;
    curve.kind = CurveKind::Pdp;
    build_grid(ds, j, grid, curve);

    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
        const auto preds = model.predict(ds.with_column_filled(j, grid_cell(curve, k)));
        double sum = 0.0;
        for (double p : preds) sum += p;
        curve.values.push_back(sum / static_cast<double>(preds.size()));
    }
    return curve;
}

CurveSet ice(const models::Predictor& model, const tabular::Dataset& ds, std::size_t j,
             const GridSpec& grid, std::vector<std::size_t> instances) {
    if (instances.empty()) {
        instances.resize(ds.n_rows());
        for (std::size_t i = 0; i < instances.size(); ++i) instances[i] = i;
    } else {
        for (std::size_t i : instances) {
            if (i >= ds.n_rows()) throw ValidationError("ice instance index out of range");
        }
    }

    CurveSet curve;
    curve.kind = CurveKind::Ice;
    build_grid(ds, j, grid, curve);
    curve.ice_instances = std::move(instances);
    curve.ice_values.assign(curve.ice_instances.size(), {});

    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
        const auto preds = model.predict(ds.with_column_filled(j, grid_cell(curve, k)));
        for (std::size_t i = 0; i < curve.ice_instances.size(); ++i)
            curve.ice_values[i].push_back(preds[curve.ice_instances[i]]);
    }
    return curve;
}

CurveSet ale(const models::Predictor& model, const tabular::Dataset& ds, std::size_t j,
             std::size_t n_bins) {
    if (ds.schema().feature(j).kind.is_categorical()) {
        throw ValidationError("accumulated local effects are defined for numeric features; '" +
                              ds.schema().feature(j).name + "' is categorical");
    }
    if (n_bins < 1) throw ValidationError("accumulated local effects need at least one bin");

    const auto& column = ds.numeric(j);
    std::vector<double> sorted(column.begin(), column.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw ValidationError("feature '" + ds.schema().feature(j).name +
                              "' is constant; accumulated local effects are undefined");
    }

    // Quantile bin edges. Duplicate edges (heavily tied data) collapse into
    // one, so the edge list is strictly increasing.
    std::vector<double> edges{sorted.front()};
    for (std::size_t k = 1; k < n_bins; ++k) {
        const double e = sorted_quantile(sorted, static_cast<double>(k) /
                                                     static_cast<double>(n_bins));
        if (e > edges.back()) edges.push_back(e);
    }
    if (sorted.back() > edges.back()) edges.push_back(sorted.back());

    // A row belongs to the bin whose half-open interval (lower, upper]
    // contains its value; rows at the global minimum go to the first bin.
    auto assign = [&edges](double v) -> std::size_t {
        const auto it = std::lower_bound(edges.begin() + 1, edges.end(), v);
        return static_cast<std::size_t>(it - edges.begin()) - 1;
    };
    auto count_rows = [&](std::vector<std::size_t>& counts) {
        counts.assign(edges.size() - 1, 0);
        for (double v : column) ++counts[assign(v)];
    };

    // Merge empty bins into a neighbour (rightward, except at the end)
    // until every bin holds data.
    std::vector<std::size_t> counts;
    count_rows(counts);
    for (;;) {
        const auto empty = std::find(counts.begin(), counts.end(), std::size_t{0});
        if (empty == counts.end()) break;
        const auto b = static_cast<std::size_t>(empty - counts.begin());
        edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(b + 1 < counts.size() ? b + 1
                                                                                      : b));
        count_rows(counts);
    }

    CurveSet curve;
    curve.kind = CurveKind::Ale;
    curve.feature = ds.schema().feature(j).name;
    curve.ale_bin_edges = edges;
    curve.histogram = numeric_histogram(column);

    // Local effect of bin b: the mean change in prediction when its rows'
    // feature value moves from the bin's lower edge to its upper edge.
    const std::size_t n_local_bins = edges.size() - 1;
    std::vector<std::vector<std::size_t>> members(n_local_bins);
    for (std::size_t i = 0; i < column.size(); ++i) members[assign(column[i])].push_back(i);

    for (std::size_t b = 0; b < n_local_bins; ++b) {
        const auto rows = ds.select_rows(members[b]);
        const auto hi = model.predict(rows.with_column_filled(j, tabular::Cell{edges[b + 1]}));
        const auto lo = model.predict(rows.with_column_filled(j, tabular::Cell{edges[b]}));
        double sum = 0.0;
        for (std::size_t i = 0; i < hi.size(); ++i) sum += hi[i] - lo[i];
        curve.ale_local_effects.push_back(sum / static_cast<double>(hi.size()));
    }

    std::vector<double> cumulative{0.0};
    for (double effect : curve.ale_local_effects)
        cumulative.push_back(cumulative.back() + effect);

    // Center so the curve averages zero over the data: each row contributes
    // the accumulated value at its bin's upper edge.
    double mean = 0.0;
    for (std::size_t b = 0; b < n_local_bins; ++b)
        mean += cumulative[b + 1] * static_cast<double>(counts[b]);
    mean /= static_cast<double>(column.size());

    curve.grid = edges;
    for (double c : cumulative) curve.values.push_back(c - mean);
    return curve;
}

nlohmann::json CurveSet::to_json() const {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& b : histogram)
        hist.push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count}});
    return nlohmann::json{{"format", "claro-curves"},
                          {"version", 1},
                          {"kind", explain::to_string(kind)},
                          {"feature", feature},
                          {"categorical", categorical},
                          {"grid", grid},
                          {"grid_labels", grid_labels},
                          {"values", values},
                          {"ice_values", ice_values},
                          {"ice_instances", ice_instances},
                          {"histogram", std::move(hist)},
                          {"ale_bin_edges", ale_bin_edges},
                          {"ale_local_effects", ale_local_effects}};
}

CurveSet CurveSet::from_json(const nlohmann::json& j) {
    try {
        CurveSet curve;
        curve.kind = curve_kind_from_string(j.at("kind").get<std::string>());
        curve.feature = j.at("feature").get<std::string>();
        curve.categorical = j.at("categorical").get<bool>();
        curve.grid = j.at("grid").get<std::vector<double>>();
        curve.grid_labels = j.at("grid_labels").get<std::vector<std::string>>();
        curve.values = j.at("values").get<std::vector<double>>();
        curve.ice_values = j.at("ice_values").get<std::vector<std::vector<double>>>();
        curve.ice_instances = j.at("ice_instances").get<std::vector<std::size_t>>();
        for (const auto& jb : j.at("histogram")) {
            curve.histogram.push_back({jb.at("lower").get<double>(),
                                       jb.at("upper").get<double>(),
                                       jb.at("count").get<std::size_t>()});
        }
        curve.ale_bin_edges = j.at("ale_bin_edges").get<std::vector<double>>();
        curve.ale_local_effects = j.at("ale_local_effects").get<std::vector<double>>();
        return curve;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed curve set: ") + e.what());
    }
}

}  // namespace claro::explain
