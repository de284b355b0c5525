#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "claro/models/predictor.hpp"
#include "claro/tabular/dataset.hpp"

namespace claro::explain {

/// Grid construction for numeric features. The default covers the 1st to
/// 99th percentile of the observed values with 21 equispaced points. An
/// explicit range must stay inside the observed min/max unless
/// allow_extrapolation is set.
struct GridSpec {
    std::size_t points = 21;
    double lower_quantile = 0.01;
    double upper_quantile = 0.99;
    std::optional<std::pair<double, double>> range;
    bool allow_extrapolation = false;

    /// For categorical features: restrict the grid to these levels
    /// (default: every level of the schema, in schema order).
    std::vector<std::string> levels;
};

enum class CurveKind { Pdp, Ice, Ale };

std::string to_string(CurveKind kind);
CurveKind curve_kind_from_string(std::string_view name);

struct HistogramBin {
    double lower = 0.0;  // for categorical features, the level index
    double upper = 0.0;
    std::size_t count = 0;
};

/// One explanation curve (or curve bundle, for ICE) over a feature grid.
struct CurveSet {
    CurveKind kind = CurveKind::Pdp;
    std::string feature;
    bool categorical = false;

    /// Numeric z values; for categorical features, the level indices as
    /// doubles, with names in grid_labels.
    std::vector<double> grid;
    std::vector<std::string> grid_labels;

    /// Pdp/Ale: one value per grid point. Empty for Ice.
    std::vector<double> values;

    /// Ice: one curve per profiled instance (row index in ice_instances).
    std::vector<std::vector<double>> ice_values;
    std::vector<std::size_t> ice_instances;

    /// Distribution of the feature in the evaluation data; counts sum to N.
    std::vector<HistogramBin> histogram;

    /// Ale only: bin edges (grid repeats them) and per-bin local effects.
    std::vector<double> ale_bin_edges;
    std::vector<double> ale_local_effects;

    nlohmann::json to_json() const;
    static CurveSet from_json(const nlohmann::json& j);
};

/// Partial dependence: for each grid value z, the mean prediction over the
/// evaluation rows with feature j overridden to z.
CurveSet pdp(const models::Predictor& model, const tabular::Dataset& ds, std::size_t j,
             const GridSpec& grid = {});

/// Individual conditional expectation: the per-row curves behind the PDP.
/// `instances` selects rows (empty = every row). The pointwise mean of the
/// full-selection ICE equals the PDP on the same grid, bit for bit.
CurveSet ice(const models::Predictor& model, const tabular::Dataset& ds, std::size_t j,
             const GridSpec& grid = {}, std::vector<std::size_t> instances = {});

/// Accumulated local effects over quantile bins (empty bins merged):
/// per-bin mean prediction difference between the bin's upper and lower
/// edge with other features at the rows' own values, accumulated across
/// bins and centered so the curve's mean over the data distribution is 0.
/// Numeric features only.
CurveSet ale(const models::Predictor& model, const tabular::Dataset& ds, std::size_t j,
             std::size_t n_bins = 10);

}  // namespace claro::explain
