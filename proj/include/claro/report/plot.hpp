#pragma once

#include <optional>
#include <string>
#include <vector>

#include "claro/explain/attribution.hpp"
#include "claro/explain/curves.hpp"
#include "claro/explain/importance.hpp"

namespace claro::report {

enum class PlotKind {
    ImportanceBars,
    PdpWithHistogram,
    IceSpaghetti,
    AleLine,
    Waterfall,
};

std::string to_string(PlotKind kind);
PlotKind plot_kind_from_string(std::string_view name);

struct PlotSpec {
    PlotKind kind = PlotKind::ImportanceBars;
    double width = 720.0;   // pixels
    double height = 480.0;  // pixels
    std::string x_label;
    std::string y_label;
    std::optional<std::string> title;
};

/// Spec with the conventional dimensions and axis labels for a kind.
PlotSpec default_plot_spec(PlotKind kind);

/// SVG 1.1 documents. Rendering is a pure function of (artifact, spec), so
/// identical inputs give byte-identical output. The spec's kind must match
/// the artifact (importance_bars; pdp/ice/ale per the curve's kind;
/// waterfall for attributions).
std::string render(const explain::ImportanceReport& report, const PlotSpec& spec);
std::string render(const explain::CurveSet& curve, const PlotSpec& spec);
std::string render(const explain::AttributionSet& attribution, const PlotSpec& spec);

/// One bar of a waterfall in data coordinates, top row first: "intercept"
/// from 0 to v0, one floating bar per contribution, then a closing
/// "prediction" bar from 0 to the accumulated total.
struct WaterfallRow {
    std::string label;
    double start = 0.0;
    double end = 0.0;
    int direction = 0;  // +1 positive step, -1 negative, 0 intercept/total
};

std::vector<WaterfallRow> waterfall_layout(const explain::AttributionSet& attribution);

}  // namespace claro::report
