#include "claro/report/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "claro/error.hpp"

namespace claro::report {

namespace {

// Palette shared by every plot kind.
constexpr const char* kBarFill = "#4a6fa5";
constexpr const char* kLineStroke = "#1565c0";
constexpr const char* kFaintStroke = "#90a4ae";
constexpr const char* kHistFill = "#b0bec5";
constexpr const char* kAxisStroke = "#37474f";
constexpr const char* kGridStroke = "#cfd8dc";
constexpr const char* kPositiveFill = "#2e7d32";
constexpr const char* kNegativeFill = "#c62828";
constexpr const char* kNeutralFill = "#78909c";

/// Fixed two-decimal coordinates keep the output stable byte for byte.
std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

/// Compact value labels for ticks and annotations.
std::string fmt_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Canvas {
    std::string out;

    void open(const PlotSpec& spec) {
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(spec.width) +
               "\" height=\"" + fmt(spec.height) + "\" viewBox=\"0 0 " + fmt(spec.width) + " " +
               fmt(spec.height) + "\" font-family=\"sans-serif\">\n";
        rect(0.0, 0.0, spec.width, spec.height, "#ffffff");
    }
    std::string close() {
        out += "</svg>\n";
        return std::move(out);
    }

    void rect(double x, double y, double w, double h, const char* fill) {
        out += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) +
               "\" height=\"" + fmt(h) + "\" fill=\"" + fill + "\"/>\n";
    }
    void line(double x1, double y1, double x2, double y2, const char* stroke,
              double width = 1.0, bool dashed = false) {
        out += "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) +
               "\" y2=\"" + fmt(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
               fmt(width) + "\"";
        if (dashed) out += " stroke-dasharray=\"4 3\"";
        out += "/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke,
                  double width, double opacity = 1.0) {
        out += "<polyline fill=\"none\" stroke=\"";
        out += stroke;
        out += "\" stroke-width=\"" + fmt(width) + "\"";
        if (opacity < 1.0) out += " stroke-opacity=\"" + fmt(opacity) + "\"";
        out += " points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i > 0) out += ' ';
            out += fmt(pts[i].first) + "," + fmt(pts[i].second);
        }
        out += "\"/>\n";
    }
    void circle(double cx, double cy, double r, const char* fill) {
        out += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(r) +
               "\" fill=\"" + fill + "\"/>\n";
    }
    void text(double x, double y, std::string_view s, const char* anchor, double size,
              const char* extra = nullptr) {
        out += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" text-anchor=\"" + anchor +
               "\" font-size=\"" + fmt(size) + "\" fill=\"#263238\"";
        if (extra) {
            out += ' ';
            out += extra;
        }
        out += ">" + escape(s) + "</text>\n";
    }
};

struct LinearScale {
    double d0 = 0.0, d1 = 1.0;  // data
    double r0 = 0.0, r1 = 1.0;  // pixels
    double operator()(double v) const { return r0 + (v - d0) / (d1 - d0) * (r1 - r0); }
};

/// Widens a degenerate domain and pads by a fraction on both sides.
std::pair<double, double> padded(double lo, double hi, double pad_fraction) {
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = (hi - lo) * pad_fraction;
    return {lo - pad, hi + pad};
}

struct Frame {
    double left, right, top, bottom;  // margins in pixels
    double x0, x1, y0, y1;            // plot rectangle

    Frame(const PlotSpec& spec, double left_margin, double bottom_margin = 42.0)
        : left(left_margin),
          right(24.0),
          top(spec.title ? 40.0 : 18.0),
          bottom(bottom_margin),
          x0(left),
          x1(spec.width - right),
          y0(top),
          y1(spec.height - bottom) {}
};

void draw_title_and_labels(Canvas& canvas, const PlotSpec& spec, const Frame& frame) {
    if (spec.title) canvas.text(spec.width / 2.0, 24.0, *spec.title, "middle", 15.0);
    if (!spec.x_label.empty())
        canvas.text((frame.x0 + frame.x1) / 2.0, spec.height - 8.0, spec.x_label, "middle",
                    12.0);
    if (!spec.y_label.empty()) {
        const std::string transform = "transform=\"rotate(-90 14 " +
                                      fmt((frame.y0 + frame.y1) / 2.0) + ")\"";
        canvas.text(14.0, (frame.y0 + frame.y1) / 2.0, spec.y_label, "middle", 12.0,
                    transform.c_str());
    }
}

void draw_x_ticks(Canvas& canvas, const Frame& frame, const LinearScale& xs, int n_ticks = 5) {
    for (int t = 0; t < n_ticks; ++t) {
        const double v =
            xs.d0 + (xs.d1 - xs.d0) * static_cast<double>(t) / static_cast<double>(n_ticks - 1);
        const double px = xs(v);
        canvas.line(px, frame.y1, px, frame.y1 + 4.0, kAxisStroke);
        canvas.text(px, frame.y1 + 16.0, fmt_value(v), "middle", 11.0);
    }
}

void draw_y_ticks(Canvas& canvas, const Frame& frame, const LinearScale& ys, int n_ticks = 4) {
    for (int t = 0; t < n_ticks; ++t) {
        const double v =
            ys.d0 + (ys.d1 - ys.d0) * static_cast<double>(t) / static_cast<double>(n_ticks - 1);
        const double py = ys(v);
        canvas.line(frame.x0 - 4.0, py, frame.x0, py, kAxisStroke);
        canvas.line(frame.x0, py, frame.x1, py, kGridStroke, 0.5);
        canvas.text(frame.x0 - 8.0, py + 4.0, fmt_value(v), "end", 11.0);
    }
}

void check_spec(const PlotSpec& spec, PlotKind expected) {
    if (spec.width <= 0.0 || spec.height <= 0.0)
        throw ValidationError("plot dimensions must be positive");
    if (spec.kind != expected) {
        throw ValidationError("plot kind '" + to_string(spec.kind) +
                              "' does not match the supplied artifact (expected '" +
                              to_string(expected) + "')");
    }
}

/// Histogram bars over the band [band_top, band_bottom].
void draw_histogram(Canvas& canvas, const std::vector<explain::HistogramBin>& bins,
                    const LinearScale& xs, double band_top, double band_bottom,
                    bool categorical) {
    std::size_t max_count = 1;
    for (const auto& bin : bins) max_count = std::max(max_count, bin.count);
    for (const auto& bin : bins) {
        if (bin.count == 0) continue;
        const double h = (band_bottom - band_top) * static_cast<double>(bin.count) /
                         static_cast<double>(max_count);
        double px0 = 0.0, px1 = 0.0;
        if (categorical) {
            px0 = xs(bin.lower - 0.35);
            px1 = xs(bin.lower + 0.35);
        } else {
            px0 = xs(bin.lower) + 0.5;
            px1 = xs(bin.upper) - 0.5;
        }
        if (px1 > px0) canvas.rect(px0, band_bottom - h, px1 - px0, h, kHistFill);
    }
    canvas.line(xs.r0, band_bottom, xs.r1, band_bottom, kAxisStroke);
}

/// Shared scaffolding for the three curve kinds: resolves scales, draws the
/// frame, ticks and labels, and leaves the curve body to the caller.
struct CurveLayout {
    LinearScale xs;
    LinearScale ys;
    Frame frame;

    CurveLayout(Canvas& canvas, const explain::CurveSet& curve, const PlotSpec& spec,
                double values_lo, double values_hi, bool with_histogram)
        : frame(spec, 64.0, with_histogram ? 120.0 : 42.0) {
        double x_lo = curve.grid.front();
        double x_hi = curve.grid.back();
        if (curve.categorical) {
            x_lo = -0.6;
            x_hi = static_cast<double>(curve.grid.size() - 1) + 0.6;
        } else if (!curve.histogram.empty()) {
            x_lo = std::min(x_lo, curve.histogram.front().lower);
            x_hi = std::max(x_hi, curve.histogram.back().upper);
        }
        if (x_lo == x_hi) {
            x_lo -= 0.5;
            x_hi += 0.5;
        }
        xs = {x_lo, x_hi, frame.x0, frame.x1};

        const auto [y_lo, y_hi] = padded(values_lo, values_hi, 0.06);
        ys = {y_lo, y_hi, frame.y1, frame.y0};

        canvas.line(frame.x0, frame.y0, frame.x0, frame.y1, kAxisStroke);
        canvas.line(frame.x0, frame.y1, frame.x1, frame.y1, kAxisStroke);
        draw_y_ticks(canvas, frame, ys);
        if (curve.categorical) {
            for (std::size_t k = 0; k < curve.grid.size(); ++k) {
                const double px = xs(static_cast<double>(k));
                canvas.text(px, frame.y1 + 16.0, curve.grid_labels[k], "middle", 11.0);
            }
        } else {
            draw_x_ticks(canvas, frame, xs);
        }
    }

    /// Grid position of point k in pixel space.
    double x_at(const explain::CurveSet& curve, std::size_t k) const {
        return xs(curve.categorical ? static_cast<double>(k) : curve.grid[k]);
    }
};

}  // namespace

std::string to_string(PlotKind kind) {
    switch (kind) {
        case PlotKind::ImportanceBars: return "importance_bars";
        case PlotKind::PdpWithHistogram: return "pdp_with_histogram";
        case PlotKind::IceSpaghetti: return "ice_spaghetti";
        case PlotKind::AleLine: return "ale_line";
        case PlotKind::Waterfall: return "waterfall";
    }
    throw ValidationError("unknown plot kind");
}

PlotKind plot_kind_from_string(std::string_view name) {
    if (name == "importance_bars") return PlotKind::ImportanceBars;
    if (name == "pdp_with_histogram") return PlotKind::PdpWithHistogram;
    if (name == "ice_spaghetti") return PlotKind::IceSpaghetti;
    if (name == "ale_line") return PlotKind::AleLine;
    if (name == "waterfall") return PlotKind::Waterfall;
    throw ValidationError("unknown plot kind '" + std::string(name) + "'");
}

PlotSpec default_plot_spec(PlotKind kind) {
    PlotSpec spec;
    spec.kind = kind;
    switch (kind) {
        case PlotKind::ImportanceBars:
            spec.x_label = "importance (loss increase)";
            break;
        case PlotKind::PdpWithHistogram:
            spec.height = 520.0;
            spec.y_label = "partial dependence";
            break;
        case PlotKind::IceSpaghetti:
            spec.y_label = "prediction";
            break;
        case PlotKind::AleLine:
            spec.height = 420.0;
            spec.y_label = "accumulated local effect";
            break;
        case PlotKind::Waterfall:
            spec.x_label = "prediction";
            break;
    }
    return spec;
}

std::string render(const explain::ImportanceReport& report, const PlotSpec& spec) {
    check_spec(spec, PlotKind::ImportanceBars);
    if (report.entries.empty()) throw ValidationError("importance report has no entries");

    // Figure convention: most important on top.
    std::vector<std::size_t> order(report.entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return report.entries[a].vi > report.entries[b].vi;
    });

    double lo = 0.0, hi = 0.0;
    for (const auto& entry : report.entries) {
        lo = std::min(lo, entry.vi);
        hi = std::max(hi, entry.vi);
    }
    if (lo == hi) hi = lo + 1.0;

    Canvas canvas;
    canvas.open(spec);
    const Frame frame(spec, 150.0);
    const LinearScale xs{lo, hi, frame.x0, frame.x1};

    const double slot = (frame.y1 - frame.y0) / static_cast<double>(order.size());
    const double bar_h = slot * 0.68;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const auto& entry = report.entries[order[rank]];
        const double y = frame.y0 + slot * static_cast<double>(rank) + (slot - bar_h) / 2.0;
        const double px0 = xs(std::min(0.0, entry.vi));
        const double px1 = xs(std::max(0.0, entry.vi));
        canvas.rect(px0, y, px1 - px0, bar_h, kBarFill);
        canvas.text(frame.x0 - 8.0, y + bar_h / 2.0 + 4.0, entry.feature, "end", 12.0);
        canvas.text(px1 + 5.0, y + bar_h / 2.0 + 4.0, fmt_value(entry.vi), "start", 11.0);
    }

    canvas.line(xs(0.0), frame.y0, xs(0.0), frame.y1, kAxisStroke);
    canvas.line(frame.x0, frame.y1, frame.x1, frame.y1, kAxisStroke);
    draw_x_ticks(canvas, frame, xs);
    draw_title_and_labels(canvas, spec, frame);
    return canvas.close();
}

std::string render(const explain::CurveSet& curve, const PlotSpec& spec) {
    if (curve.grid.empty()) throw ValidationError("curve set has an empty grid");

    if (curve.kind == explain::CurveKind::Pdp) {
        check_spec(spec, PlotKind::PdpWithHistogram);
        if (curve.values.empty()) throw ValidationError("curve set has no values");

        Canvas canvas;
        canvas.open(spec);
        const auto [v_lo, v_hi] =
            std::minmax_element(curve.values.begin(), curve.values.end());
        CurveLayout layout(canvas, curve, spec, *v_lo, *v_hi, true);

        if (curve.categorical) {
            for (std::size_t k = 0; k < curve.grid.size(); ++k)
                canvas.circle(layout.x_at(curve, k), layout.ys(curve.values[k]), 4.0,
                              kLineStroke);
        } else {
            std::vector<std::pair<double, double>> pts;
            for (std::size_t k = 0; k < curve.grid.size(); ++k)
                pts.emplace_back(layout.x_at(curve, k), layout.ys(curve.values[k]));
            canvas.polyline(pts, kLineStroke, 2.0);
        }

        // Feature distribution beneath the curve (the plot's second panel).
        draw_histogram(canvas, curve.histogram, layout.xs, layout.frame.y1 + 18.0,
                       spec.height - 44.0, curve.categorical);
        draw_title_and_labels(canvas, spec, layout.frame);
        return canvas.close();
    }

    if (curve.kind == explain::CurveKind::Ice) {
        check_spec(spec, PlotKind::IceSpaghetti);
        if (curve.ice_values.empty()) throw ValidationError("ice curve set has no instances");

        double v_lo = curve.ice_values[0][0];
        double v_hi = v_lo;
        for (const auto& one : curve.ice_values) {
            for (double v : one) {
                v_lo = std::min(v_lo, v);
                v_hi = std::max(v_hi, v);
            }
        }

        Canvas canvas;
        canvas.open(spec);
        CurveLayout layout(canvas, curve, spec, v_lo, v_hi, false);

        for (const auto& one : curve.ice_values) {
            std::vector<std::pair<double, double>> pts;
            for (std::size_t k = 0; k < curve.grid.size(); ++k)
                pts.emplace_back(layout.x_at(curve, k), layout.ys(one[k]));
            canvas.polyline(pts, kFaintStroke, 1.0, 0.45);
        }

        // Pointwise mean on top, the aggregate the spaghetti disaggregates.
        std::vector<std::pair<double, double>> mean_pts;
        for (std::size_t k = 0; k < curve.grid.size(); ++k) {
            double sum = 0.0;
            for (const auto& one : curve.ice_values) sum += one[k];
            mean_pts.emplace_back(layout.x_at(curve, k),
                                  layout.ys(sum / static_cast<double>(curve.ice_values.size())));
        }
        canvas.polyline(mean_pts, kLineStroke, 2.5);
        draw_title_and_labels(canvas, spec, layout.frame);
        return canvas.close();
    }

    check_spec(spec, PlotKind::AleLine);
    if (curve.values.empty()) throw ValidationError("curve set has no values");

    double v_lo = 0.0, v_hi = 0.0;  // keep the zero reference in view
    for (double v : curve.values) {
        v_lo = std::min(v_lo, v);
        v_hi = std::max(v_hi, v);
    }

    Canvas canvas;
    canvas.open(spec);
    CurveLayout layout(canvas, curve, spec, v_lo, v_hi, false);

    canvas.line(layout.frame.x0, layout.ys(0.0), layout.frame.x1, layout.ys(0.0), kFaintStroke,
                1.0, true);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < curve.grid.size(); ++k)
        pts.emplace_back(layout.xs(curve.grid[k]), layout.ys(curve.values[k]));
    canvas.polyline(pts, kLineStroke, 2.0);
    draw_title_and_labels(canvas, spec, layout.frame);
    return canvas.close();
}

std::vector<WaterfallRow> waterfall_layout(const explain::AttributionSet& attribution) {
    if (attribution.contributions.empty())
        throw ValidationError("attribution set has no contributions");

    std::vector<WaterfallRow> rows;
    rows.push_back({"intercept", 0.0, attribution.intercept, 0});
    double cumulative = attribution.intercept;
    for (const auto& c : attribution.contributions) {
        std::string label = c.feature;
        if (!c.instance_value.empty()) label += " = " + c.instance_value;
        const int direction = c.value > 0.0 ? 1 : (c.value < 0.0 ? -1 : 0);
        rows.push_back({std::move(label), cumulative, cumulative + c.value, direction});
        cumulative += c.value;
    }
    rows.push_back({"prediction", 0.0, cumulative, 0});
    return rows;
}

std::string render(const explain::AttributionSet& attribution, const PlotSpec& spec) {
    check_spec(spec, PlotKind::Waterfall);
    const auto rows = waterfall_layout(attribution);

    double lo = 0.0, hi = 0.0;
    for (const auto& row : rows) {
        lo = std::min({lo, row.start, row.end});
        hi = std::max({hi, row.start, row.end});
    }
    const auto [x_lo, x_hi] = padded(lo, hi, 0.05);

    Canvas canvas;
    canvas.open(spec);
    const Frame frame(spec, 200.0);
    const LinearScale xs{x_lo, x_hi, frame.x0, frame.x1};

    const double slot = (frame.y1 - frame.y0) / static_cast<double>(rows.size());
    const double bar_h = slot * 0.6;
    auto bar_center = [&](std::size_t r) {
        return frame.y0 + slot * static_cast<double>(r) + slot / 2.0;
    };

    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const double y = bar_center(r) - bar_h / 2.0;
        const char* fill = row.direction > 0 ? kPositiveFill
                         : row.direction < 0 ? kNegativeFill
                                             : kNeutralFill;
        const double px0 = xs(std::min(row.start, row.end));
        const double px1 = xs(std::max(row.start, row.end));
        // zero-width steps still get a visible sliver
        canvas.rect(px0, y, std::max(px1 - px0, 1.0), bar_h, fill);
        canvas.text(frame.x0 - 8.0, y + bar_h / 2.0 + 4.0, row.label, "end", 12.0);

        const bool is_step = r > 0 && r + 1 < rows.size();
        const double shown = is_step ? row.end - row.start : row.end;
        std::string value_text = fmt_value(shown);
        if (is_step && shown > 0.0) value_text = "+" + value_text;
        canvas.text(px1 + 5.0, y + bar_h / 2.0 + 4.0, value_text, "start", 11.0);

        if (r + 1 < rows.size())
            canvas.line(xs(row.end), bar_center(r), xs(row.end), bar_center(r + 1),
                        kFaintStroke, 1.0, true);
    }

    canvas.line(frame.x0, frame.y1, frame.x1, frame.y1, kAxisStroke);
    draw_x_ticks(canvas, frame, xs);
    draw_title_and_labels(canvas, spec, frame);
    return canvas.close();
}

}  // namespace claro::report
