#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cctype>
#include <filesystem>
#include <string>
#include <vector>

#include "claro/error.hpp"
#include "claro/explain/attribution.hpp"
#include "claro/explain/curves.hpp"
#include "claro/explain/importance.hpp"
#include "claro/models/glm.hpp"
#include "claro/report/export.hpp"
#include "claro/report/plot.hpp"

using namespace claro;
using namespace claro::explain;
using namespace claro::models;
using namespace claro::report;
using namespace claro::tabular;

namespace {

Schema ab_schema() {
    return Schema({{"a", ColumnKind::numeric()}, {"b", ColumnKind::numeric()}}, "y");
}

Dataset ab_dataset(std::vector<double> a, std::vector<double> b) {
    std::vector<double> y(a.size(), 0.0);
    return Dataset(ab_schema(), {NumericColumn(std::move(a)), NumericColumn(std::move(b))},
                   std::move(y));
}

GlmModel product_ab() {
    const Schema schema = ab_schema();
    GlmSpec spec;
    spec.link = Link::Identity;
    spec.terms.push_back(interaction(numeric_term(schema, "a"), numeric_term(schema, "b")));
    return GlmModel(schema, spec, 0.0, {1.0});
}

AttributionSet worked_attribution() {
    const GlmModel model = product_ab();
    const BackgroundSet bg(ab_dataset({0.0, 2.0}, {0.0, 2.0}));
    const Dataset instance = ab_dataset({1.0}, {1.0});
    return break_down(model, bg, instance, {0, 1});
}

ImportanceReport toy_importance(std::vector<std::string> names, std::vector<double> vis) {
    ImportanceReport report;
    report.baseline_loss = 1.0;
    report.repetitions = 1;
    for (std::size_t j = 0; j < names.size(); ++j) {
        ImportanceEntry entry;
        entry.feature = std::move(names[j]);
        entry.vi = vis[j];
        entry.permuted_loss = report.baseline_loss + vis[j];
        entry.per_repetition = {entry.permuted_loss};
        report.entries.push_back(std::move(entry));
    }
    return report;
}

/// Tiny well-formedness scanner: every open tag closes in order, exactly
/// one element at the top level, quotes inside tags are balanced.
bool well_formed_xml(const std::string& doc, std::string* root_name) {
    std::vector<std::string> stack;
    std::size_t roots = 0;
    std::size_t i = 0;
    while (i < doc.size()) {
        if (doc[i] != '<') {
            ++i;
            continue;
        }
        if (doc.compare(i, 2, "<?") == 0) {
            const auto end = doc.find("?>", i);
            if (end == std::string::npos) return false;
            i = end + 2;
            continue;
        }
        const bool closing = doc.compare(i, 2, "</") == 0;
        std::size_t p = i + (closing ? 2 : 1);
        std::string name;
        while (p < doc.size() && (std::isalnum(static_cast<unsigned char>(doc[p])) != 0 ||
                                  doc[p] == '-' || doc[p] == ':'))
            name += doc[p++];
        if (name.empty()) return false;

        // advance to the tag's real end, honoring quoted attribute values
        bool in_quote = false;
        while (p < doc.size() && (in_quote || doc[p] != '>')) {
            if (doc[p] == '"') in_quote = !in_quote;
            ++p;
        }
        if (p >= doc.size()) return false;

        if (closing) {
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else if (doc[p - 1] != '/') {
            if (stack.empty()) {
                ++roots;
                if (roots == 1 && root_name != nullptr) *root_name = name;
            }
            stack.push_back(name);
        } else if (stack.empty()) {
            ++roots;
        }
        i = p + 1;
    }
    return stack.empty() && roots == 1;
}

std::filesystem::path test_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "claro_report_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("importance bars are sorted by descending vi") {
    const auto report = toy_importance({"alpha", "beta", "gamma"}, {2.0, 1.0, 3.0});
    const std::string svg = render(report, default_plot_spec(PlotKind::ImportanceBars));

    const auto gamma = svg.find(">gamma<");
    const auto alpha = svg.find(">alpha<");
    const auto beta = svg.find(">beta<");
    REQUIRE(gamma != std::string::npos);
    REQUIRE(alpha != std::string::npos);
    REQUIRE(beta != std::string::npos);
    CHECK(gamma < alpha);
    CHECK(alpha < beta);
}

TEST_CASE("waterfall layout walks the worked example to its prediction") {
    const AttributionSet at = worked_attribution();
    const auto rows = waterfall_layout(at);

    REQUIRE(rows.size() == 4);
    CHECK(rows[0].label == "intercept");
    CHECK(rows[0].start == 0.0);
    CHECK(rows[0].end == 2.0);
    CHECK(rows[0].direction == 0);

    CHECK(rows[1].label == "a = 1.0");
    CHECK(rows[1].start == 2.0);
    CHECK(rows[1].end == 1.0);
    CHECK(rows[1].direction == -1);

    CHECK(rows[2].label == "b = 1.0");
    CHECK(rows[2].start == 1.0);
    CHECK(rows[2].end == 1.0);
    CHECK(rows[2].direction == 0);

    CHECK(rows[3].label == "prediction");
    CHECK(rows[3].start == 0.0);
    CHECK(rows[3].end == 1.0);
    CHECK(rows[3].end == doctest::Approx(at.prediction));
}

TEST_CASE("waterfall marks step directions with distinct fills") {
    AttributionSet at;
    at.intercept = 1.0;
    at.prediction = 1.5;
    at.method = "break_down";
    at.contributions.push_back({"up", 2.0, 0.0, "5.0"});
    at.contributions.push_back({"down", -1.5, 0.0, "0.0"});

    const std::string svg = render(at, default_plot_spec(PlotKind::Waterfall));
    CHECK(svg.find("#2e7d32") != std::string::npos);
    CHECK(svg.find("#c62828") != std::string::npos);
    CHECK(svg.find("#78909c") != std::string::npos);
    CHECK(svg.find(">up = 5.0<") != std::string::npos);
}

TEST_CASE("every plot kind renders well-formed xml with a single svg root") {
    const GlmModel model = product_ab();
    const Dataset ds = ab_dataset({1.0, 2.0, 3.0, 4.0, 5.0}, {0.5, 1.5, 2.5, 3.5, 4.5});

    std::vector<std::string> docs;
    docs.push_back(render(toy_importance({"a", "b"}, {0.5, -0.25}),
                          default_plot_spec(PlotKind::ImportanceBars)));
    docs.push_back(render(pdp(model, ds, 0), default_plot_spec(PlotKind::PdpWithHistogram)));
    docs.push_back(render(ice(model, ds, 0), default_plot_spec(PlotKind::IceSpaghetti)));
    docs.push_back(render(ale(model, ds, 0, 3), default_plot_spec(PlotKind::AleLine)));
    docs.push_back(render(worked_attribution(), default_plot_spec(PlotKind::Waterfall)));

    // a categorical pdp exercises the level-labeled variant
    const Schema schema(
        {{"color", ColumnKind::categorical({"red", "green"})}, {"a", ColumnKind::numeric()}},
        "y");
    GlmSpec cat_spec;
    cat_spec.link = Link::Identity;
    cat_spec.terms.push_back(level_term(schema, "color", "green"));
    const GlmModel cat_model(schema, cat_spec, 1.0, {0.5});
    const Dataset cat_ds(schema, {CategoricalColumn{0, 1, 1}, NumericColumn{1.0, 2.0, 3.0}},
                         {0.0, 0.0, 0.0});
    docs.push_back(render(pdp(cat_model, cat_ds, 0),
                          default_plot_spec(PlotKind::PdpWithHistogram)));

    for (const auto& svg : docs) {
        std::string root;
        CHECK(well_formed_xml(svg, &root));
        CHECK(root == "svg");
    }
}

TEST_CASE("rendering is byte-stable across repeated and rebuilt inputs") {
    const GlmModel model = product_ab();
    const Dataset ds = ab_dataset({0.1, 0.7, 1.3, 2.9}, {3.0, 1.0, 4.0, 1.0});

    PlotSpec spec = default_plot_spec(PlotKind::PdpWithHistogram);
    spec.title = "partial dependence of a";
    const CurveSet curve = pdp(model, ds, 0);
    CHECK(render(curve, spec) == render(curve, spec));
    CHECK(render(curve, spec) == render(pdp(model, ds, 0), spec));

    const std::string wf = render(worked_attribution(),
                                  default_plot_spec(PlotKind::Waterfall));
    CHECK(wf == render(worked_attribution(), default_plot_spec(PlotKind::Waterfall)));
}

TEST_CASE("render rejects mismatched kinds, empty artifacts and bad dims") {
    const GlmModel model = product_ab();
    const Dataset ds = ab_dataset({1.0, 2.0}, {0.5, 1.5});
    const CurveSet curve = pdp(model, ds, 0);

    CHECK_THROWS_WITH_AS(render(curve, default_plot_spec(PlotKind::AleLine)),
                         doctest::Contains("does not match"), ValidationError);
    CHECK_THROWS_AS(render(toy_importance({"a"}, {1.0}),
                           default_plot_spec(PlotKind::Waterfall)),
                    ValidationError);

    ImportanceReport empty_report;
    CHECK_THROWS_AS(render(empty_report, default_plot_spec(PlotKind::ImportanceBars)),
                    ValidationError);
    AttributionSet empty_at;
    CHECK_THROWS_AS(render(empty_at, default_plot_spec(PlotKind::Waterfall)), ValidationError);

    PlotSpec bad = default_plot_spec(PlotKind::PdpWithHistogram);
    bad.width = 0.0;
    CHECK_THROWS_AS(render(curve, bad), ValidationError);
}

TEST_CASE("plot kind names round trip") {
    for (PlotKind kind : {PlotKind::ImportanceBars, PlotKind::PdpWithHistogram,
                          PlotKind::IceSpaghetti, PlotKind::AleLine, PlotKind::Waterfall}) {
        CHECK(plot_kind_from_string(to_string(kind)) == kind);
        const PlotSpec spec = default_plot_spec(kind);
        CHECK(spec.kind == kind);
        CHECK(spec.width > 0.0);
        CHECK(spec.height > 0.0);
    }
    CHECK_THROWS_AS(plot_kind_from_string("pie_chart"), ValidationError);
}

TEST_CASE("curve csv has one row per grid point") {
    const GlmModel model = product_ab();
    const Dataset ds = ab_dataset({1.0, 2.0, 3.0, 6.0}, {0.5, 1.5, 2.5, 3.5});

    const CurveSet curve = pdp(model, ds, 0);
    const std::string csv = to_csv(curve);
    const auto rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(rows == curve.grid.size() + 1);  // header + one per grid point
    CHECK(csv.rfind("grid,label,value\n", 0) == 0);

    const CurveSet curves = ice(model, ds, 0, {}, {0, 2});
    const std::string ice_csv = to_csv(curves);
    const auto ice_rows =
        static_cast<std::size_t>(std::count(ice_csv.begin(), ice_csv.end(), '\n'));
    CHECK(ice_rows == 2 * curves.grid.size() + 1);
}

TEST_CASE("attribution csv starts at the intercept and ends at the prediction") {
    const AttributionSet at = worked_attribution();
    const std::string csv = to_csv(at);
    CHECK(csv ==
          "feature,contribution,cumulative\n"
          "intercept,2.0,2.0\n"
          "a,-1.0,1.0\n"
          "b,0.0,1.0\n");
}

TEST_CASE("importance csv carries the report rows in order") {
    const auto report = toy_importance({"x", "y"}, {0.5, 2.0});
    CHECK(to_csv(report) ==
          "feature,vi,permuted_loss,baseline_loss\n"
          "x,0.5,1.5,1.0\n"
          "y,2.0,3.0,1.0\n");
}

TEST_CASE("csv fields with delimiters are quoted") {
    const auto report = toy_importance({"weird,name", "has\"quote"}, {1.0, 2.0});
    const std::string csv = to_csv(report);
    CHECK(csv.find("\"weird,name\"") != std::string::npos);
    CHECK(csv.find("\"has\"\"quote\"") != std::string::npos);
}

TEST_CASE("json exports round trip bit for bit through files") {
    const GlmModel model = product_ab();
    const Dataset ds = ab_dataset({0.25, 1.0 / 3.0, 2.5}, {1e-7, 0.5, 8.0});
    const auto dir = test_dir();

    const auto report = permutation_importance(model, ds, LossKind::Mse, 3, 17);
    export_artifact(report, ExportFormat::Json, dir / "imp.json");
    CHECK(import_importance(dir / "imp.json").to_json().dump() == report.to_json().dump());

    const CurveSet curve = ale(model, ds, 0, 2);
    export_artifact(curve, ExportFormat::Json, dir / "curve.json");
    CHECK(import_curves(dir / "curve.json").to_json().dump() == curve.to_json().dump());

    const AttributionSet at = worked_attribution();
    export_artifact(at, ExportFormat::Json, dir / "at.json");
    CHECK(import_attribution(dir / "at.json").to_json().dump() == at.to_json().dump());

    export_artifact(at, ExportFormat::Csv, dir / "at.csv");
    CHECK(read_text_file(dir / "at.csv") == to_csv(at));

    CHECK_THROWS_AS(import_curves(dir / "missing.json"), ValidationError);
    write_text_file(dir / "broken.json", "{not json");
    CHECK_THROWS_AS(import_curves(dir / "broken.json"), ValidationError);
}
