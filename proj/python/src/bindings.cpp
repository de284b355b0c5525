// Python bindings for the core pipeline: data handling, the three model
// families, every explainer and the report renderers. Thin wrappers only;
// all behavior lives in the C++ library.

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "claro/cli/run.hpp"
#include "claro/error.hpp"
#include "claro/explain/attribution.hpp"
#include "claro/explain/curves.hpp"
#include "claro/explain/importance.hpp"
#include "claro/models/glm.hpp"
#include "claro/models/nn.hpp"
#include "claro/models/serialize.hpp"
#include "claro/models/tree.hpp"
#include "claro/report/export.hpp"
#include "claro/report/plot.hpp"
#include "claro/tabular/csv.hpp"
#include "claro/tabular/dataset.hpp"
#include "claro/tabular/synthetic.hpp"

namespace py = pybind11;

using namespace claro;
using namespace claro::explain;
using namespace claro::models;
using namespace claro::tabular;

namespace {

report::PlotSpec spec_for(const CurveSet& curve) {
    switch (curve.kind) {
        case CurveKind::Ice:
            return report::default_plot_spec(report::PlotKind::IceSpaghetti);
        case CurveKind::Ale:
            return report::default_plot_spec(report::PlotKind::AleLine);
        case CurveKind::Pdp:
        default:
            return report::default_plot_spec(report::PlotKind::PdpWithHistogram);
    }
}

std::vector<std::size_t> default_ordering(const Predictor& model) {
    std::vector<std::size_t> ordering(model.schema().feature_count());
    for (std::size_t j = 0; j < ordering.size(); ++j) ordering[j] = j;
    return ordering;
}

py::dict fit_log(const NnFitResult& fit) {
    py::list epochs;
    for (const auto& e : fit.epochs) {
        py::dict row;
        row["analysis_loss"] = e.train_loss;
        row["assessment_loss"] = e.assessment_loss;
        epochs.append(row);
    }
    py::dict log;
    log["epochs"] = epochs;
    log["best_epoch"] = fit.best_epoch;
    log["best_assessment_loss"] = fit.best_assessment_loss;
    log["stopped_early"] = fit.stopped_early;
    return log;
}

}  // namespace

PYBIND11_MODULE(_claro, m) {
    m.doc() = "model-agnostic explanations for tabular pricing models";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ComputationError>(m, "ComputationError", PyExc_RuntimeError);

    py::class_<Schema>(m, "Schema")
        .def_property_readonly("feature_names",
                               [](const Schema& s) {
                                   std::vector<std::string> names;
                                   for (const auto& f : s.features()) names.push_back(f.name);
                                   return names;
                               })
        .def_property_readonly("response", &Schema::response)
        .def("is_categorical",
             [](const Schema& s, const std::string& feature) {
                 return s.feature(s.require_feature(feature)).kind.is_categorical();
             },
             py::arg("feature"))
        .def("levels",
             [](const Schema& s, const std::string& feature) {
                 return s.feature(s.require_feature(feature)).kind.levels();
             },
             py::arg("feature"));

    py::class_<Dataset>(m, "Dataset")
        .def_property_readonly("n_rows", &Dataset::n_rows)
        .def_property_readonly("schema", &Dataset::schema)
        .def_property_readonly("response",
                               [](const Dataset& ds) { return ds.response(); })
        .def_property_readonly("weights", [](const Dataset& ds) { return ds.weights(); })
        .def("select_rows", [](const Dataset& ds, const std::vector<std::size_t>& rows) {
            return ds.select_rows(rows);
        });

    py::class_<Predictor>(m, "Predictor")
        .def_property_readonly("type_name", &Predictor::type_name)
        .def_property_readonly("schema", &Predictor::schema)
        .def("predict", [](const Predictor& p, const Dataset& ds) { return p.predict(ds); })
        .def("predict_row",
             [](const Predictor& p, const Dataset& ds, std::size_t row) {
                 return p.predict_row(ds, row);
             },
             py::arg("dataset"), py::arg("row"));

    py::class_<ImportanceEntry>(m, "ImportanceEntry")
        .def_readonly("feature", &ImportanceEntry::feature)
        .def_readonly("permuted_loss", &ImportanceEntry::permuted_loss)
        .def_readonly("vi", &ImportanceEntry::vi)
        .def_readonly("per_repetition", &ImportanceEntry::per_repetition);

    py::class_<ImportanceReport>(m, "ImportanceReport")
        .def_readonly("baseline_loss", &ImportanceReport::baseline_loss)
        .def_readonly("repetitions", &ImportanceReport::repetitions)
        .def_readonly("entries", &ImportanceReport::entries)
        .def("to_json", [](const ImportanceReport& r) { return r.to_json().dump(2); });

    py::class_<CurveSet>(m, "CurveSet")
        .def_readonly("feature", &CurveSet::feature)
        .def_readonly("categorical", &CurveSet::categorical)
        .def_readonly("grid", &CurveSet::grid)
        .def_readonly("grid_labels", &CurveSet::grid_labels)
        .def_readonly("values", &CurveSet::values)
        .def_readonly("ice_values", &CurveSet::ice_values)
        .def_readonly("ice_instances", &CurveSet::ice_instances)
        .def("to_json", [](const CurveSet& c) { return c.to_json().dump(2); });

    py::class_<Attribution>(m, "Attribution")
        .def_readonly("feature", &Attribution::feature)
        .def_readonly("value", &Attribution::value)
        .def_readonly("std_error", &Attribution::std_error)
        .def_readonly("instance_value", &Attribution::instance_value);

    py::class_<AttributionSet>(m, "AttributionSet")
        .def_readonly("intercept", &AttributionSet::intercept)
        .def_readonly("prediction", &AttributionSet::prediction)
        .def_readonly("method", &AttributionSet::method)
        .def_readonly("samples", &AttributionSet::samples)
        .def_readonly("contributions", &AttributionSet::contributions)
        .def("to_json", [](const AttributionSet& a) { return a.to_json().dump(2); });

    py::class_<BackgroundSet>(m, "BackgroundSet")
        .def(py::init<Dataset>(), py::arg("dataset"))
        .def_static("sample", &BackgroundSet::sample, py::arg("dataset"), py::arg("max_rows"),
                    py::arg("seed"));

    m.def(
        "generate_synthetic",
        [](std::size_t rows, std::uint64_t seed, bool null_effects) {
            const auto effects = null_effects ? SyntheticEffects::null_effects()
                                              : SyntheticEffects::defaults();
            auto [ds, truth] = generate_synthetic(rows, seed, effects);
            return py::make_tuple(std::move(ds), truth.null_features());
        },
        py::arg("rows"), py::arg("seed") = 0, py::arg("null_effects") = false,
        "Synthetic policy dataset; returns (dataset, null_feature_names).");

    m.def("load_schema", &load_schema, py::arg("path"));
    m.def("save_schema", &save_schema, py::arg("schema"), py::arg("path"));
    m.def("read_csv",
          [](const std::filesystem::path& path, const Schema& schema) {
              return read_csv(path, schema);
          },
          py::arg("path"), py::arg("schema"));
    m.def("write_csv",
          [](const Dataset& ds, const std::filesystem::path& path) { write_csv(ds, path); },
          py::arg("dataset"), py::arg("path"));

    m.def(
        "split",
        [](const Dataset& ds, double test_fraction, double assessment_fraction,
           std::uint64_t seed) {
            SplitSpec spec;
            spec.test_fraction = test_fraction;
            spec.assessment_fraction = assessment_fraction;
            spec.seed = seed;
            auto parts = split(ds, spec);
            return py::make_tuple(std::move(parts.analysis), std::move(parts.assessment),
                                  std::move(parts.test));
        },
        py::arg("dataset"), py::arg("test_fraction") = 0.2,
        py::arg("assessment_fraction") = 0.25, py::arg("seed") = 0,
        "Seeded shuffle split; returns (analysis, assessment, test).");

    m.def(
        "fit_glm",
        [](const Dataset& ds, const std::string& link, double ridge) {
            GlmSpec spec;
            spec.link = link_from_string(link);
            spec.terms = main_effect_terms(ds.schema());
            GlmFitOptions opts;
            opts.ridge = ridge;
            return std::unique_ptr<Predictor>(new GlmModel(fit_glm(ds, spec, opts)));
        },
        py::arg("dataset"), py::arg("link") = "identity", py::arg("ridge") = 0.0,
        "Main-effects generalized linear model.");

    m.def(
        "fit_tree",
        [](const Dataset& ds, int max_depth, std::size_t min_leaf_size) {
            TreeFitOptions opts;
            opts.max_depth = max_depth;
            opts.min_leaf_size = min_leaf_size;
            return std::unique_ptr<Predictor>(new TreeModel(fit_tree(ds, opts)));
        },
        py::arg("dataset"), py::arg("max_depth") = 4, py::arg("min_leaf_size") = 1);

    m.def(
        "fit_nn",
        [](const Dataset& analysis, const Dataset& assessment, double learning_rate,
           std::size_t batch_size, int patience, int max_epochs, std::uint64_t seed,
           std::size_t hidden_width, std::size_t embed_threshold) {
            TrainConfig cfg;
            cfg.learning_rate = learning_rate;
            cfg.batch_size = batch_size;
            cfg.early_stopping_patience = patience;
            cfg.max_epochs = max_epochs;
            cfg.seed = seed;
            NnArchitecture arch;
            arch.hidden_width = hidden_width;
            arch.embed_threshold = embed_threshold;
            auto fit = fit_nn(analysis, assessment, cfg, arch);
            auto log = fit_log(fit);
            return py::make_tuple(
                std::unique_ptr<Predictor>(new NnModel(std::move(fit.model))), log);
        },
        py::arg("analysis"), py::arg("assessment"), py::arg("learning_rate") = 0.1,
        py::arg("batch_size") = 10000, py::arg("patience") = 5, py::arg("max_epochs") = 100,
        py::arg("seed") = 0, py::arg("hidden_width") = 64, py::arg("embed_threshold") = 6,
        "Trains the feedforward network; returns (model, log).");

    m.def("save_model",
          [](const Predictor& model, const std::filesystem::path& path) {
              save_model(model, path);
          },
          py::arg("model"), py::arg("path"));
    m.def("load_model", &load_model, py::arg("path"));

    m.def(
        "permutation_importance",
        [](const Predictor& model, const Dataset& ds, const std::string& loss,
           std::size_t repetitions, std::uint64_t seed) {
            return permutation_importance(model, ds, loss_kind_from_string(loss), repetitions,
                                          seed);
        },
        py::arg("model"), py::arg("dataset"), py::arg("loss") = "mse",
        py::arg("repetitions") = 5, py::arg("seed") = 0);

    m.def(
        "pdp",
        [](const Predictor& model, const Dataset& ds, const std::string& feature,
           std::size_t points) {
            GridSpec grid;
            grid.points = points;
            return pdp(model, ds, model.schema().require_feature(feature), grid);
        },
        py::arg("model"), py::arg("dataset"), py::arg("feature"), py::arg("points") = 21);

    m.def(
        "ice",
        [](const Predictor& model, const Dataset& ds, const std::string& feature,
           std::size_t points, std::optional<std::vector<std::size_t>> instances) {
            GridSpec grid;
            grid.points = points;
            return ice(model, ds, model.schema().require_feature(feature), grid,
                       instances.value_or(std::vector<std::size_t>{}));
        },
        py::arg("model"), py::arg("dataset"), py::arg("feature"), py::arg("points") = 21,
        py::arg("instances") = std::nullopt);

    m.def(
        "ale",
        [](const Predictor& model, const Dataset& ds, const std::string& feature,
           std::size_t bins) {
            return ale(model, ds, model.schema().require_feature(feature), bins);
        },
        py::arg("model"), py::arg("dataset"), py::arg("feature"), py::arg("bins") = 10);

    m.def(
        "break_down",
        [](const Predictor& model, const BackgroundSet& bg, const Dataset& instance,
           std::optional<std::vector<std::size_t>> ordering) {
            return break_down(model, bg, instance,
                              ordering ? *ordering : default_ordering(model));
        },
        py::arg("model"), py::arg("background"), py::arg("instance"),
        py::arg("ordering") = std::nullopt);

    m.def("greedy_ordering", &greedy_ordering, py::arg("model"), py::arg("background"),
          py::arg("instance"));

    m.def("shapley_exact", &shapley_exact, py::arg("model"), py::arg("background"),
          py::arg("instance"), py::arg("max_features") = 8);

    m.def("shapley_sampled", &shapley_sampled, py::arg("model"), py::arg("background"),
          py::arg("instance"), py::arg("samples"), py::arg("seed") = 0);

    m.def("render", [](const ImportanceReport& r) {
        return report::render(r, report::default_plot_spec(report::PlotKind::ImportanceBars));
    });
    m.def("render", [](const CurveSet& c) { return report::render(c, spec_for(c)); });
    m.def("render", [](const AttributionSet& a) {
        return report::render(a, report::default_plot_spec(report::PlotKind::Waterfall));
    });

    m.def("to_csv", [](const ImportanceReport& r) { return report::to_csv(r); });
    m.def("to_csv", [](const CurveSet& c) { return report::to_csv(c); });
    m.def("to_csv", [](const AttributionSet& a) { return report::to_csv(a); });

    m.def(
        "cli_run",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line pipeline; returns (code, stdout, stderr).");
}
