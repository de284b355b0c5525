#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <numeric>
#include <vector>

#include "claro/error.hpp"
#include "claro/models/glm.hpp"
#include "claro/models/nn.hpp"
#include "claro/models/predictor.hpp"
#include "claro/models/serialize.hpp"
#include "claro/models/tree.hpp"
#include "claro/rng.hpp"
#include "claro/tabular/synthetic.hpp"

using namespace claro;
using namespace claro::models;
using namespace claro::tabular;

namespace {

bool same_bits(double a, double b) {
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

Schema one_numeric_schema() {
    return Schema({{"age", ColumnKind::numeric()}}, "y");
}

Dataset numeric_dataset(std::vector<double> x, std::vector<double> y,
                        std::vector<double> w = {}) {
    return Dataset(one_numeric_schema(), {NumericColumn(std::move(x))}, std::move(y),
                   std::move(w));
}

}  // namespace

TEST_CASE("weighted_loss matches the hand computations") {
    const std::vector<double> ones{1.0, 1.0};
    CHECK(weighted_loss(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}, ones) ==
          0.0);
    CHECK(weighted_loss(std::vector<double>{0.0, 2.0}, std::vector<double>{0.0, 0.0}, ones) ==
          2.0);
    CHECK(weighted_loss(std::vector<double>{0.0, 2.0}, std::vector<double>{0.0, 0.0},
                        std::vector<double>{3.0, 1.0}) == 1.0);

    CHECK(weighted_loss(std::vector<double>{0.0, 2.0}, std::vector<double>{0.0, 0.0}, ones,
                        LossKind::Rmse) == doctest::Approx(std::sqrt(2.0)));
    CHECK(weighted_loss(std::vector<double>{0.0, 2.0}, std::vector<double>{0.0, 0.0}, ones,
                        LossKind::Mae) == 1.0);

    CHECK_THROWS_AS(weighted_loss(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}, ones),
                    ValidationError);
}

TEST_CASE("glm prediction follows the link and terms") {
    const Schema schema = one_numeric_schema();
    const Dataset ds = numeric_dataset({30.0, 0.0, -10.0}, {0.0, 0.0, 0.0});

    SUBCASE("all coefficients zero under a log link gives 1") {
        GlmSpec spec;
        spec.terms.push_back(numeric_term(schema, "age"));
        const GlmModel m(schema, spec, 0.0, {0.0});
        for (double p : m.predict(ds)) CHECK(p == 1.0);
    }

    SUBCASE("log link with an age slope") {
        GlmSpec spec;
        spec.terms.push_back(numeric_term(schema, "age"));
        const GlmModel m(schema, spec, std::log(100.0), {0.01});
        const auto pred = m.predict(ds);
        CHECK(pred[0] == doctest::Approx(100.0 * std::exp(0.3)).epsilon(1e-12));
        CHECK(pred[1] == doctest::Approx(100.0).epsilon(1e-12));
        CHECK(m.uses_feature(0));
    }

    SUBCASE("batch prediction equals row-at-a-time, any row order") {
        GlmSpec spec;
        spec.terms.push_back(numeric_term(schema, "age", 2));
        const GlmModel m(schema, spec, 0.3, {0.02});
        const auto batch = m.predict(ds);
        for (std::size_t i = 0; i < ds.n_rows(); ++i)
            CHECK(same_bits(batch[i], m.predict_row(ds, i)));

        const std::vector<std::size_t> rev{2, 1, 0};
        const auto reversed = m.predict(ds.select_rows(rev));
        for (std::size_t i = 0; i < 3; ++i) CHECK(same_bits(reversed[i], batch[2 - i]));
    }

    SUBCASE("level indicators and interactions multiply out") {
        const Schema s2({{"age", ColumnKind::numeric()},
                         {"body", ColumnKind::categorical({"sedan", "suv"})}},
                        "y");
        const Dataset d2(s2, {NumericColumn{2.0, 3.0}, CategoricalColumn{1, 0}}, {0.0, 0.0});

        const Term suv = level_term(s2, "body", "suv");
        CHECK(suv.eval(d2, 0) == 1.0);
        CHECK(suv.eval(d2, 1) == 0.0);

        const Term both = interaction(numeric_term(s2, "age"), level_term(s2, "body", "suv"));
        CHECK(both.eval(d2, 0) == 2.0);
        CHECK(both.eval(d2, 1) == 0.0);

        // main effects: one per numeric, one per non-reference level
        CHECK(main_effect_terms(s2).size() == 2);
        CHECK_THROWS_AS(numeric_term(s2, "body"), ValidationError);
        CHECK_THROWS_AS(level_term(s2, "body", "coupe"), ValidationError);
        CHECK_THROWS_AS(level_term(s2, "age", "suv"), ValidationError);
    }

    SUBCASE("schema mismatch is rejected at predict time") {
        GlmSpec spec;
        spec.terms.push_back(numeric_term(schema, "age"));
        const GlmModel m(schema, spec, 0.0, {0.0});
        const Schema other({{"foo", ColumnKind::numeric()}}, "y");
        const Dataset bad(other, {NumericColumn{1.0}}, {0.0});
        CHECK_THROWS_AS(m.predict(bad), ValidationError);
    }
}

TEST_CASE("fit_glm recovers known coefficients") {
    SUBCASE("identity link, exactly linear response") {
        const Dataset ds = numeric_dataset({0.0, 1.0, 2.0, 3.0, 4.0},
                                           {3.0, 5.0, 7.0, 9.0, 11.0});
        GlmSpec spec;
        spec.link = Link::Identity;
        spec.terms.push_back(numeric_term(ds.schema(), "age"));
        const GlmModel m = fit_glm(ds, spec);
        CHECK(m.intercept() == doctest::Approx(3.0).epsilon(1e-8));
        CHECK(m.coefficients()[0] == doctest::Approx(2.0).epsilon(1e-8));
    }

    SUBCASE("log link, noiseless exponential response") {
        std::vector<double> x, y;
        for (int i = 0; i < 30; ++i) {
            x.push_back(-2.0 + 4.0 * i / 29.0);
            y.push_back(std::exp(1.0 + 0.5 * x.back()));
        }
        const Dataset ds = numeric_dataset(std::move(x), std::move(y));
        GlmSpec spec;
        spec.terms.push_back(numeric_term(ds.schema(), "age"));
        const GlmModel m = fit_glm(ds, spec);
        CHECK(m.intercept() == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(m.coefficients()[0] == doctest::Approx(0.5).epsilon(1e-4));
    }

    SUBCASE("constant response pins the intercept") {
        const Dataset ds = numeric_dataset({1.0, 2.0, 3.0, 4.0}, {7.5, 7.5, 7.5, 7.5});
        GlmSpec spec;
        spec.link = Link::Identity;
        spec.terms.push_back(numeric_term(ds.schema(), "age"));
        const GlmModel m = fit_glm(ds, spec);
        CHECK(m.intercept() == doctest::Approx(7.5).epsilon(1e-8));
        CHECK(m.coefficients()[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
    }

    SUBCASE("intercept-only model fits the weighted mean") {
        const Dataset ds = numeric_dataset({1.0, 2.0}, {0.0, 4.0}, {3.0, 1.0});
        GlmSpec spec;
        spec.link = Link::Identity;
        const GlmModel m = fit_glm(ds, spec);
        CHECK(m.intercept() == doctest::Approx(1.0).epsilon(1e-12));
    }

    SUBCASE("duplicate terms make the design singular unless ridged") {
        const Dataset ds = numeric_dataset({0.0, 1.0, 2.0, 3.0}, {1.0, 2.0, 3.0, 4.0});
        GlmSpec spec;
        spec.link = Link::Identity;
        spec.terms.push_back(numeric_term(ds.schema(), "age"));
        spec.terms.push_back(numeric_term(ds.schema(), "age"));
        CHECK_THROWS_AS(fit_glm(ds, spec), ComputationError);

        GlmFitOptions ridged;
        ridged.ridge = 1e-8;
        CHECK_NOTHROW(fit_glm(ds, spec, ridged));
    }

    SUBCASE("log link refuses non-positive responses") {
        const Dataset ds = numeric_dataset({1.0, 2.0}, {0.0, 1.0});
        GlmSpec spec;
        spec.terms.push_back(numeric_term(ds.schema(), "age"));
        CHECK_THROWS_AS(fit_glm(ds, spec), ValidationError);
    }
}

TEST_CASE("glm json round trip preserves predictions bitwise") {
    const auto [ds, truth] = generate_synthetic(100, 21);
    GlmSpec spec;
    spec.link = Link::Identity;
    spec.terms = main_effect_terms(ds.schema());
    const GlmModel m = fit_glm(ds, spec, {.ridge = 1e-9});

    const GlmModel back = GlmModel::from_json(m.to_json());
    const auto a = m.predict(ds);
    const auto b = back.predict(ds);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_bits(a[i], b[i]));
}

TEST_CASE("fit_tree splits greedily on weighted variance") {
    SUBCASE("depth zero gives the weighted mean stump") {
        const Dataset ds = numeric_dataset({1.0, 2.0, 3.0, 4.0}, {1.0, 2.0, 3.0, 4.0},
                                           {1.0, 1.0, 2.0, 1.0});
        const TreeModel m = fit_tree(ds, {.max_depth = 0});
        CHECK(m.n_leaves() == 1);
        CHECK(m.depth() == 0);
        for (double p : m.predict(ds)) CHECK(p == doctest::Approx(2.6).epsilon(1e-12));
    }

    SUBCASE("step function found at depth one") {
        const Dataset ds = numeric_dataset({0.0, 1.0, 10.0, 11.0}, {1.0, 1.0, 5.0, 5.0});
        const TreeModel m = fit_tree(ds, {.max_depth = 1});
        CHECK(m.depth() == 1);
        CHECK(m.n_leaves() == 2);
        REQUIRE_FALSE(m.nodes()[0].is_leaf);
        CHECK(m.nodes()[0].threshold == doctest::Approx(5.5));
        const auto pred = m.predict(ds);
        CHECK(pred[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(pred[1] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(pred[2] == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(pred[3] == doctest::Approx(5.0).epsilon(1e-12));
    }

    SUBCASE("categorical split groups levels by mean") {
        const Schema s({{"make", ColumnKind::categorical({"a", "b", "c"})}}, "y");
        const Dataset ds(s, {CategoricalColumn{0, 1, 2, 0, 1, 2}},
                         {1.0, 1.2, 5.0, 1.1, 0.9, 5.2});
        const TreeModel m = fit_tree(ds, {.max_depth = 1});
        REQUIRE_FALSE(m.nodes()[0].is_leaf);
        CHECK(m.nodes()[0].left_levels == std::vector<std::int32_t>{0, 1});
        CHECK(m.uses_feature(0));
        const auto pred = m.predict(ds);
        CHECK(pred[0] == doctest::Approx((1.0 + 1.2 + 1.1 + 0.9) / 4.0));
        CHECK(pred[2] == doctest::Approx(5.1));
    }

    SUBCASE("identical features with varying response collapse to one leaf") {
        const Dataset ds = numeric_dataset({2.0, 2.0, 2.0}, {1.0, 2.0, 6.0});
        const TreeModel m = fit_tree(ds, {.max_depth = 3});
        CHECK(m.n_leaves() == 1);
        CHECK(m.predict(ds)[0] == doctest::Approx(3.0));
    }

    SUBCASE("leaf predictions stay inside the leaf's response range") {
        const auto [ds, truth] = generate_synthetic(400, 9);
        const TreeModel m = fit_tree(ds, {.max_depth = 5, .min_leaf_size = 5});
        CHECK(m.depth() <= 5);

        std::map<std::size_t, std::pair<double, double>> leaf_range;
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
            const std::size_t leaf = m.leaf_index(ds, i);
            const double y = ds.response()[i];
            auto [it, fresh] = leaf_range.try_emplace(leaf, y, y);
            if (!fresh) {
                it->second.first = std::min(it->second.first, y);
                it->second.second = std::max(it->second.second, y);
            }
        }
        const auto pred = m.predict(ds);
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
            const auto& [lo, hi] = leaf_range.at(m.leaf_index(ds, i));
            CHECK(pred[i] >= lo - 1e-9);
            CHECK(pred[i] <= hi + 1e-9);
        }
    }

    SUBCASE("min_leaf_size caps how thin a leaf can get") {
        const auto [ds, truth] = generate_synthetic(300, 13);
        const TreeModel m = fit_tree(ds, {.max_depth = 8, .min_leaf_size = 17});
        std::map<std::size_t, std::size_t> counts;
        for (std::size_t i = 0; i < ds.n_rows(); ++i) ++counts[m.leaf_index(ds, i)];
        CHECK(counts.size() == m.n_leaves());
        for (const auto& [leaf, count] : counts) CHECK(count >= 17);
    }

    SUBCASE("tree json round trip preserves predictions bitwise") {
        const auto [ds, truth] = generate_synthetic(250, 31);
        const TreeModel m = fit_tree(ds, {.max_depth = 4, .min_leaf_size = 3});
        const TreeModel back = TreeModel::from_json(m.to_json());
        const auto a = m.predict(ds);
        const auto b = back.predict(ds);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_bits(a[i], b[i]));
    }
}

TEST_CASE("nn encoders cover the schema") {
    const auto [ds, truth] = generate_synthetic(50, 2);
    const NnLayout layout = make_layout(ds);

    // one-hot: age_range 5 + sex 2 + vehicle_category 4; embeds: make 2 +
    // region 2; numerics: vehicle_age 1
    CHECK(layout.input_width == 16);
    std::size_t widths = 0;
    for (const auto& enc : layout.encoders) widths += enc.width;
    CHECK(widths == layout.input_width);
    CHECK(layout.encoders[3].kind == EncoderKind::Embed);
    CHECK(layout.encoders[5].kind == EncoderKind::Embed);
    CHECK(layout.encoders[4].kind == EncoderKind::Numeric);
    CHECK(layout.embedding_size == 2 * 8 + 2 * 8);
    CHECK(layout.n_params ==
          layout.embedding_size + 64 * 16 + 64 + 64 * 64 + 64 + 64 + 1);
}

TEST_CASE("nn with all parameters zero predicts softplus of zero") {
    const auto [ds, truth] = generate_synthetic(20, 4);
    const NnLayout layout = make_layout(ds);
    const NnModel m(ds.schema(), layout,
                    Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.n_params)));
    for (double p : m.predict(ds)) CHECK(p == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("softplus stays positive and its derivative is a sigmoid") {
    for (double z : {-800.0, -700.0, -50.0, 0.0, 1.0, 50.0, 700.0}) {
        CHECK(softplus(z) > 0.0);
        CHECK(softplus_derivative(z) >= 0.0);
        CHECK(softplus_derivative(z) <= 1.0);
    }
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
    CHECK(softplus(50.0) == doctest::Approx(50.0));
    CHECK(softplus_derivative(0.0) == doctest::Approx(0.5));
}

TEST_CASE("nn backpropagation matches central finite differences") {
    // Small net over a mixed schema; the 3-level feature is forced into an
    // embedding by the low threshold so all encoder kinds get exercised.
    const Schema s({{"x", ColumnKind::numeric()},
                    {"cat", ColumnKind::categorical({"a", "b", "c"})},
                    {"flag", ColumnKind::categorical({"n", "y"})}},
                   "y", "w");
    const Dataset ds(s,
                     {NumericColumn{0.3, -1.2, 0.9, 2.4, -0.7, 0.1},
                      CategoricalColumn{0, 1, 2, 0, 2, 1}, CategoricalColumn{0, 1, 1, 0, 0, 1}},
                     {1.0, 0.2, 3.4, 2.2, 0.7, 1.9}, {1.0, 2.0, 0.5, 1.0, 1.5, 1.0});

    NnArchitecture arch;
    arch.hidden_width = 8;
    arch.embed_threshold = 2;
    const NnLayout layout = make_layout(ds, arch);

    Rng rng(derive_seed(17, "gradcheck"));
    Eigen::VectorXd params(static_cast<Eigen::Index>(layout.n_params));
    for (Eigen::Index k = 0; k < params.size(); ++k) params(k) = 0.5 * rng.normal();

    std::vector<std::size_t> rows(ds.n_rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});

    Eigen::VectorXd grad;
    nn_loss_and_grad(layout, params, ds, rows, &grad);

    const double step = 1e-5;
    for (Eigen::Index k = 0; k < params.size(); ++k) {
        Eigen::VectorXd shifted = params;
        shifted(k) = params(k) + step;
        const double up = nn_loss_and_grad(layout, shifted, ds, rows, nullptr);
        shifted(k) = params(k) - step;
        const double down = nn_loss_and_grad(layout, shifted, ds, rows, nullptr);
        const double fd = (up - down) / (2.0 * step);
        const double scale = std::max({1.0, std::abs(grad(k)), std::abs(fd)});
        CHECK(std::abs(grad(k) - fd) <= 1e-4 * scale);
    }
}

TEST_CASE("fit_nn respects the training contract") {
    const auto [full, truth] = generate_synthetic(260, 6);
    const SplitResult parts = split(full, {0.2, 0.25, 6});

    SUBCASE("zero epochs returns the seeded initialization unchanged") {
        TrainConfig cfg;
        cfg.max_epochs = 0;
        cfg.seed = 5;
        const NnFitResult a = fit_nn(parts.analysis, parts.assessment, cfg);
        const NnFitResult b = fit_nn(parts.analysis, parts.assessment, cfg);
        CHECK(a.epochs.empty());
        CHECK(a.best_epoch == -1);
        REQUIRE(a.model.params().size() == b.model.params().size());
        for (Eigen::Index k = 0; k < a.model.params().size(); ++k)
            CHECK(same_bits(a.model.params()(k), b.model.params()(k)));

        TrainConfig one = cfg;
        one.max_epochs = 1;
        const NnFitResult c = fit_nn(parts.analysis, parts.assessment, one);
        CHECK(c.epochs.size() == 1);
        bool any_changed = false;
        for (Eigen::Index k = 0; k < a.model.params().size(); ++k)
            if (!same_bits(a.model.params()(k), c.model.params()(k))) any_changed = true;
        CHECK(any_changed);
    }

    SUBCASE("training is bit-reproducible for a fixed seed") {
        TrainConfig cfg;
        cfg.max_epochs = 3;
        cfg.batch_size = 64;
        cfg.seed = 12;
        const NnFitResult a = fit_nn(parts.analysis, parts.assessment, cfg);
        const NnFitResult b = fit_nn(parts.analysis, parts.assessment, cfg);
        REQUIRE(a.epochs.size() == b.epochs.size());
        for (std::size_t e = 0; e < a.epochs.size(); ++e) {
            CHECK(same_bits(a.epochs[e].train_loss, b.epochs[e].train_loss));
            CHECK(same_bits(a.epochs[e].assessment_loss, b.epochs[e].assessment_loss));
        }
        for (Eigen::Index k = 0; k < a.model.params().size(); ++k)
            CHECK(same_bits(a.model.params()(k), b.model.params()(k)));
    }
}

TEST_CASE("fit_nn learns a constant response") {
    const double c = 5.0;
    std::vector<double> xa, ya, xs, ys;
    for (int i = 0; i < 60; ++i) {
        xa.push_back(-1.0 + 2.0 * i / 59.0);
        ya.push_back(c);
    }
    for (int i = 0; i < 20; ++i) {
        xs.push_back(-1.0 + 2.0 * i / 19.0);
        ys.push_back(c);
    }
    const Dataset analysis = numeric_dataset(std::move(xa), std::move(ya));
    const Dataset assessment = numeric_dataset(std::move(xs), std::move(ys));

    TrainConfig cfg;
    cfg.max_epochs = 50;
    cfg.batch_size = 8;
    cfg.seed = 3;
    const NnFitResult r = fit_nn(analysis, assessment, cfg);
    CHECK(r.best_assessment_loss <= (c * c) / 100.0);
    for (double p : r.model.predict(assessment)) CHECK(p > 0.0);
}

TEST_CASE("fit_nn stops early when assessment loss stalls") {
    const auto [full, truth] = generate_synthetic(150, 8);
    const SplitResult parts = split(full, {0.2, 0.3, 8});

    TrainConfig cfg;
    cfg.max_epochs = 400;
    cfg.early_stopping_patience = 4;
    cfg.batch_size = 32;
    cfg.seed = 9;
    const NnFitResult r = fit_nn(parts.analysis, parts.assessment, cfg);
    REQUIRE(r.stopped_early);
    CHECK(r.epochs.size() < 400);
    CHECK(r.epochs.size() == static_cast<std::size_t>(r.best_epoch) + 1 + 4);
    // the snapshot really is the best epoch seen
    for (const EpochLog& e : r.epochs) CHECK(e.assessment_loss >= r.best_assessment_loss);
}

TEST_CASE("fit_nn reports divergence with the epoch") {
    const auto [full, truth] = generate_synthetic(80, 10);
    const SplitResult parts = split(full, {0.2, 0.25, 10});
    TrainConfig cfg;
    cfg.learning_rate = 1e200;
    cfg.max_epochs = 30;
    cfg.seed = 1;
    CHECK_THROWS_WITH_AS(fit_nn(parts.analysis, parts.assessment, cfg),
                         doctest::Contains("epoch"), ComputationError);
}

TEST_CASE("nn embeddings are exposed per level") {
    const auto [full, truth] = generate_synthetic(120, 14);
    const SplitResult parts = split(full, {0.2, 0.25, 14});
    TrainConfig cfg;
    cfg.max_epochs = 2;
    const NnFitResult r = fit_nn(parts.analysis, parts.assessment, cfg);

    const EmbeddingTable make = r.model.embedding("make");
    CHECK(make.vectors.size() == 8);
    const EmbeddingTable region = r.model.embedding("region");
    CHECK(region.vectors.size() == 8);
    CHECK_THROWS_AS(r.model.embedding("sex"), ValidationError);
    CHECK_THROWS_AS(r.model.embedding("nope"), ValidationError);
}

TEST_CASE("model files round trip through save and load") {
    const auto [ds, truth] = generate_synthetic(150, 18);
    const SplitResult parts = split(ds, {0.2, 0.25, 18});
    const auto dir = std::filesystem::temp_directory_path() / "claro-model-roundtrip";
    std::filesystem::create_directories(dir);

    GlmSpec spec;
    spec.link = Link::Identity;
    spec.terms = main_effect_terms(ds.schema());
    const GlmModel glm = fit_glm(ds, spec, {.ridge = 1e-9});
    const TreeModel tree = fit_tree(ds, {.max_depth = 3});
    TrainConfig cfg;
    cfg.max_epochs = 2;
    const NnModel nn = fit_nn(parts.analysis, parts.assessment, cfg).model;

    const Predictor* models[] = {&glm, &tree, &nn};
    for (const Predictor* m : models) {
        const auto path = dir / (m->type_name() + ".json");
        save_model(*m, path);
        const auto back = load_model(path);
        CHECK(back->type_name() == m->type_name());
        const auto a = m->predict(ds);
        const auto b = back->predict(ds);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_bits(a[i], b[i]));
    }

    CHECK_THROWS_AS(model_from_json(nlohmann::json{{"format", "claro-model"},
                                                   {"version", 1},
                                                   {"type", "mystery"}}),
                    ValidationError);
    CHECK_THROWS_AS(model_from_json(nlohmann::json{{"format", "claro-model"},
                                                   {"version", 99},
                                                   {"type", "glm"}}),
                    ValidationError);
    CHECK_THROWS_AS(model_from_json(nlohmann::json::array()), ValidationError);
    std::filesystem::remove_all(dir);
}
