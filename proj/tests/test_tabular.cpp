#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "claro/error.hpp"
#include "claro/tabular/csv.hpp"
#include "claro/tabular/dataset.hpp"
#include "claro/tabular/schema.hpp"
#include "claro/tabular/synthetic.hpp"

using namespace claro;
using namespace claro::tabular;

namespace {

Schema toy_schema() {
    return Schema({{"age", ColumnKind::numeric()},
                   {"body", ColumnKind::categorical({"sedan", "suv", "wagon"})}},
                  "y", "w");
}

Dataset toy_dataset() {
    return Dataset(toy_schema(),
                   {NumericColumn{1.0, 2.0, 3.0, 4.0}, CategoricalColumn{0, 1, 2, 1}},
                   {10.0, 20.0, 30.0, 40.0}, {1.0, 1.0, 2.0, 1.0});
}

bool same_bits(double a, double b) {
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("column kinds validate their level lists") {
    CHECK(ColumnKind::numeric().is_numeric());
    const auto cat = ColumnKind::categorical({"a", "b"});
    CHECK(cat.is_categorical());
    CHECK(cat.level_index("b") == 1);
    CHECK_FALSE(cat.level_index("z").has_value());
    CHECK_THROWS_AS(ColumnKind::categorical({"a", "a"}), ValidationError);
    CHECK_THROWS_AS(ColumnKind::categorical({"a", ""}), ValidationError);
    CHECK_THROWS_AS(ColumnKind::categorical({}), ValidationError);
}

TEST_CASE("schema rejects name collisions") {
    CHECK_THROWS_AS(Schema({{"a", ColumnKind::numeric()}, {"a", ColumnKind::numeric()}}, "y"),
                    ValidationError);
    CHECK_THROWS_AS(Schema({{"a", ColumnKind::numeric()}}, "a"), ValidationError);
    CHECK_THROWS_AS(Schema({{"a", ColumnKind::numeric()}}, "y", "a"), ValidationError);
    CHECK_THROWS_AS(Schema({{"a", ColumnKind::numeric()}}, "y", "y"), ValidationError);

    const Schema s = toy_schema();
    CHECK(s.require_feature("body") == 1);
    CHECK_THROWS_AS(s.require_feature("missing"), ValidationError);
    CHECK(s.features_equal(toy_schema()));
}

TEST_CASE("schema json round trip") {
    const Schema s = toy_schema();
    const Schema back = Schema::from_json(s.to_json());
    CHECK(back.features_equal(s));
    CHECK(back.response() == "y");
    REQUIRE(back.weight().has_value());
    CHECK(*back.weight() == "w");

    const Schema unweighted({{"x", ColumnKind::numeric()}}, "y");
    CHECK_FALSE(Schema::from_json(unweighted.to_json()).weight().has_value());
}

TEST_CASE("dataset construction enforces the column invariants") {
    const Schema s = toy_schema();
    const NumericColumn age{1.0, 2.0};
    const CategoricalColumn body{0, 1};

    CHECK_THROWS_AS(Dataset(s, {age, CategoricalColumn{0}}, {1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(
        Dataset(s, {NumericColumn{1.0, std::nan("")}, body}, {1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(
        Dataset(s, {NumericColumn{1.0, std::numeric_limits<double>::infinity()}, body},
                {1.0, 2.0}),
        ValidationError);
    CHECK_THROWS_AS(Dataset(s, {age, CategoricalColumn{0, 3}}, {1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(Dataset(s, {age, CategoricalColumn{0, -1}}, {1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(Dataset(s, {age, body}, {1.0, -2.0}), ValidationError);
    CHECK_THROWS_AS(Dataset(s, {age, body}, {1.0, 2.0}, {1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(Dataset(s, {CategoricalColumn{0, 1}, body}, {1.0, 2.0}), ValidationError);

    const Dataset ok(s, {age, body}, {1.0, 2.0});
    CHECK(ok.n_rows() == 2);
    CHECK(ok.weights() == std::vector<double>{1.0, 1.0});
    CHECK(std::get<double>(ok.cell(1, 0)) == 2.0);
    CHECK(std::get<std::int32_t>(ok.cell(1, 1)) == 1);
}

TEST_CASE("dataset copies share untouched columns") {
    const Dataset ds = toy_dataset();

    const Dataset replaced = ds.with_column(0, NumericColumn{5.0, 6.0, 7.0, 8.0});
    CHECK(replaced.numeric(0)[0] == 5.0);
    CHECK(ds.numeric(0)[0] == 1.0);
    CHECK(&replaced.categorical(1) == &ds.categorical(1));
    CHECK(&replaced.response() == &ds.response());

    const Dataset filled = ds.with_column_filled(1, Cell{std::int32_t{2}});
    for (std::size_t i = 0; i < filled.n_rows(); ++i) CHECK(filled.categorical(1)[i] == 2);
    CHECK(&filled.numeric(0) == &ds.numeric(0));
    CHECK_THROWS_AS(ds.with_column_filled(1, Cell{std::int32_t{9}}), ValidationError);
    CHECK_THROWS_AS(ds.with_column_filled(0, Cell{std::nan("")}), ValidationError);

    const std::vector<std::size_t> rows{3, 0};
    const Dataset picked = ds.select_rows(rows);
    REQUIRE(picked.n_rows() == 2);
    CHECK(picked.numeric(0) == NumericColumn{4.0, 1.0});
    CHECK(picked.categorical(1) == CategoricalColumn{1, 0});
    CHECK(picked.response() == std::vector<double>{40.0, 10.0});
    CHECK(picked.weights() == std::vector<double>{1.0, 1.0});
}

TEST_CASE("csv reads typed rows in order") {
    std::istringstream in("age,body,y,w,extra\n1,sedan,10,1,zzz\n2,suv,20,1,zzz\n3,wagon,30,2,zzz\n");
    const Dataset ds = read_csv(in, toy_schema());
    REQUIRE(ds.n_rows() == 3);
    CHECK(ds.numeric(0) == NumericColumn{1.0, 2.0, 3.0});
    CHECK(ds.categorical(1) == CategoricalColumn{0, 1, 2});
    CHECK(ds.response() == std::vector<double>{10.0, 20.0, 30.0});
    CHECK(ds.weights() == std::vector<double>{1.0, 1.0, 2.0});
}

TEST_CASE("csv ingestion errors are specific") {
    const Schema s = toy_schema();

    std::istringstream missing("age,body,y\n1,sedan,10\n");
    CHECK_THROWS_WITH_AS(read_csv(missing, s), doctest::Contains("missing column"),
                         ValidationError);

    std::istringstream unknown("age,body,y,w\n1,coupe,10,1\n");
    CHECK_THROWS_WITH_AS(read_csv(unknown, s), doctest::Contains("unknown level"),
                         ValidationError);

    std::istringstream zero_w("age,body,y,w\n1,sedan,10,0\n");
    CHECK_THROWS_WITH_AS(read_csv(zero_w, s), doctest::Contains("non-positive weight"),
                         ValidationError);

    std::istringstream bad_num("age,body,y,w\n1x,sedan,10,1\n");
    CHECK_THROWS_AS(read_csv(bad_num, s), ValidationError);

    std::istringstream bad_y("age,body,y,w\n1,sedan,-3,1\n");
    CHECK_THROWS_AS(read_csv(bad_y, s), ValidationError);
}

TEST_CASE("csv write-read round trip reproduces every bit") {
    const Schema s({{"x", ColumnKind::numeric()}, {"c", ColumnKind::categorical({"lo", "hi"})}},
                   "y", "w");
    const NumericColumn x{0.1, 1.0 / 3.0, 1e-17, 6.02214076e23, 1e308, 5e-324, -1234.5678901234567};
    const CategoricalColumn c{0, 1, 0, 1, 0, 1, 0};
    const std::vector<double> y{0.0, 1.5, 2.25, 3.125, 4.0625, 5.0, 6.0};
    const std::vector<double> w{0.25, 1.0, 2.0, 0.125, 1.0, 1.0, 3.5};
    const Dataset ds(s, {x, c}, y, w);

    std::ostringstream out;
    write_csv(ds, out);
    std::istringstream in(out.str());
    const Dataset back = read_csv(in, s);

    REQUIRE(back.n_rows() == ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        CHECK(same_bits(back.numeric(0)[i], x[i]));
        CHECK(back.categorical(1)[i] == c[i]);
        CHECK(same_bits(back.response()[i], y[i]));
        CHECK(same_bits(back.weights()[i], w[i]));
    }
}

TEST_CASE("split sizes follow the fractions") {
    const auto [ds20, truth20] = generate_synthetic(20, 7);
    const SplitResult parts20 = split(ds20, {0.2, 0.25, 1});
    CHECK(parts20.analysis.n_rows() == 12);
    CHECK(parts20.assessment.n_rows() == 4);
    CHECK(parts20.test.n_rows() == 4);

    const auto [ds1000, truth1000] = generate_synthetic(1000, 7);
    const SplitResult parts1000 = split(ds1000, {});
    CHECK(parts1000.analysis.n_rows() == 600);
    CHECK(parts1000.assessment.n_rows() == 200);
    CHECK(parts1000.test.n_rows() == 200);
}

TEST_CASE("split is a seed-deterministic disjoint partition") {
    // Row identity travels in the response: y_i = i.
    const std::size_t n = 50;
    std::vector<double> y(n);
    std::iota(y.begin(), y.end(), 0.0);
    NumericColumn x(n, 1.0);
    const Schema s({{"x", ColumnKind::numeric()}}, "y");
    const Dataset ds(s, {x}, y);

    const SplitSpec spec{0.2, 0.25, 42};
    const SplitResult a = split(ds, spec);
    const SplitResult b = split(ds, spec);
    CHECK(a.analysis.response() == b.analysis.response());
    CHECK(a.assessment.response() == b.assessment.response());
    CHECK(a.test.response() == b.test.response());

    std::multiset<double> seen;
    for (const Dataset* part : {&a.analysis, &a.assessment, &a.test})
        seen.insert(part->response().begin(), part->response().end());
    CHECK(seen.size() == n);
    CHECK(std::set<double>(seen.begin(), seen.end()).size() == n);

    const SplitResult c = split(ds, {0.2, 0.25, 43});
    CHECK(c.test.response() != a.test.response());
}

TEST_CASE("split rejects bad fractions and empty parts") {
    const auto [ds, truth] = generate_synthetic(3, 0);
    CHECK_THROWS_AS(split(ds, {0.05, 0.25, 0}), ValidationError);
    CHECK_THROWS_AS(split(ds, {0.0, 0.25, 0}), ValidationError);
    CHECK_THROWS_AS(split(ds, {0.2, 1.0, 0}), ValidationError);
    CHECK_NOTHROW(split(ds, {0.34, 0.5, 0}));
}

TEST_CASE("permute_column rearranges exactly one column") {
    SUBCASE("single row is a fixed point") {
        const Schema s({{"x", ColumnKind::numeric()}}, "y");
        const Dataset ds(s, {NumericColumn{3.0}}, {1.0});
        CHECK(permute_column(ds, 0, 123).numeric(0) == NumericColumn{3.0});
    }

    SUBCASE("two rows: seed 0 swaps, seed 2 keeps") {
        const Schema s({{"x", ColumnKind::numeric()}}, "y");
        const Dataset ds(s, {NumericColumn{1.0, 2.0}}, {0.0, 0.0});
        CHECK(permute_column(ds, 0, 0).numeric(0) == NumericColumn{2.0, 1.0});
        CHECK(permute_column(ds, 0, 2).numeric(0) == NumericColumn{1.0, 2.0});
    }

    SUBCASE("multiset preserved, siblings shared, source untouched") {
        const auto [ds, truth] = generate_synthetic(200, 5);
        const std::size_t j = ds.schema().require_feature("make");
        const CategoricalColumn before = ds.categorical(j);

        const Dataset shuffled = permute_column(ds, j, 99);
        CHECK(ds.categorical(j) == before);

        CategoricalColumn lhs = shuffled.categorical(j);
        CategoricalColumn rhs = before;
        std::sort(lhs.begin(), lhs.end());
        std::sort(rhs.begin(), rhs.end());
        CHECK(lhs == rhs);
        CHECK(shuffled.categorical(j) != before);

        for (std::size_t k = 0; k < ds.feature_count(); ++k) {
            if (k == j) continue;
            CHECK(&shuffled.column(k) == &ds.column(k));
        }
        CHECK(&shuffled.response() == &ds.response());

        CHECK_THROWS_AS(permute_column(ds, ds.feature_count(), 1), ValidationError);
    }
}

TEST_CASE("synthetic generation is byte-deterministic") {
    const auto [a, ta] = generate_synthetic(500, 11);
    const auto [b, tb] = generate_synthetic(500, 11);
    REQUIRE(a.n_rows() == 500);
    for (std::size_t j = 0; j < a.feature_count(); ++j) {
        if (a.schema().feature(j).kind.is_numeric())
            CHECK(a.numeric(j) == b.numeric(j));
        else
            CHECK(a.categorical(j) == b.categorical(j));
    }
    for (std::size_t i = 0; i < a.n_rows(); ++i) {
        CHECK(same_bits(a.response()[i], b.response()[i]));
        CHECK(same_bits(a.weights()[i], b.weights()[i]));
        CHECK(a.weights()[i] >= 0.25);
        CHECK(a.weights()[i] < 1.0);
        CHECK(a.response()[i] >= 0.0);
    }

    const auto [c, tc] = generate_synthetic(500, 12);
    CHECK(c.response() != a.response());
}

TEST_CASE("synthetic ground truth flags null features") {
    const auto [ds, truth] = generate_synthetic(10, 0);
    CHECK(truth.null_features() == std::vector<std::string>{"sex"});
    CHECK(truth.effect_range.at("make") == doctest::Approx(1.55 / 0.65));
    CHECK(truth.effect_range.at("vehicle_age") == doctest::Approx(std::exp(1.0)));

    const auto [null_ds, null_truth] = generate_synthetic(10, 0, SyntheticEffects::null_effects());
    CHECK(null_truth.null_features().size() == 6);
}

TEST_CASE("null effects leave group means flat") {
    const auto [ds, truth] = generate_synthetic(40000, 3, SyntheticEffects::null_effects());
    const double n = static_cast<double>(ds.n_rows());

    double overall = 0.0;
    for (double v : ds.response()) overall += v;
    overall /= n;
    double sd = 0.0;
    for (double v : ds.response()) sd += (v - overall) * (v - overall);
    sd = std::sqrt(sd / n);

    for (std::size_t j = 0; j < ds.feature_count(); ++j) {
        if (!ds.schema().feature(j).kind.is_categorical()) continue;
        const std::size_t n_levels = ds.schema().feature(j).kind.levels().size();
        std::vector<double> sum(n_levels, 0.0);
        std::vector<double> count(n_levels, 0.0);
        for (std::size_t i = 0; i < ds.n_rows(); ++i) {
            sum[static_cast<std::size_t>(ds.categorical(j)[i])] += ds.response()[i];
            count[static_cast<std::size_t>(ds.categorical(j)[i])] += 1.0;
        }
        for (std::size_t l = 0; l < n_levels; ++l) {
            REQUIRE(count[l] > 0.0);
            const double group_mean = sum[l] / count[l];
            CHECK(std::abs(group_mean - overall) <= 4.0 * sd / std::sqrt(count[l]));
        }
    }
}

TEST_CASE("synthetic effects json survives a round trip") {
    SyntheticEffects e = SyntheticEffects::defaults();
    e.age_correlation = 0.5;
    e.vehicle_age_log_slope = -0.11;
    const SyntheticEffects back = SyntheticEffects::from_json(e.to_json());
    CHECK(back.age_correlation == e.age_correlation);
    CHECK(back.vehicle_age_log_slope == e.vehicle_age_log_slope);
    CHECK(back.categorical_effects == e.categorical_effects);
    CHECK(back.base_frequency == e.base_frequency);
}
