#include "claro/tabular/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "claro/error.hpp"
#include "claro/rng.hpp"

namespace claro::tabular {

namespace {

std::size_t column_size(const Column& col) {
    return std::visit([](const auto& v) { return v.size(); }, col);
}

void validate_column(const FeatureSpec& spec, const Column& col) {
    if (spec.kind.is_numeric()) {
        const auto* values = std::get_if<NumericColumn>(&col);
        if (!values)
            throw ValidationError("column '" + spec.name + "' must be numeric");
        for (double v : *values) {
            if (!std::isfinite(v))
                throw ValidationError("non-finite value in numeric column '" + spec.name + "'");
        }
    } else {
        const auto* values = std::get_if<CategoricalColumn>(&col);
        if (!values)
            throw ValidationError("column '" + spec.name + "' must be categorical");
        const auto n_levels = static_cast<std::int32_t>(spec.kind.levels().size());
        for (std::int32_t idx : *values) {
            if (idx < 0 || idx >= n_levels)
                throw ValidationError("level index out of range in column '" + spec.name + "'");
        }
    }
}

}  // namespace

Dataset::Dataset(Schema schema, std::vector<Column> columns, std::vector<double> response,
                 std::vector<double> weights) {
    if (columns.size() != schema.feature_count())
        throw ValidationError("column count does not match schema feature count");
    if (response.empty()) throw ValidationError("dataset needs at least one row");
    n_rows_ = response.size();
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (column_size(columns[j]) != n_rows_)
            throw ValidationError("column '" + schema.feature(j).name + "' length mismatch");
        validate_column(schema.feature(j), columns[j]);
    }
    for (double y : response) {
        if (!std::isfinite(y) || y < 0.0)
            throw ValidationError("response values must be finite and non-negative");
    }
    if (weights.empty()) {
        weights.assign(n_rows_, 1.0);
    } else if (weights.size() != n_rows_) {
        throw ValidationError("weight vector length mismatch");
    }
    for (double w : weights) {
        if (!std::isfinite(w) || w <= 0.0)
            throw ValidationError("non-positive weight");
    }

    schema_ = std::make_shared<const Schema>(std::move(schema));
    columns_.reserve(columns.size());
    for (auto& col : columns)
        columns_.push_back(std::make_shared<const Column>(std::move(col)));
    response_ = std::make_shared<const std::vector<double>>(std::move(response));
    weights_ = std::make_shared<const std::vector<double>>(std::move(weights));
}

void Dataset::check_feature(std::size_t j) const {
    if (j >= columns_.size()) throw ValidationError("feature index out of range");
}

const Column& Dataset::column(std::size_t j) const {
    check_feature(j);
    return *columns_[j];
}

const NumericColumn& Dataset::numeric(std::size_t j) const {
    check_feature(j);
    const auto* values = std::get_if<NumericColumn>(columns_[j].get());
    if (!values)
        throw ValidationError("column '" + schema_->feature(j).name + "' is not numeric");
    return *values;
}

const CategoricalColumn& Dataset::categorical(std::size_t j) const {
    check_feature(j);
    const auto* values = std::get_if<CategoricalColumn>(columns_[j].get());
    if (!values)
        throw ValidationError("column '" + schema_->feature(j).name + "' is not categorical");
    return *values;
}

Cell Dataset::cell(std::size_t i, std::size_t j) const {
    check_feature(j);
    if (i >= n_rows_) throw ValidationError("row index out of range");
    if (schema_->feature(j).kind.is_numeric()) return numeric(j)[i];
    return categorical(j)[i];
}

Dataset Dataset::with_column(std::size_t j, Column values) const {
    check_feature(j);
    if (column_size(values) != n_rows_)
        throw ValidationError("replacement column length mismatch");
    validate_column(schema_->feature(j), values);
    Dataset out = *this;
    out.columns_[j] = std::make_shared<const Column>(std::move(values));
    return out;
}

Dataset Dataset::with_column_filled(std::size_t j, const Cell& value) const {
    check_feature(j);
    if (schema_->feature(j).kind.is_numeric()) {
        const auto* v = std::get_if<double>(&value);
        if (!v) throw ValidationError("numeric column filled with a categorical value");
        return with_column(j, NumericColumn(n_rows_, *v));
    }
    const auto* idx = std::get_if<std::int32_t>(&value);
    if (!idx) throw ValidationError("categorical column filled with a numeric value");
    return with_column(j, CategoricalColumn(n_rows_, *idx));
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    if (rows.empty()) throw ValidationError("row selection must be non-empty");
    for (std::size_t i : rows) {
        if (i >= n_rows_) throw ValidationError("row index out of range in selection");
    }
    Dataset out;
    out.schema_ = schema_;
    out.n_rows_ = rows.size();
    out.columns_.reserve(columns_.size());
    for (const auto& col : columns_) {
        Column picked = std::visit(
            [&](const auto& values) -> Column {
                std::decay_t<decltype(values)> sub;
                sub.reserve(rows.size());
                for (std::size_t i : rows) sub.push_back(values[i]);
                return sub;
            },
            *col);
        out.columns_.push_back(std::make_shared<const Column>(std::move(picked)));
    }
    auto pick_doubles = [&](const std::vector<double>& src) {
        std::vector<double> sub;
        sub.reserve(rows.size());
        for (std::size_t i : rows) sub.push_back(src[i]);
        return sub;
    };
    out.response_ = std::make_shared<const std::vector<double>>(pick_doubles(*response_));
    out.weights_ = std::make_shared<const std::vector<double>>(pick_doubles(*weights_));
    return out;
}

SplitResult split(const Dataset& ds, const SplitSpec& spec) {
    if (spec.test_fraction <= 0.0 || spec.test_fraction >= 1.0 ||
        spec.assessment_fraction <= 0.0 || spec.assessment_fraction >= 1.0)
        throw ValidationError("split fractions must lie strictly inside (0,1)");
    const std::size_t n = ds.n_rows();
    if (n < 3) throw ValidationError("need at least 3 rows to split");

    const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
    const std::size_t n_rest = n - n_test;
    const auto n_assess =
        static_cast<std::size_t>(std::llround(spec.assessment_fraction * static_cast<double>(n_rest)));
    if (n_test == 0 || n_assess == 0 || n_rest <= n_assess)
        throw ValidationError("dataset too small for the requested split fractions");
    const std::size_t n_analysis = n_rest - n_assess;

    Rng rng(spec.seed);
    std::vector<std::size_t> order = rng.permutation(n);

    auto take_sorted = [&](std::size_t begin, std::size_t count) {
        std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                      order.begin() + static_cast<std::ptrdiff_t>(begin + count));
        std::sort(rows.begin(), rows.end());
        return rows;
    };

    const auto test_rows = take_sorted(0, n_test);
    const auto assess_rows = take_sorted(n_test, n_assess);
    const auto analysis_rows = take_sorted(n_test + n_assess, n_analysis);

    return SplitResult{ds.select_rows(analysis_rows), ds.select_rows(assess_rows),
                       ds.select_rows(test_rows)};
}

Dataset permute_column(const Dataset& ds, std::size_t j, std::uint64_t seed) {
    Rng rng(seed);
    Column shuffled = std::visit(
        [&](const auto& values) -> Column {
            auto copy = values;
            rng.shuffle(copy);
            return copy;
        },
        ds.column(j));
    return ds.with_column(j, std::move(shuffled));
}

}  // namespace claro::tabular
