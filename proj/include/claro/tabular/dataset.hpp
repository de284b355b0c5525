#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "claro/tabular/schema.hpp"

namespace claro::tabular {

using NumericColumn = std::vector<double>;
using CategoricalColumn = std::vector<std::int32_t>;
using Column = std::variant<NumericColumn, CategoricalColumn>;

/// One feature value: a finite real or a categorical level index.
using Cell = std::variant<double, std::int32_t>;

/// Immutable typed table: feature columns, a response vector and positive
/// exposure weights (all 1 when the source had no weight column).
///
/// Construction validates everything once — equal column lengths, finite
/// numerics, level indices in range, non-negative response, positive
/// weights — so downstream code can rely on the invariants.
///
/// Columns are shared between copies; the "mutating" helpers
/// (with_column, with_column_filled, select_rows) return new datasets and
/// never touch the source, which is what the explainers' copy-on-perturb
/// contract requires. Datasets are therefore safe to share across threads.
class Dataset {
public:
    Dataset(Schema schema, std::vector<Column> columns, std::vector<double> response,
            std::vector<double> weights = {});

    const Schema& schema() const { return *schema_; }
    std::size_t n_rows() const { return n_rows_; }
    std::size_t feature_count() const { return schema_->feature_count(); }

    const Column& column(std::size_t j) const;
    /// Typed accessors; throw ValidationError on a kind mismatch.
    const NumericColumn& numeric(std::size_t j) const;
    const CategoricalColumn& categorical(std::size_t j) const;

    Cell cell(std::size_t i, std::size_t j) const;

    const std::vector<double>& response() const { return *response_; }
    const std::vector<double>& weights() const { return *weights_; }

    /// Copy with column j replaced. Shares all other columns.
    Dataset with_column(std::size_t j, Column values) const;

    /// Copy with column j set to a single broadcast value.
    Dataset with_column_filled(std::size_t j, const Cell& value) const;

    /// Copy keeping only the given rows, in the given order.
    Dataset select_rows(std::span<const std::size_t> rows) const;

private:
    Dataset() = default;
    void check_feature(std::size_t j) const;

    std::shared_ptr<const Schema> schema_;
    std::vector<std::shared_ptr<const Column>> columns_;
    std::shared_ptr<const std::vector<double>> response_;
    std::shared_ptr<const std::vector<double>> weights_;
    std::size_t n_rows_ = 0;
};

struct SplitSpec {
    double test_fraction = 0.2;                    // held out first
    double assessment_fraction = 0.25;             // fraction of the remainder
    std::uint64_t seed = 0;
};

struct SplitResult {
    Dataset analysis;
    Dataset assessment;
    Dataset test;
};

/// Seed-deterministic disjoint row partition. |test| = round(test_fraction*N),
/// the remainder is split by assessment_fraction. Throws when any part
/// would be empty.
SplitResult split(const Dataset& ds, const SplitSpec& spec);

/// Copy of ds with column j replaced by a seeded uniform rearrangement of
/// its own values (Fisher-Yates on the portable generator).
Dataset permute_column(const Dataset& ds, std::size_t j, std::uint64_t seed);

}  // namespace claro::tabular
