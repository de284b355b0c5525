#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "claro/tabular/dataset.hpp"

namespace claro::models {

enum class LossKind { Mse, Rmse, Mae };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);

/// Exposure-weighted regression loss. For Mse: sum w_i (pred_i - y_i)^2 / sum w_i,
/// which reduces to plain MSE when all weights are 1.
double weighted_loss(std::span<const double> pred, std::span<const double> y,
                     std::span<const double> w, LossKind kind = LossKind::Mse);

/// Batch-prediction contract every fitted model satisfies. Prediction is a
/// pure function of the feature row; fitted models are immutable and safe
/// for concurrent prediction.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual const tabular::Schema& schema() const = 0;
    virtual std::string type_name() const = 0;

    /// One finite prediction per row, in row order. Throws on schema mismatch.
    std::vector<double> predict(const tabular::Dataset& ds) const;

    double predict_row(const tabular::Dataset& ds, std::size_t i) const;

    virtual nlohmann::json to_json() const = 0;

protected:
    /// Row kernel; `ds` has already been checked against the schema.
    virtual double eval_row(const tabular::Dataset& ds, std::size_t i) const = 0;
    void check_schema(const tabular::Dataset& ds) const;
};

}  // namespace claro::models
