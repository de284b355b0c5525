#include "claro/models/predictor.hpp"

#include <cmath>

#include "claro/error.hpp"

namespace claro::models {

std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::Mse: return "mse";
        case LossKind::Rmse: return "rmse";
        case LossKind::Mae: return "mae";
    }
    throw ValidationError("unknown loss kind");
}

LossKind loss_kind_from_string(std::string_view name) {
    if (name == "mse") return LossKind::Mse;
    if (name == "rmse") return LossKind::Rmse;
    if (name == "mae") return LossKind::Mae;
    throw ValidationError("unknown loss kind '" + std::string(name) + "'");
}

double weighted_loss(std::span<const double> pred, std::span<const double> y,
                     std::span<const double> w, LossKind kind) {
    if (pred.size() != y.size() || pred.size() != w.size())
        throw ValidationError("loss inputs must have equal length");
    if (pred.empty()) throw ValidationError("loss inputs must be non-empty");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - y[i];
        num += w[i] * (kind == LossKind::Mae ? std::abs(d) : d * d);
        den += w[i];
    }
    const double value = num / den;
    return kind == LossKind::Rmse ? std::sqrt(value) : value;
}

void Predictor::check_schema(const tabular::Dataset& ds) const {
    if (!schema().features_equal(ds.schema()))
        throw ValidationError("dataset features do not match the model schema");
}

std::vector<double> Predictor::predict(const tabular::Dataset& ds) const {
    check_schema(ds);
    std::vector<double> out(ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) out[i] = eval_row(ds, i);
    return out;
}

double Predictor::predict_row(const tabular::Dataset& ds, std::size_t i) const {
    check_schema(ds);
    if (i >= ds.n_rows()) throw ValidationError("row index out of range");
    return eval_row(ds, i);
}

}  // namespace claro::models
