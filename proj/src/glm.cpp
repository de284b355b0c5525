#include "claro/models/glm.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "claro/error.hpp"

namespace claro::models {

std::string to_string(Link link) {
    return link == Link::Log ? "log" : "identity";
}

Link link_from_string(std::string_view name) {
    if (name == "log") return Link::Log;
    if (name == "identity") return Link::Identity;
    throw ValidationError("unknown link '" + std::string(name) + "'");
}

double Term::eval(const tabular::Dataset& ds, std::size_t i) const {
    double value = 1.0;
    for (const auto& f : factors) {
        if (f.level >= 0) {
            value *= ds.categorical(f.feature)[i] == f.level ? 1.0 : 0.0;
            if (value == 0.0) return 0.0;
        } else {
            const double x = ds.numeric(f.feature)[i];
            double xp = x;
            for (int k = 1; k < f.power; ++k) xp *= x;
            value *= xp;
        }
    }
    return value;
}

Term numeric_term(const tabular::Schema& schema, std::string_view feature, int power) {
    const std::size_t j = schema.require_feature(feature);
    if (!schema.feature(j).kind.is_numeric())
        throw ValidationError("'" + std::string(feature) + "' is not numeric");
    if (power < 1) throw ValidationError("term power must be >= 1");
    Term t;
    t.factors.push_back({j, power, -1});
    t.name = std::string(feature);
    if (power > 1) t.name += "^" + std::to_string(power);
    return t;
}

Term level_term(const tabular::Schema& schema, std::string_view feature, std::string_view level) {
    const std::size_t j = schema.require_feature(feature);
    const auto& kind = schema.feature(j).kind;
    if (!kind.is_categorical())
        throw ValidationError("'" + std::string(feature) + "' is not categorical");
    const auto idx = kind.level_index(level);
    if (!idx)
        throw ValidationError("unknown level '" + std::string(level) + "' of '" +
                              std::string(feature) + "'");
    Term t;
    t.factors.push_back({j, 1, *idx});
    t.name = std::string(feature) + "=" + std::string(level);
    return t;
}

Term interaction(Term a, Term b) {
    Term t;
    t.factors = std::move(a.factors);
    t.factors.insert(t.factors.end(), b.factors.begin(), b.factors.end());
    t.name = a.name + "*" + b.name;
    return t;
}

std::vector<Term> main_effect_terms(const tabular::Schema& schema) {
    std::vector<Term> terms;
    for (const auto& f : schema.features()) {
        if (f.kind.is_numeric()) {
            terms.push_back(numeric_term(schema, f.name));
        } else {
            for (std::size_t l = 1; l < f.kind.levels().size(); ++l)
                terms.push_back(level_term(schema, f.name, f.kind.levels()[l]));
        }
    }
    return terms;
}

GlmModel::GlmModel(tabular::Schema schema, GlmSpec spec, double intercept,
                   std::vector<double> coefficients)
    : schema_(std::move(schema)),
      spec_(std::move(spec)),
      intercept_(intercept),
      coefficients_(std::move(coefficients)) {
    if (spec_.terms.size() != coefficients_.size())
        throw ValidationError("term list and coefficient vector must have equal length");
    for (const auto& t : spec_.terms) {
        if (t.factors.empty()) throw ValidationError("terms must have at least one factor");
        for (const auto& f : t.factors) {
            const auto& feat = schema_.feature(f.feature);
            if (f.level >= 0) {
                if (!feat.kind.is_categorical() ||
                    f.level >= static_cast<std::int32_t>(feat.kind.levels().size()))
                    throw ValidationError("term factor does not match schema for '" + feat.name +
                                          "'");
            } else if (!feat.kind.is_numeric() || f.power < 1) {
                throw ValidationError("term factor does not match schema for '" + feat.name + "'");
            }
        }
    }
}

bool GlmModel::uses_feature(std::size_t j) const {
    for (std::size_t k = 0; k < spec_.terms.size(); ++k) {
        if (coefficients_[k] == 0.0) continue;
        for (const auto& f : spec_.terms[k].factors) {
            if (f.feature == j) return true;
        }
    }
    return false;
}

double GlmModel::eval_row(const tabular::Dataset& ds, std::size_t i) const {
    double eta = intercept_;
    for (std::size_t k = 0; k < spec_.terms.size(); ++k)
        eta += coefficients_[k] * spec_.terms[k].eval(ds, i);
    return spec_.link == Link::Log ? std::exp(eta) : eta;
}

GlmModel fit_glm(const tabular::Dataset& ds, const GlmSpec& spec, const GlmFitOptions& options) {
    const std::size_t n = ds.n_rows();
    const std::size_t k = spec.terms.size();
    if (options.ridge < 0.0) throw ValidationError("ridge penalty must be non-negative");

    Eigen::MatrixXd design(n, k + 1);
    Eigen::VectorXd target(n);
    Eigen::VectorXd weight(n);
    for (std::size_t i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        for (std::size_t t = 0; t < k; ++t) design(i, t + 1) = spec.terms[t].eval(ds, i);
        const double y = ds.response()[i];
        if (spec.link == Link::Log) {
            if (y <= 0.0)
                throw ValidationError("log link requires strictly positive responses");
            target(i) = std::log(y);
        } else {
            target(i) = y;
        }
        weight(i) = ds.weights()[i];
    }

    // Normal equations of the weighted linear-predictor objective
    //   F(b) = sum_i w_i (x_i'b - g(y_i))^2 + ridge * |b_1..k|^2
    Eigen::MatrixXd gram = design.transpose() * weight.asDiagonal() * design;
    if (options.ridge > 0.0) {
        for (std::size_t t = 1; t <= k; ++t) gram(t, t) += options.ridge;
    }
    Eigen::VectorXd moment = design.transpose() * (weight.asDiagonal() * target);

    Eigen::LDLT<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
        throw ComputationError("singular design matrix; set a ridge penalty to proceed");
    // LDLT tolerates semidefinite inputs; detect rank deficiency explicitly.
    const double pivot_max = solver.vectorD().cwiseAbs().maxCoeff();
    const double pivot_min = solver.vectorD().cwiseAbs().minCoeff();
    if (!(pivot_max > 0.0) ||
        pivot_min < pivot_max * static_cast<double>(k + 1) *
                        std::numeric_limits<double>::epsilon()) {
        if (options.ridge <= 0.0)
            throw ComputationError("singular design matrix; set a ridge penalty to proceed");
    }

    Eigen::VectorXd beta = solver.solve(moment);

    // Newton refinement on the quadratic objective: re-solve against the
    // residual gradient until it is flat to tolerance.
    const double scale = std::max(1.0, moment.cwiseAbs().maxCoeff());
    bool converged = false;
    for (int it = 0; it < options.max_iterations; ++it) {
        Eigen::VectorXd gradient = gram * beta - moment;
        if (gradient.cwiseAbs().maxCoeff() <= options.tolerance * scale) {
            converged = true;
            break;
        }
        beta -= solver.solve(gradient);
    }
    if (!converged) {
        Eigen::VectorXd gradient = gram * beta - moment;
        if (gradient.cwiseAbs().maxCoeff() > options.tolerance * scale)
            throw ComputationError("glm fit did not converge; the design may be ill-conditioned");
    }

    std::vector<double> coefficients(k);
    for (std::size_t t = 0; t < k; ++t) coefficients[t] = beta(t + 1);
    return GlmModel(ds.schema(), spec, beta(0), std::move(coefficients));
}

nlohmann::json GlmModel::to_json() const {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : spec_.terms) {
        nlohmann::json factors = nlohmann::json::array();
        for (const auto& f : t.factors)
            factors.push_back({{"feature", f.feature}, {"power", f.power}, {"level", f.level}});
        terms.push_back({{"name", t.name}, {"factors", std::move(factors)}});
    }
    return nlohmann::json{{"format", "claro-model"},
                          {"version", 1},
                          {"type", "glm"},
                          {"schema", schema_.to_json()},
                          {"link", to_string(spec_.link)},
                          {"terms", std::move(terms)},
                          {"intercept", intercept_},
                          {"coefficients", coefficients_}};
}

GlmModel GlmModel::from_json(const nlohmann::json& j) {
    try {
        tabular::Schema schema = tabular::Schema::from_json(j.at("schema"));
        GlmSpec spec;
        spec.link = link_from_string(j.at("link").get<std::string>());
        for (const auto& jt : j.at("terms")) {
            Term t;
            t.name = jt.at("name").get<std::string>();
            for (const auto& jf : jt.at("factors")) {
                TermFactor f;
                f.feature = jf.at("feature").get<std::size_t>();
                f.power = jf.at("power").get<int>();
                f.level = jf.at("level").get<std::int32_t>();
                t.factors.push_back(f);
            }
            spec.terms.push_back(std::move(t));
        }
        return GlmModel(std::move(schema), std::move(spec), j.at("intercept").get<double>(),
                        j.at("coefficients").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed glm model json: ") + e.what());
    }
}

}  // namespace claro::models
