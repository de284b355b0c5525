#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "claro/models/predictor.hpp"

namespace claro::models {

enum class Link { Identity, Log };

std::string to_string(Link link);
Link link_from_string(std::string_view name);

/// One multiplicative factor of a model term: a power of a numeric feature,
/// or a level indicator of a categorical one.
struct TermFactor {
    std::size_t feature = 0;
    int power = 1;            // numeric factors; must be >= 1
    std::int32_t level = -1;  // >= 0 marks a categorical indicator
};

/// Product of factors. Main effects are single-factor terms; interaction and
/// polynomial terms carry more factors or higher powers.
struct Term {
    std::vector<TermFactor> factors;
    std::string name;

    double eval(const tabular::Dataset& ds, std::size_t i) const;
};

struct GlmSpec {
    Link link = Link::Log;
    std::vector<Term> terms;
};

// Term builders.
Term numeric_term(const tabular::Schema& schema, std::string_view feature, int power = 1);
Term level_term(const tabular::Schema& schema, std::string_view feature, std::string_view level);
Term interaction(Term a, Term b);
/// One term per numeric feature plus one indicator per non-reference level
/// (the first level of each categorical is the reference).
std::vector<Term> main_effect_terms(const tabular::Schema& schema);

/// prediction = inverse_link(intercept + sum_k coefficient_k * term_k(x)).
class GlmModel final : public Predictor {
public:
    GlmModel(tabular::Schema schema, GlmSpec spec, double intercept,
             std::vector<double> coefficients);

    const GlmSpec& spec() const { return spec_; }
    double intercept() const { return intercept_; }
    const std::vector<double>& coefficients() const { return coefficients_; }

    /// True when some term references feature j.
    bool uses_feature(std::size_t j) const;

    const tabular::Schema& schema() const override { return schema_; }
    std::string type_name() const override { return "glm"; }
    nlohmann::json to_json() const override;
    static GlmModel from_json(const nlohmann::json& j);

protected:
    double eval_row(const tabular::Dataset& ds, std::size_t i) const override;

private:
    tabular::Schema schema_;
    GlmSpec spec_;
    double intercept_;
    std::vector<double> coefficients_;
};

struct GlmFitOptions {
    double ridge = 0.0;       // L2 penalty on non-intercept coefficients
    int max_iterations = 50;  // refinement steps on the normal equations
    double tolerance = 1e-10; // max-norm of the objective gradient at exit
};

/// Weighted least squares of the link-transformed response on the term
/// design matrix. The log link therefore requires strictly positive
/// responses. Throws ComputationError on a singular design (unless ridge
/// is set) or when refinement fails to reach tolerance.
GlmModel fit_glm(const tabular::Dataset& ds, const GlmSpec& spec,
                 const GlmFitOptions& options = {});

}  // namespace claro::models
