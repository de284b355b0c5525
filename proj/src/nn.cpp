#include "claro/models/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "claro/error.hpp"
#include "claro/rng.hpp"

namespace claro::models {

namespace {

// ADAM moment decays and epsilon; only the learning rate is exposed as a knob.
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEpsilon = 1e-8;

std::string encoder_kind_name(EncoderKind kind) {
    switch (kind) {
        case EncoderKind::Numeric: return "numeric";
        case EncoderKind::OneHot: return "onehot";
        case EncoderKind::Embed: return "embed";
    }
    return "numeric";
}

EncoderKind encoder_kind_from_name(const std::string& name) {
    if (name == "numeric") return EncoderKind::Numeric;
    if (name == "onehot") return EncoderKind::OneHot;
    if (name == "embed") return EncoderKind::Embed;
    throw ValidationError("unknown encoder kind '" + name + "'");
}

// Computes column offsets and parameter-segment offsets from the encoder
// list and hidden width; shared by make_layout and deserialization.
void finalize_layout(NnLayout& layout) {
    std::size_t col = 0;
    std::size_t emb = 0;
    for (auto& enc : layout.encoders) {
        enc.offset = col;
        col += enc.width;
        if (enc.kind == EncoderKind::Embed) {
            enc.param_offset = emb;
            emb += 2 * enc.n_levels;
        }
    }
    layout.input_width = col;
    layout.embedding_size = emb;
    const std::size_t h = layout.hidden_width;
    layout.w1 = emb;
    layout.b1 = layout.w1 + h * col;
    layout.w2 = layout.b1 + h;
    layout.b2 = layout.w2 + h * h;
    layout.w3 = layout.b2 + h;
    layout.b3 = layout.w3 + h;
    layout.n_params = layout.b3 + 1;
}

void check_layout_matches(const NnLayout& layout, const tabular::Schema& schema) {
    if (layout.encoders.size() != schema.features().size())
        throw ValidationError("encoder list does not cover the schema's features");
    for (std::size_t j = 0; j < layout.encoders.size(); ++j) {
        const Encoder& enc = layout.encoders[j];
        const auto& kind = schema.feature(j).kind;
        if (enc.feature != j)
            throw ValidationError("encoders must appear in feature order");
        if (enc.kind == EncoderKind::Numeric) {
            if (!kind.is_numeric() || enc.scale <= 0.0)
                throw ValidationError("numeric encoder mismatch for '" + schema.feature(j).name +
                                      "'");
        } else {
            if (!kind.is_categorical() || enc.n_levels != kind.levels().size())
                throw ValidationError("categorical encoder mismatch for '" +
                                      schema.feature(j).name + "'");
        }
    }
}

}  // namespace

double softplus(double z) {
    const double sp = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
    // log1p underflows to 0 for z below about -745; keep the output strictly
    // positive as the contract promises.
    return std::max(sp, std::numeric_limits<double>::min());
}

double softplus_derivative(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

NnLayout make_layout(const tabular::Dataset& analysis, const NnArchitecture& arch) {
    if (analysis.n_rows() == 0)
        throw ValidationError("cannot derive encoders from an empty dataset");
    if (arch.hidden_width < 1) throw ValidationError("hidden_width must be positive");

    NnLayout layout;
    layout.hidden_width = arch.hidden_width;
    const auto& schema = analysis.schema();
    for (std::size_t j = 0; j < schema.features().size(); ++j) {
        Encoder enc;
        enc.feature = j;
        const auto& kind = schema.feature(j).kind;
        if (kind.is_numeric()) {
            enc.kind = EncoderKind::Numeric;
            enc.width = 1;
            const auto& x = analysis.numeric(j);
            double mean = 0.0;
            for (double v : x) mean += v;
            mean /= static_cast<double>(x.size());
            double var = 0.0;
            for (double v : x) var += (v - mean) * (v - mean);
            var /= static_cast<double>(x.size());
            enc.center = mean;
            enc.scale = var > 0.0 ? std::sqrt(var) : 1.0;
        } else if (kind.levels().size() <= arch.embed_threshold) {
            enc.kind = EncoderKind::OneHot;
            enc.n_levels = kind.levels().size();
            enc.width = enc.n_levels;
        } else {
            enc.kind = EncoderKind::Embed;
            enc.n_levels = kind.levels().size();
            enc.width = 2;
        }
        layout.encoders.push_back(enc);
    }
    finalize_layout(layout);
    return layout;
}

nlohmann::json NnLayout::to_json() const {
    nlohmann::json encs = nlohmann::json::array();
    for (const auto& enc : encoders) {
        nlohmann::json je{{"kind", encoder_kind_name(enc.kind)}, {"feature", enc.feature}};
        if (enc.kind == EncoderKind::Numeric) {
            je["center"] = enc.center;
            je["scale"] = enc.scale;
        } else {
            je["n_levels"] = enc.n_levels;
        }
        encs.push_back(std::move(je));
    }
    return nlohmann::json{{"hidden_width", hidden_width}, {"encoders", std::move(encs)}};
}

NnLayout NnLayout::from_json(const nlohmann::json& j) {
    NnLayout layout;
    layout.hidden_width = j.at("hidden_width").get<std::size_t>();
    if (layout.hidden_width < 1) throw ValidationError("hidden_width must be positive");
    for (const auto& je : j.at("encoders")) {
        Encoder enc;
        enc.kind = encoder_kind_from_name(je.at("kind").get<std::string>());
        enc.feature = je.at("feature").get<std::size_t>();
        if (enc.kind == EncoderKind::Numeric) {
            enc.center = je.at("center").get<double>();
            enc.scale = je.at("scale").get<double>();
            enc.width = 1;
        } else {
            enc.n_levels = je.at("n_levels").get<std::size_t>();
            enc.width = enc.kind == EncoderKind::Embed ? 2 : enc.n_levels;
        }
        layout.encoders.push_back(enc);
    }
    finalize_layout(layout);
    return layout;
}

NnWorkspace::NnWorkspace(const NnLayout& layout)
    : input(layout.input_width),
      a1(layout.hidden_width),
      h1(layout.hidden_width),
      a2(layout.hidden_width),
      h2(layout.hidden_width),
      dz1(layout.hidden_width),
      dz2(layout.hidden_width) {}

double nn_forward(const NnLayout& layout, const Eigen::VectorXd& params,
                  const tabular::Dataset& ds, std::size_t i, NnWorkspace& ws) {
    for (const auto& enc : layout.encoders) {
        switch (enc.kind) {
            case EncoderKind::Numeric:
                ws.input(static_cast<Eigen::Index>(enc.offset)) =
                    (ds.numeric(enc.feature)[i] - enc.center) / enc.scale;
                break;
            case EncoderKind::OneHot: {
                ws.input.segment(static_cast<Eigen::Index>(enc.offset),
                                 static_cast<Eigen::Index>(enc.width))
                    .setZero();
                const auto level = ds.categorical(enc.feature)[i];
                ws.input(static_cast<Eigen::Index>(enc.offset + level)) = 1.0;
                break;
            }
            case EncoderKind::Embed: {
                const auto level = ds.categorical(enc.feature)[i];
                const std::size_t slot = enc.param_offset + 2 * static_cast<std::size_t>(level);
                ws.input(static_cast<Eigen::Index>(enc.offset)) =
                    params(static_cast<Eigen::Index>(slot));
                ws.input(static_cast<Eigen::Index>(enc.offset + 1)) =
                    params(static_cast<Eigen::Index>(slot + 1));
                break;
            }
        }
    }

    const auto h = static_cast<Eigen::Index>(layout.hidden_width);
    const auto d = static_cast<Eigen::Index>(layout.input_width);
    Eigen::Map<const Eigen::MatrixXd> W1(params.data() + layout.w1, h, d);
    Eigen::Map<const Eigen::VectorXd> b1(params.data() + layout.b1, h);
    Eigen::Map<const Eigen::MatrixXd> W2(params.data() + layout.w2, h, h);
    Eigen::Map<const Eigen::VectorXd> b2(params.data() + layout.b2, h);
    Eigen::Map<const Eigen::VectorXd> w3(params.data() + layout.w3, h);

    ws.a1.noalias() = W1 * ws.input;
    ws.a1 += b1;
    ws.h1 = ws.a1.cwiseMax(0.0);
    ws.a2.noalias() = W2 * ws.h1;
    ws.a2 += b2;
    ws.h2 = ws.a2.cwiseMax(0.0);
    ws.z3 = w3.dot(ws.h2) + params(static_cast<Eigen::Index>(layout.b3));
    return softplus(ws.z3);
}

void nn_backward(const NnLayout& layout, const Eigen::VectorXd& params,
                 const tabular::Dataset& ds, std::size_t i, double upstream, NnWorkspace& ws,
                 Eigen::VectorXd& grad) {
    const auto h = static_cast<Eigen::Index>(layout.hidden_width);
    const auto d = static_cast<Eigen::Index>(layout.input_width);
    Eigen::Map<const Eigen::MatrixXd> W1(params.data() + layout.w1, h, d);
    Eigen::Map<const Eigen::MatrixXd> W2(params.data() + layout.w2, h, h);
    Eigen::Map<const Eigen::VectorXd> w3(params.data() + layout.w3, h);

    Eigen::Map<Eigen::MatrixXd> gW1(grad.data() + layout.w1, h, d);
    Eigen::Map<Eigen::VectorXd> gb1(grad.data() + layout.b1, h);
    Eigen::Map<Eigen::MatrixXd> gW2(grad.data() + layout.w2, h, h);
    Eigen::Map<Eigen::VectorXd> gb2(grad.data() + layout.b2, h);
    Eigen::Map<Eigen::VectorXd> gw3(grad.data() + layout.w3, h);

    const double dz3 = upstream * softplus_derivative(ws.z3);
    grad(static_cast<Eigen::Index>(layout.b3)) += dz3;
    gw3.noalias() += dz3 * ws.h2;

    ws.dz2 = dz3 * w3;
    for (Eigen::Index k = 0; k < h; ++k)
        if (ws.a2(k) <= 0.0) ws.dz2(k) = 0.0;
    gb2 += ws.dz2;
    gW2.noalias() += ws.dz2 * ws.h1.transpose();

    ws.dz1.noalias() = W2.transpose() * ws.dz2;
    for (Eigen::Index k = 0; k < h; ++k)
        if (ws.a1(k) <= 0.0) ws.dz1(k) = 0.0;
    gb1 += ws.dz1;
    gW1.noalias() += ws.dz1 * ws.input.transpose();

    // Input gradients reach trainable parameters only through embeddings.
    for (const auto& enc : layout.encoders) {
        if (enc.kind != EncoderKind::Embed) continue;
        const auto level = ds.categorical(enc.feature)[i];
        const std::size_t slot = enc.param_offset + 2 * static_cast<std::size_t>(level);
        grad(static_cast<Eigen::Index>(slot)) +=
            W1.col(static_cast<Eigen::Index>(enc.offset)).dot(ws.dz1);
        grad(static_cast<Eigen::Index>(slot + 1)) +=
            W1.col(static_cast<Eigen::Index>(enc.offset + 1)).dot(ws.dz1);
    }
}

double nn_loss_and_grad(const NnLayout& layout, const Eigen::VectorXd& params,
                        const tabular::Dataset& ds, const std::vector<std::size_t>& rows,
                        Eigen::VectorXd* grad) {
    if (rows.empty()) throw ValidationError("loss requires at least one row");
    if (params.size() != static_cast<Eigen::Index>(layout.n_params))
        throw ValidationError("parameter vector does not match the layout");
    if (grad) {
        grad->resize(static_cast<Eigen::Index>(layout.n_params));
        grad->setZero();
    }

    double total_weight = 0.0;
    for (std::size_t i : rows) total_weight += ds.weights()[i];

    NnWorkspace ws(layout);
    double loss = 0.0;
    for (std::size_t i : rows) {
        const double f = nn_forward(layout, params, ds, i, ws);
        const double r = f - ds.response()[i];
        const double w = ds.weights()[i];
        loss += w * r * r;
        if (grad) nn_backward(layout, params, ds, i, 2.0 * w * r / total_weight, ws, *grad);
    }
    return loss / total_weight;
}

NnModel::NnModel(tabular::Schema schema, NnLayout layout, Eigen::VectorXd params)
    : schema_(std::move(schema)), layout_(std::move(layout)), params_(std::move(params)) {
    check_layout_matches(layout_, schema_);
    if (params_.size() != static_cast<Eigen::Index>(layout_.n_params))
        throw ValidationError("parameter vector does not match the layout");
    if (!params_.allFinite()) throw ValidationError("parameters must be finite");
}

double NnModel::eval_row(const tabular::Dataset& ds, std::size_t i) const {
    NnWorkspace ws(layout_);
    return nn_forward(layout_, params_, ds, i, ws);
}

EmbeddingTable NnModel::embedding(std::string_view feature) const {
    const std::size_t j = schema_.require_feature(feature);
    const Encoder& enc = layout_.encoders[j];
    if (enc.kind != EncoderKind::Embed)
        throw ValidationError("'" + std::string(feature) + "' is not an embedded feature");
    EmbeddingTable table;
    table.vectors.resize(enc.n_levels);
    for (std::size_t l = 0; l < enc.n_levels; ++l) {
        const std::size_t slot = enc.param_offset + 2 * l;
        table.vectors[l] = {params_(static_cast<Eigen::Index>(slot)),
                            params_(static_cast<Eigen::Index>(slot + 1))};
    }
    return table;
}

nlohmann::json NnModel::to_json() const {
    std::vector<double> flat(params_.data(), params_.data() + params_.size());
    return nlohmann::json{{"format", "claro-model"},
                          {"version", 1},
                          {"type", "nn"},
                          {"schema", schema_.to_json()},
                          {"layout", layout_.to_json()},
                          {"params", std::move(flat)}};
}

NnModel NnModel::from_json(const nlohmann::json& j) {
    try {
        tabular::Schema schema = tabular::Schema::from_json(j.at("schema"));
        NnLayout layout = NnLayout::from_json(j.at("layout"));
        const auto flat = j.at("params").get<std::vector<double>>();
        Eigen::VectorXd params =
            Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
        return NnModel(std::move(schema), std::move(layout), std::move(params));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed nn model json: ") + e.what());
    }
}

namespace {

// Weights uniform in +-1/sqrt(fan_in), biases zero, embeddings small
// uniform. Draw order is fixed: embeddings in encoder order, then each layer.
Eigen::VectorXd initial_params(const NnLayout& layout, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.n_params));
    for (std::size_t k = 0; k < layout.embedding_size; ++k)
        params(static_cast<Eigen::Index>(k)) = rng.uniform(-0.1, 0.1);

    const auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t k = 0; k < count; ++k)
            params(static_cast<Eigen::Index>(offset + k)) = rng.uniform(-bound, bound);
    };
    const std::size_t h = layout.hidden_width;
    const std::size_t d = layout.input_width;
    fill(layout.w1, h * d, d);
    fill(layout.w2, h * h, h);
    fill(layout.w3, h, h);
    return params;
}

}  // namespace

NnFitResult fit_nn(const tabular::Dataset& analysis, const tabular::Dataset& assessment,
                   const TrainConfig& cfg, const NnArchitecture& arch) {
    if (!analysis.schema().features_equal(assessment.schema()))
        throw ValidationError("analysis and assessment features disagree");
    if (analysis.n_rows() == 0 || assessment.n_rows() == 0)
        throw ValidationError("fit_nn requires non-empty analysis and assessment sets");
    if (cfg.learning_rate <= 0.0) throw ValidationError("learning_rate must be positive");
    if (cfg.batch_size < 1) throw ValidationError("batch_size must be positive");
    if (cfg.early_stopping_patience < 1) throw ValidationError("patience must be at least 1");
    if (cfg.max_epochs < 0) throw ValidationError("max_epochs must be non-negative");

    const NnLayout layout = make_layout(analysis, arch);
    Eigen::VectorXd params = initial_params(layout, derive_seed(cfg.seed, "nn-init"));

    const std::size_t n = analysis.n_rows();
    const std::size_t batch_size = std::min<std::size_t>(cfg.batch_size, n);
    Rng shuffle_rng(derive_seed(cfg.seed, "nn-shuffle"));

    const auto total = static_cast<Eigen::Index>(layout.n_params);
    Eigen::VectorXd grad(total);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(total);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(total);
    long step = 0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::size_t> assessment_rows(assessment.n_rows());
    std::iota(assessment_rows.begin(), assessment_rows.end(), std::size_t{0});

    NnFitResult result{NnModel(analysis.schema(), layout, params), {}, -1, 0.0, false};
    Eigen::VectorXd best_params = params;
    double best_loss = std::numeric_limits<double>::infinity();
    int bad_epochs = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        double epoch_weight = 0.0;
        std::vector<std::size_t> batch;
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t stop = std::min(n, start + batch_size);
            batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
            const double batch_loss = nn_loss_and_grad(layout, params, analysis, batch, &grad);
            if (!std::isfinite(batch_loss))
                throw ComputationError("training diverged at epoch " + std::to_string(epoch));

            double batch_weight = 0.0;
            for (std::size_t i : batch) batch_weight += analysis.weights()[i];
            epoch_loss += batch_loss * batch_weight;
            epoch_weight += batch_weight;

            ++step;
            const double correction1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
            const double correction2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
            m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
            v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
            params.array() -= cfg.learning_rate * (m.array() / correction1) /
                              ((v.array() / correction2).sqrt() + kAdamEpsilon);
        }

        const double assessment_loss =
            nn_loss_and_grad(layout, params, assessment, assessment_rows, nullptr);
        if (!std::isfinite(assessment_loss))
            throw ComputationError("training diverged at epoch " + std::to_string(epoch));
        result.epochs.push_back({epoch_loss / epoch_weight, assessment_loss});

        if (assessment_loss < best_loss) {
            best_loss = assessment_loss;
            best_params = params;
            result.best_epoch = epoch;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs >= cfg.early_stopping_patience) {
                result.stopped_early = true;
                break;
            }
        }
    }

    if (result.best_epoch >= 0) {
        result.best_assessment_loss = best_loss;
        result.model = NnModel(analysis.schema(), layout, std::move(best_params));
    }
    return result;
}

}  // namespace claro::models
