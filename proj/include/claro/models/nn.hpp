#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "claro/models/predictor.hpp"
#include "claro/tabular/dataset.hpp"

namespace claro::models {

/// Learned vectors for one embedded categorical feature, one per level.
struct EmbeddingTable {
    std::vector<std::array<double, 2>> vectors;
};

enum class EncoderKind { Numeric, OneHot, Embed };

/// How one feature enters the network input.
///
/// Numerics are centered and scaled with statistics frozen from the analysis
/// split. Low-cardinality categoricals are one-hot encoded; high-cardinality
/// ones map to trainable vectors in R^2 that live inside the flat parameter
/// vector (param_offset points at the first component of level 0).
struct Encoder {
    EncoderKind kind = EncoderKind::Numeric;
    std::size_t feature = 0;
    std::size_t n_levels = 0;  // categorical encoders
    double center = 0.0;       // numeric encoders
    double scale = 1.0;

    std::size_t width = 0;         // columns in the encoded input
    std::size_t offset = 0;        // first encoded column
    std::size_t param_offset = 0;  // Embed: first slot in the parameter vector
};

struct NnArchitecture {
    std::size_t hidden_width = 64;
    // Categoricals with more levels than this are embedded, the rest one-hot.
    std::size_t embed_threshold = 6;
};

/// Shapes and parameter-vector offsets of a concrete network. All weights,
/// biases, and embedding vectors live in a single flat float64 vector so the
/// optimizer and the finite-difference tests can treat the model as one
/// function of R^n.
struct NnLayout {
    std::vector<Encoder> encoders;
    std::size_t hidden_width = 64;
    std::size_t input_width = 0;

    // Segment offsets within the flat parameter vector. Embeddings occupy
    // [0, embedding_size); matrices are stored column-major.
    std::size_t embedding_size = 0;
    std::size_t w1 = 0, b1 = 0;  // hidden_width x input_width, hidden_width
    std::size_t w2 = 0, b2 = 0;  // hidden_width x hidden_width, hidden_width
    std::size_t w3 = 0, b3 = 0;  // 1 x hidden_width, 1
    std::size_t n_params = 0;

    nlohmann::json to_json() const;
    static NnLayout from_json(const nlohmann::json& j);
};

/// Derives encoders from the schema and freezes center/scale statistics from
/// the given (analysis) data.
NnLayout make_layout(const tabular::Dataset& analysis, const NnArchitecture& arch = {});

/// Scratch buffers reused across rows so per-row evaluation does not allocate.
struct NnWorkspace {
    Eigen::VectorXd input, a1, h1, a2, h2;
    Eigen::VectorXd dz1, dz2;
    double z3 = 0.0;

    explicit NnWorkspace(const NnLayout& layout);
};

/// Overflow-safe softplus and its derivative.
double softplus(double z);
double softplus_derivative(double z);

/// Forward pass for row i; activations are left in ws for a later backward.
double nn_forward(const NnLayout& layout, const Eigen::VectorXd& params,
                  const tabular::Dataset& ds, std::size_t i, NnWorkspace& ws);

/// Accumulates d(output)/d(params) scaled by upstream into grad, consuming
/// the activations of the row most recently passed through nn_forward with
/// this workspace.
void nn_backward(const NnLayout& layout, const Eigen::VectorXd& params,
                 const tabular::Dataset& ds, std::size_t i, double upstream, NnWorkspace& ws,
                 Eigen::VectorXd& grad);

/// Weighted MSE over the given rows and, when grad is non-null, its gradient
/// with respect to params. The objective the optimizer descends, exposed so
/// tests can check the analytic gradient against finite differences.
double nn_loss_and_grad(const NnLayout& layout, const Eigen::VectorXd& params,
                        const tabular::Dataset& ds, const std::vector<std::size_t>& rows,
                        Eigen::VectorXd* grad);

class NnModel final : public Predictor {
public:
    NnModel(tabular::Schema schema, NnLayout layout, Eigen::VectorXd params);

    const tabular::Schema& schema() const override { return schema_; }
    std::string type_name() const override { return "nn"; }
    const NnLayout& layout() const { return layout_; }
    const Eigen::VectorXd& params() const { return params_; }

    /// Embedding vectors of a high-cardinality feature; error when the
    /// feature is not embedded.
    EmbeddingTable embedding(std::string_view feature) const;

    nlohmann::json to_json() const override;
    static NnModel from_json(const nlohmann::json& j);

protected:
    double eval_row(const tabular::Dataset& ds, std::size_t i) const override;

private:
    tabular::Schema schema_;
    NnLayout layout_;
    Eigen::VectorXd params_;
};

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t batch_size = 10000;  // clamped to the analysis size
    int early_stopping_patience = 5;
    int max_epochs = 100;
    std::uint64_t seed = 0;
};

struct EpochLog {
    double train_loss = 0.0;       // running weighted MSE over the epoch's batches
    double assessment_loss = 0.0;  // full pass after the epoch's updates
};

struct NnFitResult {
    NnModel model;
    std::vector<EpochLog> epochs;
    int best_epoch = -1;  // -1 when no epoch ran
    double best_assessment_loss = 0.0;
    bool stopped_early = false;
};

/// Trains by mini-batch ADAM on weighted MSE, shuffling the analysis rows
/// each epoch, and returns the parameter snapshot with the best assessment
/// loss. Early stopping triggers after early_stopping_patience consecutive
/// epochs without strict improvement. Fully deterministic for a fixed seed.
NnFitResult fit_nn(const tabular::Dataset& analysis, const tabular::Dataset& assessment,
                   const TrainConfig& cfg = {}, const NnArchitecture& arch = {});

}  // namespace claro::models
