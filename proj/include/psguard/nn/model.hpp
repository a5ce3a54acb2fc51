#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psguard/dataset.hpp"
#include "psguard/nn/matrix.hpp"
#include "psguard/rng.hpp"
#include "psguard/tokenizer.hpp"

namespace psguard::nn {

struct ModelConfig {
    std::size_t vocab_size = kDefaultVocabCap;
    std::size_t embed_dim = 128;
    std::size_t hidden_dim = 64;
    std::size_t dense_dim = 64;
    double dropout_rate = 0.5;
    bool bidirectional = false;
    std::size_t max_len = kDefaultMaxLen;

    /// Throws psguard::Error when a dimension is zero or dropout is outside [0, 1).
    void validate() const;
    /// Vocabulary rows plus the padding and OOV rows.
    [[nodiscard]] std::size_t embedding_rows() const { return vocab_size + 2; }
    [[nodiscard]] std::size_t feature_dim() const { return bidirectional ? 2 * hidden_dim : hidden_dim; }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Weights feeding one gate: input (hidden x embed), recurrent
/// (hidden x hidden) and bias (hidden x 1).
struct GateParams {
    Matrix input;
    Matrix recurrent;
    Matrix bias;
};

struct LstmCellParams {
    GateParams input_gate;
    GateParams candidate;
    GateParams forget_gate;
    GateParams output_gate;

    [[nodiscard]] static LstmCellParams zeros(std::size_t input_dim, std::size_t hidden_dim);
    [[nodiscard]] std::size_t input_dim() const { return input_gate.input.cols(); }
    [[nodiscard]] std::size_t hidden_dim() const { return input_gate.input.rows(); }
};

struct LstmState {
    std::vector<double> h;
    std::vector<double> c;

    [[nodiscard]] static LstmState zeros(std::size_t hidden_dim) {
        return {std::vector<double>(hidden_dim, 0.0), std::vector<double>(hidden_dim, 0.0)};
    }
};

/// Gate activations of one step: i, f, o in (0,1) and g in (-1,1).
struct GateActivations {
    std::vector<double> i, g, f, o;
};

struct ModelParams {
    Matrix embedding;
    LstmCellParams forward_cell;
    LstmCellParams backward_cell;  // 0x0 matrices unless bidirectional
    Matrix dense_weights;          // dense x feature
    Matrix dense_bias;             // dense x 1
    Matrix output_weights;         // 1 x dense
    Matrix output_bias;            // 1 x 1
};

struct Model {
    ModelConfig config;
    ModelParams params;
};

/// Calls fn(name, matrix) for every learnable tensor in a fixed order.
template <typename Params, typename Fn>
void for_each_parameter(Params& params, bool bidirectional, Fn&& fn) {
    const auto cell = [&](const std::string& prefix, auto& c) {
        const auto gate = [&](const std::string& name, auto& g) {
            fn(prefix + "." + name + ".input", g.input);
            fn(prefix + "." + name + ".recurrent", g.recurrent);
            fn(prefix + "." + name + ".bias", g.bias);
        };
        gate("input_gate", c.input_gate);
        gate("candidate", c.candidate);
        gate("forget_gate", c.forget_gate);
        gate("output_gate", c.output_gate);
    };
    fn(std::string("embedding"), params.embedding);
    cell("lstm_forward", params.forward_cell);
    if (bidirectional) cell("lstm_backward", params.backward_cell);
    fn(std::string("dense.weights"), params.dense_weights);
    fn(std::string("dense.bias"), params.dense_bias);
    fn(std::string("output.weights"), params.output_weights);
    fn(std::string("output.bias"), params.output_bias);
}

/// All parameters zero; shapes follow the config.
[[nodiscard]] Model zero_model(const ModelConfig& config);

/// Weights uniform in +-1/sqrt(fan_in), biases zero except the forget gate
/// bias which starts at 1.
[[nodiscard]] Model init_model(const ModelConfig& config, std::uint64_t seed);

[[nodiscard]] std::size_t parameter_count(const Model& model);

/// Rounds every parameter to the nearest float, the checkpoint storage type.
void round_to_storage_precision(Model& model);

/// One recurrence step. Throws psguard::Error on a shape mismatch.
[[nodiscard]] LstmState lstm_step(std::span<const double> x, const LstmState& prev, const LstmCellParams& p,
                                  GateActivations* gates = nullptr);

/// Runs the cell over the ids (optionally in reverse order) and returns the
/// last state. Padding ids are skipped.
[[nodiscard]] LstmState run_lstm(const LstmCellParams& cell, const Matrix& embedding,
                                 std::span<const std::int32_t> ids, bool reverse = false);

/// Final hidden vector: forward last hidden, concatenated with the backward
/// last hidden for bidirectional models.
[[nodiscard]] std::vector<double> sequence_features(const Model& model, const TokenSequence& seq);

/// Intermediate values of the classification head, kept for backprop.
/// Masks hold 0 or 1/(1-rate); they are all ones in inference mode.
struct HeadTrace {
    std::vector<double> features;
    std::vector<double> features_mask;
    std::vector<double> dense_pre;
    std::vector<double> dense_out;  // after ReLU and the second dropout
    std::vector<double> dense_mask;
    double logit = 0.0;
};

/// Dropout, dense+ReLU, dropout, output layer. Returns the pre-sigmoid logit.
[[nodiscard]] double head_logit(const Model& model, std::span<const double> features, bool training, Rng* rng,
                                HeadTrace* trace = nullptr);

/// Checks the sequence against the model: length equals max_len, true_len
/// fits, every id is inside the embedding. Throws psguard::Error otherwise.
void check_sequence(const Model& model, const TokenSequence& seq);

/// Pre-sigmoid output of the full model.
[[nodiscard]] double forward_logit(const Model& model, const TokenSequence& seq, bool training, Rng* rng = nullptr);

/// Probability of the malicious class. Dropout is applied only when
/// `training` is set, drawing masks from `rng`.
[[nodiscard]] double forward(const Model& model, const TokenSequence& seq, bool training, Rng* rng = nullptr);
/// Same as forward() but requires a bidirectional model.
[[nodiscard]] double bilstm_forward(const Model& model, const TokenSequence& seq, bool training, Rng* rng = nullptr);
[[nodiscard]] inline double predict(const Model& model, const TokenSequence& seq) {
    return forward(model, seq, false);
}

[[nodiscard]] double sigmoid(double z);
/// Binary cross-entropy of a logit against a 0/1 label, computed stably.
[[nodiscard]] double bce_with_logit(double logit, int label);

}  // namespace psguard::nn
