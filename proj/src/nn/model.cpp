#include "psguard/nn/model.hpp"

#include <cmath>
#include <string>

#include "psguard/error.hpp"

namespace psguard::nn {

void ModelConfig::validate() const {
    if (vocab_size == 0 || embed_dim == 0 || hidden_dim == 0 || dense_dim == 0 || max_len == 0) {
        throw Error("model config: dimensions must be positive");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw Error("model config: dropout_rate must be in [0, 1), got " + std::to_string(dropout_rate));
    }
}

namespace {

GateParams zero_gate(std::size_t input_dim, std::size_t hidden_dim) {
    return {Matrix(hidden_dim, input_dim), Matrix(hidden_dim, hidden_dim), Matrix(hidden_dim, 1)};
}

void uniform_fill(Matrix& m, double bound, Rng& rng) {
    for (double& v : m.values()) v = rng.uniform(-bound, bound);
}

void init_cell(LstmCellParams& cell, Rng& rng) {
    // fan_in of every gate is input + recurrent width
    const double bound = 1.0 / std::sqrt(static_cast<double>(cell.input_dim() + cell.hidden_dim()));
    for (GateParams* g : {&cell.input_gate, &cell.candidate, &cell.forget_gate, &cell.output_gate}) {
        uniform_fill(g->input, bound, rng);
        uniform_fill(g->recurrent, bound, rng);
        g->bias.fill(0.0);
    }
    cell.forget_gate.bias.fill(1.0);
}

std::vector<double> gate_pre(const GateParams& g, std::span<const double> x, std::span<const double> h) {
    std::vector<double> out(g.bias.values().begin(), g.bias.values().end());
    gemv_add(g.input, x, out);
    gemv_add(g.recurrent, h, out);
    return out;
}

void check_cell_shape(const LstmCellParams& p) {
    const std::size_t in = p.input_dim();
    const std::size_t hid = p.hidden_dim();
    for (const GateParams* g : {&p.input_gate, &p.candidate, &p.forget_gate, &p.output_gate}) {
        if (g->input.rows() != hid || g->input.cols() != in || g->recurrent.rows() != hid ||
            g->recurrent.cols() != hid || g->bias.rows() != hid || g->bias.cols() != 1) {
            throw Error("lstm: inconsistent gate shapes");
        }
    }
}

}  // namespace

LstmCellParams LstmCellParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
    return {zero_gate(input_dim, hidden_dim), zero_gate(input_dim, hidden_dim), zero_gate(input_dim, hidden_dim),
            zero_gate(input_dim, hidden_dim)};
}

Model zero_model(const ModelConfig& config) {
    config.validate();
    Model m;
    m.config = config;
    m.params.embedding = Matrix(config.embedding_rows(), config.embed_dim);
    m.params.forward_cell = LstmCellParams::zeros(config.embed_dim, config.hidden_dim);
    if (config.bidirectional) m.params.backward_cell = LstmCellParams::zeros(config.embed_dim, config.hidden_dim);
    m.params.dense_weights = Matrix(config.dense_dim, config.feature_dim());
    m.params.dense_bias = Matrix(config.dense_dim, 1);
    m.params.output_weights = Matrix(1, config.dense_dim);
    m.params.output_bias = Matrix(1, 1);
    return m;
}

Model init_model(const ModelConfig& config, std::uint64_t seed) {
    Model m = zero_model(config);
    Rng rng(seed);
    uniform_fill(m.params.embedding, 1.0 / std::sqrt(static_cast<double>(config.embed_dim)), rng);
    init_cell(m.params.forward_cell, rng);
    if (config.bidirectional) init_cell(m.params.backward_cell, rng);
    uniform_fill(m.params.dense_weights, 1.0 / std::sqrt(static_cast<double>(config.feature_dim())), rng);
    uniform_fill(m.params.output_weights, 1.0 / std::sqrt(static_cast<double>(config.dense_dim)), rng);
    return m;
}

std::size_t parameter_count(const Model& model) {
    std::size_t n = 0;
    for_each_parameter(model.params, model.config.bidirectional,
                       [&](const std::string&, const Matrix& m) { n += m.size(); });
    return n;
}

void round_to_storage_precision(Model& model) {
    for_each_parameter(model.params, model.config.bidirectional, [](const std::string&, Matrix& m) {
        for (double& v : m.values()) v = static_cast<double>(static_cast<float>(v));
    });
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double bce_with_logit(double logit, int label) {
    // -[y log s(z) + (1-y) log(1-s(z))] = max(z,0) - y z + log(1 + e^-|z|)
    return std::max(logit, 0.0) - static_cast<double>(label) * logit + std::log1p(std::exp(-std::abs(logit)));
}

LstmState lstm_step(std::span<const double> x, const LstmState& prev, const LstmCellParams& p,
                    GateActivations* gates) {
    check_cell_shape(p);
    const std::size_t hid = p.hidden_dim();
    if (x.size() != p.input_dim() || prev.h.size() != hid || prev.c.size() != hid) {
        throw Error("lstm_step: input or state size does not match the cell");
    }
    std::vector<double> i = gate_pre(p.input_gate, x, prev.h);
    std::vector<double> g = gate_pre(p.candidate, x, prev.h);
    std::vector<double> f = gate_pre(p.forget_gate, x, prev.h);
    std::vector<double> o = gate_pre(p.output_gate, x, prev.h);
    LstmState next{std::vector<double>(hid), std::vector<double>(hid)};
    for (std::size_t k = 0; k < hid; ++k) {
        i[k] = sigmoid(i[k]);
        g[k] = std::tanh(g[k]);
        f[k] = sigmoid(f[k]);
        o[k] = sigmoid(o[k]);
        next.c[k] = f[k] * prev.c[k] + i[k] * g[k];
        next.h[k] = std::tanh(next.c[k]) * o[k];
    }
    if (gates != nullptr) *gates = {std::move(i), std::move(g), std::move(f), std::move(o)};
    return next;
}

LstmState run_lstm(const LstmCellParams& cell, const Matrix& embedding, std::span<const std::int32_t> ids,
                   bool reverse) {
    LstmState state = LstmState::zeros(cell.hidden_dim());
    const std::size_t n = ids.size();
    for (std::size_t t = 0; t < n; ++t) {
        const std::int32_t id = ids[reverse ? n - 1 - t : t];
        if (id == kPaddingId) continue;
        if (id < 0 || static_cast<std::size_t>(id) >= embedding.rows()) {
            throw Error("token id " + std::to_string(id) + " outside the embedding");
        }
        state = lstm_step(embedding.row(static_cast<std::size_t>(id)), state, cell);
    }
    return state;
}

void check_sequence(const Model& model, const TokenSequence& seq) {
    if (seq.ids.size() != model.config.max_len) {
        throw Error("sequence length " + std::to_string(seq.ids.size()) + " differs from max_len " +
                    std::to_string(model.config.max_len));
    }
    if (seq.true_len > seq.ids.size()) throw Error("sequence true_len exceeds its length");
    for (const std::int32_t id : seq.ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= model.params.embedding.rows()) {
            throw Error("token id " + std::to_string(id) + " outside the embedding");
        }
    }
}

std::vector<double> sequence_features(const Model& model, const TokenSequence& seq) {
    check_sequence(model, seq);
    const std::span<const std::int32_t> ids(seq.ids.data(), seq.true_len);
    std::vector<double> features = run_lstm(model.params.forward_cell, model.params.embedding, ids).h;
    if (model.config.bidirectional) {
        const auto back = run_lstm(model.params.backward_cell, model.params.embedding, ids, true).h;
        features.insert(features.end(), back.begin(), back.end());
    }
    return features;
}

double head_logit(const Model& model, std::span<const double> features, bool training, Rng* rng,
                  HeadTrace* trace) {
    const auto& p = model.params;
    const double rate = model.config.dropout_rate;
    const bool drop = training && rate > 0.0;
    if (drop && rng == nullptr) throw Error("dropout in training mode needs a random generator");
    if (features.size() != p.dense_weights.cols()) throw Error("head: feature size does not match dense layer");

    const auto make_mask = [&](std::size_t n) {
        std::vector<double> mask(n, 1.0);
        if (drop) {
            const double keep_scale = 1.0 / (1.0 - rate);
            for (double& m : mask) m = rng->bernoulli(rate) ? 0.0 : keep_scale;
        }
        return mask;
    };

    std::vector<double> mask1 = make_mask(features.size());
    std::vector<double> x(features.size());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = features[k] * mask1[k];

    std::vector<double> pre(p.dense_bias.values().begin(), p.dense_bias.values().end());
    gemv_add(p.dense_weights, x, pre);
    std::vector<double> mask2 = make_mask(pre.size());
    std::vector<double> out(pre.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::max(pre[k], 0.0) * mask2[k];

    double logit = p.output_bias(0, 0);
    for (std::size_t k = 0; k < out.size(); ++k) logit += p.output_weights(0, k) * out[k];

    if (trace != nullptr) {
        trace->features.assign(features.begin(), features.end());
        trace->features_mask = std::move(mask1);
        trace->dense_pre = std::move(pre);
        trace->dense_out = std::move(out);
        trace->dense_mask = std::move(mask2);
        trace->logit = logit;
    }
    return logit;
}

double forward_logit(const Model& model, const TokenSequence& seq, bool training, Rng* rng) {
    const std::vector<double> features = sequence_features(model, seq);
    return head_logit(model, features, training, rng);
}

double forward(const Model& model, const TokenSequence& seq, bool training, Rng* rng) {
    return sigmoid(forward_logit(model, seq, training, rng));
}

double bilstm_forward(const Model& model, const TokenSequence& seq, bool training, Rng* rng) {
    if (!model.config.bidirectional) throw Error("bilstm_forward called on a unidirectional model");
    return forward(model, seq, training, rng);
}

}  // namespace psguard::nn
