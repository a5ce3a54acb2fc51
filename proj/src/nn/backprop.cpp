#include "psguard/nn/backprop.hpp"

#include <cmath>

namespace psguard::nn {

namespace {

struct StepRecord {
    std::size_t row = 0;
    LstmState prev;
    LstmState next;
    GateActivations gates;
};

std::vector<StepRecord> record_direction(const LstmCellParams& cell, const Matrix& embedding,
                                         std::span<const std::int32_t> ids, bool reverse) {
    std::vector<StepRecord> steps;
    steps.reserve(ids.size());
    LstmState state = LstmState::zeros(cell.hidden_dim());
    const std::size_t n = ids.size();
    for (std::size_t t = 0; t < n; ++t) {
        const std::int32_t id = ids[reverse ? n - 1 - t : t];
        if (id == kPaddingId) continue;
        StepRecord rec;
        rec.row = static_cast<std::size_t>(id);
        rec.prev = state;
        rec.next = lstm_step(embedding.row(rec.row), state, cell, &rec.gates);
        state = rec.next;
        steps.push_back(std::move(rec));
    }
    return steps;
}

std::vector<double> last_hidden(const std::vector<StepRecord>& steps, std::size_t hidden_dim) {
    return steps.empty() ? std::vector<double>(hidden_dim, 0.0) : steps.back().next.h;
}

void accumulate_gate(GateParams& grad, const GateParams& param, std::span<const double> da,
                     std::span<const double> x, std::span<const double> h_prev, std::span<double> dx,
                     std::span<double> dh_prev) {
    outer_add(grad.input, da, x);
    outer_add(grad.recurrent, da, h_prev);
    auto db = grad.bias.values();
    for (std::size_t k = 0; k < da.size(); ++k) db[k] += da[k];
    gemv_t_add(param.input, da, dx);
    gemv_t_add(param.recurrent, da, dh_prev);
}

void backprop_direction(const std::vector<StepRecord>& steps, const LstmCellParams& cell, const Matrix& embedding,
                        std::vector<double> dh, LstmCellParams& cell_grad, Matrix& embedding_grad) {
    const std::size_t hid = cell.hidden_dim();
    const std::size_t in = cell.input_dim();
    std::vector<double> dc(hid, 0.0);
    std::vector<double> da_i(hid), da_g(hid), da_f(hid), da_o(hid);
    for (std::size_t s = steps.size(); s-- > 0;) {
        const StepRecord& r = steps[s];
        const auto& [i, g, f, o] = r.gates;
        std::vector<double> dc_prev(hid);
        for (std::size_t k = 0; k < hid; ++k) {
            const double tc = std::tanh(r.next.c[k]);
            const double d_o = dh[k] * tc;
            dc[k] += dh[k] * o[k] * (1.0 - tc * tc);
            da_i[k] = dc[k] * g[k] * i[k] * (1.0 - i[k]);
            da_g[k] = dc[k] * i[k] * (1.0 - g[k] * g[k]);
            da_f[k] = dc[k] * r.prev.c[k] * f[k] * (1.0 - f[k]);
            da_o[k] = d_o * o[k] * (1.0 - o[k]);
            dc_prev[k] = dc[k] * f[k];
        }
        const auto x = embedding.row(r.row);
        std::vector<double> dx(in, 0.0);
        std::vector<double> dh_prev(hid, 0.0);
        accumulate_gate(cell_grad.input_gate, cell.input_gate, da_i, x, r.prev.h, dx, dh_prev);
        accumulate_gate(cell_grad.candidate, cell.candidate, da_g, x, r.prev.h, dx, dh_prev);
        accumulate_gate(cell_grad.forget_gate, cell.forget_gate, da_f, x, r.prev.h, dx, dh_prev);
        accumulate_gate(cell_grad.output_gate, cell.output_gate, da_o, x, r.prev.h, dx, dh_prev);
        auto erow = embedding_grad.row(r.row);
        for (std::size_t k = 0; k < in; ++k) erow[k] += dx[k];
        dh = std::move(dh_prev);
        dc = std::move(dc_prev);
    }
}

}  // namespace

GradientResult gradients(const Model& model, std::span<const Example> batch, Rng* dropout) {
    if (batch.empty()) throw Error("gradients: empty batch");
    const auto& p = model.params;
    const std::size_t hid = model.config.hidden_dim;
    GradientResult out{zero_model(model.config), 0.0};
    auto& g = out.gradients.params;
    const double scale = 1.0 / static_cast<double>(batch.size());

    for (const Example& ex : batch) {
        check_sequence(model, ex.seq);
        const std::span<const std::int32_t> ids(ex.seq.ids.data(), ex.seq.true_len);
        const auto fwd = record_direction(p.forward_cell, p.embedding, ids, false);
        std::vector<double> features = last_hidden(fwd, hid);
        std::vector<StepRecord> bwd;
        if (model.config.bidirectional) {
            bwd = record_direction(p.backward_cell, p.embedding, ids, true);
            const auto back = last_hidden(bwd, hid);
            features.insert(features.end(), back.begin(), back.end());
        }

        HeadTrace trace;
        const double logit = head_logit(model, features, dropout != nullptr, dropout, &trace);
        const double loss = bce_with_logit(logit, ex.label);
        if (!std::isfinite(loss)) throw NonFiniteLoss(ex.id, "non-finite loss on sample " + ex.id);
        out.loss += loss * scale;

        // head
        const double dlogit = (sigmoid(logit) - static_cast<double>(ex.label)) * scale;
        g.output_bias(0, 0) += dlogit;
        const std::size_t dense = trace.dense_out.size();
        std::vector<double> dpre(dense);
        for (std::size_t k = 0; k < dense; ++k) {
            g.output_weights(0, k) += dlogit * trace.dense_out[k];
            const double active = trace.dense_pre[k] > 0.0 ? 1.0 : 0.0;
            dpre[k] = dlogit * p.output_weights(0, k) * trace.dense_mask[k] * active;
        }
        std::vector<double> x(features.size());
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = trace.features[k] * trace.features_mask[k];
        outer_add(g.dense_weights, dpre, x);
        auto dbias = g.dense_bias.values();
        for (std::size_t k = 0; k < dense; ++k) dbias[k] += dpre[k];
        std::vector<double> dfeatures(features.size(), 0.0);
        gemv_t_add(p.dense_weights, dpre, dfeatures);
        for (std::size_t k = 0; k < dfeatures.size(); ++k) dfeatures[k] *= trace.features_mask[k];

        // recurrence
        backprop_direction(fwd, p.forward_cell, p.embedding,
                           std::vector<double>(dfeatures.begin(), dfeatures.begin() + static_cast<long>(hid)),
                           g.forward_cell, g.embedding);
        if (model.config.bidirectional) {
            backprop_direction(bwd, p.backward_cell, p.embedding,
                               std::vector<double>(dfeatures.begin() + static_cast<long>(hid), dfeatures.end()),
                               g.backward_cell, g.embedding);
        }
    }
    return out;
}

double mean_loss(const Model& model, std::span<const Example> batch) {
    if (batch.empty()) throw Error("mean_loss: empty batch");
    double total = 0.0;
    for (const Example& ex : batch) {
        const double loss = bce_with_logit(forward_logit(model, ex.seq, false), ex.label);
        if (!std::isfinite(loss)) throw NonFiniteLoss(ex.id, "non-finite loss on sample " + ex.id);
        total += loss;
    }
    return total / static_cast<double>(batch.size());
}

}  // namespace psguard::nn
