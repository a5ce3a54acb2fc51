#include "psguard/nn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "psguard/nn/backprop.hpp"
#include "psguard/rng.hpp"

namespace psguard::nn {

namespace {

// Largest-remainder apportionment of `total` over the ratios.
std::array<std::size_t, 3> apportion(std::size_t total, const std::array<double, 3>& ratios) {
    std::array<std::size_t, 3> out{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        const double q = static_cast<double>(total) * ratios[s];
        out[s] = static_cast<std::size_t>(std::floor(q + 1e-9));
        frac[s] = q - static_cast<double>(out[s]);
        assigned += out[s];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; assigned < total; k = (k + 1) % 3, ++assigned) ++out[order[k]];
    return out;
}

}  // namespace

Splits split_traditional(const std::vector<LabeledId>& samples, std::array<double, 3> ratios, std::uint64_t seed,
                         bool balance) {
    if (samples.size() < 10) throw Error("split: need at least 10 samples, got " + std::to_string(samples.size()));
    double ratio_sum = 0.0;
    for (const double r : ratios) {
        if (!(r >= 0.0)) throw Error("split: ratios must be non-negative");
        ratio_sum += r;
    }
    if (std::abs(ratio_sum - 1.0) > 1e-9) throw Error("split: ratios must sum to 1");

    std::map<int, std::vector<std::string>> by_label;
    std::set<std::string> seen;
    for (const auto& s : samples) {
        if (!seen.insert(s.id).second) throw Error("split: duplicate sample id " + s.id);
        by_label[s.label].push_back(s.id);
    }
    if (by_label.size() < 2) throw Error("split: both labels must be present");

    for (auto& [label, ids] : by_label) {
        std::sort(ids.begin(), ids.end());
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(label)));
        rng.shuffle(ids);
    }
    if (balance) {
        std::size_t minority = samples.size();
        for (const auto& [label, ids] : by_label) minority = std::min(minority, ids.size());
        for (auto& [label, ids] : by_label) ids.resize(minority);
    }

    std::size_t total = 0;
    for (const auto& [label, ids] : by_label) total += ids.size();
    const auto targets = apportion(total, ratios);

    std::map<int, std::array<std::size_t, 3>> quota;
    std::map<int, std::array<double, 3>> frac;
    std::array<std::size_t, 3> placed{};
    for (const auto& [label, ids] : by_label) {
        for (std::size_t s = 0; s < 3; ++s) {
            const double q = static_cast<double>(ids.size()) * ratios[s];
            quota[label][s] = static_cast<std::size_t>(std::floor(q + 1e-9));
            frac[label][s] = std::max(0.0, q - static_cast<double>(quota[label][s]));
            placed[s] += quota[label][s];
        }
    }
    for (const auto& [label, ids] : by_label) {
        std::size_t left = ids.size() - quota[label][0] - quota[label][1] - quota[label][2];
        while (left > 0) {
            std::size_t pick = 3;
            for (std::size_t s = 0; s < 3; ++s) {
                if (placed[s] >= targets[s]) continue;
                if (pick == 3 || frac[label][s] > frac[label][pick]) pick = s;
            }
            if (pick == 3) pick = 0;  // unreachable: deficits always sum to the leftovers
            ++quota[label][pick];
            ++placed[pick];
            frac[label][pick] = -1.0;
            --left;
        }
    }

    Splits out;
    for (const auto& [label, ids] : by_label) {
        const auto& q = quota[label];
        auto it = ids.begin();
        out.train.insert(out.train.end(), it, it + static_cast<long>(q[0]));
        it += static_cast<long>(q[0]);
        out.validation.insert(out.validation.end(), it, it + static_cast<long>(q[1]));
        it += static_cast<long>(q[1]);
        out.test.insert(out.test.end(), it, it + static_cast<long>(q[2]));
    }
    return out;
}

std::vector<Example> select_examples(const std::vector<Example>& all, const std::vector<std::string>& ids) {
    std::unordered_map<std::string, const Example*> index;
    for (const auto& e : all) index.emplace(e.id, &e);
    std::vector<Example> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto it = index.find(id);
        if (it == index.end()) throw Error("unknown sample id " + id);
        out.push_back(*it->second);
    }
    return out;
}

bool EarlyStopping::update(std::size_t epoch, double val_loss) {
    if (!seen_ || val_loss < best_loss_) {
        seen_ = true;
        best_loss_ = val_loss;
        best_epoch_ = epoch;
        stale_ = 0;
        return true;
    }
    ++stale_;
    return false;
}

Adam::Adam(const Model& shape, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(zero_model(shape.config)),
      v_(zero_model(shape.config)) {}

void Adam::step(Model& model, const Model& gradients) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::vector<Matrix*> params, ms, vs;
    std::vector<const Matrix*> grads;
    const bool bi = model.config.bidirectional;
    for_each_parameter(model.params, bi, [&](const std::string&, Matrix& m) { params.push_back(&m); });
    for_each_parameter(m_.params, bi, [&](const std::string&, Matrix& m) { ms.push_back(&m); });
    for_each_parameter(v_.params, bi, [&](const std::string&, Matrix& m) { vs.push_back(&m); });
    for_each_parameter(gradients.params, bi, [&](const std::string&, const Matrix& m) { grads.push_back(&m); });
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params[k]->values();
        auto m = ms[k]->values();
        auto v = vs[k]->values();
        const auto g = grads[k]->values();
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (g[j] == 0.0 && m[j] == 0.0 && v[j] == 0.0) continue;  // untouched embedding rows
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            p[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
        }
    }
}

Evaluation evaluate(const Model& model, const std::vector<Example>& examples) {
    if (examples.empty()) throw Error("evaluate: no examples");
    Evaluation ev;
    std::size_t correct = 0;
    for (const auto& ex : examples) {
        const double logit = forward_logit(model, ex.seq, false);
        ev.loss += bce_with_logit(logit, ex.label);
        const int pred = sigmoid(logit) >= 0.5 ? 1 : 0;
        if (pred == ex.label) ++correct;
    }
    ev.loss /= static_cast<double>(examples.size());
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
    return ev;
}

TrainResult train(const ModelConfig& model_config, const std::vector<Example>& train_set,
                  const std::vector<Example>& validation_set, const TrainConfig& config, const EpochHook& hook) {
    model_config.validate();
    if (train_set.empty()) throw Error("train: empty training set");
    if (validation_set.empty()) throw Error("train: empty validation set");
    if (config.batch_size == 0 || config.max_epochs == 0) throw Error("train: batch_size and max_epochs must be positive");

    Model model = init_model(model_config, Rng::derive(config.seed, 0));
    Rng order_rng(Rng::derive(config.seed, 1));
    Rng dropout_rng(Rng::derive(config.seed, 2));
    Adam adam(model, config.learning_rate);
    EarlyStopping stopper(config.patience);

    TrainResult result;
    Model best = model;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        order_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<Example> batch;
            batch.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) batch.push_back(train_set[order[k]]);
            GradientResult g;
            try {
                g = gradients(model, batch, &dropout_rng);
            } catch (const NonFiniteLoss& e) {
                throw TrainingDiverged(epoch, "training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
            }
            adam.step(model, g.gradients);
        }

        const Evaluation tr = evaluate(model, train_set);
        const Evaluation va = evaluate(model, validation_set);
        EpochRecord rec{epoch, tr.loss, tr.accuracy, va.loss, va.accuracy};
        if (hook) hook(rec, model);
        if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
            throw TrainingDiverged(epoch, "training diverged at epoch " + std::to_string(epoch) + ": non-finite loss");
        }
        result.history.push_back(rec);
        if (stopper.update(epoch, rec.val_loss)) best = model;
        if (stopper.should_stop()) {
            result.stopped_early = true;
            break;
        }
    }
    result.best_epoch = stopper.best_epoch();
    round_to_storage_precision(best);
    result.model = std::move(best);
    return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
    out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    out << std::setprecision(9);
    for (const auto& r : history) {
        out << r.epoch << ',' << r.train_loss << ',' << r.train_acc << ',' << r.val_loss << ',' << r.val_acc << '\n';
    }
}

void write_history_csv(const std::filesystem::path& file, const std::vector<EpochRecord>& history) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write " + file.string());
    write_history_csv(out, history);
}

}  // namespace psguard::nn
