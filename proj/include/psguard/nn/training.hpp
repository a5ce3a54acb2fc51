#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "psguard/dataset.hpp"
#include "psguard/error.hpp"
#include "psguard/nn/model.hpp"

namespace psguard::nn {

/// Sample ids of a train/validation/test partition.
struct Splits {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
};

/// Stratified split by label. Split sizes are the largest-remainder rounding
/// of N * ratio; each label receives floor(n_label * ratio) per split and
/// its leftover samples go to the splits with the largest fractional part
/// that still have room, lower split index first on ties. With `balance`
/// the majority label is undersampled to the minority count first.
/// Throws psguard::Error on fewer than 10 samples, a single label, duplicate
/// ids or ratios that are negative or do not sum to 1.
[[nodiscard]] Splits split_traditional(const std::vector<LabeledId>& samples,
                                       std::array<double, 3> ratios = {0.70, 0.15, 0.15}, std::uint64_t seed = 0,
                                       bool balance = false);

/// Examples whose id is in `ids`, in the order of `ids`. Throws on unknown ids.
[[nodiscard]] std::vector<Example> select_examples(const std::vector<Example>& all,
                                                   const std::vector<std::string>& ids);

struct TrainConfig {
    std::size_t max_epochs = 200;
    std::size_t patience = 5;
    std::size_t batch_size = 8;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Tracks the best validation loss. should_stop() turns true once the number
/// of consecutive epochs without improvement exceeds the patience.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    /// Returns true when `val_loss` is a new best.
    bool update(std::size_t epoch, double val_loss);
    [[nodiscard]] bool should_stop() const { return stale_ > patience_; }
    [[nodiscard]] std::size_t best_epoch() const { return best_epoch_; }
    [[nodiscard]] double best_loss() const { return best_loss_; }

private:
    std::size_t patience_;
    std::size_t stale_ = 0;
    std::size_t best_epoch_ = 0;
    double best_loss_ = 0.0;
    bool seen_ = false;
};

/// Adam optimizer with the usual bias correction.
class Adam {
public:
    explicit Adam(const Model& shape, double learning_rate = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-8);
    void step(Model& model, const Model& gradients);
    [[nodiscard]] std::size_t steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    Model m_;
    Model v_;
};

/// Raised when training produces a non-finite loss.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(std::size_t epoch, const std::string& message) : Error(message), epoch_(epoch) {}
    [[nodiscard]] std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

struct TrainResult {
    Model model;  // weights of the best validation epoch, rounded to storage precision
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> history;
    bool stopped_early = false;
};

/// Called after each epoch's measurements and before the stopping decision.
/// It may rewrite the record; the stopping rule sees the rewritten values.
using EpochHook = std::function<void(EpochRecord&, const Model&)>;

/// Mini-batch training with dropout, BCE loss and Adam. Losses and
/// accuracies in the history are measured in inference mode after each
/// epoch. Throws TrainingDiverged on a non-finite loss.
[[nodiscard]] TrainResult train(const ModelConfig& model_config, const std::vector<Example>& train_set,
                                const std::vector<Example>& validation_set, const TrainConfig& config,
                                const EpochHook& hook = {});

/// Mean loss and accuracy (threshold 0.5) in inference mode.
struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};
[[nodiscard]] Evaluation evaluate(const Model& model, const std::vector<Example>& examples);

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);
void write_history_csv(const std::filesystem::path& file, const std::vector<EpochRecord>& history);

}  // namespace psguard::nn
