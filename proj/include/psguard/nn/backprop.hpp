#pragma once

#include <span>
#include <string>

#include "psguard/dataset.hpp"
#include "psguard/error.hpp"
#include "psguard/nn/model.hpp"
#include "psguard/rng.hpp"

namespace psguard::nn {

/// Raised when a sample's loss is NaN or infinite.
class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(std::string sample_id, const std::string& message)
        : Error(message), sample_id_(std::move(sample_id)) {}
    [[nodiscard]] const std::string& sample_id() const { return sample_id_; }

private:
    std::string sample_id_;
};

struct GradientResult {
    Model gradients;  // same shapes as the model; the config is copied
    double loss = 0.0;  // mean binary cross-entropy over the batch
};

/// Gradients of the mean BCE loss by backpropagation through time over the
/// true tokens of every sample. Dropout masks are drawn from `dropout` when
/// it is non-null; pass nullptr for the deterministic inference path.
[[nodiscard]] GradientResult gradients(const Model& model, std::span<const Example> batch, Rng* dropout = nullptr);

/// Mean BCE loss on the same path gradients() would take without dropout.
[[nodiscard]] double mean_loss(const Model& model, std::span<const Example> batch);

}  // namespace psguard::nn
