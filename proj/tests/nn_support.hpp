#pragma once

#include <vector>

#include "psguard/dataset.hpp"
#include "psguard/nn/model.hpp"
#include "psguard/rng.hpp"

namespace testing {

inline std::vector<psguard::nn::Matrix*> parameters(psguard::nn::Model& m) {
    std::vector<psguard::nn::Matrix*> out;
    psguard::nn::for_each_parameter(m.params, m.config.bidirectional,
                                    [&](const std::string&, psguard::nn::Matrix& t) { out.push_back(&t); });
    return out;
}

inline bool same_parameters(const psguard::nn::Model& a, const psguard::nn::Model& b) {
    std::vector<const psguard::nn::Matrix*> pa, pb;
    psguard::nn::for_each_parameter(a.params, a.config.bidirectional,
                                    [&](const std::string&, const psguard::nn::Matrix& t) { pa.push_back(&t); });
    psguard::nn::for_each_parameter(b.params, b.config.bidirectional,
                                    [&](const std::string&, const psguard::nn::Matrix& t) { pb.push_back(&t); });
    if (!(a.config == b.config) || pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (!(*pa[i] == *pb[i])) return false;
    }
    return true;
}

/// Every parameter uniform in [-scale, scale], biases included.
inline psguard::nn::Model random_model(const psguard::nn::ModelConfig& config, psguard::Rng& rng, double scale = 0.5) {
    auto m = psguard::nn::zero_model(config);
    for (auto* t : parameters(m)) {
        for (auto& v : t->values()) v = rng.uniform(-scale, scale);
    }
    return m;
}

inline psguard::TokenSequence random_sequence(psguard::Rng& rng, const psguard::nn::ModelConfig& config,
                                              std::size_t true_len) {
    psguard::TokenSequence s;
    s.ids.assign(config.max_len, 0);
    s.true_len = true_len;
    for (std::size_t k = 0; k < true_len; ++k) {
        s.ids[k] = static_cast<std::int32_t>(1 + rng.uniform_index(config.embedding_rows() - 1));
    }
    return s;
}

}  // namespace testing
