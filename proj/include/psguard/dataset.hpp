#pragma once

#include <string>
#include <vector>

#include "psguard/tokenizer.hpp"

namespace psguard {

struct LabeledId {
    std::string id;
    int label = 0;
};

/// An encoded script ready for the sequence models.
struct Example {
    std::string id;
    TokenSequence seq;
    int label = 0;
};

[[nodiscard]] inline std::vector<LabeledId> labeled_ids(const std::vector<Example>& examples) {
    std::vector<LabeledId> out;
    out.reserve(examples.size());
    for (const auto& e : examples) out.push_back({e.id, e.label});
    return out;
}

}  // namespace psguard
