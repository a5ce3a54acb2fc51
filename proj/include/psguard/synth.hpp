#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "psguard/ast.hpp"

namespace psguard {

struct GeneratorSpec {
    std::uint64_t seed = 0;
    std::size_t n_benign = 0;
    std::size_t n_malicious = 0;
    /// 0 gives plain scripts. Each malicious script gets an encoded stage
    /// (a base64 blob of at least 256 characters) with this probability;
    /// case mangling and string splitting are applied at half this rate.
    double obfuscation = 0.0;
};

/// Benign-style administration scripts and malicious-style scripts built
/// from inert templates. URLs use reserved example domains and
/// documentation address ranges only; payloads are placeholder text.
/// Script k of each class draws from its own seed-derived substream, so the
/// output does not depend on generation order.
/// Throws psguard::Error when obfuscation is outside [0, 1].
[[nodiscard]] std::vector<SourceScript> generate(const GeneratorSpec& spec);

/// Writes every script as `<id>` under `dir` plus `dir/manifest.csv`;
/// returns the manifest path.
std::filesystem::path write_corpus(const std::filesystem::path& dir, const std::vector<SourceScript>& scripts);

/// Standard base64 with padding.
[[nodiscard]] std::string base64_encode(std::string_view bytes);

/// Names of the template families, benign then malicious.
[[nodiscard]] std::vector<std::string> benign_families();
[[nodiscard]] std::vector<std::string> malicious_families();

}  // namespace psguard
