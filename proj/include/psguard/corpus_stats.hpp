#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "psguard/ast.hpp"

namespace psguard {

/// Shannon entropy of the byte distribution, in bits per byte. Throws
/// psguard::Error on empty input.
[[nodiscard]] double shannon_entropy(std::string_view bytes);

/// Number of lines; a trailing newline does not open a new line.
[[nodiscard]] std::size_t count_lines(std::string_view text);

struct ScriptStats {
    std::string script_id;
    std::size_t byte_size = 0;
    std::size_t line_count = 0;
    double entropy = 0.0;  // 0 for an empty script
    int label = 0;
};

[[nodiscard]] ScriptStats script_stats(const SourceScript& script);

/// Line-count buckets of 100 lines up to 1000, then one overflow bucket.
inline constexpr std::size_t kLineBucketWidth = 100;
inline constexpr std::size_t kLineBuckets = 11;

struct LabelSummary {
    std::size_t count = 0;
    double median_bytes = 0.0;
    double entropy_mean = 0.0;
    double entropy_stddev = 0.0;  // population
    std::array<std::size_t, kLineBuckets> line_histogram{};
};

struct CorpusReport {
    std::vector<ScriptStats> scripts;
    std::map<int, LabelSummary> by_label;

    [[nodiscard]] std::size_t total() const { return scripts.size(); }
};

/// Throws psguard::Error for an empty corpus or an unlabeled script.
[[nodiscard]] CorpusReport corpus_report(const std::vector<SourceScript>& samples);

/// Per-script CSV table followed by one `[summary label=N]` block per label.
[[nodiscard]] std::string format_report(const CorpusReport& report);

}  // namespace psguard
