#include "psguard/corpus_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "psguard/error.hpp"

namespace psguard {

double shannon_entropy(std::string_view bytes) {
    if (bytes.empty()) throw Error("entropy of an empty byte string is undefined");
    std::array<std::size_t, 256> freq{};
    for (unsigned char b : bytes) ++freq[b];
    const double n = static_cast<double>(bytes.size());
    double h = 0.0;
    for (std::size_t f : freq) {
        if (f == 0) continue;
        const double p = static_cast<double>(f) / n;
        h -= p * std::log2(p);
    }
    return std::clamp(h, 0.0, 8.0);
}

std::size_t count_lines(std::string_view text) {
    if (text.empty()) return 0;
    const auto newlines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    return text.back() == '\n' ? newlines : newlines + 1;
}

ScriptStats script_stats(const SourceScript& script) {
    if (!script.label) throw Error("script " + script.id + " has no label");
    ScriptStats s;
    s.script_id = script.id;
    s.byte_size = script.text.size();
    s.line_count = count_lines(script.text);
    s.entropy = script.text.empty() ? 0.0 : shannon_entropy(script.text);
    s.label = *script.label;
    return s;
}

CorpusReport corpus_report(const std::vector<SourceScript>& samples) {
    if (samples.empty()) throw Error("corpus report needs at least one script");
    CorpusReport report;
    report.scripts.reserve(samples.size());
    for (const auto& sample : samples) report.scripts.push_back(script_stats(sample));

    std::map<int, std::vector<const ScriptStats*>> groups;
    for (const auto& s : report.scripts) groups[s.label].push_back(&s);
    for (const auto& [label, members] : groups) {
        LabelSummary summary;
        summary.count = members.size();
        std::vector<std::size_t> sizes;
        double sum = 0.0;
        for (const auto* s : members) {
            sizes.push_back(s->byte_size);
            sum += s->entropy;
            const std::size_t bucket = std::min(s->line_count / kLineBucketWidth, kLineBuckets - 1);
            ++summary.line_histogram[bucket];
        }
        std::sort(sizes.begin(), sizes.end());
        const std::size_t mid = sizes.size() / 2;
        summary.median_bytes = sizes.size() % 2 == 1 ? static_cast<double>(sizes[mid])
                                                     : (static_cast<double>(sizes[mid - 1]) + sizes[mid]) / 2.0;
        summary.entropy_mean = sum / static_cast<double>(members.size());
        double sq = 0.0;
        for (const auto* s : members) sq += (s->entropy - summary.entropy_mean) * (s->entropy - summary.entropy_mean);
        summary.entropy_stddev = std::sqrt(sq / static_cast<double>(members.size()));
        report.by_label[label] = summary;
    }
    return report;
}

std::string format_report(const CorpusReport& report) {
    std::string out = "script_id,label,byte_size,line_count,entropy\n";
    char buf[128];
    for (const auto& s : report.scripts) {
        std::snprintf(buf, sizeof buf, ",%d,%zu,%zu,%.6f\n", s.label, s.byte_size, s.line_count, s.entropy);
        out += s.script_id;
        out += buf;
    }
    for (const auto& [label, summary] : report.by_label) {
        std::snprintf(buf, sizeof buf, "\n[summary label=%d]\n", label);
        out += buf;
        std::snprintf(buf, sizeof buf, "count=%zu\nmedian_bytes=%.1f\n", summary.count, summary.median_bytes);
        out += buf;
        std::snprintf(buf, sizeof buf, "entropy_mean=%.6f\nentropy_stddev=%.6f\n", summary.entropy_mean,
                      summary.entropy_stddev);
        out += buf;
        out += "lines_hist=";
        for (std::size_t b = 0; b < kLineBuckets; ++b) {
            if (b + 1 < kLineBuckets) {
                std::snprintf(buf, sizeof buf, "%zu-%zu:%zu;", b * kLineBucketWidth, (b + 1) * kLineBucketWidth - 1,
                              summary.line_histogram[b]);
            } else {
                std::snprintf(buf, sizeof buf, "%zu+:%zu", b * kLineBucketWidth, summary.line_histogram[b]);
            }
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace psguard
