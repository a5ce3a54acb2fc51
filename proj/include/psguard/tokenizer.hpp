#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "psguard/ast.hpp"
#include "psguard/pipeline.hpp"

namespace psguard {

inline constexpr std::int32_t kPaddingId = 0;
inline constexpr std::int32_t kOovId = 1;
inline constexpr std::int32_t kFirstTokenId = 2;
inline constexpr std::size_t kDefaultVocabCap = 6000;
inline constexpr std::size_t kDefaultMaxLen = 400;

using Stoplist = std::set<std::string>;

/// Frequency-ranked token map. Token at rank r has id r + 2; ids 0 and 1 are
/// reserved for padding and out-of-vocabulary.
class Vocabulary {
public:
    struct Entry {
        std::string token;
        std::uint64_t count = 0;
        friend bool operator==(const Entry&, const Entry&) = default;
    };

    Vocabulary() = default;
    /// Validates the invariants; throws psguard::Error when they do not hold.
    Vocabulary(std::size_t cap, Stoplist stoplist, std::vector<Entry> ranked);

    [[nodiscard]] std::int32_t id_of(std::string_view token) const;
    [[nodiscard]] std::size_t size() const { return ranked_.size(); }
    [[nodiscard]] std::size_t cap() const { return cap_; }
    [[nodiscard]] const Stoplist& stoplist() const { return stoplist_; }
    [[nodiscard]] const std::vector<Entry>& ranked() const { return ranked_; }
    [[nodiscard]] std::string stoplist_hash() const;

    void save(const std::filesystem::path& file) const;
    [[nodiscard]] static Vocabulary load(const std::filesystem::path& file);

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.cap_ == b.cap_ && a.stoplist_ == b.stoplist_ && a.ranked_ == b.ranked_;
    }

private:
    std::size_t cap_ = kDefaultVocabCap;
    Stoplist stoplist_;
    std::vector<Entry> ranked_;
    std::unordered_map<std::string, std::int32_t> ids_;
};

struct TokenSequence {
    std::vector<std::int32_t> ids;  // always max_len long, zero padded on the right
    std::size_t true_len = 0;

    friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

/// `asttype:word` tokens, lowercased, one per whitespace-separated word of
/// each leaf pair. Interior pairs are skipped since their text repeats their
/// leaves.
[[nodiscard]] std::vector<std::string> record_tokens(const PipelineRecord& record);

/// Lowercased whitespace-separated words of the raw script text.
[[nodiscard]] std::vector<std::string> raw_tokens(std::string_view text);

[[nodiscard]] bool is_stopped(std::string_view token, const Stoplist& stoplist);

/// Ranks tokens by count (ties lexicographic), drops stoplisted tokens and
/// keeps the first `cap`. Throws psguard::Error for an empty corpus.
[[nodiscard]] Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus_tokens,
                                     std::size_t cap = kDefaultVocabCap, const Stoplist& stoplist = {});
[[nodiscard]] Vocabulary build_vocab(const std::vector<PipelineRecord>& records, std::size_t cap = kDefaultVocabCap,
                                     const Stoplist& stoplist = {});
[[nodiscard]] Vocabulary build_raw_vocab(const std::vector<SourceScript>& scripts,
                                         std::size_t cap = kDefaultVocabCap, const Stoplist& stoplist = {});

/// Maps tokens to ids (unknown -> 1), keeps the head on truncation and pads
/// with 0 up to `max_len`.
[[nodiscard]] TokenSequence encode_tokens(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                                          std::size_t max_len = kDefaultMaxLen);
[[nodiscard]] TokenSequence encode(const PipelineRecord& record, const Vocabulary& vocab,
                                   std::size_t max_len = kDefaultMaxLen);
[[nodiscard]] TokenSequence encode_raw(const SourceScript& script, const Vocabulary& vocab,
                                       std::size_t max_len = kDefaultMaxLen);

/// Administration cmdlet words excluded from the vocabulary by default.
[[nodiscard]] const Stoplist& default_stoplist();
/// One word per line; blank lines and `#` comments ignored; lowercased.
[[nodiscard]] Stoplist read_stoplist(const std::filesystem::path& file);

}  // namespace psguard
