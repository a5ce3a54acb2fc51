#include "psguard/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "psguard/error.hpp"

namespace psguard {

namespace fs = std::filesystem;

namespace {

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
    return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        const std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) fn(text.substr(start, i - start));
    }
}

const std::array<std::string, kAstKindCount>& lowered_kind_names() {
    static const auto names = [] {
        std::array<std::string, kAstKindCount> out;
        for (std::size_t i = 0; i < kAstKindCount; ++i) out[i] = to_lower(to_string(static_cast<AstKind>(i)));
        return out;
    }();
    return names;
}

constexpr std::array kDefaultStopwords = {
    "get-childitem", "set-location",   "get-location",  "get-content",     "set-content",    "add-content",
    "get-item",      "set-item",       "copy-item",     "move-item",       "remove-item",    "new-item",
    "rename-item",   "test-path",      "join-path",     "split-path",      "resolve-path",   "get-service",
    "start-service", "stop-service",   "restart-service", "get-process",   "get-date",       "write-host",
    "write-output",  "write-verbose",  "write-warning", "write-error",     "out-file",       "out-null",
    "select-object", "sort-object",    "where-object",  "foreach-object",  "group-object",   "measure-object",
    "format-table",  "format-list",    "export-csv",    "import-csv",      "get-eventlog",   "get-winevent",
    "get-ciminstance", "get-wmiobject", "get-acl",      "set-acl",         "get-help",       "get-command",
    "get-member",    "import-module",  "get-module",    "clear-host",
};

}  // namespace

// ---- Vocabulary --------------------------------------------------------------

Vocabulary::Vocabulary(std::size_t cap, Stoplist stoplist, std::vector<Entry> ranked)
    : cap_(cap), stoplist_(std::move(stoplist)), ranked_(std::move(ranked)) {
    if (cap_ == 0) throw Error("vocabulary cap must be positive");
    if (ranked_.size() > cap_) throw Error("vocabulary holds more tokens than its cap");
    ids_.reserve(ranked_.size());
    for (std::size_t r = 0; r < ranked_.size(); ++r) {
        const auto& e = ranked_[r];
        if (e.token.empty() || std::any_of(e.token.begin(), e.token.end(), is_space)) {
            throw Error("vocabulary token is empty or contains whitespace");
        }
        if (is_stopped(e.token, stoplist_)) throw Error("stoplisted token in vocabulary: " + e.token);
        if (r > 0) {
            const auto& prev = ranked_[r - 1];
            if (prev.count < e.count || (prev.count == e.count && !(prev.token < e.token))) {
                throw Error("vocabulary is not in rank order at token " + e.token);
            }
        }
        if (!ids_.emplace(e.token, static_cast<std::int32_t>(r) + kFirstTokenId).second) {
            throw Error("duplicate vocabulary token " + e.token);
        }
    }
}

std::int32_t Vocabulary::id_of(std::string_view token) const {
    const auto it = ids_.find(std::string(token));
    return it == ids_.end() ? kOovId : it->second;
}

std::string Vocabulary::stoplist_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& word : stoplist_) {
        for (unsigned char c : word) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= '\n';
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void Vocabulary::save(const fs::path& file) const {
    nlohmann::ordered_json j;
    j["format"] = "psguard-vocab";
    j["version"] = 1;
    j["cap"] = cap_;
    j["stoplist_hash"] = stoplist_hash();
    j["stoplist"] = std::vector<std::string>(stoplist_.begin(), stoplist_.end());
    auto tokens = nlohmann::ordered_json::array();
    for (const auto& e : ranked_) tokens.push_back({e.token, e.count});
    j["tokens"] = std::move(tokens);
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write " + file.string());
    out << j.dump(1) << '\n';
}

Vocabulary Vocabulary::load(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot open " + file.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        if (j.at("format") != "psguard-vocab" || j.at("version") != 1) throw Error("not a psguard vocabulary file");
        Stoplist stoplist;
        for (const auto& w : j.at("stoplist")) stoplist.insert(w.get<std::string>());
        std::vector<Entry> ranked;
        for (const auto& t : j.at("tokens")) ranked.push_back({t.at(0).get<std::string>(), t.at(1).get<std::uint64_t>()});
        Vocabulary vocab(j.at("cap").get<std::size_t>(), std::move(stoplist), std::move(ranked));
        if (vocab.stoplist_hash() != j.at("stoplist_hash").get<std::string>()) {
            throw Error("stoplist hash mismatch in " + file.string());
        }
        return vocab;
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid vocabulary file " + file.string() + ": " + e.what());
    }
}

// ---- tokens ------------------------------------------------------------------

std::vector<std::string> record_tokens(const PipelineRecord& record) {
    std::vector<std::string> out;
    const auto& pairs = record.pairs;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const bool leaf = i + 1 == pairs.size() || pairs[i + 1].depth <= pairs[i].depth;
        if (!leaf) continue;
        const std::string prefix = to_lower(pairs[i].ast_type) + ":";
        for_each_word(pairs[i].text, [&](std::string_view word) { out.push_back(prefix + to_lower(word)); });
    }
    return out;
}

std::vector<std::string> raw_tokens(std::string_view text) {
    std::vector<std::string> out;
    for_each_word(text, [&](std::string_view word) { out.push_back(to_lower(word)); });
    return out;
}

bool is_stopped(std::string_view token, const Stoplist& stoplist) {
    if (stoplist.empty()) return false;
    if (stoplist.count(std::string(token)) != 0) return true;
    const auto colon = token.find(':');
    if (colon == std::string_view::npos) return false;
    const auto prefix = token.substr(0, colon);
    const auto& kinds = lowered_kind_names();
    if (std::find(kinds.begin(), kinds.end(), prefix) == kinds.end()) return false;
    return stoplist.count(std::string(token.substr(colon + 1))) != 0;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus_tokens, std::size_t cap,
                       const Stoplist& stoplist) {
    if (corpus_tokens.empty()) throw Error("cannot build a vocabulary from an empty corpus");
    std::map<std::string, std::uint64_t> counts;
    for (const auto& doc : corpus_tokens) {
        for (const auto& token : doc) ++counts[token];
    }
    std::vector<Vocabulary::Entry> ranked;
    ranked.reserve(counts.size());
    for (const auto& [token, count] : counts) {
        if (!is_stopped(token, stoplist)) ranked.push_back({token, count});
    }
    // counts is ordered by token, so a stable sort on count keeps ties lexicographic
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
    if (ranked.size() > cap) ranked.resize(cap);
    return Vocabulary(cap, stoplist, std::move(ranked));
}

Vocabulary build_vocab(const std::vector<PipelineRecord>& records, std::size_t cap, const Stoplist& stoplist) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(records.size());
    for (const auto& r : records) docs.push_back(record_tokens(r));
    return build_vocab(docs, cap, stoplist);
}

Vocabulary build_raw_vocab(const std::vector<SourceScript>& scripts, std::size_t cap, const Stoplist& stoplist) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(scripts.size());
    for (const auto& s : scripts) docs.push_back(raw_tokens(s.text));
    return build_vocab(docs, cap, stoplist);
}

TokenSequence encode_tokens(const std::vector<std::string>& tokens, const Vocabulary& vocab, std::size_t max_len) {
    TokenSequence seq;
    seq.ids.assign(max_len, kPaddingId);
    seq.true_len = std::min(tokens.size(), max_len);
    for (std::size_t k = 0; k < seq.true_len; ++k) seq.ids[k] = vocab.id_of(tokens[k]);
    return seq;
}

TokenSequence encode(const PipelineRecord& record, const Vocabulary& vocab, std::size_t max_len) {
    return encode_tokens(record_tokens(record), vocab, max_len);
}

TokenSequence encode_raw(const SourceScript& script, const Vocabulary& vocab, std::size_t max_len) {
    return encode_tokens(raw_tokens(script.text), vocab, max_len);
}

const Stoplist& default_stoplist() {
    static const Stoplist list(kDefaultStopwords.begin(), kDefaultStopwords.end());
    return list;
}

Stoplist read_stoplist(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open stoplist " + file.string());
    Stoplist out;
    std::string line;
    while (std::getline(in, line)) {
        std::string word;
        for_each_word(line, [&](std::string_view w) {
            if (word.empty()) word = std::string(w);
        });
        if (word.empty() || word.front() == '#') continue;
        out.insert(to_lower(word));
    }
    return out;
}

}  // namespace psguard
