#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "psguard/ast.hpp"

namespace psguard {

/// One linearized AST node: its kind name, its whitespace-collapsed text and
/// its depth below the script root (children of the root have depth 0).
struct PipelinePair {
    std::string ast_type;
    std::string text;
    int depth = 0;

    friend bool operator==(const PipelinePair&, const PipelinePair&) = default;
};

struct PipelineRecord {
    std::string script_id;
    int label = 0;
    std::vector<PipelinePair> pairs;  // pre-order

    friend bool operator==(const PipelineRecord&, const PipelineRecord&) = default;
};

struct ManifestEntry {
    std::filesystem::path path;  // relative entries resolve against the manifest directory
    int label = 0;
    std::string family;
};

struct CorpusManifest {
    std::filesystem::path base_dir;
    std::vector<ManifestEntry> entries;
};

/// Manifest file: CSV with header `path,label,family`; `#` lines are comments.
[[nodiscard]] CorpusManifest read_manifest(const std::filesystem::path& file);
void write_manifest(const std::filesystem::path& file, const CorpusManifest& manifest);

struct IngestError {
    std::string path;
    std::string message;
};

struct IngestResult {
    std::vector<SourceScript> scripts;
    std::vector<IngestError> errors;
};

/// Reads every manifest entry as bytes. Failing entries are collected in
/// `errors` and the rest are still returned.
[[nodiscard]] IngestResult ingest_corpus(const CorpusManifest& manifest);

/// Lenient decoding of a script file: UTF-16 (with BOM) is transcoded to
/// UTF-8, a UTF-8 BOM is dropped, anything else is kept byte for byte.
[[nodiscard]] std::string decode_script_bytes(std::string bytes);

/// Keeps the first script for every distinct text; later duplicates are dropped.
[[nodiscard]] std::vector<SourceScript> merge_corpora(std::vector<SourceScript> primary,
                                                      const std::vector<SourceScript>& secondary);

[[nodiscard]] std::string collapse_whitespace(std::string_view text);

/// Pre-order walk excluding the root; one pair per node.
[[nodiscard]] PipelineRecord linearize(const AstNode& root, std::string script_id, int label);

void write_jsonl(std::ostream& out, const std::vector<PipelineRecord>& records);
void write_jsonl(const std::filesystem::path& file, const std::vector<PipelineRecord>& records);
[[nodiscard]] std::string to_json_line(const PipelineRecord& record);

struct JsonlError {
    std::size_t line = 0;  // 1-based
    std::string message;
};

struct JsonlReadResult {
    std::vector<PipelineRecord> records;
    std::vector<JsonlError> errors;
    [[nodiscard]] bool partial() const { return !errors.empty(); }
};

[[nodiscard]] JsonlReadResult read_jsonl(std::istream& in);
[[nodiscard]] JsonlReadResult read_jsonl(const std::filesystem::path& file);

/// Parses one JSONL line; throws psguard::Error on a contract violation.
[[nodiscard]] PipelineRecord record_from_json_line(std::string_view line);

}  // namespace psguard
