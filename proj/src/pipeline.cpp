#include "psguard/pipeline.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "psguard/error.hpp"
#include "psguard/lexer.hpp"

namespace psguard {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

std::string utf16_to_utf8(std::string_view bytes, bool little_endian) {
    std::string out;
    const auto unit = [&](std::size_t i) -> char32_t {
        const auto a = static_cast<unsigned char>(bytes[i]);
        const auto b = static_cast<unsigned char>(bytes[i + 1]);
        return little_endian ? (b << 8 | a) : (a << 8 | b);
    };
    std::size_t i = 0;
    while (i + 1 < bytes.size()) {
        const char32_t u = unit(i);
        i += 2;
        if (u >= 0xD800 && u <= 0xDBFF && i + 1 < bytes.size()) {
            const char32_t low = unit(i);
            if (low >= 0xDC00 && low <= 0xDFFF) {
                i += 2;
                append_utf8(out, 0x10000 + ((u - 0xD800) << 10) + (low - 0xDC00));
                continue;
            }
        }
        append_utf8(out, (u >= 0xD800 && u <= 0xDFFF) ? char32_t{0xFFFD} : u);
    }
    if (i < bytes.size()) append_utf8(out, 0xFFFD);
    return out;
}

void walk(const AstNode& node, int depth, std::vector<PipelinePair>& out) {
    out.push_back({std::string(to_string(node.kind)), collapse_whitespace(sanitize_utf8(node.text)), depth});
    for (const auto& child : node.children) walk(child, depth + 1, out);
}

}  // namespace

CorpusManifest read_manifest(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open manifest " + file.string());
    CorpusManifest manifest;
    manifest.base_dir = file.parent_path();
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const auto fields = split(stripped, ',');
        if (!header_seen && !fields.empty() && fields[0] == "path") {
            header_seen = true;
            continue;
        }
        header_seen = true;
        if (fields.size() < 2 || fields.size() > 3 || fields[0].empty()) {
            throw Error("manifest line " + std::to_string(line_no) + ": expected path,label[,family]");
        }
        if (fields[1] != "0" && fields[1] != "1") {
            throw Error("manifest line " + std::to_string(line_no) + ": label must be 0 or 1");
        }
        manifest.entries.push_back({fields[0], fields[1] == "1" ? 1 : 0, fields.size() == 3 ? fields[2] : ""});
    }
    return manifest;
}

void write_manifest(const fs::path& file, const CorpusManifest& manifest) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write manifest " + file.string());
    out << "path,label,family\n";
    for (const auto& entry : manifest.entries) {
        out << entry.path.generic_string() << ',' << entry.label << ',' << entry.family << '\n';
    }
}

std::string decode_script_bytes(std::string bytes) {
    if (bytes.size() >= 2) {
        const auto b0 = static_cast<unsigned char>(bytes[0]);
        const auto b1 = static_cast<unsigned char>(bytes[1]);
        if (b0 == 0xFF && b1 == 0xFE) return utf16_to_utf8(std::string_view(bytes).substr(2), true);
        if (b0 == 0xFE && b1 == 0xFF) return utf16_to_utf8(std::string_view(bytes).substr(2), false);
    }
    if (bytes.size() >= 3 && bytes.compare(0, 3, "\xEF\xBB\xBF") == 0) bytes.erase(0, 3);
    return bytes;
}

IngestResult ingest_corpus(const CorpusManifest& manifest) {
    IngestResult result;
    for (const auto& entry : manifest.entries) {
        const fs::path full = entry.path.is_absolute() ? entry.path : manifest.base_dir / entry.path;
        const std::string id = entry.path.generic_string();
        std::error_code ec;
        if (!fs::is_regular_file(full, ec)) {
            result.errors.push_back({id, "not a regular file: " + full.string()});
            continue;
        }
        std::ifstream in(full, std::ios::binary);
        if (!in) {
            result.errors.push_back({id, "cannot open " + full.string()});
            continue;
        }
        std::ostringstream buffer;
        buffer << in.rdbuf();
        SourceScript script;
        script.id = id;
        script.text = decode_script_bytes(std::move(buffer).str());
        script.label = entry.label;
        script.origin = entry.family.empty() ? full.generic_string() : entry.family;
        result.scripts.push_back(std::move(script));
    }
    return result;
}

std::vector<SourceScript> merge_corpora(std::vector<SourceScript> primary, const std::vector<SourceScript>& secondary) {
    std::unordered_set<std::string> seen;
    std::vector<SourceScript> out;
    out.reserve(primary.size() + secondary.size());
    const auto add = [&](SourceScript script) {
        if (seen.insert(script.text).second) out.push_back(std::move(script));
    };
    for (auto& script : primary) add(std::move(script));
    for (const auto& script : secondary) add(script);
    return out;
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += c;
    }
    return out;
}

PipelineRecord linearize(const AstNode& root, std::string script_id, int label) {
    if (root.kind != AstKind::ScriptRoot) throw Error("linearize expects a ScriptRoot node");
    if (label != 0 && label != 1) throw Error("label must be 0 or 1");
    PipelineRecord record{std::move(script_id), label, {}};
    record.pairs.reserve(root.node_count() - 1);
    for (const auto& child : root.children) walk(child, 0, record.pairs);
    return record;
}

std::string to_json_line(const PipelineRecord& record) {
    ordered_json j;
    j["script_id"] = record.script_id;
    j["label"] = record.label;
    ordered_json pairs = ordered_json::array();
    for (const auto& p : record.pairs) {
        ordered_json pj;
        pj["t"] = p.ast_type;
        pj["x"] = p.text;
        pj["d"] = p.depth;
        pairs.push_back(std::move(pj));
    }
    j["pairs"] = std::move(pairs);
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void write_jsonl(std::ostream& out, const std::vector<PipelineRecord>& records) {
    for (const auto& record : records) out << to_json_line(record) << '\n';
}

void write_jsonl(const fs::path& file, const std::vector<PipelineRecord>& records) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write " + file.string());
    write_jsonl(out, records);
}

PipelineRecord record_from_json_line(std::string_view line) {
    ordered_json j;
    try {
        j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error("record is not a JSON object");
    const auto need = [&](const char* key) -> const ordered_json& {
        const auto it = j.find(key);
        if (it == j.end()) throw Error(std::string("missing field '") + key + "'");
        return *it;
    };
    PipelineRecord record;
    const auto& id = need("script_id");
    if (!id.is_string()) throw Error("script_id must be a string");
    record.script_id = id.get<std::string>();
    const auto& label = need("label");
    if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1)) {
        throw Error("label must be 0 or 1");
    }
    record.label = label.get<int>();
    const auto& pairs = need("pairs");
    if (!pairs.is_array()) throw Error("pairs must be an array");
    for (const auto& p : pairs) {
        if (!p.is_object() || !p.contains("t") || !p.contains("x") || !p.contains("d")) {
            throw Error("pair must have fields t, x, d");
        }
        if (!p["t"].is_string() || !ast_kind_from_string(p["t"].get<std::string>())) {
            throw Error("pair type is not a known AST kind");
        }
        if (!p["x"].is_string()) throw Error("pair text must be a string");
        if (!p["d"].is_number_integer() || p["d"].get<long long>() < 0) throw Error("pair depth must be >= 0");
        record.pairs.push_back({p["t"].get<std::string>(), p["x"].get<std::string>(), p["d"].get<int>()});
    }
    return record;
}

JsonlReadResult read_jsonl(std::istream& in) {
    JsonlReadResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            result.records.push_back(record_from_json_line(line));
        } catch (const Error& e) {
            result.errors.push_back({line_no, e.what()});
        }
    }
    return result;
}

JsonlReadResult read_jsonl(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot open " + file.string());
    return read_jsonl(in);
}

}  // namespace psguard
