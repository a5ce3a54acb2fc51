#include <doctest.h>

#include "psguard/parser.hpp"
#include "psguard/pipeline.hpp"
#include "psguard/synth.hpp"
#include "support.hpp"

using namespace psguard;
using testing::golden;
using testing::slurp;
using testing::TempDir;

namespace {

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

std::string random_text(Rng& rng) {
    std::string s;
    const std::size_t n = rng.uniform_index(30);
    for (std::size_t i = 0; i < n; ++i) {
        switch (rng.uniform_index(4)) {
            case 0: append_utf8(s, static_cast<char32_t>(rng.uniform_index(0x80))); break;  // includes controls
            case 1: s += "\"\\'{}[]:,"[rng.uniform_index(9)]; break;
            case 2: append_utf8(s, static_cast<char32_t>(0x80 + rng.uniform_index(0xD800 - 0x80))); break;
            default: append_utf8(s, static_cast<char32_t>(0x10000 + rng.uniform_index(0x100000))); break;
        }
    }
    return s;
}

PipelineRecord random_record(Rng& rng, std::size_t index) {
    PipelineRecord r;
    r.script_id = "s" + std::to_string(index) + random_text(rng);
    r.label = static_cast<int>(rng.uniform_index(2));
    int depth = 0;
    const std::size_t n = rng.uniform_index(25);
    for (std::size_t i = 0; i < n; ++i) {
        const auto kind = static_cast<AstKind>(rng.uniform_index(kAstKindCount));
        r.pairs.push_back({std::string(to_string(kind)), random_text(rng), depth});
        depth = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(depth) + 2));
    }
    return r;
}

}  // namespace

TEST_SUITE("linearize") {
    TEST_CASE("single command walks in pre-order") {
        const auto rec = linearize(parse("ping uc.edu"), "p", 0);
        REQUIRE(rec.pairs.size() == 4);
        CHECK(rec.pairs[0] == PipelinePair{"PipelineAst", "ping uc.edu", 0});
        CHECK(rec.pairs[1] == PipelinePair{"CommandAst", "ping uc.edu", 1});
        CHECK(rec.pairs[2] == PipelinePair{"CmdletAst", "ping", 2});
        CHECK(rec.pairs[3] == PipelinePair{"ArgumentAst", "uc.edu", 2});
    }

    TEST_CASE("empty root gives zero pairs") { CHECK(linearize(parse(""), "e", 1).pairs.empty()); }

    TEST_CASE("only script roots and binary labels are accepted") {
        const auto root = parse("ping");
        CHECK_THROWS_AS((void)linearize(root.children[0], "x", 0), Error);
        CHECK_THROWS_AS((void)linearize(root, "x", 2), Error);
    }

    TEST_CASE("cradle pair sequence matches the golden file") {
        const auto rec = linearize(parse(slurp(golden("purple_fox.ps1"))), "pf", 1);
        std::string joined;
        for (const auto& p : rec.pairs) joined += std::to_string(p.depth) + " " + p.ast_type + "\n";
        CHECK(joined == slurp(golden("purple_fox.pairs")));
        CHECK(rec.pairs[12].text == "'http[:]//117.187.136.141[:]13405/57BC9B7E.Png'");
    }

    TEST_CASE("interior text is whitespace-collapsed and depth grows by at most one") {
        const std::string src = slurp(golden("purple_fox_full.ps1"));
        const auto root = parse(src);
        const auto rec = linearize(root, "pf", 1);
        CHECK(rec.pairs.size() == root.node_count() - 1);
        CHECK(rec.pairs[0].depth == 0);
        for (std::size_t i = 1; i < rec.pairs.size(); ++i) CHECK(rec.pairs[i].depth <= rec.pairs[i - 1].depth + 1);
        for (const auto& p : rec.pairs) {
            CHECK(p.text.find('\n') == std::string::npos);
            CHECK(p.text.find("  ") == std::string::npos);
        }
    }

    TEST_CASE("pre-order law over random scripts") {
        Rng rng(8);
        for (int t = 0; t < 500; ++t) {
            const auto root = parse(testing::random_bytes(rng, 120));
            const auto rec = linearize(root, "r", 0);
            REQUIRE(rec.pairs.size() == root.node_count() - 1);
            for (std::size_t i = 0; i < rec.pairs.size(); ++i) {
                REQUIRE(ast_kind_from_string(rec.pairs[i].ast_type).has_value());
                if (i == 0) REQUIRE(rec.pairs[i].depth == 0);
                else REQUIRE(rec.pairs[i].depth <= rec.pairs[i - 1].depth + 1);
            }
            REQUIRE(record_from_json_line(to_json_line(rec)) == rec);
        }
    }
}

TEST_SUITE("jsonl") {
    TEST_CASE("round trip is the identity over random records") {
        Rng rng(77);
        std::vector<PipelineRecord> records;
        for (std::size_t i = 0; i < 1000; ++i) records.push_back(random_record(rng, i));
        std::stringstream buf;
        write_jsonl(buf, records);
        const auto back = read_jsonl(buf);
        CHECK_FALSE(back.partial());
        REQUIRE(back.records.size() == records.size());
        for (std::size_t i = 0; i < records.size(); ++i) REQUIRE(back.records[i] == records[i]);

        TempDir dir("jsonl");
        write_jsonl(dir / "x.jsonl", records);
        CHECK(read_jsonl(dir / "x.jsonl").records == records);
    }

    TEST_CASE("one record per line with the fixed field names") {
        const PipelineRecord r{"a.ps1", 1, {{"CmdletAst", "IEX", 0}}};
        CHECK(to_json_line(r) == R"({"script_id":"a.ps1","label":1,"pairs":[{"t":"CmdletAst","x":"IEX","d":0}]})");
        std::stringstream buf;
        write_jsonl(buf, {r, r, r});
        std::size_t lines = 0;
        for (std::string line; std::getline(buf, line);) ++lines;
        CHECK(lines == 3);
    }

    TEST_CASE("malformed line is reported and the rest survive") {
        std::stringstream buf;
        buf << to_json_line({"a", 0, {}}) << "\n{garbage\n" << to_json_line({"c", 1, {}}) << "\n";
        const auto r = read_jsonl(buf);
        CHECK(r.partial());
        REQUIRE(r.records.size() == 2);
        CHECK(r.records[1].script_id == "c");
        REQUIRE(r.errors.size() == 1);
        CHECK(r.errors[0].line == 2);
    }

    TEST_CASE("contract violations are rejected") {
        const char* bad[] = {
            R"([1,2])",
            R"({"label":1,"pairs":[]})",
            R"({"script_id":"a","label":2,"pairs":[]})",
            R"({"script_id":"a","label":1,"pairs":[{"t":"NotAKind","x":"","d":0}]})",
            R"({"script_id":"a","label":1,"pairs":[{"t":"CmdletAst","x":"","d":-1}]})",
            R"({"script_id":"a","label":1,"pairs":[{"t":"CmdletAst","x":3,"d":0}]})",
        };
        for (const char* line : bad) CHECK_THROWS_AS((void)record_from_json_line(line), Error);
    }

    TEST_CASE("missing file is an error") {
        CHECK_THROWS_AS((void)read_jsonl(std::filesystem::path("/nonexistent/x.jsonl")), Error);
    }
}

TEST_SUITE("ingest") {
    TEST_CASE("manifest round trip and labels attach to scripts") {
        TempDir dir("ingest");
        testing::spit(dir / "a.ps1", "IEX 'x'");
        testing::spit(dir / "b.ps1", "Get-Date");
        const CorpusManifest m{dir.path(), {{"a.ps1", 1, "cradle"}, {"b.ps1", 0, ""}}};
        write_manifest(dir / "manifest.csv", m);
        const auto back = read_manifest(dir / "manifest.csv");
        REQUIRE(back.entries.size() == 2);
        CHECK(back.entries[0].family == "cradle");
        const auto r = ingest_corpus(back);
        CHECK(r.errors.empty());
        REQUIRE(r.scripts.size() == 2);
        CHECK(r.scripts[0].label == 1);
        CHECK(r.scripts[1].label == 0);
        CHECK(r.scripts[0].text == "IEX 'x'");
        CHECK(r.scripts[0].origin == "cradle");
    }

    TEST_CASE("a missing file is recorded and ingestion continues") {
        TempDir dir("missing");
        testing::spit(dir / "a.ps1", "a");
        testing::spit(dir / "c.ps1", "c");
        const auto r = ingest_corpus({dir.path(), {{"a.ps1", 1, ""}, {"b.ps1", 0, ""}, {"c.ps1", 0, ""}}});
        CHECK(r.scripts.size() == 2);
        REQUIRE(r.errors.size() == 1);
        CHECK(r.errors[0].path == "b.ps1");
    }

    TEST_CASE("bad manifest rows are rejected") {
        TempDir dir("badmanifest");
        testing::spit(dir / "m.csv", "path,label,family\na.ps1,3,x\n");
        CHECK_THROWS_AS((void)read_manifest(dir / "m.csv"), Error);
        testing::spit(dir / "n.csv", "a.ps1\n");
        CHECK_THROWS_AS((void)read_manifest(dir / "n.csv"), Error);
    }

    TEST_CASE("UTF-16 and UTF-8 byte order marks are decoded") {
        CHECK(decode_script_bytes(std::string("\xFF\xFEI\0E\0X\0", 8)) == "IEX");
        CHECK(decode_script_bytes(std::string("\xFE\xFF\0I\0E\0X", 8)) == "IEX");
        CHECK(decode_script_bytes("\xEF\xBB\xBFgci") == "gci");
        CHECK(decode_script_bytes("\xff raw") == "\xff raw");
    }

    TEST_CASE("merge keeps the first copy of each text") {
        const std::vector<SourceScript> a = {{"a1", "x", 1, ""}, {"a2", "y", 1, ""}};
        const std::vector<SourceScript> b = {{"b1", "y", 0, ""}, {"b2", "z", 0, ""}, {"b3", "x", 0, ""}};
        const auto m = merge_corpora(a, b);
        REQUIRE(m.size() == 3);
        CHECK(m[0].id == "a1");
        CHECK(m[1].id == "a2");
        CHECK(m[2].id == "b2");
    }

    TEST_CASE("generated corpus flows through ingest and keeps its labels") {
        TempDir dir("gen");
        const auto scripts = generate({7, 20, 20, 1.0});
        const auto manifest = write_corpus(dir.path(), scripts);
        const auto r = ingest_corpus(read_manifest(manifest));
        CHECK(r.errors.empty());
        REQUIRE(r.scripts.size() == 40);
        std::vector<PipelineRecord> records;
        int malicious = 0;
        for (std::size_t i = 0; i < r.scripts.size(); ++i) {
            CHECK(r.scripts[i].text == scripts[i].text);
            malicious += *r.scripts[i].label;
            records.push_back(linearize(parse(r.scripts[i]), r.scripts[i].id, *r.scripts[i].label));
        }
        CHECK(malicious == 20);
        write_jsonl(dir / "d.jsonl", records);
        const auto back = read_jsonl(dir / "d.jsonl");
        REQUIRE(back.records.size() == 40);
        for (std::size_t i = 0; i < 40; ++i) CHECK(back.records[i].label == *scripts[i].label);
    }
}
