#include <doctest.h>

#include <chrono>

#include "psguard/lexer.hpp"
#include "psguard/parser.hpp"
#include "support.hpp"

using namespace psguard;
using testing::golden;
using testing::slurp;

namespace {

std::vector<LexemeKind> kinds(const std::vector<Lexeme>& lx) {
    std::vector<LexemeKind> out;
    for (const auto& l : lx) out.push_back(l.kind);
    return out;
}

std::vector<AstKind> without_root(const AstNode& root) {
    auto seq = kind_sequence(root);
    seq.erase(seq.begin());
    return seq;
}

std::size_t count(const AstNode& n, AstKind k) {
    std::size_t c = n.kind == k;
    for (const auto& ch : n.children) c += count(ch, k);
    return c;
}

}  // namespace

TEST_SUITE("lexer") {
    TEST_CASE("empty input has no lexemes") { CHECK(lex(std::string_view{}).empty()); }

    TEST_CASE("ping with a parameter") {
        const auto lx = lex("ping -c 4");
        REQUIRE(lx.size() == 3);
        CHECK(kinds(lx) == std::vector{LexemeKind::Word, LexemeKind::Parameter, LexemeKind::Number});
        CHECK(lx[0].text == "ping");
        CHECK(lx[1].text == "-c");
        CHECK(lx[2].text == "4");
    }

    TEST_CASE("semicolon inside a quoted string is not a separator") {
        const auto lx = lex("IEX 'a;b'");
        REQUIRE(lx.size() == 2);
        CHECK(lx[0].kind == LexemeKind::Word);
        CHECK(lx[1].kind == LexemeKind::StringLiteral);
        CHECK(lx[1].text == "'a;b'");
    }

    TEST_CASE("comments are kept and quote style survives") {
        const auto lx = lex("# note\n<# block\n #> Write-Host \"x $y\" 'z'");
        REQUIRE(lx.size() >= 6);
        CHECK(lx[0].kind == LexemeKind::Comment);
        CHECK(lx[0].text == "# note");
        CHECK(lx[1].kind == LexemeKind::Newline);
        CHECK(lx[2].kind == LexemeKind::Comment);
        CHECK(lx[2].text == "<# block\n #>");
        CHECK(lx[4].text == "\"x $y\"");
        CHECK(lx[5].text == "'z'");
    }

    TEST_CASE("variables, pipes and braces") {
        const auto lx = lex("$env:TEMP | % { $_ }");
        CHECK(kinds(lx) == std::vector{LexemeKind::Variable, LexemeKind::Pipe, LexemeKind::Operator,
                                       LexemeKind::OpenBrace, LexemeKind::Variable, LexemeKind::CloseBrace});
    }

    TEST_CASE("invalid bytes become replacement markers with byte spans") {
        const std::string src = "iex \xff abc";
        const auto lx = lex(src);
        bool saw_marker = false;
        for (const auto& l : lx) {
            if (l.text.find("\xEF\xBF\xBD") != std::string::npos) saw_marker = true;
        }
        CHECK(saw_marker);
        CHECK(lx.back().span.end == src.size());
        CHECK(sanitize_utf8("ok \xc3\xa9") == "ok \xc3\xa9");
        CHECK(sanitize_utf8("\xc3") == "\xEF\xBF\xBD");
    }

    TEST_CASE("spans are ordered and the gaps are only whitespace or line continuations") {
        Rng rng(11);
        const std::string alphabet = "ab$-'\"(){}[];|.,=#<>@` \t\n\r019";
        for (int trial = 0; trial < 2000; ++trial) {
            std::string src(rng.uniform_index(40), ' ');
            for (auto& c : src) c = alphabet[rng.uniform_index(alphabet.size())];
            const auto lx = lex(src);
            std::size_t pos = 0;
            for (const auto& l : lx) {
                REQUIRE(l.span.start >= pos);
                REQUIRE(l.span.end > l.span.start);
                for (std::size_t k = pos; k < l.span.start; ++k) {
                    const char c = src[k];
                    const bool continuation = c == '\n' && k > 0 && (src[k - 1] == '`' || src[k - 1] == '\r');
                    REQUIRE_MESSAGE((c == ' ' || c == '\t' || c == '\r' || c == '`' || continuation), src);
                }
                pos = l.span.end;
            }
        }
    }
}

TEST_SUITE("parser") {
    TEST_CASE("empty script is an empty root") {
        const auto root = parse(std::string_view{});
        CHECK(root.kind == AstKind::ScriptRoot);
        CHECK(root.children.empty());
    }

    TEST_CASE("ping command shape") {
        const auto root = parse("ping -c 4 -t 64 uc.edu");
        using K = AstKind;
        CHECK(without_root(root) == std::vector{K::PipelineAst, K::CommandAst, K::CmdletAst, K::CommandParameterAst,
                                                K::ArgumentAst, K::CommandParameterAst, K::ArgumentAst,
                                                K::ArgumentAst});
        const auto& cmd = root.children.at(0).children.at(0);
        REQUIRE(cmd.children.size() == 6);
        CHECK(cmd.children[0].text == "ping");
        CHECK(cmd.children[2].text == "4");
        CHECK(cmd.children[5].text == "uc.edu");
        CHECK(dump_ast(root) == slurp(golden("ping.ast")));
    }

    TEST_CASE("download cradle and MSI statement shape") {
        const std::string src = slurp(golden("purple_fox.ps1"));
        const auto root = parse(src);
        REQUIRE(root.children.size() == 2);
        using K = AstKind;
        CHECK(kind_sequence(root.children[0]) ==
              std::vector{K::PipelineAst, K::CommandAst, K::CmdletAst, K::ArgumentAst, K::MethodInvocationAst,
                          K::ExpressionAst, K::CommandAst, K::CmdletAst, K::ArgumentAst, K::TypeNameAst,
                          K::MethodNameAst, K::ArgumentAst, K::StringLiteralAst});
        CHECK(kind_sequence(root.children[1]) ==
              std::vector{K::PipelineAst, K::CommandAst, K::CmdletAst, K::ArgumentAst});

        const auto& iex = root.children[0].children[0];
        CHECK(iex.children[0].text == "IEX");
        const auto& call = iex.children[1].children[0];
        CHECK(call.kind == K::MethodInvocationAst);
        CHECK(call.children[1].text == "DownloadString");
        CHECK(call.children[0].children[0].children[1].children[0].text == "Net.WebClient");
        CHECK(call.children[2].children[0].text == "'http[:]//117.187.136.141[:]13405/57BC9B7E.Png'");
        CHECK(root.children[1].children[0].children[0].text == "MsiMake");
        CHECK(dump_ast(root) == slurp(golden("purple_fox.ast")));
    }

    TEST_CASE("launcher line with the cradle split over lines") {
        const std::string src = slurp(golden("purple_fox_full.ps1"));
        const auto root = parse(src);
        REQUIRE(root.children.size() == 3);
        CHECK(count(root, AstKind::ErrorAst) == 0);
        CHECK(dump_ast(root) == slurp(golden("purple_fox_full.ast")));
    }

    TEST_CASE("names are matched without regard to case but text keeps its casing") {
        const auto a = parse("FOREACH ($x in $y) { IEX $x }");
        const auto b = parse("foreach ($x in $y) { iex $x }");
        CHECK(kind_sequence(a) == kind_sequence(b));
        CHECK(a.children[0].children[0].kind == AstKind::LoopAst);
        CHECK(a.children[0].text.substr(0, 7) == "FOREACH");
    }

    TEST_CASE("control flow, functions and assignment") {
        const auto root = parse(
            "$a = 1\nforeach ($x in $list) { Write-Host $x }\nif ($a -eq 1) { ping } else { pong }\n"
            "while ($true) { break }\nfunction F($p) { $p }");
        CHECK(count(root, AstKind::ErrorAst) == 0);
        CHECK(count(root, AstKind::AssignmentAst) == 1);
        CHECK(count(root, AstKind::LoopAst) == 2);
        CHECK(count(root, AstKind::IfAst) == 1);
        CHECK(count(root, AstKind::FunctionDefinitionAst) == 1);
        CHECK(count(root, AstKind::ScriptBlockAst) == 5);
    }

    TEST_CASE("common dropper constructs parse without errors") {
        const char* cases[] = {
            "[System.Text.Encoding]::UTF8.GetString([Convert]::FromBase64String('SGk='))",
            "$o = [pscustomobject]@{ Name = 'a'; Size = 2 }",
            "for ($i = 0; $i -lt 3; $i++) { $n-- }",
            "schtasks /create /tn Upd /tr 'powershell -w hidden' /sc minute",
            "Get-Process | Where-Object { $_.CPU -gt 10 } | Stop-Process -Force",
            "$b = [string[]]@('a', 'b')",
            "& $env:TEMP\\run.exe",
        };
        for (const char* src : cases) {
            const auto root = parse(src);
            CHECK_MESSAGE(count(root, AstKind::ErrorAst) == 0, src);
            CHECK_MESSAGE(testing::span_violation(root, src).empty(), src);
        }
    }

    TEST_CASE("garbage keeps its words under ErrorAst") {
        const auto root = parse("Get-Date\n) ] }\nping x");
        REQUIRE(root.children.size() == 3);
        const auto& err = root.children[1];
        CHECK(err.kind == AstKind::ErrorAst);
        CHECK(err.text == ") ] }");
        REQUIRE(err.children.size() == 3);
        for (const auto& c : err.children) CHECK(c.kind == AstKind::ArgumentAst);
    }

    TEST_CASE("error confinement") {
        const std::vector<std::string> valid = {
            "Get-ChildItem -Path C:\\ -Recurse", "$x = 5", "IEX (New-Object Net.WebClient).DownloadString('u')",
            "Write-Host 'done'", "ping -n 1 host", "Stop-Service -Name spooler",
        };
        const std::vector<std::string> garbage = {") ] }", "= =", "}", "]]", ") (", "= ) ="};
        Rng rng(5);
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t n = 1 + rng.uniform_index(5);
            std::vector<std::string> stmts;
            for (std::size_t i = 0; i < n; ++i) stmts.push_back(valid[rng.uniform_index(valid.size())]);
            std::string clean;
            for (const auto& s : stmts) clean += s + "\n";
            const std::size_t at = rng.uniform_index(n + 1);
            const std::string junk = garbage[rng.uniform_index(garbage.size())];
            std::string dirty;
            for (std::size_t i = 0; i <= n; ++i) {
                if (i == at) dirty += junk + "\n";
                if (i < n) dirty += stmts[i] + "\n";
            }
            const auto a = parse(clean);
            const auto b = parse(dirty);
            REQUIRE(b.children.size() == a.children.size() + 1);
            std::size_t errors = 0;
            for (std::size_t i = 0, j = 0; i < b.children.size(); ++i) {
                if (i == at) {
                    REQUIRE(b.children[i].kind == AstKind::ErrorAst);
                    CHECK(b.children[i].text == junk);
                    ++errors;
                    continue;
                }
                CHECK(kind_sequence(b.children[i]) == kind_sequence(a.children[j]));
                CHECK(dump_ast(b.children[i]) == dump_ast(a.children[j]));
                ++j;
            }
            CHECK(count(b, AstKind::ErrorAst) == 1);
            CHECK(errors == 1);
        }
    }

    TEST_CASE("random byte strings never crash and keep spans sound") {
        const auto t0 = std::chrono::steady_clock::now();
        Rng rng(2024);
        for (int trial = 0; trial < 10000; ++trial) {
            const std::string src = testing::random_bytes(rng, 200);
            const auto root = parse(src);
            REQUIRE(root.kind == AstKind::ScriptRoot);
            REQUIRE_MESSAGE(testing::span_violation(root, src).empty(), trial);
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        CHECK(secs < 30.0);
    }

    TEST_CASE("token soup fuzz") {
        Rng rng(99);
        const std::vector<std::string> parts = {
            "IEX", "(", ")", "{", "}", "[", "]", "$a", "=", "'s'", "\"d $x\"", ".", "::", "|", ";", "\n",
            "-p", "if", "else", "foreach", "in", "function", "@{", "@(", "$(", ",", "+", "-eq", "1", "`",
            "#c\n", "<#", "#>", "@'\nx\n'@", "&", "++", "[int]", "while", "for",
        };
        for (int trial = 0; trial < 3000; ++trial) {
            std::string src;
            const std::size_t n = rng.uniform_index(30);
            for (std::size_t i = 0; i < n; ++i) src += parts[rng.uniform_index(parts.size())] + " ";
            const auto root = parse(src);
            REQUIRE_MESSAGE(testing::span_violation(root, src).empty(), src);
        }
    }

    TEST_CASE("deep nesting is bounded") {
        const std::string deep = std::string(5000, '(') + "1" + std::string(5000, ')');
        const auto root = parse(deep);
        CHECK(testing::span_violation(root, deep).empty());
        const std::string braces = std::string(5000, '{');
        CHECK(testing::span_violation(parse(braces), braces).empty());
    }

    TEST_CASE("parse is deterministic") {
        Rng rng(3);
        for (int trial = 0; trial < 200; ++trial) {
            const std::string src = testing::random_bytes(rng, 100);
            CHECK(parse(src) == parse(src));
        }
        const std::string src = slurp(golden("purple_fox_full.ps1"));
        CHECK(dump_ast(parse(src)) == dump_ast(parse(src)));
    }
}
