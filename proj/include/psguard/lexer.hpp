#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "psguard/ast.hpp"

namespace psguard {

enum class LexemeKind {
    Word,
    Parameter,      // -Name
    Variable,       // $name, ${...}, $env:X
    StringLiteral,  // '...', "...", @'...'@, @"..."@
    Number,
    Operator,
    Pipe,
    Semicolon,
    OpenParen,   // ( $( @(
    CloseParen,
    OpenBrace,   // { @{
    CloseBrace,
    Dot,
    Comment,
    Newline,
    Unknown,
};

[[nodiscard]] std::string_view to_string(LexemeKind kind);

struct Lexeme {
    LexemeKind kind = LexemeKind::Unknown;
    /// Source slice, except that undecodable UTF-8 bytes are shown as U+FFFD.
    std::string text;
    Span span;

    friend bool operator==(const Lexeme&, const Lexeme&) = default;
};

/// Splits source into lexemes. Total: every byte is either covered by a
/// lexeme or is horizontal whitespace (space, tab, CR, FF, VT) or a
/// backtick line continuation.
[[nodiscard]] std::vector<Lexeme> lex(std::string_view source);
[[nodiscard]] inline std::vector<Lexeme> lex(const SourceScript& script) { return lex(script.text); }

/// Replaces every maximal run of invalid UTF-8 bytes with U+FFFD.
[[nodiscard]] std::string sanitize_utf8(std::string_view bytes);

/// Length of the valid UTF-8 sequence starting at `pos`, or 0 if the bytes
/// there do not decode.
[[nodiscard]] std::size_t utf8_sequence_length(std::string_view bytes, std::size_t pos);

}  // namespace psguard
