#include "psguard/lexer.hpp"

#include <cctype>

namespace psguard {

namespace {

constexpr std::string_view kReplacementChar = "\xEF\xBF\xBD";

bool is_ascii_alpha(unsigned char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_ascii_alnum(unsigned char c) { return is_ascii_alpha(c) || is_ascii_digit(c); }
bool is_ident(unsigned char c) { return is_ascii_alnum(c) || c == '_'; }
bool is_hspace(unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

bool is_word_start(unsigned char c) { return is_ascii_alpha(c) || c == '_' || c == '\\' || c == '~'; }

bool is_word_continue(unsigned char c) {
    if (is_ident(c)) return true;
    switch (c) {
    case '-': case '.': case '\\': case ':': case '/': case '~': case '*': case '@': case '#':
        return true;
    default:
        return false;
    }
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Lexeme> run() {
        while (pos_ < src_.size()) {
            step();
        }
        return std::move(out_);
    }

private:
    [[nodiscard]] unsigned char at(std::size_t i) const {
        return i < src_.size() ? static_cast<unsigned char>(src_[i]) : 0;
    }
    [[nodiscard]] bool has(std::size_t i) const { return i < src_.size(); }

    void emit(LexemeKind kind, std::size_t start, std::size_t end) {
        Lexeme lx;
        lx.kind = kind;
        lx.span = {start, end};
        lx.text = sanitize_utf8(src_.substr(start, end - start));
        out_.push_back(std::move(lx));
        pos_ = end;
    }

    void step() {
        const std::size_t start = pos_;
        const unsigned char c = at(pos_);

        if (is_hspace(c)) {
            ++pos_;
            return;
        }
        if (c == '`') {
            if (at(pos_ + 1) == '\n') {
                pos_ += 2;
                return;
            }
            if (at(pos_ + 1) == '\r' && at(pos_ + 2) == '\n') {
                pos_ += 3;
                return;
            }
            if (has(pos_ + 1)) {
                lex_word(start);
            } else {
                emit(LexemeKind::Unknown, start, start + 1);
            }
            return;
        }
        if (c == '\n') return emit(LexemeKind::Newline, start, start + 1);
        if (c == '#') return lex_line_comment(start);
        if (c == '<' && at(pos_ + 1) == '#') return lex_block_comment(start);
        if (c == '\'') return lex_single_quoted(start, start + 1);
        if (c == '"') return lex_double_quoted(start, start + 1);
        if (c == '@') return lex_at(start);
        if (c == '$') return lex_dollar(start);
        if (c == '-') return lex_dash(start);
        if (is_ascii_digit(c)) return lex_number(start);
        if (is_word_start(c)) return lex_word(start);
        if (c >= 0x80) {
            if (utf8_sequence_length(src_, pos_) > 0) return lex_word(start);
            std::size_t end = pos_;
            while (end < src_.size() && static_cast<unsigned char>(src_[end]) >= 0x80 &&
                   utf8_sequence_length(src_, end) == 0) {
                ++end;
            }
            return emit(LexemeKind::Unknown, start, end);
        }
        lex_punct(start);
    }

    void lex_line_comment(std::size_t start) {
        std::size_t end = start;
        while (end < src_.size() && src_[end] != '\n') ++end;
        emit(LexemeKind::Comment, start, end);
    }

    void lex_block_comment(std::size_t start) {
        const auto close = src_.find("#>", start + 2);
        emit(LexemeKind::Comment, start, close == std::string_view::npos ? src_.size() : close + 2);
    }

    void lex_single_quoted(std::size_t start, std::size_t body) {
        for (std::size_t i = body; i < src_.size(); ++i) {
            if (src_[i] == '\'') {
                if (at(i + 1) == '\'') {
                    ++i;
                    continue;
                }
                return emit(LexemeKind::StringLiteral, start, i + 1);
            }
        }
        emit(LexemeKind::Unknown, start, body);
    }

    void lex_double_quoted(std::size_t start, std::size_t body) {
        for (std::size_t i = body; i < src_.size(); ++i) {
            if (src_[i] == '`') {
                ++i;
                continue;
            }
            if (src_[i] == '"') {
                if (at(i + 1) == '"') {
                    ++i;
                    continue;
                }
                return emit(LexemeKind::StringLiteral, start, i + 1);
            }
        }
        emit(LexemeKind::Unknown, start, body);
    }

    void lex_here_string(std::size_t start, char quote) {
        // @'<newline> ... <newline>'@
        const std::string terminator = std::string("\n") + quote + "@";
        const auto close = src_.find(terminator, start + 2);
        if (close == std::string_view::npos) return emit(LexemeKind::Unknown, start, start + 1);
        emit(LexemeKind::StringLiteral, start, close + terminator.size());
    }

    void lex_at(std::size_t start) {
        const unsigned char next = at(start + 1);
        if (next == '\'' || next == '"') {
            std::size_t i = start + 2;
            while (is_hspace(at(i))) ++i;
            if (at(i) == '\n') return lex_here_string(start, static_cast<char>(next));
            return emit(LexemeKind::Operator, start, start + 1);
        }
        if (next == '(') return emit(LexemeKind::OpenParen, start, start + 2);
        if (next == '{') return emit(LexemeKind::OpenBrace, start, start + 2);
        if (is_ident(next)) {
            std::size_t end = start + 1;
            while (is_ident(at(end))) ++end;
            return emit(LexemeKind::Variable, start, end);
        }
        emit(LexemeKind::Operator, start, start + 1);
    }

    void lex_dollar(std::size_t start) {
        const unsigned char next = at(start + 1);
        if (next == '(') return emit(LexemeKind::OpenParen, start, start + 2);
        if (next == '{') {
            for (std::size_t i = start + 2; i < src_.size() && src_[i] != '\n'; ++i) {
                if (src_[i] == '}') return emit(LexemeKind::Variable, start, i + 1);
            }
            return emit(LexemeKind::Unknown, start, start + 1);
        }
        if (next == '$' || next == '?' || next == '^') return emit(LexemeKind::Variable, start, start + 2);
        if (is_ident(next)) {
            std::size_t end = start + 1;
            while (is_ident(at(end))) ++end;
            if (at(end) == ':' && is_ident(at(end + 1))) {
                ++end;
                while (is_ident(at(end))) ++end;
            }
            return emit(LexemeKind::Variable, start, end);
        }
        emit(LexemeKind::Unknown, start, start + 1);
    }

    void lex_dash(std::size_t start) {
        const unsigned char next = at(start + 1);
        if (is_ascii_alpha(next) || next == '_') {
            std::size_t end = start + 1;
            while (is_ident(at(end))) ++end;
            if (at(end) == ':' && at(end + 1) != ':') ++end;
            return emit(LexemeKind::Parameter, start, end);
        }
        if (next == '-' || next == '=') return emit(LexemeKind::Operator, start, start + 2);
        emit(LexemeKind::Operator, start, start + 1);
    }

    void lex_number(std::size_t start) {
        std::size_t end = start;
        if (at(end) == '0' && (at(end + 1) == 'x' || at(end + 1) == 'X') && std::isxdigit(at(end + 2))) {
            end += 2;
            while (std::isxdigit(at(end))) ++end;
        } else {
            while (is_ascii_digit(at(end))) ++end;
            if (at(end) == '.' && is_ascii_digit(at(end + 1))) {
                ++end;
                while (is_ascii_digit(at(end))) ++end;
            }
        }
        end = consume_number_suffix(end);
        // Anything glued on (e.g. 117.187.136.141, 0CFA042F.Png) makes it a word.
        const auto glued = [&](std::size_t i) {
            const unsigned char c = at(i);
            if (c == '.') return at(i + 1) != '.' && is_word_continue(at(i + 1));
            return is_ident(c);
        };
        if (glued(end)) {
            while (glued(end)) ++end;
            while (end < src_.size() && is_word_continue(at(end))) ++end;
            return emit(LexemeKind::Word, start, end);
        }
        emit(LexemeKind::Number, start, end);
    }

    [[nodiscard]] std::size_t consume_number_suffix(std::size_t end) const {
        const auto lower = [&](std::size_t i) { return static_cast<char>(std::tolower(at(i))); };
        const char a = lower(end);
        const char b = lower(end + 1);
        if ((a == 'k' || a == 'm' || a == 'g' || a == 't' || a == 'p') && b == 'b' && !is_ident(at(end + 2))) {
            return end + 2;
        }
        if ((a == 'd' || a == 'l') && !is_ident(at(end + 1))) return end + 1;
        return end;
    }

    void lex_word(std::size_t start) {
        std::size_t end = start;
        while (end < src_.size()) {
            const unsigned char c = at(end);
            if (c == '`') {
                if (!has(end + 1) || at(end + 1) == '\n' || at(end + 1) == '\r') break;
                end += 2;
                continue;
            }
            if (c >= 0x80) {
                const std::size_t n = utf8_sequence_length(src_, end);
                if (n == 0) break;
                end += n;
                continue;
            }
            if (end == start ? is_word_start(c) : is_word_continue(c)) {
                ++end;
                continue;
            }
            break;
        }
        if (end == start) end = start + 1;
        emit(LexemeKind::Word, start, end);
    }

    void lex_punct(std::size_t start) {
        const char c = static_cast<char>(at(start));
        const char n = static_cast<char>(at(start + 1));
        const auto op = [&](std::size_t len) { emit(LexemeKind::Operator, start, start + len); };
        switch (c) {
        case '|': return n == '|' ? op(2) : emit(LexemeKind::Pipe, start, start + 1);
        case ';': return emit(LexemeKind::Semicolon, start, start + 1);
        case '(': return emit(LexemeKind::OpenParen, start, start + 1);
        case ')': return emit(LexemeKind::CloseParen, start, start + 1);
        case '{': return emit(LexemeKind::OpenBrace, start, start + 1);
        case '}': return emit(LexemeKind::CloseBrace, start, start + 1);
        case '.': return n == '.' ? op(2) : emit(LexemeKind::Dot, start, start + 1);
        case '&': return op(n == '&' ? 2 : 1);
        case ':': return op(n == ':' ? 2 : 1);
        case '+': return op(n == '=' || n == '+' ? 2 : 1);
        case '*': case '/': case '%': return op(n == '=' ? 2 : 1);
        case '>': return op(n == '>' ? 2 : 1);
        case '=': case '!': case ',': case '[': case ']': case '<': case '?':
            return op(1);
        default:
            return emit(LexemeKind::Unknown, start, start + 1);
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::vector<Lexeme> out_;
};

}  // namespace

std::vector<Lexeme> lex(std::string_view source) { return Lexer(source).run(); }

std::string_view to_string(LexemeKind kind) {
    switch (kind) {
    case LexemeKind::Word: return "word";
    case LexemeKind::Parameter: return "parameter";
    case LexemeKind::Variable: return "variable";
    case LexemeKind::StringLiteral: return "string-literal";
    case LexemeKind::Number: return "number";
    case LexemeKind::Operator: return "operator";
    case LexemeKind::Pipe: return "pipe";
    case LexemeKind::Semicolon: return "semicolon";
    case LexemeKind::OpenParen: return "open-paren";
    case LexemeKind::CloseParen: return "close-paren";
    case LexemeKind::OpenBrace: return "open-brace";
    case LexemeKind::CloseBrace: return "close-brace";
    case LexemeKind::Dot: return "dot";
    case LexemeKind::Comment: return "comment";
    case LexemeKind::Newline: return "newline";
    case LexemeKind::Unknown: return "unknown";
    }
    return "unknown";
}

std::size_t utf8_sequence_length(std::string_view bytes, std::size_t pos) {
    const auto byte = [&](std::size_t i) -> unsigned {
        return i < bytes.size() ? static_cast<unsigned char>(bytes[i]) : 0x100u;
    };
    const unsigned b0 = byte(pos);
    if (b0 < 0x80) return 1;
    const auto cont = [&](std::size_t i) { return (byte(i) & 0xC0u) == 0x80u && byte(i) < 0x100u; };
    if (b0 >= 0xC2 && b0 <= 0xDF) return cont(pos + 1) ? 2 : 0;
    if (b0 >= 0xE0 && b0 <= 0xEF) {
        const unsigned b1 = byte(pos + 1);
        if (!cont(pos + 1) || !cont(pos + 2)) return 0;
        if (b0 == 0xE0 && b1 < 0xA0) return 0;  // overlong
        if (b0 == 0xED && b1 > 0x9F) return 0;  // surrogates
        return 3;
    }
    if (b0 >= 0xF0 && b0 <= 0xF4) {
        const unsigned b1 = byte(pos + 1);
        if (!cont(pos + 1) || !cont(pos + 2) || !cont(pos + 3)) return 0;
        if (b0 == 0xF0 && b1 < 0x90) return 0;
        if (b0 == 0xF4 && b1 > 0x8F) return 0;
        return 4;
    }
    return 0;
}

std::string sanitize_utf8(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    bool in_bad_run = false;
    while (i < bytes.size()) {
        const std::size_t n = utf8_sequence_length(bytes, i);
        if (n == 0) {
            if (!in_bad_run) out += kReplacementChar;
            in_bad_run = true;
            ++i;
            continue;
        }
        in_bad_run = false;
        out.append(bytes.substr(i, n));
        i += n;
    }
    return out;
}

}  // namespace psguard
