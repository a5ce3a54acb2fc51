#include "psguard/parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <vector>

#include "psguard/lexer.hpp"

namespace psguard {

namespace {

struct ParseFailure {
    std::size_t index;  // lexeme index where the grammar gave up
    bool at_eof;
};

/// A parsed expression together with its syntactic extent. The extent can be
/// wider than the node span, e.g. `[Convert]` covers the brackets while the
/// TypeNameAst covers only `Convert`.
struct Parsed {
    AstNode node;
    std::size_t start;
    std::size_t end;
};

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Dash operators recognised in expression mode, without the leading dash
// and without the optional c/i case prefix.
constexpr std::array kBinaryDashOperators = {
    "eq", "ne", "gt", "ge", "lt", "le", "like", "notlike", "match", "notmatch", "contains", "notcontains",
    "in", "notin", "replace", "split", "join", "and", "or", "xor", "band", "bor", "bxor", "f", "is",
    "isnot", "as", "shl", "shr",
};
constexpr std::array kUnaryDashOperators = {"not", "bnot", "join", "split"};

std::string_view strip_dash_operator(std::string_view text) {
    if (text.size() < 2 || text[0] != '-') return {};
    std::string_view name = text.substr(1);
    if (!name.empty() && name.back() == ':') return {};
    return name;
}

bool is_dash_operator(std::string_view text, bool unary) {
    const std::string name = lower(strip_dash_operator(text));
    if (name.empty()) return false;
    const auto matches = [&](std::string_view candidate) {
        if (name == candidate) return true;
        return !unary && name.size() == candidate.size() + 1 && (name[0] == 'c' || name[0] == 'i') &&
               std::string_view(name).substr(1) == candidate && candidate != "f" && candidate != "and" &&
               candidate != "or";
    };
    if (unary) return std::any_of(kUnaryDashOperators.begin(), kUnaryDashOperators.end(), matches);
    return std::any_of(kBinaryDashOperators.begin(), kBinaryDashOperators.end(), matches);
}

bool is_assignment_operator(const Lexeme& lx) {
    if (lx.kind != LexemeKind::Operator) return false;
    return lx.text == "=" || lx.text == "+=" || lx.text == "-=" || lx.text == "*=" || lx.text == "/=" ||
           lx.text == "%=";
}

bool is_binary_symbol(const Lexeme& lx, bool allow_comma) {
    if (lx.kind != LexemeKind::Operator) return false;
    if (lx.text == ",") return allow_comma;
    return lx.text == "+" || lx.text == "-" || lx.text == "*" || lx.text == "/" || lx.text == "%" || lx.text == "..";
}

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {
        for (auto& lx : lex(src)) {
            if (lx.kind != LexemeKind::Comment) lx_.push_back(std::move(lx));
        }
    }

    AstNode run() {
        AstNode root = make(AstKind::ScriptRoot, 0, src_.size());
        root.children = statement_list(Closer::None);
        return root;
    }

private:
    enum class Closer { None, Brace, Paren };

    // ---- lexeme navigation -------------------------------------------------

    struct ModeGuard {
        Parser& p;
        ModeGuard(Parser& parser, bool newlines_insignificant) : p(parser) {
            p.modes_.push_back(newlines_insignificant);
        }
        ~ModeGuard() { p.modes_.pop_back(); }
    };

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser) {
            if (++p.depth_ > kMaxNestingDepth) {
                --p.depth_;
                throw ParseFailure{p.pos_, false};
            }
        }
        ~DepthGuard() { --p.depth_; }
    };

    [[nodiscard]] bool newlines_insignificant() const { return !modes_.empty() && modes_.back(); }

    const Lexeme* peek() {
        if (newlines_insignificant()) skip_newlines();
        return pos_ < lx_.size() ? &lx_[pos_] : nullptr;
    }

    /// Raw lexeme at the cursor; newlines are never skipped.
    [[nodiscard]] const Lexeme* current() const { return pos_ < lx_.size() ? &lx_[pos_] : nullptr; }

    void skip_newlines() {
        while (pos_ < lx_.size() && lx_[pos_].kind == LexemeKind::Newline) ++pos_;
    }

    void skip_separators() {
        while (pos_ < lx_.size() &&
               (lx_[pos_].kind == LexemeKind::Newline || lx_[pos_].kind == LexemeKind::Semicolon)) {
            ++pos_;
        }
    }

    [[nodiscard]] bool adjacent(std::size_t i) const {
        return i > 0 && i < lx_.size() && lx_[i].span.start == lx_[i - 1].span.end;
    }

    [[noreturn]] void fail() const { throw ParseFailure{pos_, pos_ >= lx_.size()}; }

    const Lexeme& expect(LexemeKind kind, std::string_view text = {}) {
        const Lexeme* lx = peek();
        if (lx == nullptr || lx->kind != kind || (!text.empty() && lx->text != text)) fail();
        ++pos_;
        return *lx;
    }

    [[nodiscard]] bool at_word(std::string_view keyword) {
        const Lexeme* lx = peek();
        return lx != nullptr && lx->kind == LexemeKind::Word && iequals(lx->text, keyword);
    }

    /// Next significant lexeme after skipping newlines, without moving the cursor.
    [[nodiscard]] const Lexeme* peek_past_newlines() const {
        std::size_t i = pos_;
        while (i < lx_.size() && lx_[i].kind == LexemeKind::Newline) ++i;
        return i < lx_.size() ? &lx_[i] : nullptr;
    }

    // ---- node construction ---------------------------------------------------

    [[nodiscard]] AstNode make(AstKind kind, std::size_t start, std::size_t end) const {
        AstNode node;
        node.kind = kind;
        node.span = {start, end};
        node.text = std::string(src_.substr(start, end - start));
        return node;
    }

    [[nodiscard]] AstNode make(AstKind kind, std::size_t start, std::size_t end, std::vector<AstNode> children) const {
        AstNode node = make(kind, start, end);
        node.children = std::move(children);
        return node;
    }

    [[nodiscard]] AstNode leaf(AstKind kind, const Lexeme& lx) const { return make(kind, lx.span.start, lx.span.end); }

    [[nodiscard]] std::size_t prev_end() const { return lx_[pos_ - 1].span.end; }

    static AstNode unwrap_single(AstNode pipeline) {
        if (pipeline.kind == AstKind::PipelineAst && pipeline.children.size() == 1) {
            return std::move(pipeline.children.front());
        }
        return pipeline;
    }

    // ---- statements --------------------------------------------------------

    std::vector<AstNode> statement_list(Closer closer) {
        std::vector<AstNode> out;
        for (;;) {
            skip_separators();
            const Lexeme* lx = current();
            if (lx == nullptr) {
                if (closer != Closer::None) throw ParseFailure{pos_, true};
                break;
            }
            if ((closer == Closer::Brace && lx->kind == LexemeKind::CloseBrace) ||
                (closer == Closer::Paren && lx->kind == LexemeKind::CloseParen)) {
                break;
            }
            const std::size_t start = pos_;
            try {
                AstNode stmt = statement();
                require_statement_end(closer);
                out.push_back(std::move(stmt));
            } catch (const ParseFailure& failure) {
                if (failure.at_eof && closer != Closer::None) throw;
                out.push_back(recover(start, failure, closer));
            }
        }
        return out;
    }

    void require_statement_end(Closer closer) {
        const Lexeme* lx = current();
        if (lx == nullptr || lx->kind == LexemeKind::Newline || lx->kind == LexemeKind::Semicolon) return;
        if (closer == Closer::Brace && lx->kind == LexemeKind::CloseBrace) return;
        if (closer == Closer::Paren && lx->kind == LexemeKind::CloseParen) return;
        fail();
    }

    AstNode recover(std::size_t start, const ParseFailure& failure, Closer closer) {
        const std::size_t from = failure.at_eof ? start : std::max(failure.index, start);
        std::size_t stop = std::min(from, lx_.size());
        while (stop < lx_.size()) {
            const LexemeKind k = lx_[stop].kind;
            if (k == LexemeKind::Newline || k == LexemeKind::Semicolon) break;
            if (closer == Closer::Brace && k == LexemeKind::CloseBrace) break;
            if (closer == Closer::Paren && k == LexemeKind::CloseParen) break;
            ++stop;
        }
        stop = std::max(stop, start + 1);

        std::vector<AstNode> raw;
        for (std::size_t i = start; i < stop; ++i) {
            if (lx_[i].kind == LexemeKind::Newline) continue;
            raw.push_back(leaf(AstKind::ArgumentAst, lx_[i]));
        }
        pos_ = stop;
        const std::size_t begin = raw.front().span.start;
        const std::size_t end = raw.back().span.end;
        return make(AstKind::ErrorAst, begin, end, std::move(raw));
    }

    AstNode statement() {
        DepthGuard depth(*this);
        const Lexeme* lx = peek();
        if (lx == nullptr) fail();
        std::optional<Parsed> keyword;
        if (lx->kind == LexemeKind::Word) keyword = keyword_statement();
        if (keyword) {
            return make(AstKind::PipelineAst, keyword->start, keyword->end, {std::move(keyword->node)});
        }
        return pipeline(true);
    }

    std::optional<Parsed> keyword_statement() {
        const std::string word = lower(peek()->text);
        const Lexeme* after = pos_ + 1 < lx_.size() ? &lx_[pos_ + 1] : nullptr;
        const auto next_is_paren = [&] {
            std::size_t i = pos_ + 1;
            while (i < lx_.size() && lx_[i].kind == LexemeKind::Newline) ++i;
            return i < lx_.size() && lx_[i].kind == LexemeKind::OpenParen && lx_[i].text == "(";
        };
        if (word == "if") return if_statement();
        if (word == "while" && next_is_paren()) return while_statement();
        if (word == "for" && next_is_paren()) return for_statement();
        if (word == "foreach" && next_is_paren()) return foreach_statement();
        if (word == "do" && after != nullptr && after->kind != LexemeKind::Newline) return do_statement();
        if (word == "function" || word == "filter") return function_definition();
        return std::nullopt;
    }

    Parsed paren_condition() {
        const Lexeme* open = peek();
        if (open == nullptr || open->kind != LexemeKind::OpenParen || open->text != "(") fail();
        return primary();
    }

    Parsed block() {
        skip_newlines();
        const Lexeme* open = current();
        if (open == nullptr || open->kind != LexemeKind::OpenBrace || open->text != "{") fail();
        return primary();
    }

    Parsed if_statement() {
        const std::size_t start = peek()->span.start;
        ++pos_;
        std::vector<AstNode> parts;
        parts.push_back(paren_condition().node);
        parts.push_back(block().node);
        for (;;) {
            const Lexeme* next = peek_past_newlines();
            if (next == nullptr || next->kind != LexemeKind::Word) break;
            if (iequals(next->text, "elseif")) {
                skip_newlines();
                ++pos_;
                parts.push_back(paren_condition().node);
                parts.push_back(block().node);
            } else if (iequals(next->text, "else")) {
                skip_newlines();
                ++pos_;
                parts.push_back(block().node);
                break;
            } else {
                break;
            }
        }
        const std::size_t end = prev_end();
        return {make(AstKind::IfAst, start, end, std::move(parts)), start, end};
    }

    Parsed while_statement() {
        const std::size_t start = peek()->span.start;
        ++pos_;
        std::vector<AstNode> parts;
        parts.push_back(paren_condition().node);
        parts.push_back(block().node);
        const std::size_t end = prev_end();
        return {make(AstKind::LoopAst, start, end, std::move(parts)), start, end};
    }

    Parsed for_statement() {
        const std::size_t start = peek()->span.start;
        ++pos_;
        skip_newlines();
        const Lexeme& open = expect(LexemeKind::OpenParen, "(");
        std::vector<AstNode> header;
        {
            ModeGuard mode(*this, false);
            DepthGuard depth(*this);
            header = statement_list(Closer::Paren);
            expect(LexemeKind::CloseParen);
        }
        std::vector<AstNode> parts;
        parts.push_back(make(AstKind::ExpressionAst, open.span.start, prev_end(), std::move(header)));
        parts.push_back(block().node);
        const std::size_t end = prev_end();
        return {make(AstKind::LoopAst, start, end, std::move(parts)), start, end};
    }

    Parsed foreach_statement() {
        const std::size_t start = peek()->span.start;
        ++pos_;
        skip_newlines();
        const Lexeme& open = expect(LexemeKind::OpenParen, "(");
        std::vector<AstNode> header;
        {
            ModeGuard mode(*this, true);
            DepthGuard depth(*this);
            const Lexeme& var = expect(LexemeKind::Variable);
            header.push_back(leaf(AstKind::VariableAst, var));
            if (!at_word("in")) fail();
            header.push_back(leaf(AstKind::OperatorAst, *peek()));
            ++pos_;
            header.push_back(unwrap_single(pipeline(false)));
            expect(LexemeKind::CloseParen);
        }
        std::vector<AstNode> parts;
        parts.push_back(make(AstKind::ExpressionAst, open.span.start, prev_end(), std::move(header)));
        parts.push_back(block().node);
        const std::size_t end = prev_end();
        return {make(AstKind::LoopAst, start, end, std::move(parts)), start, end};
    }

    Parsed do_statement() {
        const std::size_t start = peek()->span.start;
        ++pos_;
        std::vector<AstNode> parts;
        parts.push_back(block().node);
        skip_newlines();
        if (!at_word("while") && !at_word("until")) fail();
        ++pos_;
        parts.push_back(paren_condition().node);
        const std::size_t end = prev_end();
        return {make(AstKind::LoopAst, start, end, std::move(parts)), start, end};
    }

    Parsed function_definition() {
        const std::size_t start = peek()->span.start;
        ++pos_;
        const Lexeme* name = current();
        if (name == nullptr || name->kind != LexemeKind::Word) fail();
        const auto [name_start, name_end] = gather_bare();
        std::vector<AstNode> parts;
        parts.push_back(make(AstKind::CmdletAst, name_start, name_end));
        const Lexeme* next = peek_past_newlines();
        if (next != nullptr && next->kind == LexemeKind::OpenParen && next->text == "(") {
            skip_newlines();
            parts.push_back(primary().node);
        }
        parts.push_back(block().node);
        const std::size_t end = prev_end();
        return {make(AstKind::FunctionDefinitionAst, start, end, std::move(parts)), start, end};
    }

    // ---- pipelines and commands ---------------------------------------------

    AstNode pipeline(bool allow_assignment) {
        std::vector<AstNode> elements;
        elements.push_back(pipeline_element(allow_assignment));
        if (elements.front().kind != AstKind::AssignmentAst) {
            for (const Lexeme* lx = peek(); lx != nullptr && lx->kind == LexemeKind::Pipe; lx = peek()) {
                ++pos_;
                skip_newlines();
                elements.push_back(pipeline_element(false));
            }
        }
        const std::size_t start = elements.front().span.start;
        const std::size_t end = elements.back().span.end;
        return make(AstKind::PipelineAst, start, end, std::move(elements));
    }

    [[nodiscard]] bool starts_command(const Lexeme& lx) const {
        switch (lx.kind) {
        case LexemeKind::Word:
            return true;
        case LexemeKind::Dot:
            return true;
        case LexemeKind::Operator:
            return lx.text == "&" || lx.text == "%" || lx.text == "?";
        default:
            return false;
        }
    }

    AstNode pipeline_element(bool allow_assignment) {
        const Lexeme* lx = peek();
        if (lx == nullptr) fail();
        if (lx->kind == LexemeKind::Word) {
            if (auto kw = keyword_statement()) return std::move(kw->node);
        }
        if (starts_command(*lx)) return command();

        Parsed expr = expression(true);
        const Lexeme* next = peek();
        if (allow_assignment && next != nullptr && is_assignment_operator(*next)) {
            AstNode op = leaf(AstKind::OperatorAst, *next);
            ++pos_;
            skip_newlines();
            AstNode value = unwrap_single(statement());
            const std::size_t end = value.span.end;
            return make(AstKind::AssignmentAst, expr.start, end, {std::move(expr.node), std::move(op), std::move(value)});
        }
        return make(AstKind::CommandExpressionAst, expr.start, expr.end, {std::move(expr.node)});
    }

    /// Merges the lexeme at the cursor with every lexeme glued to it (no
    /// whitespace between) into one bare-word extent.
    std::pair<std::size_t, std::size_t> gather_bare() {
        const std::size_t first = pos_;
        do {
            const LexemeKind k = lx_[pos_].kind;
            if (k == LexemeKind::Unknown) fail();
            ++pos_;
        } while (pos_ < lx_.size() && adjacent(pos_) && glues(lx_[pos_]));
        return {lx_[first].span.start, lx_[pos_ - 1].span.end};
    }

    static bool glues(const Lexeme& lx) {
        switch (lx.kind) {
        case LexemeKind::Word:
        case LexemeKind::Number:
        case LexemeKind::Operator:
        case LexemeKind::Dot:
        case LexemeKind::Variable:
        case LexemeKind::Parameter:
        case LexemeKind::StringLiteral:
        case LexemeKind::Unknown:
            return true;
        default:
            return false;
        }
    }

    /// Index of the `]` closing a type literal opened at `i`, if the bracket
    /// content looks like a type name.
    [[nodiscard]] std::optional<std::size_t> type_literal_close(std::size_t i) const {
        if (i >= lx_.size() || lx_[i].kind != LexemeKind::Operator || lx_[i].text != "[") return std::nullopt;
        if (i + 1 >= lx_.size() || lx_[i + 1].kind != LexemeKind::Word) return std::nullopt;
        int brackets = 0;
        int parens = 0;
        for (std::size_t j = i; j < lx_.size(); ++j) {
            const Lexeme& lx = lx_[j];
            switch (lx.kind) {
            case LexemeKind::Operator:
                if (lx.text == "[") ++brackets;
                if (lx.text == "]" && --brackets == 0 && parens == 0) return j;
                break;
            case LexemeKind::OpenParen: ++parens; break;
            case LexemeKind::CloseParen:
                if (--parens < 0) return std::nullopt;
                break;
            case LexemeKind::Newline:
            case LexemeKind::Semicolon:
            case LexemeKind::Pipe:
            case LexemeKind::OpenBrace:
            case LexemeKind::CloseBrace:
            case LexemeKind::Unknown:
                return std::nullopt;
            default:
                break;
            }
        }
        return std::nullopt;
    }

    /// True when a `[...]` argument is an expression (static member or cast)
    /// rather than bare text.
    [[nodiscard]] bool type_literal_expression_at(std::size_t i) const {
        const auto close = type_literal_close(i);
        if (!close) return false;
        const std::size_t after = *close + 1;
        if (after >= lx_.size() || !adjacent(after)) return false;
        const Lexeme& lx = lx_[after];
        return (lx.kind == LexemeKind::Operator && (lx.text == "::" || lx.text == "[")) ||
               lx.kind == LexemeKind::Variable || lx.kind == LexemeKind::OpenParen ||
               lx.kind == LexemeKind::StringLiteral;
    }

    AstNode command() {
        const Lexeme& head = *peek();
        const std::size_t start = head.span.start;
        std::vector<AstNode> children;

        const bool invocation_operator =
            (head.kind == LexemeKind::Operator && head.text == "&") ||
            (head.kind == LexemeKind::Dot && !adjacent(pos_ + 1));
        std::string head_name;
        if (invocation_operator) {
            children.push_back(leaf(AstKind::OperatorAst, head));
            ++pos_;
            const Lexeme* name = peek();
            if (name == nullptr) fail();
            if (name->kind == LexemeKind::Word || name->kind == LexemeKind::Dot) {
                const auto [s, e] = gather_bare();
                children.push_back(make(AstKind::CmdletAst, s, e));
            } else {
                Parsed target = postfix_expression();
                children.push_back(std::move(target.node));
            }
        } else {
            const auto [s, e] = gather_bare();
            children.push_back(make(AstKind::CmdletAst, s, e));
            head_name = lower(children.back().text);
        }

        const bool new_object = head_name == "new-object";
        bool type_given = false;
        bool after_type_parameter = false;
        bool after_parameter = false;

        for (const Lexeme* lx = peek(); lx != nullptr; lx = peek()) {
            switch (lx->kind) {
            case LexemeKind::Newline:
            case LexemeKind::Semicolon:
            case LexemeKind::Pipe:
            case LexemeKind::CloseParen:
            case LexemeKind::CloseBrace:
                goto done;
            case LexemeKind::Unknown:
                fail();
            case LexemeKind::Parameter: {
                children.push_back(leaf(AstKind::CommandParameterAst, *lx));
                const std::string name = lower(lx->text);
                after_type_parameter = name.starts_with("-typename") || name.starts_with("-comobject");
                after_parameter = true;
                ++pos_;
                continue;
            }
            default:
                break;
            }
            if (lx->kind == LexemeKind::Operator && lx->text == "]") fail();

            const bool expression_arg =
                lx->kind == LexemeKind::StringLiteral || lx->kind == LexemeKind::Variable ||
                lx->kind == LexemeKind::OpenParen || lx->kind == LexemeKind::OpenBrace ||
                type_literal_expression_at(pos_);
            if (expression_arg) {
                Parsed value = postfix_expression();
                std::size_t end = value.end;
                if (pos_ < lx_.size() && adjacent(pos_) && glues(lx_[pos_])) end = gather_bare().second;
                children.push_back(make(AstKind::ArgumentAst, value.start, end, {std::move(value.node)}));
            } else {
                const auto [s, e] = gather_bare();
                AstNode arg = make(AstKind::ArgumentAst, s, e);
                const bool positional_type = !after_parameter && !type_given;
                const bool single_word = lx->kind == LexemeKind::Word && lx->span.end == e;
                if (new_object && (after_type_parameter || positional_type) && single_word) {
                    arg.children.push_back(make(AstKind::TypeNameAst, s, e));
                    type_given = true;
                }
                children.push_back(std::move(arg));
            }
            after_parameter = false;
            after_type_parameter = false;
        }
    done:
        const std::size_t end = children.back().span.end;
        return make(AstKind::CommandAst, start, end, std::move(children));
    }

    // ---- expressions --------------------------------------------------------

    Parsed expression(bool allow_comma) {
        DepthGuard depth(*this);
        Parsed first = unary();
        std::vector<AstNode> parts;
        std::size_t end = first.end;
        const std::size_t start = first.start;
        parts.push_back(std::move(first.node));
        for (const Lexeme* lx = peek(); lx != nullptr; lx = peek()) {
            const bool binary = is_binary_symbol(*lx, allow_comma) ||
                                (lx->kind == LexemeKind::Parameter && is_dash_operator(lx->text, false));
            if (!binary) break;
            parts.push_back(leaf(AstKind::OperatorAst, *lx));
            ++pos_;
            skip_newlines();
            Parsed rhs = unary();
            end = rhs.end;
            parts.push_back(std::move(rhs.node));
        }
        if (parts.size() == 1) return {std::move(parts.front()), start, end};
        return {make(AstKind::ExpressionAst, start, end, std::move(parts)), start, end};
    }

    Parsed unary() {
        DepthGuard depth(*this);
        const Lexeme* lx = peek();
        if (lx == nullptr) fail();
        const bool unary_symbol =
            lx->kind == LexemeKind::Operator &&
            (lx->text == "!" || lx->text == "-" || lx->text == "+" || lx->text == "," || lx->text == "++" ||
             lx->text == "--");
        const bool unary_dash = lx->kind == LexemeKind::Parameter && is_dash_operator(lx->text, true);
        if (unary_symbol || unary_dash) {
            AstNode op = leaf(AstKind::OperatorAst, *lx);
            const std::size_t start = lx->span.start;
            ++pos_;
            Parsed operand = unary();
            return {make(AstKind::ExpressionAst, start, operand.end, {std::move(op), std::move(operand.node)}), start,
                    operand.end};
        }
        if (lx->kind == LexemeKind::Operator && lx->text == "[") {
            Parsed type = type_literal();
            const Lexeme* next = current();
            const bool static_member = next != nullptr && adjacent(pos_) && next->kind == LexemeKind::Operator &&
                                       (next->text == "::" || next->text == "[");
            if (static_member) return postfix(std::move(type));
            const bool cast = next != nullptr &&
                              (next->kind == LexemeKind::Variable || next->kind == LexemeKind::StringLiteral ||
                               next->kind == LexemeKind::Number || next->kind == LexemeKind::OpenParen ||
                               (next->kind == LexemeKind::OpenBrace && next->text == "@{") ||
                               (next->kind == LexemeKind::Operator && next->text == "["));
            if (cast) {
                Parsed operand = unary();
                return {make(AstKind::ExpressionAst, type.start, operand.end,
                             {std::move(type.node), std::move(operand.node)}),
                        type.start, operand.end};
            }
            return type;
        }
        return postfix_expression();
    }

    Parsed type_literal() {
        const auto close = type_literal_close(pos_);
        if (!close) fail();
        const std::size_t open_start = lx_[pos_].span.start;
        const std::size_t name_start = lx_[pos_ + 1].span.start;
        const std::size_t name_end = lx_[*close - 1].span.end;
        const std::size_t close_end = lx_[*close].span.end;
        pos_ = *close + 1;
        return {make(AstKind::TypeNameAst, name_start, name_end), open_start, close_end};
    }

    Parsed postfix_expression() {
        const Lexeme* lx = peek();
        if (lx != nullptr && lx->kind == LexemeKind::Operator && lx->text == "[") return postfix(type_literal());
        return postfix(primary());
    }

    Parsed primary() {
        DepthGuard depth(*this);
        const Lexeme* lx = peek();
        if (lx == nullptr) fail();
        const Lexeme& tok = *lx;
        switch (tok.kind) {
        case LexemeKind::Variable:
            ++pos_;
            return {leaf(AstKind::VariableAst, tok), tok.span.start, tok.span.end};
        case LexemeKind::StringLiteral:
            ++pos_;
            return {leaf(AstKind::StringLiteralAst, tok), tok.span.start, tok.span.end};
        case LexemeKind::Number:
            ++pos_;
            return {leaf(AstKind::ExpressionAst, tok), tok.span.start, tok.span.end};
        case LexemeKind::OpenParen:
            return tok.text == "(" ? paren_group() : sub_expression();
        case LexemeKind::OpenBrace:
            return tok.text == "{" ? script_block() : hashtable();
        default:
            fail();
        }
    }

    Parsed paren_group() {
        const std::size_t start = lx_[pos_].span.start;
        ++pos_;
        std::vector<AstNode> inner;
        {
            ModeGuard mode(*this, true);
            const Lexeme* lx = peek();
            if (lx == nullptr) fail();
            if (lx->kind != LexemeKind::CloseParen) inner.push_back(unwrap_single(statement()));
            expect(LexemeKind::CloseParen);
        }
        const std::size_t end = prev_end();
        return {make(AstKind::ExpressionAst, start, end, std::move(inner)), start, end};
    }

    Parsed sub_expression() {
        const std::size_t start = lx_[pos_].span.start;
        ++pos_;
        std::vector<AstNode> inner;
        {
            ModeGuard mode(*this, false);
            inner = statement_list(Closer::Paren);
            expect(LexemeKind::CloseParen);
        }
        const std::size_t end = prev_end();
        return {make(AstKind::ExpressionAst, start, end, std::move(inner)), start, end};
    }

    Parsed script_block() {
        const std::size_t start = lx_[pos_].span.start;
        ++pos_;
        std::vector<AstNode> inner;
        {
            ModeGuard mode(*this, false);
            inner = statement_list(Closer::Brace);
            expect(LexemeKind::CloseBrace);
        }
        const std::size_t end = prev_end();
        return {make(AstKind::ScriptBlockAst, start, end, std::move(inner)), start, end};
    }

    Parsed hashtable() {
        const std::size_t start = lx_[pos_].span.start;
        ++pos_;
        std::vector<AstNode> entries;
        {
            ModeGuard mode(*this, false);
            for (;;) {
                skip_separators();
                const Lexeme* lx = current();
                if (lx == nullptr) fail();
                if (lx->kind == LexemeKind::CloseBrace) break;
                AstNode key;
                if (lx->kind == LexemeKind::Word || lx->kind == LexemeKind::StringLiteral) {
                    key = leaf(AstKind::StringLiteralAst, *lx);
                } else if (lx->kind == LexemeKind::Variable) {
                    key = leaf(AstKind::VariableAst, *lx);
                } else if (lx->kind == LexemeKind::Number) {
                    key = leaf(AstKind::ExpressionAst, *lx);
                } else {
                    fail();
                }
                ++pos_;
                const Lexeme& eq = expect(LexemeKind::Operator, "=");
                AstNode op = leaf(AstKind::OperatorAst, eq);
                skip_newlines();
                AstNode value = unwrap_single(statement());
                const std::size_t entry_start = key.span.start;
                const std::size_t entry_end = value.span.end;
                entries.push_back(make(AstKind::AssignmentAst, entry_start, entry_end,
                                       {std::move(key), std::move(op), std::move(value)}));
                require_statement_end(Closer::Brace);
            }
            expect(LexemeKind::CloseBrace);
        }
        const std::size_t end = prev_end();
        return {make(AstKind::ExpressionAst, start, end, std::move(entries)), start, end};
    }

    Parsed postfix(Parsed target) {
        for (;;) {
            const Lexeme* lx = current();
            if (lx == nullptr || !adjacent(pos_)) break;
            const bool member = lx->kind == LexemeKind::Dot || (lx->kind == LexemeKind::Operator && lx->text == "::");
            if (member) {
                ++pos_;
                target = member_access(std::move(target));
                continue;
            }
            if (lx->kind == LexemeKind::Operator && lx->text == "[") {
                ++pos_;
                Parsed index = [&] {
                    ModeGuard mode(*this, true);
                    Parsed inner = expression(true);
                    expect(LexemeKind::Operator, "]");
                    return inner;
                }();
                const std::size_t end = prev_end();
                target = {make(AstKind::ExpressionAst, target.start, end, {std::move(target.node), std::move(index.node)}),
                          target.start, end};
                continue;
            }
            if (lx->kind == LexemeKind::Operator && (lx->text == "++" || lx->text == "--")) {
                AstNode op = leaf(AstKind::OperatorAst, *lx);
                ++pos_;
                const std::size_t end = prev_end();
                target = {make(AstKind::ExpressionAst, target.start, end, {std::move(target.node), std::move(op)}),
                          target.start, end};
                break;
            }
            break;
        }
        return target;
    }

    /// Member name after `.` or `::`. A glued word such as `UTF8.GetString`
    /// is split at its dots into a chain of members.
    Parsed member_access(Parsed target) {
        const Lexeme* name = current();
        if (name == nullptr || !adjacent(pos_)) fail();
        if (name->kind != LexemeKind::Word && name->kind != LexemeKind::StringLiteral &&
            name->kind != LexemeKind::Variable && name->kind != LexemeKind::Number) {
            fail();
        }
        ++pos_;
        std::vector<Span> segments;
        if (name->kind == LexemeKind::Word) {
            std::size_t seg_start = name->span.start;
            for (std::size_t b = name->span.start; b <= name->span.end; ++b) {
                if (b == name->span.end || src_[b] == '.') {
                    if (b == seg_start) fail();
                    segments.push_back({seg_start, b});
                    seg_start = b + 1;
                }
            }
        } else {
            segments.push_back(name->span);
        }

        for (std::size_t i = 0; i < segments.size(); ++i) {
            AstNode member = make(AstKind::MethodNameAst, segments[i].start, segments[i].end);
            const bool last = i + 1 == segments.size();
            const Lexeme* next = current();
            if (last && next != nullptr && adjacent(pos_) && next->kind == LexemeKind::OpenParen && next->text == "(") {
                std::vector<AstNode> parts;
                parts.push_back(std::move(target.node));
                parts.push_back(std::move(member));
                method_arguments(parts);
                const std::size_t end = prev_end();
                target = {make(AstKind::MethodInvocationAst, target.start, end, std::move(parts)), target.start, end};
            } else {
                const std::size_t end = segments[i].end;
                target = {make(AstKind::ExpressionAst, target.start, end, {std::move(target.node), std::move(member)}),
                          target.start, end};
            }
        }
        return target;
    }

    void method_arguments(std::vector<AstNode>& parts) {
        ++pos_;  // (
        ModeGuard mode(*this, true);
        DepthGuard depth(*this);
        const Lexeme* lx = peek();
        if (lx == nullptr) fail();
        if (lx->kind != LexemeKind::CloseParen) {
            for (;;) {
                Parsed arg = expression(false);
                parts.push_back(make(AstKind::ArgumentAst, arg.start, arg.end, {std::move(arg.node)}));
                const Lexeme* sep = peek();
                if (sep != nullptr && sep->kind == LexemeKind::Operator && sep->text == ",") {
                    ++pos_;
                    continue;
                }
                break;
            }
        }
        expect(LexemeKind::CloseParen);
    }

    std::string_view src_;
    std::vector<Lexeme> lx_;
    std::size_t pos_ = 0;
    std::vector<bool> modes_;
    int depth_ = 0;
};

}  // namespace

AstNode parse(std::string_view source) { return Parser(source).run(); }

}  // namespace psguard
